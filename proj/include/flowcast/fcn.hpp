#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "flowcast/nn.hpp"

namespace flowcast {

enum class Arch : int { fcn8 = 0, fc_early, fc_mid };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::fcn8: return "fcn8";
    case Arch::fc_early: return "fc_early";
    case Arch::fc_mid: return "fc_mid";
  }
  return "?";
}

inline Arch arch_from_name(const std::string& name) {
  if (name == "fcn8") return Arch::fcn8;
  if (name == "fc_early") return Arch::fc_early;
  if (name == "fc_mid") return Arch::fc_mid;
  throw std::runtime_error("unknown arch: " + name);
}

struct ModelConfig {
  int in_channels = 50;   // spatial-only channel count for fc_early/fc_mid
  Arch arch = Arch::fcn8;
  int temporal_len = 0;   // 2T; required > 0 for fc_early/fc_mid
  int base_width = 64;
  std::uint64_t init_seed = 1;
  PadMode pad_mode = PadMode::zero;

  void validate() const {
    if (in_channels < 1) throw std::runtime_error("model config: in_channels must be >= 1");
    if (base_width < 1) throw std::runtime_error("model config: base_width must be >= 1");
    if (arch != Arch::fcn8 && temporal_len <= 0)
      throw std::runtime_error("model config: fc variants require temporal_vector_len > 0");
  }
};

/// Fully convolutional regression net: five stride-2 VGG-style stages, 1x1
/// score head, learned upsampling fused with the stride-8 and stride-16
/// feature maps, final 8x upsampling, one linear output channel.
///
/// Inputs are zero-padded to the next multiple of 32 and the output is
/// cropped back; the fc_mid variant instead pads 100x100 inputs to 304x304 so
/// the stride-8 feature map is exactly 38x38 where its temporal channels are
/// injected.
template <typename T>
class Fcn8 {
 public:
  explicit Fcn8(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int w = cfg_.base_width;
    const int mid_extra = cfg_.arch == Arch::fc_mid ? 2 : 0;
    const int trunk_in = cfg_.arch == Arch::fc_early ? cfg_.in_channels + 2 : cfg_.in_channels;

    conv1_1_ = Conv2d<T>(trunk_in, w, 3, 1, 1);
    conv1_1_.input_grad = cfg_.arch == Arch::fc_early;  // only the fc_early temporal branch needs it
    conv1_2_ = Conv2d<T>(w, w, 3, 1, 1);
    conv2_1_ = Conv2d<T>(w, 2 * w, 3, 1, 1);
    conv2_2_ = Conv2d<T>(2 * w, 2 * w, 3, 1, 1);
    conv3_1_ = Conv2d<T>(2 * w, 4 * w, 3, 1, 1);
    conv3_2_ = Conv2d<T>(4 * w, 4 * w, 3, 1, 1);
    conv4_1_ = Conv2d<T>(4 * w + mid_extra, 8 * w, 3, 1, 1);
    conv4_2_ = Conv2d<T>(8 * w, 8 * w, 3, 1, 1);
    conv5_1_ = Conv2d<T>(8 * w, 8 * w, 3, 1, 1);
    conv5_2_ = Conv2d<T>(8 * w, 8 * w, 3, 1, 1);
    head_ = Conv2d<T>(8 * w, 8 * w, 3, 1, 1);
    score_ = Conv2d<T>(8 * w, 1, 1, 1, 0);
    skip4_ = Conv2d<T>(8 * w, 1, 1, 1, 0);
    skip3_ = Conv2d<T>(4 * w + mid_extra, 1, 1, 1, 0);
    up2a_ = ConvTranspose2d<T>(1, 1, 4, 2, 1);
    up2b_ = ConvTranspose2d<T>(1, 1, 4, 2, 1);
    up8_ = ConvTranspose2d<T>(1, 1, 16, 8, 4);
    if (cfg_.arch != Arch::fcn8) {
      const int out = cfg_.arch == Arch::fc_early ? 2 * 100 * 100 : 2 * 38 * 38;
      fc1_ = Linear<T>(cfg_.temporal_len, kFcHiddenWidth);
      fc2_ = Linear<T>(kFcHiddenWidth, out);
    }
    for (auto* c : trunk_convs()) c->pad_mode = cfg_.pad_mode;
    up2a_.pad_mode = up2b_.pad_mode = up8_.pad_mode = cfg_.pad_mode;

    init_parameters();
  }

  static constexpr int kFcHiddenWidth = 256;

  const ModelConfig& config() const { return cfg_; }

  /// input: (K, H, W); temporal: flat vector of length temporal_len for the
  /// fc variants. Returns the (H, W) flow map on the normalized scale.
  Tensor<T> forward(const Tensor<T>& input, const std::vector<T>* temporal = nullptr) {
    if (input.rank() != 3 || input.dim(0) != cfg_.in_channels)
      throw std::runtime_error("forward: expected " + std::to_string(cfg_.in_channels) +
                               " input channels, got " +
                               std::to_string(input.rank() == 3 ? input.dim(0) : -1));
    const long H = input.dim(1), W = input.dim(2);
    if (H < 32 || W < 32) throw std::runtime_error("forward: spatial dims must be >= 32");
    for (const T v : input.data)
      if (!std::isfinite(static_cast<double>(v))) throw std::runtime_error("forward: non-finite input");

    const bool needs_temporal = cfg_.arch != Arch::fcn8;
    if (needs_temporal) {
      if (temporal == nullptr || static_cast<int>(temporal->size()) != cfg_.temporal_len)
        throw std::runtime_error("forward: temporal vector of length " +
                                 std::to_string(cfg_.temporal_len) + " required");
      if (H != 100 || W != 100)
        throw std::runtime_error(cfg_.arch == Arch::fc_mid
                                     ? "forward: fc_mid requires 100x100 windows (38x38 mid features)"
                                     : "forward: fc_early requires 100x100 windows");
    }

    st_ = FwdState{};
    st_.in_h = H;
    st_.in_w = W;

    Tensor<T> xin;
    if (cfg_.arch == Arch::fc_early) {
      Tensor<T> z = temporal_forward(*temporal);
      z.shape = {2, 100, 100};
      xin = concat_channels(input, z);
    } else {
      xin = input;
    }

    const long target = cfg_.arch == Arch::fc_mid ? 304 : 0;
    const long ph = target ? target : next_multiple_32(H);
    const long pw = target ? target : next_multiple_32(W);
    st_.pad_top = (ph - H) / 2;
    st_.pad_left = (pw - W) / 2;
    st_.pad_h = ph;
    st_.pad_w = pw;
    Tensor<T> x = pad_spatial(xin, static_cast<int>(st_.pad_top), static_cast<int>(ph - H - st_.pad_top),
                              static_cast<int>(st_.pad_left), static_cast<int>(pw - W - st_.pad_left));

    x = pool1_.forward(r1_2_.forward(conv1_2_.forward(r1_1_.forward(conv1_1_.forward(x)))));
    x = pool2_.forward(r2_2_.forward(conv2_2_.forward(r2_1_.forward(conv2_1_.forward(x)))));
    Tensor<T> p3 = pool3_.forward(r3_2_.forward(conv3_2_.forward(r3_1_.forward(conv3_1_.forward(x)))));

    Tensor<T> p3x;
    if (cfg_.arch == Arch::fc_mid) {
      if (p3.dim(1) != 38 || p3.dim(2) != 38)
        throw std::runtime_error("forward: fc_mid mid-feature size is " + std::to_string(p3.dim(1)) +
                                 "x" + std::to_string(p3.dim(2)) + ", expected 38x38");
      Tensor<T> z = temporal_forward(*temporal);
      z.shape = {2, 38, 38};
      p3x = concat_channels(p3, z);
    } else {
      p3x = std::move(p3);
    }
    st_.p3x_channels = p3x.dim(0);

    Tensor<T> p4 = pool4_.forward(r4_2_.forward(conv4_2_.forward(r4_1_.forward(conv4_1_.forward(p3x)))));
    Tensor<T> p5 = pool5_.forward(r5_2_.forward(conv5_2_.forward(r5_1_.forward(conv5_1_.forward(p4)))));

    Tensor<T> s = score_.forward(r_head_.forward(head_.forward(p5)));
    Tensor<T> u4 = up2a_.forward(s);
    st_.u4_h = u4.dim(1);
    st_.u4_w = u4.dim(2);
    st_.crop4_top = (u4.dim(1) - p4.dim(1)) / 2;
    st_.crop4_left = (u4.dim(2) - p4.dim(2)) / 2;
    Tensor<T> f4 = crop_spatial(u4, st_.crop4_top, st_.crop4_left, p4.dim(1), p4.dim(2));
    add_inplace(f4, skip4_.forward(p4));

    Tensor<T> u3 = up2b_.forward(f4);
    st_.u3_h = u3.dim(1);
    st_.u3_w = u3.dim(2);
    st_.crop3_top = (u3.dim(1) - p3x.dim(1)) / 2;
    st_.crop3_left = (u3.dim(2) - p3x.dim(2)) / 2;
    Tensor<T> f3 = crop_spatial(u3, st_.crop3_top, st_.crop3_left, p3x.dim(1), p3x.dim(2));
    add_inplace(f3, skip3_.forward(p3x));

    Tensor<T> full = up8_.forward(f3);
    Tensor<T> out = crop_spatial(full, st_.pad_top, st_.pad_left, H, W);
    out.shape = {H, W};
    return out;
  }

  /// d_out: (H, W) adjoint of the flow map. Accumulates parameter gradients.
  void backward(const Tensor<T>& d_out) {
    Tensor<T> d = d_out;
    d.shape = {1, st_.in_h, st_.in_w};
    Tensor<T> d_full = embed_spatial(d, st_.pad_top, st_.pad_left, st_.pad_h, st_.pad_w);
    Tensor<T> d_f3 = up8_.backward(d_full);

    Tensor<T> d_p3x = skip3_.backward(d_f3);
    Tensor<T> d_u3 = embed_spatial(d_f3, st_.crop3_top, st_.crop3_left, st_.u3_h, st_.u3_w);
    Tensor<T> d_f4 = up2b_.backward(d_u3);

    Tensor<T> d_p4 = skip4_.backward(d_f4);
    Tensor<T> d_u4 = embed_spatial(d_f4, st_.crop4_top, st_.crop4_left, st_.u4_h, st_.u4_w);
    Tensor<T> d_s = up2a_.backward(d_u4);

    Tensor<T> d_p5 = head_.backward(r_head_.backward(score_.backward(d_s)));
    add_inplace(d_p4, conv5_1_.backward(r5_1_.backward(
                          conv5_2_.backward(r5_2_.backward(pool5_.backward(d_p5))))));
    add_inplace(d_p3x, conv4_1_.backward(r4_1_.backward(
                           conv4_2_.backward(r4_2_.backward(pool4_.backward(d_p4))))));

    Tensor<T> d_p3;
    if (cfg_.arch == Arch::fc_mid) {
      d_p3 = crop_channels(d_p3x, 0, st_.p3x_channels - 2);
      Tensor<T> d_z = crop_channels(d_p3x, st_.p3x_channels - 2, 2);
      d_z.shape = {d_z.numel()};
      temporal_backward(d_z);
    } else {
      d_p3 = std::move(d_p3x);
    }

    Tensor<T> dx = conv3_1_.backward(
        r3_1_.backward(conv3_2_.backward(r3_2_.backward(pool3_.backward(d_p3)))));
    dx = conv2_1_.backward(r2_1_.backward(conv2_2_.backward(r2_2_.backward(pool2_.backward(dx)))));
    dx = conv1_1_.backward(r1_1_.backward(conv1_2_.backward(r1_2_.backward(pool1_.backward(dx)))));

    if (cfg_.arch == Arch::fc_early) {
      Tensor<T> d_xin =
          crop_spatial(dx, st_.pad_top, st_.pad_left, st_.in_h, st_.in_w);
      Tensor<T> d_z = crop_channels(d_xin, cfg_.in_channels, 2);
      d_z.shape = {d_z.numel()};
      temporal_backward(d_z);
    }
  }

  void zero_grad() {
    for_each_param([](const std::string&, Tensor<T>&, Tensor<T>& grad) { grad.zero(); });
  }

  long parameter_count() const {
    long n = 0;
    const_cast<Fcn8*>(this)->for_each_param(
        [&n](const std::string&, Tensor<T>& value, Tensor<T>&) { n += value.numel(); });
    return n;
  }

  /// Visits (name, value, grad) in a fixed order shared by init, Adam and
  /// the checkpoint format.
  void for_each_param(const std::function<void(const std::string&, Tensor<T>&, Tensor<T>&)>& fn) {
    auto conv = [&](const char* name, Conv2d<T>& c) {
      fn(std::string(name) + ".weight", c.w, c.grad_w);
      fn(std::string(name) + ".bias", c.b, c.grad_b);
    };
    auto convt = [&](const char* name, ConvTranspose2d<T>& c) {
      fn(std::string(name) + ".weight", c.w, c.grad_w);
      fn(std::string(name) + ".bias", c.b, c.grad_b);
    };
    conv("conv1_1", conv1_1_);
    conv("conv1_2", conv1_2_);
    conv("conv2_1", conv2_1_);
    conv("conv2_2", conv2_2_);
    conv("conv3_1", conv3_1_);
    conv("conv3_2", conv3_2_);
    conv("conv4_1", conv4_1_);
    conv("conv4_2", conv4_2_);
    conv("conv5_1", conv5_1_);
    conv("conv5_2", conv5_2_);
    conv("head", head_);
    conv("score", score_);
    conv("skip4", skip4_);
    conv("skip3", skip3_);
    convt("up2a", up2a_);
    convt("up2b", up2b_);
    convt("up8", up8_);
    if (cfg_.arch != Arch::fcn8) {
      fn("temporal_fc1.weight", fc1_.w, fc1_.grad_w);
      fn("temporal_fc1.bias", fc1_.b, fc1_.grad_b);
      fn("temporal_fc2.weight", fc2_.w, fc2_.grad_w);
      fn("temporal_fc2.bias", fc2_.b, fc2_.grad_b);
    }
  }

 private:
  struct FwdState {
    long in_h = 0, in_w = 0;
    long pad_top = 0, pad_left = 0, pad_h = 0, pad_w = 0;
    long crop4_top = 0, crop4_left = 0, u4_h = 0, u4_w = 0;
    long crop3_top = 0, crop3_left = 0, u3_h = 0, u3_w = 0;
    long p3x_channels = 0;
  };

  static long next_multiple_32(long v) { return ((v + 31) / 32) * 32; }

  static void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  }

  static Tensor<T> crop_channels(const Tensor<T>& x, long first, long count) {
    Tensor<T> y = Tensor<T>::zeros({count, x.dim(1), x.dim(2)});
    const long plane = x.dim(1) * x.dim(2);
    std::copy_n(x.ptr() + first * plane, count * plane, y.ptr());
    return y;
  }

  std::array<Conv2d<T>*, 14> trunk_convs() {
    return {&conv1_1_, &conv1_2_, &conv2_1_, &conv2_2_, &conv3_1_, &conv3_2_, &conv4_1_,
            &conv4_2_, &conv5_1_, &conv5_2_, &head_,    &score_,   &skip4_,   &skip3_};
  }

  void init_parameters() {
    std::mt19937_64 rng(cfg_.init_seed);
    for (auto* c : trunk_convs()) c->init_he(rng);
    up2a_.init_bilinear();
    up2b_.init_bilinear();
    up8_.init_bilinear();
    if (cfg_.arch != Arch::fcn8) {
      fc1_.init_he(rng);
      fc2_.init_he(rng);
    }
  }

  Tensor<T> temporal_forward(const std::vector<T>& temporal) {
    Tensor<T> tv;
    tv.shape = {static_cast<long>(temporal.size())};
    tv.data = temporal;
    return fc2_.forward(r_fc_.forward(fc1_.forward(tv)));
  }

  void temporal_backward(const Tensor<T>& d_z) {
    fc1_.backward(r_fc_.backward(fc2_.backward(d_z)));
  }

  ModelConfig cfg_;
  FwdState st_;

  Conv2d<T> conv1_1_, conv1_2_, conv2_1_, conv2_2_, conv3_1_, conv3_2_;
  Conv2d<T> conv4_1_, conv4_2_, conv5_1_, conv5_2_, head_, score_, skip4_, skip3_;
  ConvTranspose2d<T> up2a_, up2b_, up8_;
  Linear<T> fc1_, fc2_;
  ReLU<T> r1_1_, r1_2_, r2_1_, r2_2_, r3_1_, r3_2_, r4_1_, r4_2_, r5_1_, r5_2_, r_head_, r_fc_;
  MaxPool2<T> pool1_, pool2_, pool3_, pool4_, pool5_;
};

}  // namespace flowcast
