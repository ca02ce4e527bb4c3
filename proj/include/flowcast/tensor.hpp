#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace flowcast {

/// Dense row-major tensor, rank 1..3, scalar type T (float for training,
/// double for the finite-difference oracles).
template <typename T>
struct Tensor {
  std::vector<long> shape;
  std::vector<T> data;

  Tensor() = default;

  static Tensor zeros(std::initializer_list<long> s) {
    Tensor t;
    t.shape.assign(s);
    t.data.assign(static_cast<size_t>(t.numel_of(t.shape)), T(0));
    return t;
  }
  static Tensor zeros_like(const Tensor& other) {
    Tensor t;
    t.shape = other.shape;
    t.data.assign(other.data.size(), T(0));
    return t;
  }

  long numel() const { return static_cast<long>(data.size()); }
  bool empty() const { return data.empty(); }
  int rank() const { return static_cast<int>(shape.size()); }

  long dim(int i) const { return shape[static_cast<size_t>(i)]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  // rank-3 (c, h, w) access
  T at(long c, long h, long w) const { return data[static_cast<size_t>((c * shape[1] + h) * shape[2] + w)]; }
  T& at(long c, long h, long w) { return data[static_cast<size_t>((c * shape[1] + h) * shape[2] + w)]; }
  // rank-2 (h, w) access
  T at(long h, long w) const { return data[static_cast<size_t>(h * shape[1] + w)]; }
  T& at(long h, long w) { return data[static_cast<size_t>(h * shape[1] + w)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

 private:
  static long numel_of(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) {
      if (d < 0) throw std::runtime_error("negative tensor dimension");
      n *= d;
    }
    return n;
  }
};

}  // namespace flowcast
