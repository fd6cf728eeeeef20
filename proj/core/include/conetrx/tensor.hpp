#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conetrx {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Dense row-major N-d array of real values; the last axis moves fastest.
/// Network activations use [batch, time, freq, channel] (or [time, freq,
/// channel] for a single resource grid).
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape, T fill = T(0)) : shape_(std::move(shape)) {
    numel_ = checked_numel(shape_);
    data_.assign(static_cast<size_t>(numel_), fill);
  }

  Tensor(std::vector<int64_t> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    numel_ = checked_numel(shape_);
    require(numel_ == static_cast<int64_t>(data_.size()),
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape_); }

  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return numel_; }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int64_t>& shape() const { return shape_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Unchecked fast-path indexers for the common ranks.
  T& at3(int64_t i, int64_t j, int64_t k) { return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)]; }
  const T& at3(int64_t i, int64_t j, int64_t k) const {
    return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  T& at4(int64_t b, int64_t i, int64_t j, int64_t k) {
    return data_[static_cast<size_t>(((b * shape_[1] + i) * shape_[2] + j) * shape_[3] + k)];
  }
  const T& at4(int64_t b, int64_t i, int64_t j, int64_t k) const {
    return data_[static_cast<size_t>(((b * shape_[1] + i) * shape_[2] + j) * shape_[3] + k)];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }

  bool all_finite() const {
    for (const auto& x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  Tensor<T> reshaped(std::vector<int64_t> shape) const {
    Tensor<T> out;
    out.shape_ = std::move(shape);
    out.numel_ = checked_numel(out.shape_);
    require(out.numel_ == numel_, "reshape " + shape_str(shape_) + " -> " + shape_str(out.shape_) + " changes element count");
    out.data_ = data_;
    return out;
  }

  std::string shape_str() const { return shape_str(shape_); }

  static std::string shape_str(const std::vector<int64_t>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
  }

 private:
  static int64_t checked_numel(const std::vector<int64_t>& shape) {
    require(!shape.empty(), "tensor shape must have at least one dimension");
    int64_t n = 1;
    for (int64_t d : shape) {
      require(d > 0, "tensor dimensions must be positive, got " + shape_str(shape));
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::vector<T> data_;
  int64_t numel_ = 0;
};

}  // namespace conetrx
