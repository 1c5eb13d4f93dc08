#include "sd2/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sd2/errors.hpp"

namespace sd2 {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw ValidationError("negative tensor extent");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_))
    throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::vector(std::vector<double> v) {
  Shape s{static_cast<int>(v.size())};
  return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r ? static_cast<int>(rows.begin()->size()) : 0;
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(r * c));
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw ValidationError("ragged matrix literal");
    d.insert(d.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(d));
}

std::size_t Tensor::offset(std::initializer_list<int> idx) const {
  if (idx.size() != shape_.size()) throw ValidationError("tensor index rank mismatch");
  std::size_t off = 0;
  std::size_t k = 0;
  for (int i : idx) {
    if (i < 0 || i >= shape_[k]) throw ValidationError("tensor index out of range");
    off = off * static_cast<std::size_t>(shape_[k]) + static_cast<std::size_t>(i);
    ++k;
  }
  return off;
}

double& Tensor::at(std::initializer_list<int> idx) { return data_[offset(idx)]; }
double Tensor::at(std::initializer_list<int> idx) const { return data_[offset(idx)]; }

Tensor& Tensor::operator+=(const Tensor& o) {
  require_same_shape(*this, o, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  require_same_shape(*this, o, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Tensor::norm() const { return sd2::norm(data_); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor::dot(const Tensor& o) const {
  require_same_shape(*this, o, "tensor dot");
  return sd2::dot(data_, o.data_);
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator-(Tensor a) { return a *= -1.0; }
Tensor operator*(double s, Tensor a) { return a *= s; }
Tensor operator*(Tensor a, double s) { return a *= s; }

Tensor contract_last(const Tensor& t, std::span<const double> v) {
  if (t.rank() == 0 || t.shape().back() != static_cast<int>(v.size()))
    throw ValidationError("contract_last: extent mismatch for shape " +
                          shape_to_string(t.shape()));
  Shape s(t.shape().begin(), t.shape().end() - 1);
  Tensor r(s);
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < r.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += t[i * n + k] * v[k];
    r[i] = acc;
  }
  return r;
}

Tensor outer(const Tensor& t, std::span<const double> v) {
  Shape s = t.shape();
  s.push_back(static_cast<int>(v.size()));
  Tensor r(s);
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t k = 0; k < n; ++k) r[i * n + k] = t[i] * v[k];
  return r;
}

Tensor swap_last_two(const Tensor& t) {
  if (t.rank() < 2) throw ValidationError("swap_last_two needs rank >= 2");
  Shape s = t.shape();
  const int a = s[s.size() - 2];
  const int b = s[s.size() - 1];
  std::swap(s[s.size() - 2], s[s.size() - 1]);
  Tensor r(s);
  const std::size_t block = static_cast<std::size_t>(a * b);
  for (std::size_t base = 0; base < t.size(); base += block)
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < b; ++j)
        r[base + static_cast<std::size_t>(j * a + i)] = t[base + static_cast<std::size_t>(i * b + j)];
  return r;
}

Shape append_shape(const Shape& s, std::initializer_list<int> extra) {
  Shape r = s;
  r.insert(r.end(), extra.begin(), extra.end());
  return r;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ValidationError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                          " vs " + shape_to_string(b.shape()));
}

double norm(std::span<const double> v) {
  // scaled sum of squares; inputs here are small so plain accumulation suffices
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace sd2
