#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sd2 {

using Shape = std::vector<int>;
using Point = std::vector<double>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of small rank (0..4). Scalars have an empty shape.
///
/// All tensor norms in the library are Frobenius norms.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor vector(std::vector<double> v);
  /// Row-major matrix from nested rows.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::initializer_list<int> idx);
  double at(std::initializer_list<int> idx) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(double s);

  double norm() const;
  double max_abs() const;
  double dot(const Tensor& o) const;

  bool operator==(const Tensor& o) const = default;

 private:
  std::size_t offset(std::initializer_list<int> idx) const;

  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator-(Tensor a);
Tensor operator*(double s, Tensor a);
Tensor operator*(Tensor a, double s);

/// Contracts the last index with `v`: result shape drops the last axis.
Tensor contract_last(const Tensor& t, std::span<const double> v);
/// Appends an axis: (t ⊗ v)_{..., k} = t_{...} v_k.
Tensor outer(const Tensor& t, std::span<const double> v);
/// Transposes the last two axes.
Tensor swap_last_two(const Tensor& t);
/// Shape of `t` with `extra` appended.
Shape append_shape(const Shape& s, std::initializer_list<int> extra);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace sd2
