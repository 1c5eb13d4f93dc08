#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sd2/tensor.hpp"

namespace sd2 {

/// Axis-aligned box of any dimension (a 0-dimensional box is a point).
struct Box {
  Point lower;
  Point upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  Point center() const;
};

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
const GaussRule& gauss_legendre(int n);

/// Tensor-product Gauss-Legendre quadrature of `f` over `box`.
double integrate_box(const Box& box, int points_per_axis,
                     const std::function<double(const Point&)>& f);

/// Exact ∫_box max(a·y + b, 0)^power dy, by recursive elimination of the
/// axis with the largest variation.
double integrate_positive_part(std::span<const double> a, double b, const Box& box, int power = 1);

/// Exact ∫_box |a·y + b| dy.
double integrate_abs_affine(std::span<const double> a, double b, const Box& box);

}  // namespace sd2
