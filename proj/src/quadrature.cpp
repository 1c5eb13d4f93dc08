#include "sd2/quadrature.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

#include "sd2/errors.hpp"

namespace sd2 {

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= upper[i] - lower[i];
  return v;
}

Point Box::center() const {
  Point c(lower.size());
  for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

namespace {

GaussRule make_rule(int n) {
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

constexpr int kMaxRule = 16;

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1 || n > kMaxRule) throw ValidationError("gauss_legendre: unsupported order");
  static std::array<GaussRule, kMaxRule + 1> rules;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int k = 1; k <= kMaxRule; ++k) rules[k] = make_rule(k);
    rules[1].nodes = {0.0};
    rules[1].weights = {2.0};
  });
  return rules[n];
}

double integrate_box(const Box& box, int points_per_axis,
                     const std::function<double(const Point&)>& f) {
  const int dim = box.dim();
  if (dim == 0) return f(box.lower);
  const GaussRule& rule = gauss_legendre(points_per_axis);
  std::vector<int> idx(dim, 0);
  Point y(dim);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      const double half = 0.5 * (box.upper[k] - box.lower[k]);
      const double mid = 0.5 * (box.upper[k] + box.lower[k]);
      y[k] = mid + half * rule.nodes[idx[k]];
      w *= half * rule.weights[idx[k]];
    }
    total += w * f(y);
    int k = 0;
    while (k < dim && ++idx[k] == points_per_axis) idx[k++] = 0;
    if (k == dim) break;
  }
  return total;
}

double integrate_positive_part(std::span<const double> a, double b, const Box& box, int power) {
  const int dim = box.dim();
  if (static_cast<int>(a.size()) != dim) throw ValidationError("integrate_positive_part: rank mismatch");
  if (dim == 0) return b > 0.0 ? std::pow(b, power) : 0.0;

  double mid = b;
  double spread = 0.0;
  int pivot = 0;
  double pivot_var = -1.0;
  for (int i = 0; i < dim; ++i) {
    const double c = 0.5 * (box.lower[i] + box.upper[i]);
    const double var = std::abs(a[i]) * (box.upper[i] - box.lower[i]);
    mid += a[i] * c;
    spread += 0.5 * var;
    if (var > pivot_var) {
      pivot_var = var;
      pivot = i;
    }
  }
  if (mid + spread <= 0.0) return 0.0;
  if (mid - spread >= 0.0) {
    // sign-definite: polynomial of degree `power`, integrated exactly
    const int pts = power / 2 + 1;
    return integrate_box(box, pts, [&](const Point& y) {
      return std::pow(b + dot(a, y), power);
    });
  }

  // The zero set crosses the box: integrate the pivot axis in closed form.
  std::vector<double> rest;
  Box sub;
  for (int i = 0; i < dim; ++i) {
    if (i == pivot) continue;
    rest.push_back(a[i]);
    sub.lower.push_back(box.lower[i]);
    sub.upper.push_back(box.upper[i]);
  }
  const double ap = a[pivot];
  const double hi = integrate_positive_part(rest, b + ap * box.upper[pivot], sub, power + 1);
  const double lo = integrate_positive_part(rest, b + ap * box.lower[pivot], sub, power + 1);
  return (hi - lo) / ((power + 1) * ap);
}

double integrate_abs_affine(std::span<const double> a, double b, const Box& box) {
  const Point c = box.center();
  const double mean = b + dot(a, c);
  return 2.0 * integrate_positive_part(a, b, box, 1) - box.volume() * mean;
}

}  // namespace sd2
