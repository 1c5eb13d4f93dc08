#pragma once

#include <functional>

#include "json.hpp"
#include "sd2/fields.hpp"

namespace sd2 {

/// A second-order structured deformation (g, G, Γ) on a common grid.
/// g has values in R^d, G in R^{d x N}, Γ in R^{d x N x N} (cellwise constant).
struct SD2Triple {
  PiecewiseField g;
  PiecewiseField G;
  PiecewiseField Gamma;

  int d() const { return g.value_shape().empty() ? 1 : g.value_shape()[0]; }
  int N() const { return g.domain().dim(); }
  const BoxDomain& domain() const { return g.domain(); }
  /// Throws ValidationError on shape or grid mismatch.
  void validate() const;
};

/// Zero-mean sawtooth field with cellwise gradient exactly A (d x N).
struct Staircase {
  PiecewiseField field;
  /// Periodic in u with zero datum: each sawtooth's return step is a boundary facet.
  BoundaryCondition boundary;
};

/// Superposes, for each axis j, a sawtooth in y_j with n teeth carrying the
/// jump -(extent_j / n) A e_j. The domain resolution must be a multiple of n on
/// every axis. Jump mass is exactly Σ_j |A e_j| |Ω|.
Staircase staircase(const Tensor& A, int n, const BoxDomain& domain);
/// Per-axis tooth counts; teeth[j] must divide the resolution along axis j.
Staircase staircase(const Tensor& A, const std::vector<int>& teeth, const BoxDomain& domain);

/// Cell-midpoint samples of u on the grid refined n times per axis.
PiecewiseField piecewise_constant_approx(const PiecewiseField& u, int n);

/// Cellwise primitive of f (value shape S + [N]): on each cell u vanishes at
/// the center and ∇u = f. Piecewise-affine f is allowed when its cellwise
/// gradient is symmetric in the last two indices (u is then quadratic).
PiecewiseField gradient_primitive(const PiecewiseField& f);

/// Payload above the mid-plane y_N = mid, zero below. The domain is the
/// ν-oriented cube in rotated coordinates (ν = e_N); its resolution along
/// the last axis must be even.
PiecewiseField elementary_jump(const Tensor& payload, const BoxDomain& domain);

struct ApproxOptions {
  /// Refinement m(n) of the final piecewise-constant correction.
  std::function<int(int)> m = [](int n) { return n * n; };
};

struct ApproxResult {
  PiecewiseField u;
  int n = 0;
  int m = 0;           // m(n) actually used (1 when the correction is already piecewise constant)
  double l1_u = 0.0;     // ∫|u_n - g|
  double l1_grad = 0.0;  // ∫|∇u_n - G|
  double rate_constant_u = 0.0;     // n * l1_u
  double rate_constant_grad = 0.0;  // n * l1_grad
};

/// u_n = h̃_n + h̄ with h = prim(Γ), v_n = pc(G - h, n), w_n = v_n + h,
/// h̃_n = prim(w_n), h̄ = pc(g - h̃_n, m(n)). Cellwise ∇²u_n = Γ exactly.
/// Γ must be symmetric in its last two indices.
ApproxResult approximating_sequence(const SD2Triple& sd2, int n, const ApproxOptions& opts = {});

/// The cellwise Hessian of u as a piecewise-constant field.
PiecewiseField hessian_field(const PiecewiseField& u);

/// Field of the given value shape sampled from a function of y: exact for
/// polynomials of degree <= `degree` (0, 1 or 2) on each cell.
PiecewiseField sample_field(const BoxDomain& domain, const Shape& value_shape, int degree,
                            const std::function<Tensor(const Point&)>& f);

/// Triple from {"g": ..., "G": ..., "Gamma": ...}; each entry is either a
/// serialized field or {"expression": [component strings in x1..xN]}.
/// One field from config: {"expression": [row-major components in x1..xN]}
/// sampled with the given degree, or a serialized field on `domain`.
PiecewiseField field_entry(const nlohmann::json& j, const BoxDomain& domain, const Shape& shape, int degree,
                           const std::string& name);

SD2Triple sd2_from_json(const nlohmann::json& j, const BoxDomain& domain, int d);

}  // namespace sd2
