#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "sd2/quadrature.hpp"
#include "sd2/tensor.hpp"

namespace sd2 {

inline constexpr double kJumpTolerance = 1e-12;

/// Uniform tensor grid on an axis-aligned box in R^N (N = 1, 2 or 3).
class BoxDomain {
 public:
  BoxDomain() = default;
  BoxDomain(Point lower, Point upper, std::vector<int> resolution);

  /// The cube (-1/2, 1/2)^N.
  static BoxDomain unit_cube(std::vector<int> resolution);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  const std::vector<int>& resolution() const { return resolution_; }

  std::size_t cell_count() const;
  std::vector<int> multi_index(std::size_t cell) const;
  std::size_t cell_index(std::span<const int> multi) const;
  double extent(int axis) const { return upper_[axis] - lower_[axis]; }
  double cell_width(int axis) const { return extent(axis) / resolution_[axis]; }
  double cell_volume() const;
  double volume() const;
  Point cell_center(std::size_t cell) const;
  Box cell_box(std::size_t cell) const;
  double diameter() const;
  /// Cell containing `y` (points on interior facets go to the upper cell).
  std::size_t locate(const Point& y) const;

  BoxDomain refined(int factor) const;
  bool operator==(const BoxDomain&) const = default;

 private:
  Point lower_, upper_;
  std::vector<int> resolution_;
};

/// Cellwise polynomial field of degree <= 2 with values of a fixed tensor shape.
///
/// On cell K with center x_K the field is
///   u(y) = c_K + P_K (y - x_K) + 1/2 Q_K (y - x_K)(y - x_K),
/// where P_K has shape value_shape + [N] (derivative index last) and Q_K has
/// shape value_shape + [N, N]. Piecewise-constant and piecewise-affine fields
/// are the cases Q = 0 and P = Q = 0. Fields are immutable once handed out.
class PiecewiseField {
 public:
  PiecewiseField() = default;
  PiecewiseField(BoxDomain domain, Shape value_shape);

  const BoxDomain& domain() const { return domain_; }
  const Shape& value_shape() const { return value_shape_; }
  Shape gradient_shape() const { return append_shape(value_shape_, {domain_.dim()}); }
  Shape hessian_shape() const { return append_shape(value_shape_, {domain_.dim(), domain_.dim()}); }
  std::size_t cell_count() const { return values_.size(); }

  void set_value(std::size_t cell, Tensor value);
  void set_gradient(std::size_t cell, Tensor gradient);
  void set_hessian(std::size_t cell, Tensor hessian);

  const Tensor& value(std::size_t cell) const { return values_[cell]; }
  const Tensor& gradient(std::size_t cell) const { return gradients_[cell]; }
  const Tensor& hessian(std::size_t cell) const { return hessians_[cell]; }

  Tensor eval(std::size_t cell, const Point& y) const;
  Tensor gradient_at(std::size_t cell, const Point& y) const;
  Tensor eval(const Point& y) const { return eval(domain_.locate(y), y); }

  /// 0, 1 or 2: the largest degree carried by any cell.
  int degree() const;

  /// The cellwise gradient as a piecewise-affine field of shape value_shape + [N].
  PiecewiseField gradient_field() const;

 private:
  BoxDomain domain_;
  Shape value_shape_;
  std::vector<Tensor> values_, gradients_, hessians_;
};

/// A grid facet carrying a (possibly varying) jump [u] = u⁺ - u⁻, the ⁺ side
/// lying in the +normal direction.
///
/// Normals are canonical (+e_axis). The jump is a polynomial along the facet:
///   [u](y) = jump + jump_gradient (y - centroid) + 1/2 jump_hessian (y - centroid)².
struct JumpFacet {
  int axis = 0;
  std::ptrdiff_t minus_cell = -1;  // -1: outside the domain
  std::ptrdiff_t plus_cell = -1;
  bool boundary = false;
  Point centroid;
  Point normal;
  double area = 0.0;
  Box extent;  // the facet as a degenerate box in ambient coordinates
  Tensor jump;
  Tensor jump_gradient;
  Tensor jump_hessian;

  Tensor jump_at(const Point& y) const;
  /// Facet average of the jump (exact for the quadratic jump polynomial).
  Tensor mean_jump() const;
  /// True when the jump does not vary along the facet.
  bool constant_jump(double tol = 0.0) const;
  /// Tangential box of dimension N-1 (coordinates with `axis` removed).
  Box tangential_box() const;
  Point ambient_point(const Point& tangential) const;
};

enum class BoundaryMode {
  none,       // no boundary facets; the boundary is not part of the jump set
  dirichlet,  // u is extended by the datum outside; mismatch is a boundary jump
  periodic,   // u - datum is periodic; the mismatch across the identified faces is a jump
};

/// Boundary treatment per axis relative to a datum field b on the same grid.
/// Boundary jumps are jumps of v = u - b; a missing datum means b = 0.
struct BoundaryCondition {
  std::optional<PiecewiseField> datum;
  std::vector<BoundaryMode> modes;

  static BoundaryCondition free(int dim);
  static BoundaryCondition uniform(int dim, BoundaryMode mode, std::optional<PiecewiseField> datum = {});
};

/// Interior jump facets with max |[u]| above `tol`, in grid order.
std::vector<JumpFacet> jump_set(const PiecewiseField& u, double tol = kJumpTolerance);
/// Interior facets plus boundary facets generated by `bc`.
std::vector<JumpFacet> jump_set(const PiecewiseField& u, const BoundaryCondition& bc,
                                double tol = kJumpTolerance);
std::vector<JumpFacet> boundary_jumps(const PiecewiseField& u, const BoundaryCondition& bc,
                                      double tol = kJumpTolerance);

/// ∫_F f([u](y), y) dH^{N-1}: exact when the jump is constant on F,
/// Gauss-Legendre (8 points per tangential axis) otherwise.
double integrate_over_facet(const JumpFacet& facet,
                            const std::function<double(const Tensor& jump, const Point& y)>& f);
/// ∫_F |<C, [u](y)>| dH^{N-1}, exact whenever the jump is affine along F.
double integrate_abs_linear_over_facet(const JumpFacet& facet, const Tensor& coefficient);

/// Σ_F ∫_F |[u]| dH^{N-1} (Frobenius norm).
double total_jump_mass(std::span<const JumpFacet> facets);
double total_jump_mass(const PiecewiseField& u);

double l1_norm(const PiecewiseField& f);
/// ∫ |f - g|. Grids must coincide or one must refine the other.
double l1_distance(const PiecewiseField& f, const PiecewiseField& g);

struct BoundaryTrace {
  int axis = 0;
  bool upper_side = false;  // face x_axis = upper (outward normal +e_axis)
  std::size_t cell = 0;
  Point centroid;
  double area = 0.0;
  Tensor value;       // inner trace at the centroid
  Tensor mean_value;  // facet average of the inner trace
  Box extent;
};

/// One-sided (inner) traces on every boundary facet, in grid order.
std::vector<BoundaryTrace> trace_boundary(const PiecewiseField& u);

/// ∫_Ω φ(y) u(y) dy, exact when φ is a polynomial of degree <= `phi_degree`
/// (up to 5 - field degree).
Tensor weak_star_pairing(const PiecewiseField& u, const std::function<double(const Point&)>& phi,
                         int phi_degree = 2);

/// Monomials y^α with |α| <= 2 on R^N (the weak-star test battery).
std::vector<std::function<double(const Point&)>> monomial_battery(int dim);

/// Discrete Gauss-Green residual for v = u - b:
///   ∫ ∇v + Σ_interior [v] ⊗ ν + Σ_boundary [v] ⊗ ν - Σ_{free faces} ∫ v ⊗ n.
/// Vanishes for every field; returned for verification.
Tensor gauss_green_residual(const PiecewiseField& u, const BoundaryCondition& bc);
Tensor gauss_green_residual(const PiecewiseField& u);

/// Same function on a grid refined by `factor` per axis.
PiecewiseField refine(const PiecewiseField& u, int factor);
/// Restriction to the cell block [lo, hi) (multi-indices).
PiecewiseField restrict_to(const PiecewiseField& u, std::span<const int> lo, std::span<const int> hi);
/// Pointwise u - w on identical grids.
PiecewiseField subtract(const PiecewiseField& u, const PiecewiseField& w);
PiecewiseField add(const PiecewiseField& u, const PiecewiseField& w);

nlohmann::json to_json(const BoxDomain& d);
BoxDomain domain_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PiecewiseField& f);
PiecewiseField field_from_json(const nlohmann::json& j);
nlohmann::json to_json(const JumpFacet& f);

}  // namespace sd2
