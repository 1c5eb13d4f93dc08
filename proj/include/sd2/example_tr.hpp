#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sd2/constructions.hpp"
#include "sd2/tensor.hpp"

namespace sd2 {

/// Element of R^{N x N x N} viewed as the bilinear map
/// M(y, z)_i = Σ_{j,k} M_{ijk} y_j z_k.
class Bilinear3 {
 public:
  explicit Bilinear3(Tensor entries);
  static Bilinear3 zero(int n) { return Bilinear3(Tensor({n, n, n})); }
  /// The bilinear map whose slice M(·, a) is B (N x N) and which vanishes on a^⊥
  /// in the second slot.
  static Bilinear3 from_slice(const Tensor& B, const Point& a);

  int dim() const { return n_; }
  const Tensor& entries() const { return m_; }
  Point apply(const Point& y, const Point& z) const;
  /// M(·, a) as an N x N matrix.
  Tensor slice(const Point& a) const;

 private:
  Tensor m_;
  int n_ = 0;
};

/// |tr(L(·, a) - M(·, a))|.
double closed_form_W2(const Bilinear3& L, const Bilinear3& M, const Point& a);

/// Parallelepiped {c + Σ_k t_k v_k : |t_k| <= h_k}; `edges` holds the unit
/// vectors v_k as columns (identity: an axis-aligned box).
struct InclusionBox {
  Point center;
  Point half;
  Tensor edges;

  static InclusionBox axis_aligned(Point center, Point half);
  bool inside_unit_cube(double margin = 0.0) const;
  nlohmann::json to_json() const;
};

/// |R|⁻¹ ∫_{∂R} |ν · Δ(x, a)| dH^{N-1}, Δ = L - M, computed face by face as the
/// exact integral of |affine|. R must be compactly contained in (-1/2, 1/2)^N.
double inclusion_energy(const Bilinear3& L, const Bilinear3& M, const Point& a, const InclusionBox& R);

/// N distinct eigenvalues (separation > 1e-9), each with |Re| > 1e-9, and |tr B| > 1e-9.
bool is_in_S(const Tensor& B);

struct ExampleOptions {
  std::size_t samples = 1000;  // random admissible competitors for the lower-bound check
  std::uint64_t seed = 0;
  int threads = 1;
  double tolerance = 1e-9;
  int resolution = 8;  // grid for the laminate competitors
};

struct FamilyStats {
  std::size_t evaluated = 0;
  double min = 0.0;
  double max = 0.0;
};

struct ExampleReport {
  double closed_form = 0.0;
  double best_upper = 0.0;
  double gap = 0.0;
  bool lower_bound_ok = true;  // every competitor >= closed_form - tolerance
  bool in_S = false;
  bool eigenbasis = false;     // eigenbasis boxes were generated
  std::string best_family;
  nlohmann::json best;
  std::map<std::string, FamilyStats> family_stats;
  double min_sampled = 0.0;  // random competitors only; they do not enter best_upper

  nlohmann::json to_json() const;
};

/// Closed form against the box families (centered squares/cubes, axis-aligned
/// boxes, eigenbasis parallelepipeds when Δ(·, a) has a real, well-conditioned
/// eigenbasis), which define best_upper and gap. `samples` random boxes,
/// parallelepipeds and grid laminates feed the lower-bound check and min_sampled.
ExampleReport verify_example(const Bilinear3& L, const Bilinear3& M, const Point& a, const ExampleOptions& opts = {});

/// Σ_cells |cell| · |tr((∇G - Γ)(·, a))| for d = N and piecewise-affine G.
double bulk_relaxed_energy_example(const SD2Triple& sd2, const Point& a);

}  // namespace sd2
