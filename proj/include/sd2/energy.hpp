#pragma once

#include <optional>

#include "json.hpp"
#include "sd2/constructions.hpp"
#include "sd2/densities.hpp"
#include "sd2/fields.hpp"

namespace sd2 {

struct EnergyBreakdown {
  double bulk = 0.0;   // ∫ W(x, ∇u, ∇²u)
  double jump1 = 0.0;  // ∫_{S_u} Ψ₁(x, [u], ν)
  double jump2 = 0.0;  // ∫_{S_∇u} Ψ₂(x, [∇u], ν)
  double total = 0.0;
  std::size_t cells = 0;
  std::size_t facets1 = 0;
  std::size_t facets2 = 0;

  nlohmann::json to_json() const;
};

struct EnergyOptions {
  /// Boundary facets of u (and of ∇u) to include; none by default.
  std::optional<BoundaryCondition> u_boundary;
  std::optional<BoundaryCondition> grad_boundary;
  double jump_tolerance = kJumpTolerance;
  int threads = 1;
};

/// Bulk term by the midpoint rule per cell (x and the arguments at the cell
/// center); jump terms with x frozen at facet centroids and the jump
/// integrated over each facet.
EnergyBreakdown total_energy(const PiecewiseField& u, const DensityTriple& densities,
                             const EnergyOptions& opts = {});

/// Σ_F ∫_F Ψ(x_F, [v], ν_F) over the given facets.
double interfacial_energy(std::span<const JumpFacet> facets, const InterfacialDensity& psi, int threads = 1);

/// ∇g - G, cellwise (piecewise affine when g is quadratic).
PiecewiseField disarrangement_density(const SD2Triple& sd2);

/// ∇G - Γ as third-order tensors with (∇G)_{ijk} = ∂_j G_{ik}. G must be
/// piecewise affine; the result is cellwise constant.
PiecewiseField gradient_disarrangement_density(const SD2Triple& sd2);

}  // namespace sd2
