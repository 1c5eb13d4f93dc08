#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sd2/cellformulas.hpp"
#include "sd2/constructions.hpp"
#include "sd2/densities.hpp"

namespace sd2 {

/// Which one-sided value of G enters the A slot of γ₂ on a jump facet of G.
enum class TraceChoice { average, plus, minus };
std::string to_string(TraceChoice t);
TraceChoice trace_choice_from_string(const std::string& s);

enum class W2Estimator {
  families,             // estimate_W2 over the competitor families
  closed_form_example,  // |tr((L - M)(·, a))|, for W = 0, Ψ₂ = |ν·Ja|
};

struct AssemblyOptions {
  EstimateOptions estimate;  // per cell problem; its thread count is ignored
  int resolution = 8;        // cell-problem grid
  W2Estimator w2 = W2Estimator::families;
  Point example_axis;        // a, required by the closed-form estimator
  TraceChoice trace = TraceChoice::average;
  /// Cell-problem arguments (x, A, λ, Λ, L, M) are rounded to multiples of
  /// this step before solving; 0 solves at the exact arguments.
  double quantization = 1e-6;
  bool cache = true;
  int threads = 1;
  bool keep_items = false;  // per-cell / per-facet rows in the report
};

/// An integral term with its bracket. `lower` sums certified lower bounds,
/// counting 0 for pieces without a certificate (densities are nonnegative).
struct Term {
  double upper = 0.0;
  double lower = 0.0;
  std::size_t pieces = 0;
  std::size_t certified = 0;  // pieces with a certified lower bound

  double width() const { return upper - lower; }
  nlohmann::json to_json() const;
};

struct AssemblyItem {
  std::string term;  // bulk1, bulk2, surf1, surf2
  std::size_t index = 0;  // cell index, or position in the facet list
  Point x;
  double measure = 0.0;  // cell volume or facet area
  double upper = 0.0;    // density estimate (not multiplied by the measure)
  std::optional<double> lower;
  std::string family;
  bool cached = false;
};

struct RelaxedEnergyReport {
  Term bulk1, bulk2, surf1, surf2;
  Term I1, I2, total;
  std::size_t cell_problems = 0;  // problems actually solved
  std::size_t cache_hits = 0;
  std::vector<AssemblyItem> items;
  AssemblyOptions options;

  nlohmann::json to_json() const;
};

/// I = ∫ W₁(x, G - ∇g) + ∫ W₂(x, G, ∇G, Γ) + ∫_{S_g} γ₁(x, [g], ν_g) + ∫_{S_G} γ₂(x, G, [G], ν_G).
/// Bulk terms use one cell problem per grid cell at its center; surface terms
/// one per interior jump facet at its centroid. Throws EstimatorError with the
/// offending problem when an estimator fails.
RelaxedEnergyReport assemble_relaxed_energy(const SD2Triple& sd2, const DensityTriple& dens,
                                            const AssemblyOptions& opts = {});

/// term,index,x1..xN,measure,upper,lower,family
std::string assembly_items_csv(const RelaxedEnergyReport& r);

}  // namespace sd2
