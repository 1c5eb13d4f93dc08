#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sd2/densities.hpp"
#include "sd2/fields.hpp"

namespace sd2 {

enum class CellKind { W1, gamma1, W2, gamma2 };
std::string to_string(CellKind k);

/// One cell problem. Third-order tensors L, M use (L)_{ijk} = ∂_j u_{ik} for
/// u = L y, i.e. (L y)_{ik} = Σ_j L_{ijk} y_j.
struct CellProblem {
  CellKind kind = CellKind::W1;
  Point x;        // frozen point of the cell formula
  Tensor A;       // W1: argument (d x N); W2, γ₂: the A slot
  Tensor lambda;  // γ₁: jump (d)
  Tensor Lambda;  // γ₂: jump (d x N)
  Tensor L, M;    // W2: d x N x N
  Point nu;       // γ₁, γ₂: unit normal
  int resolution = 8;  // competitor grid cells per axis, a multiple of 4

  static CellProblem W1(Point x, Tensor A, int resolution = 8);
  static CellProblem gamma1(Point x, Tensor lambda, Point nu, int resolution = 8);
  static CellProblem W2(Point x, Tensor A, Tensor L, Tensor M, int resolution = 8);
  static CellProblem gamma2(Point x, Tensor A, Tensor Lambda, Point nu, int resolution = 8);

  int N() const { return static_cast<int>(x.size()); }
  int d() const;
  /// Throws ValidationError on inconsistent shapes or a non-unit normal.
  void validate(const DensityTriple& dens) const;
  nlohmann::json to_json() const;
};

CellProblem cell_problem_from_json(const nlohmann::json& j);

/// A competitor is a field on the cell grid (-1/2, 1/2)^N. For γ problems the
/// grid lives in rotated coordinates y' with y = R y' and R e_N = ν.
using Competitor = PiecewiseField;

/// The boundary accounting the constraints are checked against: periodic with
/// zero datum (W1), Dirichlet with datum L y (W2), and for γ problems
/// Dirichlet on the faces normal to e_N and periodic on the others, with
/// datum the elementary jump.
BoundaryCondition cell_boundary(const CellProblem& p);

struct ParamRange {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool integer = false;
};

struct CompetitorFamily {
  std::string name;
  std::vector<ParamRange> ranges;
  std::vector<std::vector<double>> grid;  // grid-search points, in evaluation order
  /// Empty result: the parameters do not describe a field (counted as inadmissible).
  std::function<std::optional<Competitor>(const std::vector<double>&)> generate;
  bool scale_equivariant = false;     // generate(t p) = t generate(p) for the scaled problem
  bool superposition_closed = false;  // fields for A and B add to the field for A + B
};

/// W1: staircase. γ₁: elementary, split. W2: affine, inclusion, laminate.
/// γ₂: elementary, split, laminate.
std::vector<CompetitorFamily> default_families(const CellProblem& p);

struct CompetitorEvaluation {
  bool admissible = false;
  double energy = 0.0;  // meaningful only when admissible
  std::string reason;   // why the competitor was rejected
};

/// Checks the constraints of the cell problem within 1e-10, then computes the
/// cell energy with x frozen at p.x.
CompetitorEvaluation evaluate_competitor(const CellProblem& p, const DensityTriple& dens, const Competitor& c);

struct SweepRow {
  std::string family;
  std::vector<double> params;
  bool admissible = false;
  double energy = 0.0;
};

struct EstimateResult {
  double upper = 0.0;
  std::optional<double> lower;  // certified lower bound
  std::string lower_note;
  std::string best_family;
  std::vector<double> best_params;
  std::size_t evaluations = 0;
  std::size_t admissible = 0;
  std::uint64_t seed = 0;  // the optimizer is seed-free; kept for report uniformity
  std::vector<SweepRow> sweep;

  double width() const { return lower ? upper - *lower : std::numeric_limits<double>::infinity(); }
  nlohmann::json to_json() const;
};

struct EstimateOptions {
  std::size_t budget = 2000;          // evaluations per family
  std::vector<std::string> families;  // empty: every default family
  int threads = 1;
  bool keep_sweep = true;
};

/// Grid search over each family followed by coordinate descent from the best
/// grid point. The evaluation sequence of a family never depends on the
/// budget, so a larger budget only extends it. Throws EstimatorError when no
/// competitor is admissible.
EstimateResult estimate(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts = {});

EstimateResult estimate_W1(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts = {});
EstimateResult estimate_gamma1(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts = {});
EstimateResult estimate_W2(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts = {});
EstimateResult estimate_gamma2(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts = {});

/// Orthogonal N x N matrix (a reflection unless ν = e_N) with R e_N = ν.
Tensor rotation_to(const Point& nu);

/// Wide CSV: family,param1..paramK,admissible,energy, preceded by a
/// commented metadata row.
std::string sweep_csv(const EstimateResult& r);

}  // namespace sd2
