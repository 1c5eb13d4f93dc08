#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sd2/tensor.hpp"

namespace sd2 {

using Constants = std::map<std::string, double>;

/// Bulk density W(x, A, M) with A of shape d x N and M of shape d x N x N.
struct BulkDensity {
  using Fn = std::function<double(const Point& x, const Tensor& A, const Tensor& M)>;

  std::string name;
  Fn value;
  Fn recession;  // closed-form W^∞ in M; empty when unknown
  Constants declared;
  bool coercive = true;  // lower bound of the linear growth condition claimed
  bool x_dependent = false;
  nlohmann::json selection;  // how the density was chosen, echoed in reports

  double operator()(const Point& x, const Tensor& A, const Tensor& M) const { return value(x, A, M); }
};

/// Interfacial density Ψ(x, p, ν): p is λ (shape d) for Ψ₁ or Λ (d x N) for Ψ₂.
struct InterfacialDensity {
  using Fn = std::function<double(const Point& x, const Tensor& payload, const Point& nu)>;

  std::string name;
  int order = 1;  // 1: Ψ₁, 2: Ψ₂
  Fn value;
  /// When set, Ψ(x, p, ν) = |<C(ν), p>|; lets facet integrals of affine jumps be exact.
  std::function<Tensor(const Point& nu)> abs_linear;
  /// Projection axis `a` of the |ν·Ja| density.
  std::optional<Point> projection_axis;
  Constants declared;
  bool coercive = true;
  bool x_dependent = false;
  nlohmann::json selection;

  double operator()(const Point& x, const Tensor& p, const Point& nu) const { return value(x, p, nu); }
};

struct DensityTriple {
  int d = 1;
  int N = 1;
  BulkDensity W;
  InterfacialDensity psi1;
  InterfacialDensity psi2;

  bool coercive_interfacial() const { return psi1.coercive && psi2.coercive; }
  bool x_dependent() const { return W.x_dependent || psi1.x_dependent || psi2.x_dependent; }
  nlohmann::json selection() const;
};

/// Catalog: W_norm (|A|+|M|), W_zero (0).
BulkDensity bulk_catalog(const std::string& name);
/// Catalog: psi1_norm, psi1_weighted, psi1_square (planted H7 violator),
/// psi2_norm, psi2_proj (needs `a`, d = N).
InterfacialDensity interfacial_catalog(const std::string& name, int order, int d, int N,
                                       const std::optional<Point>& a = std::nullopt);

/// Densities from the config format
///   {"W": {...}, "psi1": {...}, "psi2": {...}}, each entry either
///   {"catalog": name, "a": [...]} or
///   {"expression": "...", "recession": "...", "constants": {...}, "coercive": bool}.
DensityTriple densities_from_json(const nlohmann::json& j, int d, int N);

/// Positively one-homogeneous extension in ν: 0 at θ = 0, else |θ| Ψ(x, p, θ/|θ|).
double extend_homogeneous(const InterfacialDensity& psi, const Point& x, const Tensor& payload,
                          std::span<const double> theta);

std::vector<double> default_recession_schedule();

struct RecessionResult {
  double value = 0.0;  // |M| W(x, A, t M̂)/t at the largest t (or the closed form)
  bool closed_form = false;
  std::vector<double> schedule;
  std::vector<double> quotients;  // W(x, A, t M̂)/t along the schedule
  bool envelope_ok = true;        // successive quotients Cauchy within the H4 envelope
  double envelope_constant = 0.0;
  double alpha = 0.5;
};

/// Recession value of W in M at (x, A, M). The direction is normalized
/// internally and the result rescaled by |M|.
RecessionResult recession(const BulkDensity& W, const Point& x, const Tensor& A, const Tensor& M,
                          std::span<const double> schedule = {});

enum class Verdict { pass, fail, skipped };
std::string to_string(Verdict v);

struct MeasuredConstant {
  std::string key;
  double measured = 0.0;
  std::optional<double> declared;
  bool matches = true;   // within the 1% rule (true when nothing is declared)
  bool bounded = true;   // sup does not keep growing with the input scale
};

struct HypothesisEntry {
  std::string id;       // H1 ... H8, Hinf1 ... Hinf3
  std::string density;  // W, psi1, psi2
  Verdict verdict = Verdict::skipped;
  bool hard = true;     // a fail counts as a hard failure (--strict)
  std::vector<MeasuredConstant> constants;
  nlohmann::json worst;    // extreme sample: inputs and residual
  nlohmann::json witness;  // first violating sample (fail only)
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string note;
};

struct HypothesisReport {
  std::vector<HypothesisEntry> entries;

  const HypothesisEntry* find(const std::string& density, const std::string& id) const;
  bool all_pass() const;
  bool hard_failure() const;
  nlohmann::json to_json() const;
};

struct SamplerConfig {
  std::size_t samples = 10000;
  double range = 10.0;           // entries uniform in [-range, range]
  double scale_min_exp = -2.0;   // times a log-uniform scale 10^[min, max]
  double scale_max_exp = 4.0;
  std::uint64_t seed = 0;
  int threads = 1;
  int climb_steps = 300;
};

HypothesisReport check_hypotheses(const DensityTriple& triple, const SamplerConfig& cfg);
std::vector<HypothesisEntry> check_bulk(const BulkDensity& W, int d, int N, const SamplerConfig& cfg);
std::vector<HypothesisEntry> check_interfacial(const InterfacialDensity& psi, int d, int N,
                                               const SamplerConfig& cfg);

/// Deterministic 64-bit stream seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace sd2
