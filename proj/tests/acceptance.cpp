// Acceptance criteria 1-8: one PASS/FAIL line per criterion with its runtime.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "sd2/assembly.hpp"
#include "sd2/cellformulas.hpp"
#include "sd2/cli.hpp"
#include "sd2/constructions.hpp"
#include "sd2/densities.hpp"
#include "sd2/example_tr.hpp"

using namespace sd2;
using nlohmann::json;

namespace {

// Collects failed checks with a short reason.
struct Checks {
  std::vector<std::string> failures;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  int failed = 0;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const Point e1{1.0, 0.0};

std::pair<Bilinear3, Bilinear3> with_delta(const Tensor& B) { return {Bilinear3::from_slice(B, e1), Bilinear3::zero(2)}; }

DensityTriple norms(int d, int N) {
  return densities_from_json({{"W", {{"catalog", "W_norm"}}}, {"psi1", {{"catalog", "psi1_norm"}}},
                              {"psi2", {{"catalog", "psi2_norm"}}}},
                             d, N);
}

DensityTriple example_densities(const Point& a) {
  const int n = static_cast<int>(a.size());
  return densities_from_json(
      {{"W", {{"catalog", "W_zero"}}}, {"psi1", {{"expression", "0"}}}, {"psi2", {{"catalog", "psi2_proj"}, {"a", a}}}},
      n, n);
}

void criterion1(Checks& c) {
  const auto [L, M] = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}}));
  const ExampleReport r = verify_example(L, M, e1, {});
  c.require(r.closed_form == 2.0, "closed form " + num(r.closed_form));
  c.require(std::abs(r.family_stats.at("square").min - 2.0) <= 1e-9, "square family min");
  c.require(r.lower_bound_ok, "a sampled competitor fell below 2 - 1e-9");
  c.require(r.min_sampled >= 2.0 - 1e-9, "min sampled " + num(r.min_sampled));
  std::size_t sampled = 0;
  for (const char* f : {"random-box", "random-parallelepiped", "random-laminate"}) sampled += r.family_stats.at(f).evaluated;
  c.require(sampled == 1000, "sample count");
  c.detail = "closed 2, square min " + num(r.family_stats.at("square").min) + ", min over " + std::to_string(sampled) +
             " samples " + num(r.min_sampled);
}

void criterion2(Checks& c) {
  auto [L, M] = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 2.0}}));
  ExampleReport r = verify_example(L, M, e1, {});
  c.require(r.in_S, "diag(1,2) not in S");
  c.require(r.closed_form == 3.0, "closed form");
  c.require(r.eigenbasis && r.family_stats.at("eigen-box").min - 3.0 <= 1e-6, "eigen-box gap");
  c.require(r.gap <= 1e-6 && r.lower_bound_ok, "same-sign gap / lower bound");
  const double same_gap = r.gap;
  std::tie(L, M) = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, -2.0}}));
  r = verify_example(L, M, e1, {});
  c.require(r.closed_form == 1.0, "mixed closed form");
  c.require(r.lower_bound_ok, "mixed lower bound");
  c.require(r.best_upper == 3.0, "box-family value " + num(r.best_upper));
  c.require(r.gap == 2.0, "mixed gap " + num(r.gap));
  c.detail = "same-sign gap " + num(same_gap) + "; mixed: box value 3, gap 2 (documented), min sampled " +
             num(r.min_sampled);
}

void criterion3(Checks& c) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  EstimateOptions eo;
  eo.budget = 200;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int N = 2 + t % 2, d = 1 + t % 3;
    Tensor lam({d});
    for (std::size_t k = 0; k < lam.size(); ++k) lam[k] = g(rng);
    Point nu(N);
    double s = 0.0;
    for (double& v : nu) s += (v = g(rng)) * v;
    for (double& v : nu) v /= std::sqrt(s);
    const EstimateResult r = estimate_gamma1(CellProblem::gamma1(Point(N, 0.0), lam, nu), norms(d, N), eo);
    worst = std::max(worst, r.width());
    c.require(r.lower.has_value() && std::abs(r.upper - lam.norm()) <= 1e-12 * std::max(1.0, lam.norm()),
              "gamma1 trial " + std::to_string(t));
  }
  c.require(worst <= 1e-12, "gamma1 width " + num(worst));
  double worst_w1 = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int N = 1 + t % 3, d = 1 + t % 2;
    Tensor A({d, N});
    const int col = t % N;
    for (int i = 0; i < d; ++i) A[i * N + col] = g(rng);
    const EstimateResult r = estimate_W1(CellProblem::W1(Point(N, 0.0), A), norms(d, N), eo);
    worst_w1 = std::max(worst_w1, r.width());
  }
  c.require(worst_w1 <= 1e-10, "W1 width " + num(worst_w1));
  c.detail = "gamma1 max width " + num(worst) + " (100 trials), W1 single-column max width " + num(worst_w1);
}

void criterion4(Checks& c) {
  SamplerConfig cfg;
  cfg.samples = 10000;
  cfg.threads = 8;
  std::vector<std::vector<HypothesisEntry>> reports{
      check_bulk(bulk_catalog("W_norm"), 2, 2, cfg),
      check_bulk(bulk_catalog("W_zero"), 2, 2, cfg),
      check_interfacial(interfacial_catalog("psi1_norm", 1, 2, 2), 2, 2, cfg),
      check_interfacial(interfacial_catalog("psi1_weighted", 1, 2, 2), 2, 2, cfg),
      check_interfacial(interfacial_catalog("psi2_norm", 2, 2, 2), 2, 2, cfg),
      check_interfacial(interfacial_catalog("psi2_proj", 2, 2, 2, e1), 2, 2, cfg)};
  std::size_t constants = 0;
  for (const auto& entries : reports)
    for (const auto& e : entries)
      for (const auto& k : e.constants)
        if (k.declared) {
          ++constants;
          c.require(k.matches, e.density + " " + k.key + " measured " + num(k.measured));
        }
  const auto sq = check_interfacial(interfacial_catalog("psi1_square", 1, 2, 2), 2, 2, cfg);
  bool caught = false;
  for (const auto& e : sq)
    if (e.id == "H7") caught = e.verdict == Verdict::fail && !e.witness.is_null();
  c.require(caught, "psi1_square not caught on H7");
  bool flagged = false;
  for (const auto& e : reports[5])
    if (e.id == "H5") flagged = e.verdict == Verdict::fail && e.note.find("non-coercive") != std::string::npos;
  c.require(flagged, "psi2_proj not flagged non-coercive on H5");
  c.detail = std::to_string(constants) + " declared constants within 1%; H7 witness and H5 flag present";
}

void criterion5(Checks& c) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst_gg = 0.0, worst_mass = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int N = 1 + t % 3, d = 1 + (t / 3) % 3, n = 1 + t % 2;
    Tensor A({d, N});
    for (std::size_t k = 0; k < A.size(); ++k) A[k] = u(rng);
    const BoxDomain dom = BoxDomain::unit_cube(std::vector<int>(N, 2 * n));
    const Staircase s = staircase(A, n, dom);
    const double mass = total_jump_mass(jump_set(s.field, s.boundary));
    double cols = 0.0;
    for (int j = 0; j < N; ++j) {
      double q = 0.0;
      for (int i = 0; i < d; ++i) q += A[i * N + j] * A[i * N + j];
      cols += std::sqrt(q);
    }
    worst_mass = std::max(worst_mass, std::abs(mass - cols));
    c.require(mass <= std::sqrt(double(N)) * A.norm() * dom.volume() + 1e-12, "sqrt(N) bound");
    worst_gg = std::max(worst_gg, gauss_green_residual(s.field, s.boundary).max_abs());
  }
  c.require(worst_mass <= 1e-10, "staircase mass error " + num(worst_mass));
  double worst_ratio = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int N = 1 + t % 3, d = 1 + t % 2;
    PiecewiseField f(BoxDomain::unit_cube(std::vector<int>(N, 1 + t % 3)), {d, N});
    for (std::size_t k = 0; k < f.cell_count(); ++k) {
      Tensor v({d, N});
      for (std::size_t q = 0; q < v.size(); ++q) v[q] = u(rng);
      f.set_value(k, v);
    }
    const PiecewiseField p = gradient_primitive(f);
    const double bound = 4.0 * N * l1_norm(f);
    worst_ratio = std::max(worst_ratio, total_jump_mass(p) / bound);
    worst_gg = std::max(worst_gg, gauss_green_residual(p).max_abs());
  }
  c.require(worst_ratio <= 1.0, "primitive mass ratio " + num(worst_ratio));
  c.require(worst_gg <= 1e-10, "Gauss-Green residual " + num(worst_gg));
  c.detail = "staircase mass error " + num(worst_mass) + ", primitive mass/bound max " + num(worst_ratio) +
             ", Gauss-Green residual max " + num(worst_gg);
}

void criterion6(Checks& c) {
  std::ostringstream d;
  for (const auto& cs : corpus::primary()) {
    double pu = -1.0, pg = -1.0, worst = 0.0;
    for (int n : {4, 8, 16, 32}) {
      const ApproxResult r = approximating_sequence(cs.sd2, n);
      if (pu >= 0.0) {
        c.require(r.l1_u <= 0.6 * pu + 1e-14 && r.l1_grad <= 0.6 * pg + 1e-14, cs.name + " ratio at n=" + std::to_string(n));
        if (pu > 0.0) worst = std::max(worst, r.l1_u / pu);
        if (pg > 0.0) worst = std::max(worst, r.l1_grad / pg);
      }
      pu = r.l1_u;
      pg = r.l1_grad;
      const int f = r.u.domain().resolution()[0] / cs.sd2.domain().resolution()[0];
      const PiecewiseField diff = subtract(hessian_field(r.u), refine(cs.sd2.Gamma, f));
      double h = 0.0, w = 0.0;
      for (std::size_t k = 0; k < diff.cell_count(); ++k) h = std::max(h, diff.value(k).max_abs());
      for (const auto& phi : monomial_battery(cs.sd2.N())) w = std::max(w, weak_star_pairing(diff, phi).max_abs());
      c.require(h == 0.0, cs.name + " Hessian differs from Gamma");
      c.require(w == 0.0, cs.name + " weak-star pairing nonzero");
    }
    d << cs.name << " worst ratio " << num(worst) << "; ";
  }
  c.detail = d.str() + "Hessians and pairings exact";
}

void criterion7(Checks& c) {
  AssemblyOptions o;
  o.estimate.budget = 200;
  const auto slip = corpus::slip();
  const RelaxedEnergyReport r = assemble_relaxed_energy(slip.sd2, norms(1, 1), o);
  c.require(r.total.upper == r.I1.upper + r.I2.upper && r.total.lower == r.I1.lower + r.I2.lower, "decomposition");
  c.require(std::abs(r.total.upper - 1.0) <= 1e-10 && r.total.width() <= 1e-10, "slip total " + num(r.total.upper));
  for (const auto& cs : corpus::primary()) {
    const RelaxedEnergyReport q = assemble_relaxed_energy(cs.sd2, norms(cs.sd2.d(), cs.sd2.N()), o);
    c.require(q.total.upper == q.I1.upper + q.I2.upper, cs.name + " decomposition");
  }
  const Point a{0.6, 0.8};
  const BoxDomain dom({0.0, 0.0}, {1.0, 1.0}, {4, 4});
  const SD2Triple t = corpus::make(
      dom, 2, [](const Point& y) { return Tensor::vector({y[0], y[1] + 0.2 * y[0] * y[0]}); },
      [](const Point& y) { return Tensor::matrix({{1.0 + y[0], 0.3 * y[1]}, {y[1], 1.0 - 2.0 * y[0]}}); },
      [](const Point& y) {
        Tensor g({2, 2, 2});
        g[0] = y[0] > 0.5 ? 2.5 : -0.5;
        g[7] = y[1] > 0.25 ? 1.0 : 0.0;
        return g;
      });
  AssemblyOptions ex = o;
  ex.w2 = W2Estimator::closed_form_example;
  ex.example_axis = a;
  ex.resolution = 4;
  const RelaxedEnergyReport s6 = assemble_relaxed_energy(t, example_densities(a), ex);
  const double ref = bulk_relaxed_energy_example(t, a);
  c.require(std::abs(s6.bulk2.upper - ref) <= 1e-8, "example bulk2 " + num(s6.bulk2.upper) + " vs " + num(ref));
  c.require(s6.total.upper == s6.I1.upper + s6.I2.upper, "example decomposition");
  c.detail = "slip total " + num(r.total.upper) + " width " + num(r.total.width()) + "; example bulk2 " +
             num(s6.bulk2.upper) + " = " + num(ref);
}

void criterion8(Checks& c) {
  const std::vector<json> configs{
      {{"task", "example-verify"}, {"params", {{"a", {1, 0}}, {"delta", {{1, 0.5}, {0.2, -2}}}, {"samples", 300}}}},
      {{"task", "check-hypotheses"}, {"N", 2}, {"params", {{"samples", 1500}}}},
      {{"task", "relax-assemble"},
       {"domain", {{"lower", {0, 0}}, {"upper", {1, 1}}, {"resolution", {2, 2}}}},
       {"d", 1},
       {"sd2", {{"g", {{"expression", {"x1 + 2*x2"}}}}, {"G", {{"expression", {"1", "x1"}}}}}},
       {"params", {{"budget", 60}, {"resolution", 4}, {"per_cell_csv", true}}}},
      {{"task", "cell-sweep"},
       {"params", {{"problem", {{"kind", "W1"}, {"x", {0, 0}}, {"A", {{1, 2}, {0, 1}}}}}, {"budget", 100}}}},
      {{"task", "approx-sequence"},
       {"domain", {{"lower", {0}}, {"upper", {1}}, {"resolution", {2}}}},
       {"d", 1},
       {"sd2", {{"g", {{"expression", {"x1"}}}}, {"G", {{"expression", {"0"}}}}}}}};
  int i = 0;
  for (const json& cfg : configs) {
    RunOptions o1, o8;
    o1.seed = o8.seed = 5;
    o8.threads = 8;
    auto run = [&](const RunOptions& o) {
      RunOutcome r = run_config(cfg, o);
      c.require(r.exit_code == kExitOk, "config " + std::to_string(i) + " exit " + std::to_string(r.exit_code) + " " + r.error);
      r.report.erase("timestamp");
      std::string all = r.report.dump(2);
      for (const auto& [name, body] : r.files) all += name + body;
      return all;
    };
    const std::string a = run(o1), b = run(o8), again = run(o8);
    c.require(a == b, "config " + std::to_string(i) + ": 1 vs 8 threads differ");
    c.require(b == again, "config " + std::to_string(i) + ": repeated runs differ");
    ++i;
  }
  c.detail = std::to_string(configs.size()) + " tasks byte-identical across runs and 1 vs 8 threads";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds; 0: none stated
    std::function<void(Checks&)> run;
  };
  const std::vector<Criterion> all{
      {1, "identity example: closed form, square family, sampled lower bound", 1.0, criterion1},
      {2, "same-sign and mixed-sign examples", 5.0, criterion2},
      {3, "certified exactness of gamma1 and single-column W1", 10.0, criterion3},
      {4, "hypothesis checker constants, violator, non-coercive flag", 30.0, criterion4},
      {5, "staircase and gradient primitive mass bounds, Gauss-Green closure", 0.0, criterion5},
      {6, "approximating sequences on the corpus", 10.0, criterion6},
      {7, "assembly decomposition, slip total, example bulk term", 0.0, criterion7},
      {8, "determinism across runs and thread counts", 0.0, criterion8},
  };
  int failed = 0;
  for (const auto& cr : all) {
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.limit > 0.0) c.require(secs < cr.limit, "runtime over " + num(cr.limit) + " s");
    const bool ok = c.failed == 0;
    failed += !ok;
    std::printf("%s [%d] %s (%.2f s%s)\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                cr.limit > 0.0 ? (", limit " + num(cr.limit) + " s").c_str() : "");
    if (!c.detail.empty()) std::printf("       %s\n", c.detail.c_str());
    for (const auto& f : c.failures) std::printf("       failed: %s\n", f.c_str());
  }
  return failed == 0 ? 0 : 1;
}
