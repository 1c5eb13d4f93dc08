#include "sd2/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sd2/assembly.hpp"
#include "sd2/cellformulas.hpp"
#include "sd2/constructions.hpp"
#include "sd2/densities.hpp"
#include "sd2/energy.hpp"
#include "sd2/errors.hpp"
#include "sd2/example_tr.hpp"
#include "sd2/tensor_json.hpp"

namespace sd2 {

using nlohmann::json;

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

// A config object whose keys are consumed one by one. Defaults are written
// into `resolved`, and keys nobody asked for are rejected by finish().
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
    resolved = json::object();
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    T v = j_.contains(key) ? convert<T>(key) : fallback;
    resolved[key] = v;
    return v;
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ValidationError(where_ + ": missing '" + key + "'");
    used_.insert(key);
    T v = convert<T>(key);
    resolved[key] = v;
    return v;
  }

  const json* raw(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? &j_[key] : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ValidationError(where_ + ": unknown key '" + it.key() + "'");
  }

  json resolved;

 private:
  template <class T>
  T convert(const std::string& key) const {
    try {
      return j_[key].get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + "." + key + ": wrong type");
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Context {
  Section top;
  Section params;
  RunOptions opts;
  std::uint64_t seed = 0;
  RunOutcome out;

  Context(const json& config, const json& params_json, const RunOptions& o)
      : top(config, "config"), params(params_json, "params"), opts(o) {}

  BoxDomain domain() {
    const json* d = top.raw("domain");
    if (!d) throw ValidationError("config: missing 'domain'");
    BoxDomain dom = domain_from_json(*d);
    top.resolved["domain"] = to_json(dom);
    return dom;
  }

  // N from the config, or from the domain when one was read.
  int dim(std::optional<int> known = std::nullopt) {
    if (top.has("N")) {
      const int n = top.require<int>("N");
      if (n < 1 || n > 3) throw ValidationError("config.N: must be 1, 2 or 3");
      if (known && *known != n) throw ValidationError("config.N: does not match the problem dimension");
      return n;
    }
    if (!known) throw ValidationError("config: missing 'N'");
    top.resolved["N"] = *known;
    return *known;
  }

  int target_dim(int n, std::optional<int> known = std::nullopt) {
    const int d = top.get<int>("d", known.value_or(n));
    if (d < 1) throw ValidationError("config.d: must be positive");
    if (known && *known != d) throw ValidationError("config.d: does not match the problem");
    return d;
  }

  DensityTriple densities(int d, int n) {
    const json* j = top.raw("densities");
    DensityTriple t = densities_from_json(j ? *j : json::object(), d, n);
    top.resolved["densities"] = t.selection();
    return t;
  }

  SD2Triple sd2(const BoxDomain& dom, int d) {
    const json* j = top.raw("sd2");
    if (!j) throw ValidationError("config: missing 'sd2'");
    top.resolved["sd2"] = *j;
    return sd2_from_json(*j, dom, d);
  }
};

void task_check_hypotheses(Context& c) {
  const int n = c.dim();
  const int d = c.target_dim(n);
  const DensityTriple dens = c.densities(d, n);
  SamplerConfig cfg;
  cfg.samples = c.params.get<std::size_t>("samples", cfg.samples);
  cfg.range = c.params.get<double>("range", cfg.range);
  cfg.scale_min_exp = c.params.get<double>("scale_min_exp", cfg.scale_min_exp);
  cfg.scale_max_exp = c.params.get<double>("scale_max_exp", cfg.scale_max_exp);
  cfg.climb_steps = c.params.get<int>("climb_steps", cfg.climb_steps);
  cfg.seed = c.seed;
  cfg.threads = c.opts.threads;
  const auto only = c.params.get<std::vector<std::string>>("only", {"W", "psi1", "psi2"});
  HypothesisReport rep;
  for (const std::string& which : only) {
    std::vector<HypothesisEntry> e;
    if (which == "W")
      e = check_bulk(dens.W, d, n, cfg);
    else if (which == "psi1")
      e = check_interfacial(dens.psi1, d, n, cfg);
    else if (which == "psi2")
      e = check_interfacial(dens.psi2, d, n, cfg);
    else
      throw ValidationError("params.only: unknown density '" + which + "' (W, psi1, psi2)");
    rep.entries.insert(rep.entries.end(), e.begin(), e.end());
  }
  c.out.report["result"] = rep.to_json();
  std::ostringstream s;
  for (const auto& e : rep.entries)
    s << e.density << ' ' << e.id << ": " << to_string(e.verdict) << (e.verdict == Verdict::fail && !e.hard ? " (soft)" : "")
      << '\n';
  s << (rep.all_pass() ? "all pass" : rep.hard_failure() ? "hard failures present" : "soft failures only") << '\n';
  c.out.summary = s.str();
  if (c.opts.strict && rep.hard_failure()) {
    c.out.exit_code = kExitHypotheses;
    c.out.error = "hypothesis check: hard failures (--strict)";
  }
}

void task_energy(Context& c) {
  const BoxDomain dom = c.domain();
  const int n = c.dim(dom.dim());
  const int d = c.target_dim(n);
  const DensityTriple dens = c.densities(d, n);
  const json* u = c.params.raw("u");
  if (!u) throw ValidationError("params: missing 'u'");
  c.params.resolved["u"] = *u;
  const PiecewiseField field = field_entry(*u, dom, {d}, 2, "u");
  EnergyOptions eo;
  eo.threads = c.opts.threads;
  eo.jump_tolerance = c.params.get<double>("jump_tolerance", eo.jump_tolerance);
  const std::string boundary = c.params.get<std::string>("boundary", "none");
  if (boundary == "dirichlet" || boundary == "periodic") {
    const BoundaryMode mode = boundary == "dirichlet" ? BoundaryMode::dirichlet : BoundaryMode::periodic;
    eo.u_boundary = BoundaryCondition::uniform(n, mode);
    eo.grad_boundary = BoundaryCondition::uniform(n, mode);
  } else if (boundary != "none") {
    throw ValidationError("params.boundary: expected none, dirichlet or periodic");
  }
  const EnergyBreakdown e = total_energy(field, dens, eo);
  c.out.report["result"] = e.to_json();
  c.out.summary = "bulk " + fmt(e.bulk) + "  jump1 " + fmt(e.jump1) + "  jump2 " + fmt(e.jump2) + "  total " +
                  fmt(e.total) + '\n';
}

void task_approx_sequence(Context& c) {
  const BoxDomain dom = c.domain();
  const int n = c.dim(dom.dim());
  const int d = c.target_dim(n);
  const SD2Triple t = c.sd2(dom, d);
  const DensityTriple dens = c.densities(d, n);
  const auto ns = c.params.get<std::vector<int>>("ns", {4, 8, 16, 32});
  const std::string rule = c.params.get<std::string>("m", "n^2");
  ApproxOptions ao;
  if (rule == "n")
    ao.m = [](int k) { return k; };
  else if (rule == "1")
    ao.m = [](int) { return 1; };
  else if (rule != "n^2")
    throw ValidationError("params.m: expected n^2, n or 1");
  json rows = json::array();
  std::ostringstream csv;
  csv << "# n: sequence index; m: refinement used; l1_u: integral of |u_n - g|; l1_grad: integral of |grad u_n - G|; "
         "energy: E(u_n) with interior jumps only (all scalars)\n"
      << "n,m,l1_u,l1_grad,energy\n";
  double prev_u = 0.0, prev_g = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) throw ValidationError("params.ns: entries must be positive");
    const ApproxResult r = approximating_sequence(t, ns[i], ao);
    EnergyOptions eo;
    eo.threads = c.opts.threads;
    const double e = total_energy(r.u, dens, eo).total;
    json row{{"n", r.n}, {"m", r.m}, {"l1_u", r.l1_u}, {"l1_grad", r.l1_grad}, {"energy", e},
             {"rate_constant_u", r.rate_constant_u}, {"rate_constant_grad", r.rate_constant_grad}};
    if (i > 0) {
      row["ratio_u"] = prev_u > 0.0 ? json(r.l1_u / prev_u) : json(nullptr);
      row["ratio_grad"] = prev_g > 0.0 ? json(r.l1_grad / prev_g) : json(nullptr);
    }
    prev_u = r.l1_u;
    prev_g = r.l1_grad;
    rows.push_back(row);
    csv << r.n << ',' << r.m << ',' << fmt(r.l1_u) << ',' << fmt(r.l1_grad) << ',' << fmt(e) << '\n';
  }
  c.out.report["result"] = {{"sequence", rows}};
  c.out.files["approx_sequence.csv"] = csv.str();
  c.out.summary = csv.str();
}

void task_cell_sweep(Context& c) {
  const json* pj = c.params.raw("problem");
  if (!pj) throw ValidationError("params: missing 'problem'");
  const CellProblem p = cell_problem_from_json(*pj);
  c.params.resolved["problem"] = p.to_json();
  const int n = c.dim(p.N());
  const int d = c.target_dim(n, p.d());
  const DensityTriple dens = c.densities(d, n);
  EstimateOptions eo;
  eo.budget = c.params.get<std::size_t>("budget", eo.budget);
  eo.families = c.params.get<std::vector<std::string>>("families", {});
  eo.threads = c.opts.threads;
  p.validate(dens);
  const EstimateResult r = estimate(p, dens, eo);
  c.out.report["result"] = r.to_json();
  c.out.report["result"]["problem"] = p.to_json();
  c.out.files["cell_sweep.csv"] = sweep_csv(r);
  c.out.summary = to_string(p.kind) + ": upper " + fmt(r.upper) + "  lower " + (r.lower ? fmt(*r.lower) : "none") +
                  "  best " + r.best_family + "  (" + std::to_string(r.evaluations) + " evaluations)\n";
}

void task_example_verify(Context& c) {
  const Point a = c.params.require<Point>("a");
  const int n = c.dim(static_cast<int>(a.size()));
  c.target_dim(n, n);
  const int nn[3] = {n, n, n};
  Bilinear3 L = Bilinear3::zero(n), M = Bilinear3::zero(n);
  if (c.params.has("delta")) {
    if (c.params.has("L") || c.params.has("M")) throw ValidationError("params: give either 'delta' or 'L'/'M'");
    L = Bilinear3::from_slice(tensor_from_json(*c.params.raw("delta"), {n, n}, "params.delta"), a);
    c.params.resolved["delta"] = tensor_to_json(L.slice(a));
  } else {
    for (const char* key : {"L", "M"}) {
      const json* j = c.params.raw(key);
      Bilinear3 b = j ? Bilinear3(tensor_from_json(*j, Shape(nn, nn + 3), std::string("params.") + key))
                      : Bilinear3::zero(n);
      c.params.resolved[key] = tensor_to_json(b.entries());
      (key[0] == 'L' ? L : M) = std::move(b);
    }
  }
  ExampleOptions eo;
  eo.samples = c.params.get<std::size_t>("samples", eo.samples);
  eo.tolerance = c.params.get<double>("tolerance", eo.tolerance);
  eo.resolution = c.params.get<int>("resolution", eo.resolution);
  if (eo.resolution < 4 || eo.resolution % 4 != 0) throw ValidationError("params.resolution: must be a multiple of 4");
  eo.seed = c.seed;
  eo.threads = c.opts.threads;
  const ExampleReport r = verify_example(L, M, a, eo);
  c.out.report["result"] = r.to_json();
  c.out.summary = "closed form " + fmt(r.closed_form) + "  best upper " + fmt(r.best_upper) + " (" + r.best_family +
                  ")  gap " + fmt(r.gap) + "  lower bound " + (r.lower_bound_ok ? "ok" : "VIOLATED") + "  in S " +
                  (r.in_S ? "yes" : "no") + "  min sampled " + fmt(r.min_sampled) + '\n';
}

void task_relax_assemble(Context& c) {
  const BoxDomain dom = c.domain();
  const int n = c.dim(dom.dim());
  const int d = c.target_dim(n);
  const SD2Triple t = c.sd2(dom, d);
  const DensityTriple dens = c.densities(d, n);
  AssemblyOptions ao;
  ao.estimate.budget = c.params.get<std::size_t>("budget", ao.estimate.budget);
  ao.estimate.families = c.params.get<std::vector<std::string>>("families", {});
  ao.resolution = c.params.get<int>("resolution", ao.resolution);
  const std::string w2 = c.params.get<std::string>("w2_estimator", "families");
  if (w2 == "closed-form-example")
    ao.w2 = W2Estimator::closed_form_example;
  else if (w2 != "families")
    throw ValidationError("params.w2_estimator: expected families or closed-form-example");
  if (c.params.has("example_axis")) ao.example_axis = c.params.require<Point>("example_axis");
  ao.trace = trace_choice_from_string(c.params.get<std::string>("trace", "average"));
  ao.quantization = c.params.get<double>("quantization", ao.quantization);
  ao.cache = c.params.get<bool>("cache", ao.cache);
  ao.keep_items = c.params.get<bool>("per_cell_csv", false);
  ao.threads = c.opts.threads;
  const RelaxedEnergyReport r = assemble_relaxed_energy(t, dens, ao);
  c.out.report["result"] = r.to_json();
  if (ao.keep_items) c.out.files["assembly_cells.csv"] = assembly_items_csv(r);
  std::ostringstream s;
  auto line = [&](const char* name, const Term& term) {
    s << name << "  [" << fmt(term.lower) << ", " << fmt(term.upper) << "]\n";
  };
  line("bulk1", r.bulk1);
  line("bulk2", r.bulk2);
  line("surf1", r.surf1);
  line("surf2", r.surf2);
  line("I1   ", r.I1);
  line("I2   ", r.I2);
  line("total", r.total);
  c.out.summary = s.str();
}

}  // namespace

RunOutcome run_config(const json& config, const RunOptions& opts) {
  static const std::map<std::string, void (*)(Context&)> tasks{
      {"check-hypotheses", task_check_hypotheses}, {"energy", task_energy},
      {"approx-sequence", task_approx_sequence},   {"cell-sweep", task_cell_sweep},
      {"example-verify", task_example_verify},     {"relax-assemble", task_relax_assemble}};
  RunOutcome out;
  json report = json::object();
  try {
    if (!config.is_object()) throw ValidationError("config: expected an object");
    const json empty = json::object();
    Context c(config, config.contains("params") ? config["params"] : empty, opts);
    const std::string task = c.top.require<std::string>("task");
    report["task"] = task;
    const auto it = tasks.find(task);
    if (it == tasks.end())
      throw ValidationError("config.task: unknown task '" + task +
                            "' (check-hypotheses, energy, approx-sequence, cell-sweep, example-verify, relax-assemble)");
    c.seed = c.top.get<std::uint64_t>("seed", 0);
    if (opts.seed) c.seed = *opts.seed;
    c.top.resolved["seed"] = c.seed;
    c.top.raw("params");
    it->second(c);
    c.params.finish();
    c.top.finish();
    json resolved = c.top.resolved;
    resolved["params"] = c.params.resolved;
    report["config"] = resolved;
    report["result"] = c.out.report["result"];
    out = std::move(c.out);
  } catch (const ValidationError& e) {
    out.exit_code = kExitValidation;
    out.error = e.what();
  } catch (const json::exception& e) {
    out.exit_code = kExitValidation;
    out.error = std::string("config: ") + e.what();
  } catch (const EstimatorError& e) {
    out.exit_code = kExitEstimator;
    out.error = e.what();
    report["error_problem"] = json::parse(e.problem(), nullptr, false);
  }
  report["exit_code"] = out.exit_code;
  report["status"] = out.exit_code == kExitOk ? "ok" : "error";
  if (!out.error.empty()) report["error"] = out.error;
  report["timestamp"] = utc_timestamp();
  out.report = std::move(report);
  return out;
}

int run_file(const std::string& path, const std::string& out_dir, const RunOptions& opts) {
  RunOutcome out;
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error: cannot read config '%s'\n", path.c_str());
    return kExitValidation;
  }
  json config = json::parse(in, nullptr, false, /*ignore_comments=*/true);
  if (config.is_discarded()) {
    out.exit_code = kExitValidation;
    out.error = "config: '" + path + "' is not valid JSON";
    out.report = {{"exit_code", out.exit_code}, {"status", "error"}, {"error", out.error}, {"timestamp", utc_timestamp()}};
  } else {
    out = run_config(config, opts);
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const std::filesystem::path dir(out_dir);
  std::ofstream(dir / "report.json") << out.report.dump(2) << '\n';
  for (const auto& [name, contents] : out.files) std::ofstream(dir / name) << contents;
  if (out.exit_code == kExitOk) {
    std::fputs(out.summary.c_str(), stdout);
    std::printf("report: %s\n", (dir / "report.json").c_str());
  } else {
    std::fprintf(stderr, "error: %s\n", out.error.c_str());
    if (out.report.contains("error_problem"))
      std::fprintf(stderr, "problem: %s\n", out.report["error_problem"].dump().c_str());
  }
  return out.exit_code;
}

}  // namespace sd2
