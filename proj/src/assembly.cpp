#include "sd2/assembly.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "sd2/errors.hpp"
#include "sd2/example_tr.hpp"
#include "sd2/parallel.hpp"

namespace sd2 {

std::string to_string(TraceChoice t) {
  switch (t) {
    case TraceChoice::average: return "average";
    case TraceChoice::plus: return "plus";
    case TraceChoice::minus: return "minus";
  }
  return "average";
}

TraceChoice trace_choice_from_string(const std::string& s) {
  if (s == "average") return TraceChoice::average;
  if (s == "plus") return TraceChoice::plus;
  if (s == "minus") return TraceChoice::minus;
  throw ValidationError("unknown trace choice '" + s + "' (known: average, plus, minus)");
}

nlohmann::json Term::to_json() const {
  return {{"upper", upper}, {"lower", lower}, {"width", width()}, {"pieces", pieces}, {"certified", certified}};
}

namespace {

const char* w2_name(W2Estimator e) { return e == W2Estimator::families ? "families" : "closed-form-example"; }

// Rounds to multiples of `step`, using the integer reciprocal when there is one
// so that steps like 1e-6 leave exactly representable values untouched.
class Quantizer {
 public:
  explicit Quantizer(double step) : step_(step) {
    if (step > 0.0) {
      inv_ = 1.0 / step;
      if (std::abs(inv_ - std::round(inv_)) < 1e-9 * inv_) inv_ = std::round(inv_);
    }
  }
  double snap(double v) const { return step_ > 0.0 ? std::round(v * inv_) / inv_ : v; }
  Tensor snap(Tensor t) const {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = snap(t[i]);
    return t;
  }
  Point snap(Point p) const {
    for (double& v : p) v = snap(v);
    return p;
  }

 private:
  double step_ = 0.0;
  double inv_ = 0.0;
};

void key_append(std::string& key, std::span<const double> v) {
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g,", x);
    key += buf;
  }
  key += '|';
}

std::string problem_key(const CellProblem& p) {
  std::string key = to_string(p.kind) + "|";
  key_append(key, p.x);
  for (const Tensor* t : {&p.A, &p.lambda, &p.Lambda, &p.L, &p.M}) key_append(key, t->data());
  key_append(key, p.nu);
  return key;
}

struct Task {
  int term = 0;  // 0 bulk1, 1 bulk2, 2 surf1, 3 surf2
  std::size_t index = 0;
  Point x;
  double measure = 0.0;
  std::optional<CellProblem> problem;  // empty: closed-form W2
  double closed = 0.0;
};

struct Solved {
  double upper = 0.0;
  std::optional<double> lower;
  std::string family;
};

const char* const kTermNames[4] = {"bulk1", "bulk2", "surf1", "surf2"};

}  // namespace

nlohmann::json RelaxedEnergyReport::to_json() const {
  nlohmann::json j{{"bulk1", bulk1.to_json()},
                   {"bulk2", bulk2.to_json()},
                   {"surf1", surf1.to_json()},
                   {"surf2", surf2.to_json()},
                   {"I1", I1.to_json()},
                   {"I2", I2.to_json()},
                   {"total", total.to_json()},
                   {"cell_problems", cell_problems},
                   {"cache_hits", cache_hits},
                   {"options",
                    {{"resolution", options.resolution},
                     {"budget", options.estimate.budget},
                     {"w2_estimator", w2_name(options.w2)},
                     {"trace", to_string(options.trace)},
                     {"quantization", options.quantization},
                     {"cache", options.cache}}}};
  if (!options.example_axis.empty()) j["options"]["example_axis"] = options.example_axis;
  return j;
}

RelaxedEnergyReport assemble_relaxed_energy(const SD2Triple& sd2, const DensityTriple& dens,
                                            const AssemblyOptions& opts) {
  sd2.validate();
  const int d = sd2.d(), n = sd2.N();
  if (opts.quantization < 0.0) throw ValidationError("assembly: quantization must be >= 0");
  if (sd2.G.degree() > 1) throw ValidationError("assembly: G must be piecewise affine");
  if (sd2.g.degree() > 2) throw ValidationError("assembly: g must be piecewise polynomial of degree <= 2");
  if (opts.w2 == W2Estimator::closed_form_example) {
    if (d != n) throw ValidationError("assembly: the closed-form W2 estimator needs d = N");
    if (opts.example_axis.size() != static_cast<std::size_t>(n))
      throw ValidationError("assembly: the closed-form W2 estimator needs example_axis of length N");
  }
  const Quantizer q(opts.quantization);
  const BoxDomain& dom = sd2.domain();

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < dom.cell_count(); ++c) {
    const Point xc = dom.cell_center(c);
    const Tensor G = sd2.G.eval(c, xc);
    const Tensor A1 = G - sd2.g.gradient_at(c, xc);
    tasks.push_back({0, c, xc, dom.cell_volume(), CellProblem::W1(q.snap(xc), q.snap(A1), opts.resolution), 0.0});
  }
  for (std::size_t c = 0; c < dom.cell_count(); ++c) {
    const Point xc = dom.cell_center(c);
    const Tensor L = swap_last_two(sd2.G.gradient(c));
    const Tensor& M = sd2.Gamma.value(c);
    Task t{1, c, xc, dom.cell_volume(), std::nullopt, 0.0};
    if (opts.w2 == W2Estimator::closed_form_example)
      t.closed = closed_form_W2(Bilinear3(L), Bilinear3(M), opts.example_axis);
    else
      t.problem = CellProblem::W2(q.snap(xc), q.snap(sd2.G.eval(c, xc)), q.snap(L), q.snap(M), opts.resolution);
    tasks.push_back(std::move(t));
  }
  const std::vector<JumpFacet> fg = jump_set(sd2.g);
  for (std::size_t i = 0; i < fg.size(); ++i) {
    const JumpFacet& f = fg[i];
    tasks.push_back({2, i, f.centroid, f.area,
                     CellProblem::gamma1(q.snap(f.centroid), q.snap(f.jump), f.normal, opts.resolution), 0.0});
  }
  const std::vector<JumpFacet> fG = jump_set(sd2.G);
  for (std::size_t i = 0; i < fG.size(); ++i) {
    const JumpFacet& f = fG[i];
    const Tensor minus = sd2.G.eval(static_cast<std::size_t>(f.minus_cell), f.centroid);
    const Tensor plus = sd2.G.eval(static_cast<std::size_t>(f.plus_cell), f.centroid);
    Tensor A = opts.trace == TraceChoice::plus ? plus : opts.trace == TraceChoice::minus ? minus : 0.5 * (plus + minus);
    tasks.push_back({3, i, f.centroid, f.area,
                     CellProblem::gamma2(q.snap(f.centroid), q.snap(A), q.snap(f.jump), f.normal, opts.resolution),
                     0.0});
  }

  // Deduplicate identical (quantized) problems in task order, then solve the
  // distinct ones in parallel. The result does not depend on the thread count.
  std::vector<std::size_t> slot(tasks.size(), SIZE_MAX);
  std::vector<std::size_t> unique;  // task indices to solve
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!tasks[i].problem) continue;
    if (opts.cache) {
      auto [it, inserted] = seen.emplace(problem_key(*tasks[i].problem), unique.size());
      if (inserted) unique.push_back(i);
      slot[i] = it->second;
    } else {
      slot[i] = unique.size();
      unique.push_back(i);
    }
  }
  EstimateOptions eo = opts.estimate;
  eo.threads = 1;
  eo.keep_sweep = false;
  std::vector<Solved> solved(unique.size());
  parallel_for(unique.size(), opts.threads, [&](std::size_t u) {
    const CellProblem& p = *tasks[unique[u]].problem;
    p.validate(dens);
    const EstimateResult r = estimate(p, dens, eo);
    solved[u] = {r.upper, r.lower, r.best_family};
  });

  RelaxedEnergyReport rep;
  rep.options = opts;
  std::size_t with_problem = 0;
  std::vector<double> up[4], lo[4];
  Term* terms[4] = {&rep.bulk1, &rep.bulk2, &rep.surf1, &rep.surf2};
  std::vector<bool> first_use(unique.size(), true);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    Solved s;
    bool cached = false;
    if (t.problem) {
      ++with_problem;
      s = solved[slot[i]];
      cached = !first_use[slot[i]];
      first_use[slot[i]] = false;
    } else {
      s = {t.closed, t.closed, "closed-form-example"};
    }
    up[t.term].push_back(t.measure * s.upper);
    lo[t.term].push_back(s.lower ? t.measure * *s.lower : 0.0);
    ++terms[t.term]->pieces;
    if (s.lower) ++terms[t.term]->certified;
    if (opts.keep_items) rep.items.push_back({kTermNames[t.term], t.index, t.x, t.measure, s.upper, s.lower, s.family, cached});
  }
  for (int k = 0; k < 4; ++k) {
    terms[k]->upper = pairwise_sum(up[k]);
    terms[k]->lower = pairwise_sum(lo[k]);
  }
  auto combine = [](const Term& a, const Term& b) {
    return Term{a.upper + b.upper, a.lower + b.lower, a.pieces + b.pieces, a.certified + b.certified};
  };
  rep.I1 = combine(rep.bulk1, rep.surf1);
  rep.I2 = combine(rep.bulk2, rep.surf2);
  rep.total = combine(rep.I1, rep.I2);
  rep.cell_problems = unique.size();
  rep.cache_hits = with_problem - unique.size();
  return rep;
}

std::string assembly_items_csv(const RelaxedEnergyReport& r) {
  std::size_t n = 0;
  for (const auto& it : r.items) n = std::max(n, it.x.size());
  std::ostringstream out;
  out << "# term: bulk1|bulk2|surf1|surf2; index: cell index or facet position; x1..x" << n
      << ": evaluation point; measure: cell volume or facet area; upper, lower: density estimate per unit "
         "measure (lower blank when uncertified); family: best competitor family\n";
  out << "term,index";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i + 1;
  out << ",measure,upper,lower,family\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& it : r.items) {
    out << it.term << ',' << it.index;
    for (std::size_t i = 0; i < n; ++i) out << ',' << (i < it.x.size() ? num(it.x[i]) : "");
    out << ',' << num(it.measure) << ',' << num(it.upper) << ',' << (it.lower ? num(*it.lower) : "") << ','
        << it.family << '\n';
  }
  return out.str();
}

}  // namespace sd2
