#include "sd2/cellformulas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "sd2/constructions.hpp"
#include "sd2/errors.hpp"
#include "sd2/parallel.hpp"
#include "sd2/tensor_json.hpp"

namespace sd2 {

std::string to_string(CellKind k) {
  switch (k) {
    case CellKind::W1: return "W1";
    case CellKind::gamma1: return "gamma1";
    case CellKind::W2: return "W2";
    case CellKind::gamma2: return "gamma2";
  }
  return "?";
}

CellProblem CellProblem::W1(Point x, Tensor A, int resolution) {
  CellProblem p;
  p.kind = CellKind::W1;
  p.x = std::move(x);
  p.A = std::move(A);
  p.resolution = resolution;
  return p;
}

CellProblem CellProblem::gamma1(Point x, Tensor lambda, Point nu, int resolution) {
  CellProblem p;
  p.kind = CellKind::gamma1;
  p.x = std::move(x);
  p.lambda = std::move(lambda);
  p.nu = std::move(nu);
  p.resolution = resolution;
  return p;
}

CellProblem CellProblem::W2(Point x, Tensor A, Tensor L, Tensor M, int resolution) {
  CellProblem p;
  p.kind = CellKind::W2;
  p.x = std::move(x);
  p.A = std::move(A);
  p.L = std::move(L);
  p.M = std::move(M);
  p.resolution = resolution;
  return p;
}

CellProblem CellProblem::gamma2(Point x, Tensor A, Tensor Lambda, Point nu, int resolution) {
  CellProblem p;
  p.kind = CellKind::gamma2;
  p.x = std::move(x);
  p.A = std::move(A);
  p.Lambda = std::move(Lambda);
  p.nu = std::move(nu);
  p.resolution = resolution;
  return p;
}

int CellProblem::d() const {
  switch (kind) {
    case CellKind::gamma1: return lambda.shape().empty() ? 0 : lambda.shape()[0];
    case CellKind::gamma2: return Lambda.shape().empty() ? 0 : Lambda.shape()[0];
    default: return A.shape().empty() ? 0 : A.shape()[0];
  }
}

void CellProblem::validate(const DensityTriple& dens) const {
  const int n = N();
  const std::string where = "cell problem (" + to_string(kind) + ")";
  if (n < 1 || n > 3) throw ValidationError(where + ": x must have 1 to 3 components");
  if (n != dens.N || d() != dens.d)
    throw ValidationError(where + ": dimensions (d=" + std::to_string(d()) + ", N=" + std::to_string(n) +
                          ") differ from the densities (d=" + std::to_string(dens.d) + ", N=" +
                          std::to_string(dens.N) + ")");
  if (resolution < 4 || resolution % 4 != 0) throw ValidationError(where + ": resolution must be a multiple of 4");
  const int dd = d();
  auto want = [&](const Tensor& t, const Shape& s, const char* name) {
    if (t.shape() != s)
      throw ValidationError(where + ": " + name + " must have shape " + shape_to_string(s) + ", got " +
                            shape_to_string(t.shape()));
  };
  auto want_normal = [&] {
    if (static_cast<int>(nu.size()) != n) throw ValidationError(where + ": nu must have N components");
    if (std::abs(norm(nu) - 1.0) > 1e-12) throw ValidationError(where + ": nu must be a unit vector");
  };
  switch (kind) {
    case CellKind::W1: want(A, {dd, n}, "A"); break;
    case CellKind::gamma1:
      want(lambda, {dd}, "lambda");
      want_normal();
      break;
    case CellKind::W2:
      want(A, {dd, n}, "A");
      want(L, {dd, n, n}, "L");
      want(M, {dd, n, n}, "M");
      break;
    case CellKind::gamma2:
      want(A, {dd, n}, "A");
      want(Lambda, {dd, n}, "Lambda");
      want_normal();
      break;
  }
}

nlohmann::json CellProblem::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)}, {"x", x}, {"resolution", resolution}};
  if (!A.empty()) j["A"] = tensor_to_json(A);
  if (!lambda.empty()) j["lambda"] = tensor_to_json(lambda);
  if (!Lambda.empty()) j["Lambda"] = tensor_to_json(Lambda);
  if (!L.empty()) j["L"] = tensor_to_json(L);
  if (!M.empty()) j["M"] = tensor_to_json(M);
  if (!nu.empty()) j["nu"] = nu;
  return j;
}

CellProblem cell_problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("cell problem: expected an object");
  static const char* allowed[] = {"kind", "x", "A", "lambda", "Lambda", "L", "M", "nu", "resolution"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(allowed), std::end(allowed), it.key()) == std::end(allowed))
      throw ValidationError("cell problem: unknown key '" + it.key() + "'");
  const std::string kind = j.at("kind").get<std::string>();
  CellProblem p;
  p.x = j.at("x").get<Point>();
  p.resolution = j.value("resolution", 8);
  const int n = p.N();
  auto rows = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) throw ValidationError(std::string("cell problem: missing '") + key + "'");
    return static_cast<int>(j[key].size());
  };
  if (kind == "W1") {
    p.kind = CellKind::W1;
    p.A = tensor_from_json(j["A"], {rows("A"), n}, "cell problem A");
  } else if (kind == "gamma1") {
    p.kind = CellKind::gamma1;
    p.lambda = tensor_from_json(j["lambda"], {rows("lambda")}, "cell problem lambda");
    p.nu = j.at("nu").get<Point>();
  } else if (kind == "W2") {
    p.kind = CellKind::W2;
    const int d = rows("A");
    p.A = tensor_from_json(j["A"], {d, n}, "cell problem A");
    p.L = tensor_from_json(j.at("L"), {d, n, n}, "cell problem L");
    p.M = tensor_from_json(j.at("M"), {d, n, n}, "cell problem M");
  } else if (kind == "gamma2") {
    p.kind = CellKind::gamma2;
    const int d = rows("Lambda");
    p.Lambda = tensor_from_json(j["Lambda"], {d, n}, "cell problem Lambda");
    p.A = j.contains("A") ? tensor_from_json(j["A"], {d, n}, "cell problem A") : Tensor({d, n});
    p.nu = j.at("nu").get<Point>();
  } else {
    throw ValidationError("cell problem: unknown kind '" + kind + "' (W1, gamma1, W2, gamma2)");
  }
  return p;
}

Tensor rotation_to(const Point& nu) {
  const int n = static_cast<int>(nu.size());
  Tensor R({n, n});
  Point v(n);
  for (int i = 0; i < n; ++i) v[i] = (i == n - 1 ? 1.0 : 0.0) - nu[i];
  const double vv = dot(v, v);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R[i * n + j] = (i == j ? 1.0 : 0.0) - (vv > 1e-28 ? 2.0 * v[i] * v[j] / vv : 0.0);
  return R;
}

namespace {

constexpr double kConstraintTol = 1e-10;

bool is_gamma(CellKind k) { return k == CellKind::gamma1 || k == CellKind::gamma2; }

BoxDomain cell_domain(const CellProblem& p) { return BoxDomain::unit_cube(std::vector<int>(p.N(), p.resolution)); }

// Matrix-valued u = L y sampled on the grid: (L y)_{ik} = Σ_j L_{ijk} y_j.
PiecewiseField linear_matrix_field(const BoxDomain& dom, const Tensor& L) {
  const int d = L.shape()[0], n = dom.dim();
  PiecewiseField u(dom, {d, n});
  const Tensor grad = swap_last_two(L);  // storage order: derivative index last
  for (std::size_t c = 0; c < dom.cell_count(); ++c) {
    u.set_value(c, contract_last(grad, dom.cell_center(c)));
    u.set_gradient(c, grad);
  }
  return u;
}

// Payload above y'_N = 0, zero below.
PiecewiseField elementary_field(const BoxDomain& dom, const Tensor& payload) {
  PiecewiseField u(dom, payload.shape());
  const int n = dom.dim();
  for (std::size_t c = 0; c < dom.cell_count(); ++c)
    if (dom.cell_center(c)[n - 1] > 0.0) u.set_value(c, payload);
  return u;
}

// Scale of the problem data, used to make the constraint tolerance relative.
double data_scale(const CellProblem& p) {
  double s = 1.0;
  for (const Tensor* t : {&p.A, &p.lambda, &p.Lambda, &p.L, &p.M}) s = std::max(s, t->max_abs());
  return s;
}

Point ambient_normal(const CellProblem& p, const Tensor& R, int axis) {
  const int n = p.N();
  Point v(n, 0.0);
  if (!is_gamma(p.kind)) {
    v[axis] = 1.0;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = R[i * n + axis];
  return v;
}

double facets_energy(const std::vector<JumpFacet>& facets, const InterfacialDensity& psi, const CellProblem& p,
                     const Tensor& R) {
  std::vector<double> parts(facets.size());
  for (std::size_t i = 0; i < facets.size(); ++i) {
    const JumpFacet& f = facets[i];
    const Point nu = ambient_normal(p, R, f.axis);
    if (psi.abs_linear) {
      parts[i] = integrate_abs_linear_over_facet(f, psi.abs_linear(nu));
    } else {
      parts[i] = integrate_over_facet(f, [&](const Tensor& j, const Point&) { return psi(p.x, j, nu); });
    }
  }
  return pairwise_sum(parts);
}

// ∂_j u_{ik} in ambient coordinates from a storage gradient in cell coordinates.
Tensor ambient_gradient(const Tensor& storage, const Tensor& R, bool rotated) {
  Tensor P = swap_last_two(storage);  // [i][j'][k]
  if (!rotated) return P;
  const int d = P.shape()[0], n = P.shape()[1];
  Tensor out(P.shape());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int jp = 0; jp < n; ++jp) s += R[j * n + jp] * P[(i * n + jp) * n + k];
        out[(i * n + j) * n + k] = s;
      }
  return out;
}

double recession_value(const BulkDensity& W, const Point& x, const Tensor& A, const Tensor& M) {
  if (M.max_abs() == 0.0 && W.recession) return W.recession(x, A, M);
  if (M.max_abs() == 0.0) return 0.0;
  return recession(W, x, A, M).value;
}

}  // namespace

BoundaryCondition cell_boundary(const CellProblem& p) {
  const int n = p.N();
  const BoxDomain dom = cell_domain(p);
  switch (p.kind) {
    case CellKind::W1: return BoundaryCondition::uniform(n, BoundaryMode::periodic);
    case CellKind::W2: return BoundaryCondition::uniform(n, BoundaryMode::dirichlet, linear_matrix_field(dom, p.L));
    default: {
      BoundaryCondition bc;
      bc.datum = elementary_field(dom, p.kind == CellKind::gamma1 ? p.lambda : p.Lambda);
      bc.modes.assign(n, BoundaryMode::periodic);
      bc.modes[n - 1] = BoundaryMode::dirichlet;
      return bc;
    }
  }
}

CompetitorEvaluation evaluate_competitor(const CellProblem& p, const DensityTriple& dens, const Competitor& u) {
  CompetitorEvaluation e;
  const BoxDomain dom = cell_domain(p);
  if (!(u.domain() == dom)) {
    e.reason = "competitor grid differs from the cell grid";
    return e;
  }
  const bool matrix = p.kind == CellKind::W2 || p.kind == CellKind::gamma2;
  const Shape want = matrix ? Shape{p.d(), p.N()} : Shape{p.d()};
  if (u.value_shape() != want) {
    e.reason = "competitor has value shape " + shape_to_string(u.value_shape());
    return e;
  }
  const double tol = kConstraintTol * data_scale(p);
  const BoundaryCondition bc = cell_boundary(p);
  const Tensor R = is_gamma(p.kind) ? rotation_to(p.nu) : Tensor();
  const double vol = dom.cell_volume();

  if (p.kind == CellKind::W1 || p.kind == CellKind::gamma1) {
    const Tensor target = p.kind == CellKind::W1 ? p.A : Tensor({p.d(), p.N()});
    for (std::size_t c = 0; c < u.cell_count(); ++c)
      if ((u.gradient(c) - target).max_abs() > tol || u.hessian(c).max_abs() > tol) {
        e.reason = p.kind == CellKind::W1 ? "gradient differs from A" : "gradient is not zero";
        return e;
      }
  } else {
    if (u.degree() > 1) {
      e.reason = "competitor must be piecewise affine";
      return e;
    }
    Tensor mean(p.kind == CellKind::W2 ? p.M.shape() : Shape{p.d(), p.N(), p.N()});
    for (std::size_t c = 0; c < u.cell_count(); ++c) mean += vol * swap_last_two(u.gradient(c));
    const Tensor target = p.kind == CellKind::W2 ? p.M : Tensor(mean.shape());
    if ((mean - target).max_abs() > tol) {
      e.reason = "average gradient constraint violated";
      return e;
    }
  }
  // W1 needs no trace test: with periodic accounting the return steps across
  // the identified faces are counted as jumps, which is what a zero trace costs.
  if (p.kind != CellKind::W1 && !boundary_jumps(u, bc, tol).empty()) {
    e.reason = "boundary trace differs from the datum";
    return e;
  }

  const auto facets = p.kind == CellKind::W1 ? jump_set(u, bc) : jump_set(u);
  const InterfacialDensity& psi = (p.kind == CellKind::W1 || p.kind == CellKind::gamma1) ? dens.psi1 : dens.psi2;
  double energy = facets_energy(facets, psi, p, R);
  if (matrix) {
    std::vector<double> bulk(u.cell_count());
    for (std::size_t c = 0; c < u.cell_count(); ++c) {
      const Tensor G = ambient_gradient(u.gradient(c), R, is_gamma(p.kind));
      bulk[c] = vol * (p.kind == CellKind::W2 ? dens.W(p.x, p.A, G) : recession_value(dens.W, p.x, p.A, G));
    }
    energy += pairwise_sum(bulk);
  }
  e.admissible = true;
  e.energy = energy;
  return e;
}

namespace {

std::vector<std::vector<double>> cartesian(const std::vector<std::vector<double>>& axes) {
  std::vector<std::vector<double>> out{{}};
  for (const auto& ax : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out)
      for (double v : ax) {
        auto q = prefix;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

bool integral(double v) { return std::abs(v - std::round(v)) < 1e-12; }

// Scales row i of `payload` by w[i].
Tensor row_scaled(const Tensor& payload, const std::vector<double>& w) {
  Tensor t = payload;
  const std::size_t per = payload.size() / w.size();
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t k = 0; k < per; ++k) t[i * per + k] *= w[i];
  return t;
}

CompetitorFamily gamma_elementary(const CellProblem& p, const Tensor& payload) {
  CompetitorFamily f;
  f.name = "elementary";
  f.grid = {{}};
  f.scale_equivariant = true;
  f.superposition_closed = true;
  const BoxDomain dom = cell_domain(p);
  f.generate = [dom, payload](const std::vector<double>&) -> std::optional<Competitor> {
    return elementary_field(dom, payload);
  };
  return f;
}

// Two planes y'_N = ±1/4 carrying w∘payload and the remainder.
CompetitorFamily gamma_split(const CellProblem& p, const Tensor& payload) {
  CompetitorFamily f;
  f.name = "split";
  const int d = payload.shape()[0];
  for (int i = 0; i < d; ++i) f.ranges.push_back({"w" + std::to_string(i + 1), 0.0, 1.0, false});
  f.grid = cartesian(std::vector<std::vector<double>>(d, {0.0, 0.25, 0.5, 0.75, 1.0}));
  f.scale_equivariant = true;
  f.superposition_closed = true;
  const BoxDomain dom = cell_domain(p);
  f.generate = [dom, payload](const std::vector<double>& w) -> std::optional<Competitor> {
    for (double v : w)
      if (v < 0.0 || v > 1.0) return std::nullopt;
    const Tensor mid = row_scaled(payload, w);
    PiecewiseField u(dom, payload.shape());
    const int n = dom.dim();
    for (std::size_t c = 0; c < dom.cell_count(); ++c) {
      const double y = dom.cell_center(c)[n - 1];
      if (y > 0.25) u.set_value(c, payload);
      else if (y > -0.25) u.set_value(c, mid);
    }
    return u;
  };
  return f;
}

// u depends on y'_N only: slope sΛ below the interface at -1/2 + t/res, the
// compensating slope above it, and a jump Λ at the interface.
CompetitorFamily gamma2_laminate(const CellProblem& p) {
  CompetitorFamily f;
  f.name = "laminate";
  const int res = p.resolution;
  f.ranges = {{"interface_cells", 1.0, double(res - 1), true}, {"slope", -1.0, 1.0, false}};
  std::vector<double> ts;
  for (int t = 1; t < res; ++t) ts.push_back(t);
  f.grid = cartesian({ts, {-1.0, -0.5, 0.5, 1.0}});
  f.scale_equivariant = true;
  const BoxDomain dom = cell_domain(p);
  const Tensor Lam = p.Lambda;
  f.generate = [dom, Lam, res](const std::vector<double>& q) -> std::optional<Competitor> {
    if (!integral(q[0]) || q[0] < 1 || q[0] > res - 1 || q[1] < -1.0 || q[1] > 1.0) return std::nullopt;
    const double theta = q[0] / res, s = q[1];
    const int n = dom.dim();
    const int d = Lam.shape()[0];
    PiecewiseField u(dom, Lam.shape());
    for (std::size_t c = 0; c < dom.cell_count(); ++c) {
      const double y = dom.cell_center(c)[n - 1];
      const bool lower = y < -0.5 + theta;
      const double slope = lower ? s : -theta * s / (1.0 - theta);
      u.set_value(c, lower ? (s * (y + 0.5)) * Lam : Lam + (slope * (y - 0.5)) * Lam);
      Tensor g(u.gradient_shape());
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < n; ++k) g[(i * n + k) * n + (n - 1)] = slope * Lam[i * n + k];
      u.set_gradient(c, g);
    }
    return u;
  };
  return f;
}

CompetitorFamily w1_staircase(const CellProblem& p) {
  CompetitorFamily f;
  f.name = "staircase";
  const int n = p.N(), res = p.resolution;
  std::vector<double> divisors;
  for (int k = 1; k <= res; ++k)
    if (res % k == 0) divisors.push_back(k);
  for (int j = 0; j < n; ++j) f.ranges.push_back({"teeth" + std::to_string(j + 1), 1.0, double(res), true});
  f.grid = cartesian(std::vector<std::vector<double>>(n, divisors));
  f.scale_equivariant = true;
  f.superposition_closed = true;
  const BoxDomain dom = cell_domain(p);
  const Tensor A = p.A;
  f.generate = [dom, A, res](const std::vector<double>& q) -> std::optional<Competitor> {
    std::vector<int> teeth;
    for (double v : q) {
      if (!integral(v) || v < 1 || v > res || res % int(std::round(v)) != 0) return std::nullopt;
      teeth.push_back(int(std::round(v)));
    }
    return staircase(A, teeth, dom).field;
  };
  return f;
}

CompetitorFamily w2_affine(const CellProblem& p) {
  CompetitorFamily f;
  f.name = "affine";
  f.grid = {{}};
  f.superposition_closed = true;
  const BoxDomain dom = cell_domain(p);
  const Tensor L = p.L;
  f.generate = [dom, L](const std::vector<double>&) -> std::optional<Competitor> {
    return linear_matrix_field(dom, L);
  };
  return f;
}

// u = L y outside the cell box [lo, hi) and G y inside, G chosen so that the
// average gradient is M. phase(c) in {0, 1} selects G1 or G2 inside the box.
PiecewiseField two_phase_inclusion(const BoxDomain& dom, const Tensor& L, const Tensor& M, const std::vector<int>& lo,
                                   const std::vector<int>& hi, const std::function<int(const std::vector<int>&)>& phase,
                                   double s) {
  const int n = dom.dim();
  const int res = dom.resolution()[0];
  std::size_t inside = 0, first = 0;
  double rho = 1.0;
  for (int j = 0; j < n; ++j) rho *= double(hi[j] - lo[j]) / res;
  for (std::size_t c = 0; c < dom.cell_count(); ++c) {
    const auto m = dom.multi_index(c);
    bool in = true;
    for (int j = 0; j < n; ++j) in = in && m[j] >= lo[j] && m[j] < hi[j];
    if (!in) continue;
    ++inside;
    if (phase(m) == 0) ++first;
  }
  const double theta = inside ? double(first) / double(inside) : 0.0;
  const Tensor Gbar = (1.0 / rho) * (M - (1.0 - rho) * L);
  const Tensor D = s * (Gbar - L);
  const Tensor G1 = Gbar + (1.0 - theta) * D;
  const Tensor G2 = Gbar - theta * D;
  const Tensor sL = swap_last_two(L), s1 = swap_last_two(G1), s2 = swap_last_two(G2);
  PiecewiseField u(dom, {L.shape()[0], n});
  for (std::size_t c = 0; c < dom.cell_count(); ++c) {
    const auto m = dom.multi_index(c);
    bool in = true;
    for (int j = 0; j < n; ++j) in = in && m[j] >= lo[j] && m[j] < hi[j];
    const Tensor& g = !in ? sL : (phase(m) == 0 ? s1 : s2);
    u.set_value(c, contract_last(g, dom.cell_center(c)));
    u.set_gradient(c, g);
  }
  return u;
}

CompetitorFamily w2_inclusion(const CellProblem& p) {
  CompetitorFamily f;
  f.name = "inclusion";
  const int n = p.N(), res = p.resolution;
  for (int j = 0; j < n; ++j) f.ranges.push_back({"lo" + std::to_string(j + 1), 1.0, double(res - 1), true});
  for (int j = 0; j < n; ++j) f.ranges.push_back({"hi" + std::to_string(j + 1), 1.0, double(res - 1), true});
  // Centered cubes first (largest first), then every box in lexicographic order.
  std::vector<std::vector<double>> grid;
  for (int k = res / 2 - 1; k >= 1; --k) {
    std::vector<double> q(2 * n);
    for (int j = 0; j < n; ++j) {
      q[j] = res / 2 - k;
      q[n + j] = res / 2 + k;
    }
    grid.push_back(q);
  }
  std::vector<double> idx;
  for (int k = 1; k <= res - 1; ++k) idx.push_back(k);
  for (auto& q : cartesian(std::vector<std::vector<double>>(2 * n, idx))) {
    bool ok = true;
    for (int j = 0; j < n; ++j) ok = ok && q[j] < q[n + j];
    if (ok && std::find(grid.begin(), grid.end(), q) == grid.end()) grid.push_back(std::move(q));
  }
  f.grid = std::move(grid);
  const BoxDomain dom = cell_domain(p);
  const Tensor L = p.L, M = p.M;
  f.generate = [dom, L, M, n, res](const std::vector<double>& q) -> std::optional<Competitor> {
    std::vector<int> lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
      if (!integral(q[j]) || !integral(q[n + j])) return std::nullopt;
      lo[j] = int(std::round(q[j]));
      hi[j] = int(std::round(q[n + j]));
      if (lo[j] < 1 || hi[j] > res - 1 || lo[j] >= hi[j]) return std::nullopt;
    }
    return two_phase_inclusion(dom, L, M, lo, hi, [](const std::vector<int>&) { return 0; }, 0.0);
  };
  return f;
}

// Layers normal to e_axis inside the box [1, res-1)^N: period p cells, the
// first t cells of each period in phase 1; gradients differ by s (Ḡ - L).
CompetitorFamily w2_laminate(const CellProblem& p) {
  CompetitorFamily f;
  f.name = "laminate";
  const int n = p.N(), res = p.resolution;
  f.ranges = {{"axis", 0.0, double(n - 1), true},
              {"period", 2.0, double(res - 2), true},
              {"phase_cells", 1.0, double(res - 3), true},
              {"contrast", -1.0, 1.0, false}};
  std::vector<std::vector<double>> grid;
  for (int e = 0; e < n; ++e)
    for (int per = 2; per <= res - 2; ++per)
      for (int t = 1; t < per; ++t)
        for (double s : {-1.0, -0.5, 0.5, 1.0}) grid.push_back({double(e), double(per), double(t), s});
  f.grid = std::move(grid);
  const BoxDomain dom = cell_domain(p);
  const Tensor L = p.L, M = p.M;
  f.generate = [dom, L, M, n, res](const std::vector<double>& q) -> std::optional<Competitor> {
    for (int k = 0; k < 3; ++k)
      if (!integral(q[k])) return std::nullopt;
    const int e = int(std::round(q[0])), per = int(std::round(q[1])), t = int(std::round(q[2]));
    if (e < 0 || e >= n || per < 2 || per > res - 2 || t < 1 || t >= per || q[3] < -1.0 || q[3] > 1.0)
      return std::nullopt;
    const std::vector<int> lo(n, 1), hi(n, res - 1);
    return two_phase_inclusion(dom, L, M, lo, hi,
                               [=](const std::vector<int>& m) { return ((m[e] - 1) % per) < t ? 0 : 1; }, q[3]);
  };
  return f;
}

}  // namespace

std::vector<CompetitorFamily> default_families(const CellProblem& p) {
  switch (p.kind) {
    case CellKind::W1: return {w1_staircase(p)};
    case CellKind::gamma1: return {gamma_elementary(p, p.lambda), gamma_split(p, p.lambda)};
    case CellKind::W2: return {w2_affine(p), w2_inclusion(p), w2_laminate(p)};
    case CellKind::gamma2:
      return {gamma_elementary(p, p.Lambda), gamma_split(p, p.Lambda), gamma2_laminate(p)};
  }
  return {};
}

namespace {

struct Candidate {
  double energy = 0.0;
  std::vector<double> params;
  std::size_t family = 0;
  bool found = false;
};

// Lower energy wins; energies within a relative 1e-12 tie and fall back to
// the lexicographically smallest parameter vector.
bool better(double e, const std::vector<double>& params, const Candidate& best) {
  if (!best.found) return true;
  const double tol = 1e-12 * std::max(std::abs(e), std::abs(best.energy));
  if (e < best.energy - tol) return true;
  if (e > best.energy + tol) return false;
  return params < best.params;
}

struct Certificate {
  std::optional<double> value;
  std::string note;
};

Certificate certify(const CellProblem& p, const DensityTriple& dens) {
  Certificate cert;
  auto declared_c = [](const InterfacialDensity& psi) -> std::optional<double> {
    if (!psi.coercive) return std::nullopt;
    auto it = psi.declared.find("H5.c");
    if (it == psi.declared.end() || !(it->second > 0.0)) return std::nullopt;
    return it->second;
  };
  auto offer = [&](double v, const std::string& note) {
    if (!cert.value || v > *cert.value) {
      cert.value = v;
      cert.note = note;
    }
  };
  const int n = p.N();
  switch (p.kind) {
    case CellKind::W1:
      if (auto c = declared_c(dens.psi1)) offer(*c * p.A.norm(), "c1 |A|: a zero trace forces total directed jump -A");
      break;
    case CellKind::gamma1:
      if (auto c = declared_c(dens.psi1))
        offer(*c * p.lambda.norm(), "c1 |lambda|: the boundary datum forces total directed jump lambda (x) nu");
      break;
    case CellKind::W2: {
      const Tensor D = p.L - p.M;
      if (auto c = declared_c(dens.psi2))
        offer(*c * D.norm(), "c2 |L - M|: total directed jump L - M, bulk density nonnegative");
      if (dens.psi2.projection_axis) {
        const Point& a = *dens.psi2.projection_axis;
        double tr = 0.0;
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) tr += D[(i * n + i) * n + k] * a[k];
        offer(std::abs(tr), "|tr((L - M)(., a))|: divergence theorem with the |nu . J a| density");
      }
      break;
    }
    case CellKind::gamma2: {
      if (auto c = declared_c(dens.psi2))
        offer(*c * p.Lambda.norm(), "c2 |Lambda|: the boundary datum forces total directed jump Lambda (x) nu");
      if (dens.psi2.projection_axis) {
        const Point& a = *dens.psi2.projection_axis;
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) s += p.nu[i] * p.Lambda[i * n + k] * a[k];
        offer(std::abs(s), "|nu . Lambda a|: divergence theorem with the |nu . J a| density");
      }
      break;
    }
  }
  return cert;
}

}  // namespace

EstimateResult estimate(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts) {
  p.validate(dens);
  if (opts.budget < 1) throw ValidationError("estimate: budget must be >= 1");
  std::vector<CompetitorFamily> fams = default_families(p);
  if (!opts.families.empty()) {
    std::vector<CompetitorFamily> chosen;
    for (const auto& name : opts.families) {
      auto it = std::find_if(fams.begin(), fams.end(), [&](const CompetitorFamily& f) { return f.name == name; });
      if (it == fams.end()) throw ValidationError("estimate: family '" + name + "' does not apply to " + to_string(p.kind));
      chosen.push_back(*it);
    }
    fams = std::move(chosen);
  }

  EstimateResult r;
  Candidate best;
  for (std::size_t fi = 0; fi < fams.size(); ++fi) {
    const CompetitorFamily& fam = fams[fi];
    std::map<std::vector<double>, CompetitorEvaluation> seen;
    std::size_t used = 0;
    Candidate local;
    auto run = [&](const std::vector<double>& q) {
      auto field = fam.generate(q);
      if (!field) return CompetitorEvaluation{false, 0.0, "parameters outside the family"};
      return evaluate_competitor(p, dens, *field);
    };
    auto record = [&](const std::vector<double>& q, const CompetitorEvaluation& ev) {
      seen.emplace(q, ev);
      ++used;
      ++r.evaluations;
      if (ev.admissible) ++r.admissible;
      if (opts.keep_sweep) r.sweep.push_back({fam.name, q, ev.admissible, ev.energy});
      if (ev.admissible && better(ev.energy, q, local)) local = {ev.energy, q, fi, true};
    };

    const std::size_t ngrid = std::min(opts.budget, fam.grid.size());
    std::vector<CompetitorEvaluation> evs(ngrid);
    parallel_for(ngrid, opts.threads, [&](std::size_t i) { evs[i] = run(fam.grid[i]); });
    for (std::size_t i = 0; i < ngrid; ++i) record(fam.grid[i], evs[i]);

    if (local.found && !fam.ranges.empty()) {
      std::vector<double> step;
      for (const auto& rg : fam.ranges) step.push_back(rg.integer ? 1.0 : 0.25 * (rg.upper - rg.lower));
      bool exhausted = false;
      while (!exhausted) {
        bool improved = false;
        for (std::size_t k = 0; k < fam.ranges.size() && !exhausted; ++k)
          for (double dir : {1.0, -1.0}) {
            std::vector<double> q = local.params;
            q[k] += dir * step[k];
            const ParamRange& rg = fam.ranges[k];
            if (q[k] < rg.lower - 1e-12 || q[k] > rg.upper + 1e-12 || seen.count(q)) continue;
            if (used >= opts.budget) {
              exhausted = true;
              break;
            }
            record(q, run(q));
            if (local.params == q) improved = true;
          }
        if (improved) continue;
        bool refined = false;
        for (std::size_t k = 0; k < fam.ranges.size(); ++k)
          if (!fam.ranges[k].integer && step[k] > 1e-6 * (fam.ranges[k].upper - fam.ranges[k].lower)) {
            step[k] *= 0.5;
            refined = true;
          }
        if (!refined) break;
      }
    }
    // Across families a tie keeps the earlier (simpler) family.
    if (local.found && (!best.found || local.energy < best.energy - 1e-12 * std::max(std::abs(local.energy),
                                                                                     std::abs(best.energy))))
      best = local;
  }

  if (!best.found)
    throw EstimatorError("estimate_" + to_string(p.kind) + ": no admissible competitor among " +
                             std::to_string(r.evaluations) + " evaluations",
                         p.to_json().dump());
  r.upper = best.energy;
  r.best_family = fams[best.family].name;
  r.best_params = best.params;
  const Certificate cert = certify(p, dens);
  if (cert.value) {
    if (*cert.value <= r.upper + 1e-12 * std::max(1.0, std::abs(r.upper))) {
      r.lower = std::min(*cert.value, r.upper);
      r.lower_note = cert.note;
    } else {
      r.lower_note = "certificate dropped: it exceeds an admissible competitor, so a declared constant is wrong";
    }
  } else {
    r.lower_note = "no certificate for these densities";
  }
  return r;
}

namespace {
EstimateResult estimate_kind(CellKind k, const CellProblem& p, const DensityTriple& dens, const EstimateOptions& o) {
  if (p.kind != k) throw ValidationError("estimate_" + to_string(k) + " called with a " + to_string(p.kind) + " problem");
  return estimate(p, dens, o);
}
}  // namespace

EstimateResult estimate_W1(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts) {
  return estimate_kind(CellKind::W1, p, dens, opts);
}
EstimateResult estimate_gamma1(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts) {
  return estimate_kind(CellKind::gamma1, p, dens, opts);
}
EstimateResult estimate_W2(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts) {
  return estimate_kind(CellKind::W2, p, dens, opts);
}
EstimateResult estimate_gamma2(const CellProblem& p, const DensityTriple& dens, const EstimateOptions& opts) {
  return estimate_kind(CellKind::gamma2, p, dens, opts);
}

nlohmann::json EstimateResult::to_json() const {
  nlohmann::json j{{"upper", upper},
                   {"lower", lower ? nlohmann::json(*lower) : nlohmann::json(nullptr)},
                   {"lower_note", lower_note},
                   {"best", {{"family", best_family}, {"params", best_params}}},
                   {"evaluations", evaluations},
                   {"admissible", admissible},
                   {"seed", seed}};
  return j;
}

std::string sweep_csv(const EstimateResult& r) {
  std::size_t k = 0;
  for (const auto& row : r.sweep) k = std::max(k, row.params.size());
  std::ostringstream out;
  out << "# family: competitor family; param1..param" << k
      << ": family parameters in cell units (blank when unused); admissible: constraints met within 1e-10; "
         "energy: cell energy per unit cube, scalar (nan when inadmissible)\n";
  out << "family";
  for (std::size_t i = 0; i < k; ++i) out << ",param" << i + 1;
  out << ",admissible,energy\n";
  char buf[64];
  for (const auto& row : r.sweep) {
    out << row.family;
    for (std::size_t i = 0; i < k; ++i) {
      out << ',';
      if (i < row.params.size()) {
        std::snprintf(buf, sizeof buf, "%.17g", row.params[i]);
        out << buf;
      }
    }
    if (row.admissible) std::snprintf(buf, sizeof buf, "%.17g", row.energy);
    out << ',' << (row.admissible ? "true" : "false") << ',' << (row.admissible ? buf : "nan") << '\n';
  }
  return out.str();
}

}  // namespace sd2
