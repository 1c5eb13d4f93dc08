#include "sd2/densities.hpp"

#include <cmath>

#include "sd2/errors.hpp"
#include "sd2/expression.hpp"

namespace sd2 {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ (a + 1)) ^ (b + 0x5851f42d4c957f2dULL));
}

nlohmann::json DensityTriple::selection() const {
  return {{"W", W.selection}, {"psi1", psi1.selection}, {"psi2", psi2.selection}};
}

BulkDensity bulk_catalog(const std::string& name) {
  BulkDensity w;
  w.name = name;
  w.selection = {{"catalog", name}};
  if (name == "W_norm") {
    w.value = [](const Point&, const Tensor& A, const Tensor& M) { return A.norm() + M.norm(); };
    w.recession = [](const Point&, const Tensor&, const Tensor& M) { return M.norm(); };
    w.declared = {{"H1.upper", 1.0},    {"H1.lower", 1.0},    {"H2.C", 1.0},
                  {"H3.modulus", 0.0},  {"H4.rate", 1.0},     {"H4.alpha", 0.5},
                  {"Hinf1.upper", 1.0}, {"Hinf1.lower", 1.0}, {"Hinf2.C", 1.0},
                  {"Hinf3.modulus", 0.0}};
  } else if (name == "W_zero") {
    w.value = [](const Point&, const Tensor&, const Tensor&) { return 0.0; };
    w.recession = w.value;
    w.coercive = false;
    w.declared = {{"H1.upper", 0.0},    {"H2.C", 0.0},    {"H3.modulus", 0.0},
                  {"Hinf1.upper", 0.0}, {"Hinf2.C", 0.0}, {"Hinf3.modulus", 0.0}};
  } else {
    throw ValidationError("unknown bulk density '" + name + "' (known: W_norm, W_zero)");
  }
  return w;
}

InterfacialDensity interfacial_catalog(const std::string& name, int order, int d, int N,
                                       const std::optional<Point>& a) {
  InterfacialDensity p;
  p.name = name;
  p.order = order;
  p.selection = {{"catalog", name}};
  const Constants unit{{"H5.c", 1.0}, {"H5.K", 1.0}, {"H6.modulus", 0.0}, {"H7.defect", 0.0}, {"H8.defect", 0.0}};
  auto want_order = [&](int o) {
    if (order != o)
      throw ValidationError("density '" + name + "' is a psi" + std::to_string(o) + " density");
  };
  if (name == "psi1_norm" || name == "psi2_norm") {
    want_order(name == "psi1_norm" ? 1 : 2);
    p.value = [](const Point&, const Tensor& v, const Point&) { return v.norm(); };
    p.declared = unit;
  } else if (name == "psi1_weighted") {
    want_order(1);
    p.value = [](const Point& x, const Tensor& v, const Point&) {
      return (1.25 + 0.75 * std::sin(x[0])) * v.norm();
    };
    p.x_dependent = true;
    p.declared = {{"H5.c", 0.5}, {"H5.K", 2.0}, {"H6.modulus", 0.75}, {"H7.defect", 0.0}, {"H8.defect", 0.0}};
  } else if (name == "psi1_square") {
    want_order(1);
    p.value = [](const Point&, const Tensor& v, const Point&) { return v.norm() * v.norm(); };
  } else if (name == "psi2_proj") {
    want_order(2);
    if (d != N) throw ValidationError("psi2_proj needs d = N");
    if (!a || static_cast<int>(a->size()) != N) throw ValidationError("psi2_proj needs an axis 'a' of length N");
    const double an = norm(*a);
    if (std::abs(an - 1.0) > 1e-12) throw ValidationError("psi2_proj: |a| must be 1");
    const Point axis = *a;
    p.projection_axis = axis;
    p.selection["a"] = axis;
    p.abs_linear = [axis, d, N](const Point& nu) {
      Tensor c({d, N});
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < N; ++j) c[i * N + j] = nu[i] * axis[j];
      return c;
    };
    auto coef = p.abs_linear;
    p.value = [coef](const Point&, const Tensor& v, const Point& nu) { return std::abs(coef(nu).dot(v)); };
    p.coercive = false;
    p.declared = {{"H5.c", 0.0}, {"H5.K", 1.0}, {"H6.modulus", 0.0}, {"H7.defect", 0.0}, {"H8.defect", 0.0}};
  } else {
    throw ValidationError("unknown interfacial density '" + name +
                          "' (known: psi1_norm, psi1_weighted, psi1_square, psi2_norm, psi2_proj)");
  }
  return p;
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
  }
}

Constants constants_from(const nlohmann::json& j) {
  Constants c;
  if (j.contains("constants"))
    for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it) c[it.key()] = it.value().get<double>();
  return c;
}

ExprArgs::Group view(const Tensor& t) { return {t.data(), std::span<const int>(t.shape())}; }

BulkDensity bulk_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"catalog", "expression", "recession", "constants", "coercive"}, "densities.W");
  if (j.contains("catalog")) {
    if (j.size() != 1) throw ValidationError("densities.W: catalog entries take no other keys");
    return bulk_catalog(j["catalog"].get<std::string>());
  }
  if (!j.contains("expression")) throw ValidationError("densities.W: need 'catalog' or 'expression'");
  BulkDensity w;
  const Expression e(j["expression"].get<std::string>());
  w.name = "expression";
  w.selection = j;
  w.x_dependent = e.uses("x");
  w.value = [e](const Point& x, const Tensor& A, const Tensor& M) {
    const int n = static_cast<int>(x.size());
    ExprArgs args;
    args.groups.emplace("x", ExprArgs::Group{x, std::span<const int>(&n, 1)});
    args.groups.emplace("A", view(A));
    args.groups.emplace("M", view(M));
    return e(args);
  };
  if (j.contains("recession")) {
    const Expression r(j["recession"].get<std::string>());
    w.recession = [r](const Point& x, const Tensor& A, const Tensor& M) {
      const int n = static_cast<int>(x.size());
      ExprArgs args;
      args.groups.emplace("x", ExprArgs::Group{x, std::span<const int>(&n, 1)});
      args.groups.emplace("A", view(A));
      args.groups.emplace("M", view(M));
      return r(args);
    };
  }
  w.declared = constants_from(j);
  w.coercive = j.value("coercive", true);
  return w;
}

InterfacialDensity interfacial_from_json(const nlohmann::json& j, int order, int d, int N) {
  const std::string where = "densities.psi" + std::to_string(order);
  reject_unknown(j, {"catalog", "a", "expression", "constants", "coercive"}, where);
  if (j.contains("catalog")) {
    std::optional<Point> a;
    if (j.contains("a")) a = j["a"].get<Point>();
    return interfacial_catalog(j["catalog"].get<std::string>(), order, d, N, a);
  }
  if (!j.contains("expression")) throw ValidationError(where + ": need 'catalog' or 'expression'");
  InterfacialDensity p;
  const Expression e(j["expression"].get<std::string>());
  p.name = "expression";
  p.order = order;
  p.selection = j;
  p.x_dependent = e.uses("x");
  const std::string payload = order == 1 ? "lam" : "Lam";
  p.value = [e, payload](const Point& x, const Tensor& v, const Point& nu) {
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(nu.size());
    ExprArgs args;
    args.groups.emplace("x", ExprArgs::Group{x, std::span<const int>(&n, 1)});
    args.groups.emplace("nu", ExprArgs::Group{nu, std::span<const int>(&m, 1)});
    args.groups.emplace(payload, view(v));
    return e(args);
  };
  p.declared = constants_from(j);
  p.coercive = j.value("coercive", true);
  return p;
}

}  // namespace

DensityTriple densities_from_json(const nlohmann::json& j, int d, int N) {
  reject_unknown(j, {"W", "psi1", "psi2"}, "densities");
  if (d < 1 || N < 1 || N > 3) throw ValidationError("densities: need d >= 1 and 1 <= N <= 3");
  DensityTriple t;
  t.d = d;
  t.N = N;
  t.W = j.contains("W") ? bulk_from_json(j["W"]) : bulk_catalog("W_zero");
  t.psi1 = j.contains("psi1") ? interfacial_from_json(j["psi1"], 1, d, N)
                              : interfacial_catalog("psi1_norm", 1, d, N);
  t.psi2 = j.contains("psi2") ? interfacial_from_json(j["psi2"], 2, d, N)
                              : interfacial_catalog("psi2_norm", 2, d, N);
  return t;
}

double extend_homogeneous(const InterfacialDensity& psi, const Point& x, const Tensor& payload,
                          std::span<const double> theta) {
  const double r = norm(theta);
  if (r == 0.0) return 0.0;
  Point unit(theta.begin(), theta.end());
  for (double& v : unit) v /= r;
  return r * psi(x, payload, unit);
}

std::vector<double> default_recession_schedule() {
  std::vector<double> s;
  for (int k = 7; k <= 17; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

RecessionResult recession(const BulkDensity& W, const Point& x, const Tensor& A, const Tensor& M,
                          std::span<const double> schedule) {
  RecessionResult r;
  r.schedule = schedule.empty() ? default_recession_schedule()
                                : std::vector<double>(schedule.begin(), schedule.end());
  if (r.schedule.size() < 3) throw ValidationError("recession: schedule needs at least 3 points");
  for (std::size_t k = 1; k < r.schedule.size(); ++k)
    if (!(r.schedule[k] > r.schedule[k - 1])) throw ValidationError("recession: schedule must increase strictly");
  auto declared = [&](const char* key, double fallback) {
    auto it = W.declared.find(key);
    return it == W.declared.end() ? fallback : it->second;
  };
  const double L = declared("H4.L", 0.0);
  if (!(r.schedule.back() > L)) throw ValidationError("recession: last schedule point must exceed L");
  r.alpha = declared("H4.alpha", 0.5);
  r.envelope_constant = declared("H4.C", (1.0 + A.norm()) * std::max(1.0, declared("H2.C", 1.0)));

  const double m = M.norm();
  if (m == 0.0) return r;
  const Tensor dir = (1.0 / m) * M;
  for (double t : r.schedule) r.quotients.push_back(W(x, A, t * dir) / t);
  for (std::size_t k = 0; k < r.quotients.size(); ++k)
    for (std::size_t l = k + 1; l < r.quotients.size(); ++l) {
      const double env = r.envelope_constant *
                         (std::pow(r.schedule[k], -r.alpha) + std::pow(r.schedule[l], -r.alpha));
      if (!(std::abs(r.quotients[k] - r.quotients[l]) <= env * (1.0 + 1e-12))) r.envelope_ok = false;
    }
  if (W.recession) {
    r.closed_form = true;
    r.value = W.recession(x, A, M);
  } else {
    r.value = m * r.quotients.back();
  }
  return r;
}

}  // namespace sd2
