#include "sd2/constructions.hpp"

#include <cmath>

#include "sd2/errors.hpp"
#include "sd2/expression.hpp"

namespace sd2 {

void SD2Triple::validate() const {
  const BoxDomain& dom = g.domain();
  if (g.value_shape().size() != 1) throw ValidationError("sd2: g must be vector valued");
  const int dd = g.value_shape()[0];
  const int n = dom.dim();
  if (!(G.domain() == dom) || !(Gamma.domain() == dom)) throw ValidationError("sd2: g, G and Gamma need one grid");
  if (G.value_shape() != Shape{dd, n}) throw ValidationError("sd2: G must have shape [d, N]");
  if (Gamma.value_shape() != Shape{dd, n, n}) throw ValidationError("sd2: Gamma must have shape [d, N, N]");
  if (Gamma.degree() != 0) throw ValidationError("sd2: Gamma must be cellwise constant");
}

Staircase staircase(const Tensor& A, int n, const BoxDomain& domain) {
  return staircase(A, std::vector<int>(domain.dim(), n), domain);
}

Staircase staircase(const Tensor& A, const std::vector<int>& teeth, const BoxDomain& domain) {
  const int N = domain.dim();
  if (static_cast<int>(teeth.size()) != N) throw ValidationError("staircase: need one tooth count per axis");
  if (A.rank() != 2 || A.shape()[1] != N) throw ValidationError("staircase: A must be d x N");
  const int d = A.shape()[0];
  for (int j = 0; j < N; ++j) {
    if (teeth[j] < 1) throw ValidationError("staircase: n must be >= 1");
    if (domain.resolution()[j] % teeth[j] != 0)
      throw ValidationError("staircase: resolution must be a multiple of n on every axis");
  }
  PiecewiseField u(domain, {d});
  for (std::size_t cell = 0; cell < domain.cell_count(); ++cell) {
    const auto m = domain.multi_index(cell);
    Tensor v({d});
    for (int j = 0; j < N; ++j) {
      const int per = domain.resolution()[j] / teeth[j];
      const int inner = m[j] % per;  // position inside the tooth
      const double s = (inner + 0.5) * domain.cell_width(j);
      for (int i = 0; i < d; ++i) v[i] += s * A[i * N + j];
    }
    u.set_value(cell, v);
    u.set_gradient(cell, A);
  }
  return {u, BoundaryCondition::uniform(N, BoundaryMode::periodic)};
}

PiecewiseField piecewise_constant_approx(const PiecewiseField& u, int n) {
  if (n < 1) throw ValidationError("piecewise_constant_approx: n must be >= 1");
  const BoxDomain fine = u.domain().refined(n);
  PiecewiseField r(fine, u.value_shape());
  const int N = fine.dim();
  for (std::size_t cell = 0; cell < fine.cell_count(); ++cell) {
    auto m = fine.multi_index(cell);
    for (int k = 0; k < N; ++k) m[k] /= n;
    r.set_value(cell, u.eval(u.domain().cell_index(m), fine.cell_center(cell)));
  }
  return r;
}

PiecewiseField gradient_primitive(const PiecewiseField& f) {
  const Shape& fs = f.value_shape();
  const int N = f.domain().dim();
  if (fs.empty() || fs.back() != N) throw ValidationError("gradient_primitive: last value index must have length N");
  if (f.degree() > 1) throw ValidationError("gradient_primitive: target must be piecewise affine");
  const Shape us(fs.begin(), fs.end() - 1);
  PiecewiseField u(f.domain(), us);
  for (std::size_t cell = 0; cell < f.cell_count(); ++cell) {
    u.set_gradient(cell, f.value(cell));
    const Tensor& q = f.gradient(cell);
    if (q.max_abs() == 0.0) continue;
    if ((q - swap_last_two(q)).max_abs() > 1e-12 * std::max(1.0, q.max_abs()))
      throw ValidationError("gradient_primitive: cellwise gradient of the target is not symmetric");
    u.set_hessian(cell, q);
  }
  return u;
}

PiecewiseField elementary_jump(const Tensor& payload, const BoxDomain& domain) {
  const int N = domain.dim();
  if (domain.resolution()[N - 1] % 2 != 0)
    throw ValidationError("elementary_jump: resolution along the normal axis must be even");
  PiecewiseField u(domain, payload.shape());
  const double mid = 0.5 * (domain.lower()[N - 1] + domain.upper()[N - 1]);
  for (std::size_t cell = 0; cell < domain.cell_count(); ++cell)
    if (domain.cell_center(cell)[N - 1] > mid) u.set_value(cell, payload);
  return u;
}

PiecewiseField hessian_field(const PiecewiseField& u) {
  PiecewiseField h(u.domain(), u.hessian_shape());
  for (std::size_t cell = 0; cell < u.cell_count(); ++cell) h.set_value(cell, u.hessian(cell));
  return h;
}

ApproxResult approximating_sequence(const SD2Triple& sd2, int n, const ApproxOptions& opts) {
  sd2.validate();
  if (n < 1) throw ValidationError("approximating_sequence: n must be >= 1");
  const PiecewiseField h = gradient_primitive(sd2.Gamma);
  const PiecewiseField v = piecewise_constant_approx(subtract(sd2.G, h), n);
  const PiecewiseField w = add(v, refine(h, n));
  const PiecewiseField ht = gradient_primitive(w);
  const PiecewiseField rest = subtract(refine(sd2.g, n), ht);

  ApproxResult r;
  r.n = n;
  // A piecewise-constant remainder is reproduced exactly at any refinement.
  r.m = rest.degree() == 0 ? 1 : opts.m(n);
  if (r.m < 1) throw ValidationError("approximating_sequence: m(n) must be >= 1");
  const PiecewiseField hbar = piecewise_constant_approx(rest, r.m);
  r.u = add(refine(ht, r.m), hbar);
  r.l1_u = l1_distance(r.u, sd2.g);
  r.l1_grad = l1_distance(r.u.gradient_field(), sd2.G);
  r.rate_constant_u = n * r.l1_u;
  r.rate_constant_grad = n * r.l1_grad;
  return r;
}

PiecewiseField sample_field(const BoxDomain& domain, const Shape& value_shape, int degree,
                            const std::function<Tensor(const Point&)>& f) {
  const int N = domain.dim();
  PiecewiseField u(domain, value_shape);
  const std::size_t m = shape_size(value_shape);
  for (std::size_t cell = 0; cell < domain.cell_count(); ++cell) {
    const Point c = domain.cell_center(cell);
    const Tensor f0 = f(c);
    if (f0.shape() != value_shape) throw ValidationError("sample_field: function returned the wrong shape");
    u.set_value(cell, f0);
    if (degree < 1) continue;
    auto shifted = [&](int k, double sk, int l, double sl) {
      Point y = c;
      y[k] += sk;
      if (l >= 0) y[l] += sl;
      return f(y);
    };
    Tensor grad(u.gradient_shape());
    Tensor hess(u.hessian_shape());
    for (int k = 0; k < N; ++k) {
      const double s = 0.25 * domain.cell_width(k);
      const Tensor fp = shifted(k, s, -1, 0.0), fm = shifted(k, -s, -1, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        grad[i * N + k] = (fp[i] - fm[i]) / (2.0 * s);
        hess[(i * N + k) * N + k] = (fp[i] - 2.0 * f0[i] + fm[i]) / (s * s);
      }
      if (degree < 2) continue;
      for (int l = k + 1; l < N; ++l) {
        const double t = 0.25 * domain.cell_width(l);
        const Tensor pp = shifted(k, s, l, t), pm = shifted(k, s, l, -t);
        const Tensor mp = shifted(k, -s, l, t), mm = shifted(k, -s, l, -t);
        for (std::size_t i = 0; i < m; ++i) {
          const double v = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * s * t);
          hess[(i * N + k) * N + l] = v;
          hess[(i * N + l) * N + k] = v;
        }
      }
    }
    u.set_gradient(cell, grad);
    if (degree >= 2) u.set_hessian(cell, hess);
  }
  return u;
}

PiecewiseField field_entry(const nlohmann::json& j, const BoxDomain& domain, const Shape& shape, int degree,
                           const std::string& name) {
  if (!j.is_object()) throw ValidationError("sd2." + name + ": expected an object");
  if (j.contains("expression")) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "expression") throw ValidationError("sd2." + name + ": unknown key '" + it.key() + "'");
    std::vector<Expression> comps;
    for (const auto& s : j["expression"]) comps.emplace_back(s.get<std::string>());
    if (comps.size() != shape_size(shape))
      throw ValidationError("sd2." + name + ": expected " + std::to_string(shape_size(shape)) +
                            " component expressions (row-major)");
    const int N = domain.dim();
    return sample_field(domain, shape, degree, [&](const Point& y) {
      ExprArgs args;
      args.groups.emplace("x", ExprArgs::Group{y, std::span<const int>(&N, 1)});
      Tensor t(shape);
      for (std::size_t i = 0; i < comps.size(); ++i) t[i] = comps[i](args);
      return t;
    });
  }
  PiecewiseField f = field_from_json(j);
  if (!(f.domain() == domain)) throw ValidationError("sd2." + name + ": field grid differs from the domain");
  if (f.value_shape() != shape) throw ValidationError("sd2." + name + ": wrong value shape");
  return f;
}

SD2Triple sd2_from_json(const nlohmann::json& j, const BoxDomain& domain, int d) {
  if (!j.is_object()) throw ValidationError("sd2: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "g" && it.key() != "G" && it.key() != "Gamma")
      throw ValidationError("sd2: unknown key '" + it.key() + "'");
  const int N = domain.dim();
  SD2Triple t;
  t.g = field_entry(j.at("g"), domain, {d}, 2, "g");
  t.G = field_entry(j.at("G"), domain, {d, N}, 1, "G");
  t.Gamma = j.contains("Gamma") ? field_entry(j["Gamma"], domain, {d, N, N}, 0, "Gamma")
                                : PiecewiseField(domain, {d, N, N});
  t.validate();
  return t;
}

}  // namespace sd2
