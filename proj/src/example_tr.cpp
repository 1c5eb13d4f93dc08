#include "sd2/example_tr.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sd2/cellformulas.hpp"
#include "sd2/densities.hpp"
#include "sd2/errors.hpp"
#include "sd2/parallel.hpp"
#include "sd2/quadrature.hpp"

namespace sd2 {

Bilinear3::Bilinear3(Tensor entries) : m_(std::move(entries)) {
  const Shape& s = m_.shape();
  if (s.size() != 3 || s[0] != s[1] || s[1] != s[2]) throw ValidationError("Bilinear3: entries must be N x N x N");
  n_ = s[0];
}

Bilinear3 Bilinear3::from_slice(const Tensor& B, const Point& a) {
  const int n = static_cast<int>(a.size());
  if (B.shape() != Shape{n, n}) throw ValidationError("Bilinear3::from_slice: B must be N x N");
  Tensor m({n, n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) m[(i * n + j) * n + k] = B[i * n + j] * a[k];
  return Bilinear3(std::move(m));
}

Point Bilinear3::apply(const Point& y, const Point& z) const {
  Point r(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) r[i] += m_[(i * n_ + j) * n_ + k] * y[j] * z[k];
  return r;
}

Tensor Bilinear3::slice(const Point& a) const {
  if (static_cast<int>(a.size()) != n_) throw ValidationError("Bilinear3::slice: a must have N components");
  Tensor B({n_, n_});
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) B[i * n_ + j] += m_[(i * n_ + j) * n_ + k] * a[k];
  return B;
}

namespace {

void require_unit(const Point& a, int n) {
  if (static_cast<int>(a.size()) != n) throw ValidationError("a must have N components");
  if (std::abs(norm(a) - 1.0) > 1e-12) throw ValidationError("a must be a unit vector");
}

Tensor delta_slice(const Bilinear3& L, const Bilinear3& M, const Point& a) {
  if (L.dim() != M.dim()) throw ValidationError("L and M must have the same dimension");
  require_unit(a, L.dim());
  return L.slice(a) - M.slice(a);
}

Eigen::MatrixXd to_eigen(const Tensor& B) {
  const int n = B.shape()[0];
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = B[i * n + j];
  return m;
}

}  // namespace

double closed_form_W2(const Bilinear3& L, const Bilinear3& M, const Point& a) {
  const Tensor B = delta_slice(L, M, a);
  const int n = L.dim();
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += B[i * n + i];
  return std::abs(tr);
}

InclusionBox InclusionBox::axis_aligned(Point center, Point half) {
  const int n = static_cast<int>(center.size());
  Tensor e({n, n});
  for (int i = 0; i < n; ++i) e[i * n + i] = 1.0;
  return {std::move(center), std::move(half), std::move(e)};
}

bool InclusionBox::inside_unit_cube(double margin) const {
  const int n = static_cast<int>(center.size());
  for (int mask = 0; mask < (1 << n); ++mask)
    for (int i = 0; i < n; ++i) {
      double v = center[i];
      for (int k = 0; k < n; ++k) v += ((mask >> k) & 1 ? 1.0 : -1.0) * half[k] * edges[i * n + k];
      if (!(std::abs(v) < 0.5 - margin)) return false;
    }
  return true;
}

nlohmann::json InclusionBox::to_json() const {
  const int n = static_cast<int>(center.size());
  std::vector<std::vector<double>> cols(n, std::vector<double>(n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) cols[k][i] = edges[i * n + k];
  return {{"center", center}, {"half", half}, {"edges", cols}};
}

double inclusion_energy(const Bilinear3& L, const Bilinear3& M, const Point& a, const InclusionBox& R) {
  const Tensor B = delta_slice(L, M, a);
  const int n = L.dim();
  if (static_cast<int>(R.center.size()) != n || static_cast<int>(R.half.size()) != n || R.edges.shape() != Shape{n, n})
    throw ValidationError("inclusion_energy: box has the wrong dimension");
  for (double h : R.half)
    if (!(h > 0.0)) throw ValidationError("inclusion_energy: half widths must be positive");
  if (!R.inside_unit_cube()) throw ValidationError("inclusion_energy: R is not compactly contained in Q");
  const Eigen::MatrixXd V = to_eigen(R.edges);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible()) throw ValidationError("inclusion_energy: box edges are degenerate");
  const Eigen::MatrixXd dual = lu.inverse();  // row k: d_k with d_k · v_l = δ_kl
  const Eigen::MatrixXd Bm = to_eigen(B);
  const Eigen::MatrixXd DB = dual * Bm;
  const Eigen::MatrixXd DBV = DB * V;
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c(i) = R.center[i];
  const Eigen::VectorXd DBc = DB * c;

  // With ν dA = ±d_k |det V| dt on face k and |R| = |det V| Π 2h, the
  // determinant cancels. Substituting t_l = h_l s_l and dividing by h_k turns
  // face k into the mean of |affine| over [-1, 1]^{N-1}, weighted by 1/2.
  double total = 0.0;
  const double face_volume = std::ldexp(1.0, n - 1);
  for (int k = 0; k < n; ++k) {
    std::vector<double> coeff;
    Box s;
    for (int l = 0; l < n; ++l) {
      if (l == k) continue;
      coeff.push_back(DBV(k, l) * R.half[l] / R.half[k]);
      s.lower.push_back(-1.0);
      s.upper.push_back(1.0);
    }
    for (double side : {1.0, -1.0})
      total += integrate_abs_affine(coeff, DBc(k) / R.half[k] + side * DBV(k, k), s) / face_volume;
  }
  return total / 2.0;
}

bool is_in_S(const Tensor& B) {
  if (B.rank() != 2 || B.shape()[0] != B.shape()[1]) throw ValidationError("is_in_S: B must be square");
  const int n = B.shape()[0];
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(B), false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += B[i * n + i];
  if (!(std::abs(tr) > 1e-9)) return false;
  for (int i = 0; i < n; ++i) {
    if (!(std::abs(ev(i).real()) > 1e-9)) return false;
    for (int j = i + 1; j < n; ++j)
      if (!(std::abs(ev(i) - ev(j)) > 1e-9)) return false;
  }
  return true;
}

nlohmann::json ExampleReport::to_json() const {
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [name, s] : family_stats) stats[name] = {{"evaluated", s.evaluated}, {"min", s.min}, {"max", s.max}};
  return {{"closed_form", closed_form},   {"best_upper", best_upper}, {"gap", gap},
          {"lower_bound_ok", lower_bound_ok}, {"in_S", in_S},     {"eigenbasis", eigenbasis},
          {"best", {{"family", best_family}, {"competitor", best}}},
          {"family_stats", stats},        {"min_sampled", min_sampled}};
}

namespace {

double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng), u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Real eigenbasis with unit columns, when Δ(·, a) is diagonalizable over R
// with a well-conditioned eigenvector matrix.
std::optional<Tensor> real_eigenbasis(const Tensor& B) {
  const int n = B.shape()[0];
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(B), true);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXcd ev = es.eigenvalues();
  for (int i = 0; i < n; ++i)
    if (std::abs(ev(i).imag()) > 1e-12) return std::nullopt;
  Eigen::MatrixXd V = es.eigenvectors().real();
  for (int k = 0; k < n; ++k) V.col(k).normalize();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
  const auto s = svd.singularValues();
  if (!(s(n - 1) > 1e-8 * s(0))) return std::nullopt;
  Tensor e({n, n});
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) e[i * n + k] = V(i, k);
  return e;
}

// Largest |coordinate| over the vertices of the centered parallelepiped with unit half widths.
double vertex_reach(const Tensor& edges, const Point& half) {
  const int n = static_cast<int>(half.size());
  double m = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask)
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += ((mask >> k) & 1 ? 1.0 : -1.0) * half[k] * edges[i * n + k];
      m = std::max(m, std::abs(v));
    }
  return m;
}

}  // namespace

ExampleReport verify_example(const Bilinear3& L, const Bilinear3& M, const Point& a, const ExampleOptions& opts) {
  const int n = L.dim();
  const Tensor B = delta_slice(L, M, a);
  ExampleReport rep;
  rep.closed_form = closed_form_W2(L, M, a);
  rep.in_S = is_in_S(B);
  bool have_best = false;

  auto note = [&](const std::string& family, double e, const nlohmann::json& desc, bool candidate) {
    FamilyStats& s = rep.family_stats[family];
    s.min = s.evaluated ? std::min(s.min, e) : e;
    s.max = s.evaluated ? std::max(s.max, e) : e;
    ++s.evaluated;
    if (e < rep.closed_form - opts.tolerance) rep.lower_bound_ok = false;
    if (candidate && (!have_best || e < rep.best_upper)) {
      have_best = true;
      rep.best_upper = e;
      rep.best_family = family;
      rep.best = desc;
    }
  };
  auto try_box = [&](const std::string& family, const InclusionBox& box) {
    if (box.inside_unit_cube()) note(family, inclusion_energy(L, M, a, box), box.to_json(), true);
  };

  for (int k = 1; k <= 9; ++k) try_box("square", InclusionBox::axis_aligned(Point(n, 0.0), Point(n, 0.05 * k)));

  const std::vector<double> centers{-0.2, 0.0, 0.2}, halves{0.05, 0.15, 0.25};
  const std::size_t combos = static_cast<std::size_t>(std::pow(9.0, n));
  for (std::size_t m = 0; m < combos; ++m) {
    Point c(n), h(n);
    std::size_t r = m;
    for (int i = 0; i < n; ++i) {
      c[i] = centers[r % 3];
      r /= 3;
      h[i] = halves[r % 3];
      r /= 3;
    }
    try_box("axis-box", InclusionBox::axis_aligned(c, h));
  }

  if (auto V = real_eigenbasis(B)) {
    rep.eigenbasis = true;
    for (double frac : {0.25, 0.5, 0.9}) {
      Point h(n, 1.0);
      const double s = frac * 0.5 / vertex_reach(*V, h);
      for (double& v : h) v = s;
      try_box("eigen-box", InclusionBox{Point(n, 0.0), h, *V});
    }
  }

  // Random admissible competitors: boxes, parallelepipeds and grid laminates.
  const DensityTriple dens = densities_from_json(
      {{"W", {{"catalog", "W_zero"}}}, {"psi1", {{"expression", "0"}}}, {"psi2", {{"catalog", "psi2_proj"}, {"a", a}}}},
      n, n);
  const CellProblem cell = CellProblem::W2(Point(n, 0.0), Tensor({n, n}), L.entries(), M.entries(), opts.resolution);
  const CompetitorFamily laminate = default_families(cell)[2];
  struct Sample {
    std::string family;
    double energy = 0.0;
    nlohmann::json desc;
  };
  std::vector<Sample> samples(opts.samples);
  parallel_for(opts.samples, opts.threads, [&](std::size_t i) {
    std::mt19937_64 rng(stream_seed(opts.seed, 0x5eed, i));
    Sample& s = samples[i];
    if (i % 3 == 0) {
      Point c(n), h(n);
      for (int k = 0; k < n; ++k) {
        c[k] = -0.3 + 0.6 * unit_uniform(rng);
        h[k] = 0.01 + 0.18 * unit_uniform(rng);
      }
      const InclusionBox box = InclusionBox::axis_aligned(c, h);
      s = {"random-box", inclusion_energy(L, M, a, box), box.to_json()};
    } else if (i % 3 == 1) {
      Tensor e({n, n});
      while (true) {
        for (int k = 0; k < n; ++k) {
          double len = 0.0;
          for (int r = 0; r < n; ++r) len += std::pow(e[r * n + k] = standard_normal(rng), 2);
          for (int r = 0; r < n; ++r) e[r * n + k] /= std::sqrt(len);
        }
        if (std::abs(to_eigen(e).determinant()) > 0.1) break;
      }
      Point c(n), h(n);
      for (int k = 0; k < n; ++k) {
        c[k] = -0.1 + 0.2 * unit_uniform(rng);
        h[k] = 0.01 + 0.09 * unit_uniform(rng);
      }
      const InclusionBox box{c, h, e};
      s = {"random-parallelepiped", inclusion_energy(L, M, a, box), box.to_json()};
    } else {
      const int res = opts.resolution;
      std::vector<double> q(4);
      q[0] = std::floor(unit_uniform(rng) * n);
      q[1] = 2 + std::floor(unit_uniform(rng) * (res - 3));
      q[2] = 1 + std::floor(unit_uniform(rng) * (q[1] - 1));
      q[3] = -1.0 + 2.0 * unit_uniform(rng);
      const CompetitorEvaluation ev = evaluate_competitor(cell, dens, *laminate.generate(q));
      if (!ev.admissible) throw EstimatorError("verify_example: laminate rejected: " + ev.reason, cell.to_json().dump());
      s = {"random-laminate", ev.energy, {{"axis", q[0]}, {"period", q[1]}, {"phase_cells", q[2]}, {"contrast", q[3]}}};
    }
  });
  rep.min_sampled = std::numeric_limits<double>::infinity();
  for (const Sample& s : samples) {
    note(s.family, s.energy, s.desc, false);
    rep.min_sampled = std::min(rep.min_sampled, s.energy);
  }
  if (samples.empty()) rep.min_sampled = rep.best_upper;
  rep.gap = rep.best_upper - rep.closed_form;
  return rep;
}

double bulk_relaxed_energy_example(const SD2Triple& sd2, const Point& a) {
  sd2.validate();
  const int n = sd2.N();
  if (sd2.d() != n) throw ValidationError("bulk_relaxed_energy_example: needs d = N");
  require_unit(a, n);
  if (sd2.G.degree() > 1) throw ValidationError("bulk_relaxed_energy_example: G must be piecewise affine");
  const BoxDomain& dom = sd2.domain();
  std::vector<double> parts(dom.cell_count());
  for (std::size_t c = 0; c < dom.cell_count(); ++c) {
    const Tensor P = swap_last_two(sd2.G.gradient(c)) - sd2.Gamma.value(c);
    double tr = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) tr += P[(i * n + i) * n + k] * a[k];
    parts[c] = dom.cell_volume() * std::abs(tr);
  }
  return pairwise_sum(parts);
}

}  // namespace sd2
