#include <cmath>
#include <random>

#include "corpus.hpp"
#include "doctest.h"
#include "sd2/cellformulas.hpp"
#include "sd2/errors.hpp"
#include "sd2/example_tr.hpp"

using namespace sd2;

namespace {

const Point e1{1.0, 0.0};

Point as_point(const Tensor& t) { return Point(t.data().begin(), t.data().end()); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  const int n = a.shape()[0];
  Tensor c({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) c[i * n + j] += a[i * n + k] * b[k * n + j];
  return c;
}

// L = 0 and M chosen so that Δ(·, e1) = B.
std::pair<Bilinear3, Bilinear3> with_delta(const Tensor& B) {
  return {Bilinear3::from_slice(B, e1), Bilinear3::zero(2)};
}

InclusionBox square(double r) { return InclusionBox::axis_aligned({0.0, 0.0}, {r / 2, r / 2}); }

}  // namespace

TEST_SUITE("example_tr") {
  TEST_CASE("bilinear slice reproduces the bilinear map") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    Tensor m({3, 3, 3});
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = g(rng);
    const Bilinear3 b(m);
    const Point y{g(rng), g(rng), g(rng)}, z{g(rng), g(rng), g(rng)};
    const Point lhs = as_point(contract_last(b.slice(z), y));
    const Point rhs = b.apply(y, z);
    for (int i = 0; i < 3; ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-14));
    CHECK_THROWS_AS(Bilinear3(Tensor({2, 3, 3})), ValidationError);
  }

  TEST_CASE("closed form") {
    Tensor m({2, 2, 2});
    m[0] = 1.0;  // M_111
    m[6] = 1.0;  // M_221
    CHECK(closed_form_W2(Bilinear3::zero(2), Bilinear3(m), e1) == 2.0);
    // Brute-force contraction of the component sum.
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += (0.0 - m[(i * 2 + i) * 2 + j]) * e1[j];
    CHECK(std::abs(s) == 2.0);
    CHECK(closed_form_W2(Bilinear3(m), Bilinear3(m), e1) == 0.0);
    CHECK_THROWS_AS(closed_form_W2(Bilinear3(m), Bilinear3(m), Point{1.0, 1.0}), ValidationError);

    // Similarity invariance of the trace.
    const Tensor B = Tensor::matrix({{1.0, 2.0}, {-0.5, 3.0}});
    const Tensor T = Tensor::matrix({{2.0, 1.0}, {1.0, 1.0}}), Tinv = Tensor::matrix({{1.0, -1.0}, {-1.0, 2.0}});
    const Tensor C = matmul(matmul(T, B), Tinv);
    const auto [L1, M1] = with_delta(B);
    const auto [L2, M2] = with_delta(C);
    CHECK(closed_form_W2(L1, M1, e1) == doctest::Approx(closed_form_W2(L2, M2, e1)).epsilon(1e-14));
  }

  TEST_CASE("inclusion energies") {
    for (double r : {0.1, 0.3, 0.5, 0.9}) {
      auto [L, M] = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}}));
      CHECK(inclusion_energy(L, M, e1, square(r)) == doctest::Approx(2.0).epsilon(1e-14));
      std::tie(L, M) = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 2.0}}));
      CHECK(inclusion_energy(L, M, e1, square(r)) == doctest::Approx(3.0).epsilon(1e-14));
      std::tie(L, M) = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, -2.0}}));
      CHECK(inclusion_energy(L, M, e1, square(r)) == doctest::Approx(3.0).epsilon(1e-14));
    }
    const auto [L, M] = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}}));
    CHECK_THROWS_AS(inclusion_energy(L, M, e1, square(1.0)), ValidationError);
    CHECK_THROWS_AS(inclusion_energy(L, M, e1, InclusionBox::axis_aligned({0.3, 0.0}, {0.25, 0.1})),
                    ValidationError);
  }

  TEST_CASE("inclusion energy against quadrature of the boundary integral") {
    // Off-center box, full matrix: compare with a fine midpoint rule over ∂R.
    const Tensor B = Tensor::matrix({{0.7, -1.3}, {2.1, 0.4}});
    const auto [L, M] = with_delta(B);
    const InclusionBox R = InclusionBox::axis_aligned({0.1, -0.05}, {0.2, 0.15});
    const int n = 20000;
    double total = 0.0;
    for (int axis = 0; axis < 2; ++axis)
      for (double side : {-1.0, 1.0}) {
        const int t = 1 - axis;
        const double len = 2 * R.half[t];
        for (int q = 0; q < n; ++q) {
          Point x = R.center;
          x[axis] += side * R.half[axis];
          x[t] += -R.half[t] + (q + 0.5) * len / n;
          const Point Bx = as_point(contract_last(B, x));
          total += std::abs(side * Bx[axis]) * len / n;
        }
      }
    total /= 4 * R.half[0] * R.half[1];
    CHECK(inclusion_energy(L, M, e1, R) == doctest::Approx(total).epsilon(1e-7));
  }

  TEST_CASE("scale invariance in the box size") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor B = Tensor::matrix({{g(rng), g(rng)}, {g(rng), g(rng)}});
      const auto [L, M] = with_delta(B);
      const Tensor edges = Tensor::matrix({{0.8, -0.6}, {0.6, 0.8}});
      const double ref = inclusion_energy(L, M, e1, InclusionBox{{0.0, 0.0}, {0.05, 0.02}, edges});
      for (double r : {0.2, 0.4}) {
        const double s = r / 0.1;
        const double e = inclusion_energy(L, M, e1, InclusionBox{{0.0, 0.0}, {0.05 * s, 0.02 * s}, edges});
        CHECK(std::abs(e - ref) <= 1e-10 * std::max(1.0, ref));
      }
    }
  }

  TEST_CASE("one and three dimensions") {
    const Point a1{1.0};
    Tensor b1({1, 1});
    b1[0] = -1.5;
    CHECK(inclusion_energy(Bilinear3::from_slice(b1, a1), Bilinear3::zero(1), a1,
                           InclusionBox::axis_aligned({0.1}, {0.2})) == doctest::Approx(1.5));
    const Point a3{0.0, 0.0, 1.0};
    const Tensor B = Tensor::matrix({{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 0.5}});
    const auto L = Bilinear3::from_slice(B, a3);
    CHECK(inclusion_energy(L, Bilinear3::zero(3), a3, InclusionBox::axis_aligned({0, 0, 0}, {0.1, 0.2, 0.3})) ==
          doctest::Approx(3.5));
  }

  TEST_CASE("verify_example") {
    ExampleOptions opts;
    opts.samples = 300;
    auto [L, M] = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}}));
    ExampleReport r = verify_example(L, M, e1, opts);
    CHECK(r.closed_form == 2.0);
    CHECK(std::abs(r.gap) <= 1e-9);
    CHECK(r.lower_bound_ok);
    CHECK(!r.in_S);
    CHECK(r.family_stats.at("square").min == doctest::Approx(2.0).epsilon(1e-14));

    std::tie(L, M) = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, 2.0}}));
    r = verify_example(L, M, e1, opts);
    CHECK(r.closed_form == 3.0);
    CHECK(r.eigenbasis);
    CHECK(r.gap <= 1e-6);
    CHECK(r.lower_bound_ok);
    CHECK(r.in_S);

    std::tie(L, M) = with_delta(Tensor::matrix({{1.0, 0.0}, {0.0, -2.0}}));
    r = verify_example(L, M, e1, opts);
    CHECK(r.closed_form == 1.0);
    CHECK(r.family_stats.at("square").min == 3.0);
    CHECK(r.lower_bound_ok);
    CHECK(r.in_S);
    CHECK(r.min_sampled >= 1.0 - 1e-9);
    CHECK(r.best_upper == 3.0);
    CHECK(r.gap == 2.0);
    CHECK(r.family_stats.at("random-laminate").evaluated == 100);

    // A non-diagonal same-sign case in a skewed eigenbasis.
    std::tie(L, M) = with_delta(Tensor::matrix({{1.0, 1.0}, {0.0, 2.0}}));
    r = verify_example(L, M, e1, opts);
    CHECK(r.eigenbasis);
    CHECK(r.gap <= 1e-6);
    CHECK(r.lower_bound_ok);

    // Complex spectrum: no eigenbasis boxes, the bound still holds.
    std::tie(L, M) = with_delta(Tensor::matrix({{0.0, -1.0}, {1.0, 0.5}}));
    r = verify_example(L, M, e1, opts);
    CHECK(!r.eigenbasis);
    CHECK(r.lower_bound_ok);
  }

  TEST_CASE("verify_example is independent of the thread count") {
    const auto [L, M] = with_delta(Tensor::matrix({{0.3, -1.0}, {0.7, -2.0}}));
    ExampleOptions o1, o8;
    o1.samples = o8.samples = 200;
    o8.threads = 8;
    CHECK(verify_example(L, M, e1, o1).to_json().dump() == verify_example(L, M, e1, o8).to_json().dump());
    o1.seed = 1;
    CHECK(verify_example(L, M, e1, o1).to_json().dump() != verify_example(L, M, e1, o8).to_json().dump());
  }

  TEST_CASE("lower bound over random problems") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> g;
    ExampleOptions opts;
    opts.samples = 60;
    for (int trial = 0; trial < 10; ++trial) {
      Tensor l({2, 2, 2}), m({2, 2, 2});
      for (std::size_t i = 0; i < l.size(); ++i) {
        l[i] = g(rng);
        m[i] = g(rng);
      }
      const double th = g(rng);
      const Point a{std::cos(th), std::sin(th)};
      opts.seed = trial;
      const ExampleReport r = verify_example(Bilinear3(l), Bilinear3(m), a, opts);
      CHECK(r.lower_bound_ok);
      CHECK(r.gap >= -1e-9);
    }
  }

  TEST_CASE("is_in_S") {
    CHECK(is_in_S(Tensor::matrix({{1.0, 0.0}, {0.0, 2.0}})));
    CHECK(!is_in_S(Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}})));
    CHECK(!is_in_S(Tensor::matrix({{1.0, 0.0}, {0.0, -1.0}})));
    CHECK(is_in_S(Tensor::matrix({{1.0, 0.0}, {0.0, -2.0}})));
    CHECK(!is_in_S(Tensor::matrix({{0.0, 0.0}, {0.0, 2.0}})));
    // Rotation-like spectrum 1 ± i: distinct, real parts nonzero, trace 2.
    CHECK(is_in_S(Tensor::matrix({{1.0, -1.0}, {1.0, 1.0}})));
  }

  TEST_CASE("bulk relaxed energy") {
    const BoxDomain dom({0.0, 0.0}, {1.0, 1.0}, {2, 2});
    const Point a = e1;
    // G affine with ∇G = Γ.
    SD2Triple t = corpus::make(
        dom, 2, [](const Point&) { return Tensor({2}); },
        [](const Point& y) {
          Tensor G({2, 2});
          G[0] = y[0];  // G_11
          G[2] = y[1];  // G_21
          return G;
        },
        [](const Point&) {
          Tensor g({2, 2, 2});
          g[0] = 1.0;  // ∂_1 G_11
          g[6] = 1.0;  // ∂_2 G_21
          return g;
        });
    CHECK(bulk_relaxed_energy_example(t, a) == 0.0);

    // ∇G - Γ ≡ P with tr P(·, a) = 2.
    t.Gamma = sample_field(dom, {2, 2, 2}, 0, [](const Point&) { return Tensor({2, 2, 2}); });
    CHECK(bulk_relaxed_energy_example(t, a) == doctest::Approx(2.0).epsilon(1e-15));

    // Values 2 on the left half, 0 on the right half.
    t.Gamma = sample_field(dom, {2, 2, 2}, 0, [](const Point& y) {
      Tensor g({2, 2, 2});
      if (y[0] > 0.5) {
        g[0] = 1.0;
        g[6] = 1.0;
      }
      return g;
    });
    CHECK(bulk_relaxed_energy_example(t, a) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("Lipschitz continuity in M") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    for (int n : {1, 2, 3}) {
      Point a(n);
      double an = 0.0;
      for (double& v : a) an += (v = g(rng)) * v;
      for (double& v : a) v /= std::sqrt(an);
      for (int trial = 0; trial < 200; ++trial) {
        Tensor l({n, n, n}), m1({n, n, n}), m2({n, n, n});
        for (std::size_t i = 0; i < l.size(); ++i) {
          l[i] = g(rng);
          m1[i] = g(rng);
          m2[i] = m1[i] + 0.1 * g(rng);
        }
        const double lhs = std::abs(closed_form_W2(Bilinear3(l), Bilinear3(m1), a) -
                                    closed_form_W2(Bilinear3(l), Bilinear3(m2), a));
        CHECK(lhs <= std::sqrt(double(n)) * (m1 - m2).norm() + 1e-12);
      }
    }
  }

  TEST_CASE("estimate_W2 never undercuts the closed form") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> g;
    const Point a = e1;
    const DensityTriple dens = densities_from_json(
        {{"W", {{"catalog", "W_zero"}}}, {"psi1", {{"expression", "0"}}}, {"psi2", {{"catalog", "psi2_proj"}, {"a", a}}}},
        2, 2);
    EstimateOptions opts;
    opts.budget = 150;
    for (int trial = 0; trial < 4; ++trial) {
      Tensor l({2, 2, 2}), m({2, 2, 2});
      for (std::size_t i = 0; i < l.size(); ++i) {
        l[i] = g(rng);
        m[i] = g(rng);
      }
      const CellProblem p = CellProblem::W2({0.0, 0.0}, Tensor({2, 2}), l, m);
      const EstimateResult r = estimate_W2(p, dens, opts);
      CHECK(r.upper >= closed_form_W2(Bilinear3(l), Bilinear3(m), a) - 1e-9);
    }
  }
}
