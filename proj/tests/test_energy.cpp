#include <cmath>

#include "corpus.hpp"
#include "doctest.h"
#include "sd2/energy.hpp"
#include "sd2/errors.hpp"

using namespace sd2;

namespace {

DensityTriple catalog(int d, int N) {
  return densities_from_json({{"W", {{"catalog", "W_norm"}}}, {"psi1", {{"catalog", "psi1_norm"}}},
                              {"psi2", {{"catalog", "psi2_norm"}}}},
                             d, N);
}

PiecewiseField wavy(const BoxDomain& dom) {
  PiecewiseField u(dom, {2});
  for (std::size_t c = 0; c < u.cell_count(); ++c) {
    const double s = double(c);
    u.set_value(c, Tensor::vector({std::sin(s), std::cos(2 * s)}));
    u.set_gradient(c, Tensor::matrix({{s * 0.1, -1.0}, {0.5, std::sin(s)}}));
    Tensor q({2, 2, 2});
    q[0] = 1.0;
    q[3] = s * 0.01;
    q[5] = 0.2;
    q[6] = 0.2;
    u.set_hessian(c, q);
  }
  return u;
}

}  // namespace

TEST_SUITE("energy") {
  TEST_CASE("zero field") {
    const EnergyBreakdown e = total_energy(PiecewiseField(BoxDomain::unit_cube({3, 3}), {2}), catalog(2, 2));
    CHECK(e.bulk == 0.0);
    CHECK(e.jump1 == 0.0);
    CHECK(e.jump2 == 0.0);
  }

  TEST_CASE("plateau staircase") {
    for (int n : {2, 5, 8}) {
      const BoxDomain dom({0.0}, {1.0}, {n});
      PiecewiseField u(dom, {1});
      PiecewiseField g = sample_field(dom, {1}, 1, [](const Point& y) { return Tensor::vector({y[0]}); });
      for (int k = 0; k < n; ++k) u.set_value(k, Tensor::vector({double(k) / n}));
      EnergyOptions o;
      o.u_boundary = BoundaryCondition::uniform(1, BoundaryMode::dirichlet, g);
      const EnergyBreakdown e = total_energy(u, catalog(1, 1), o);
      CHECK(e.bulk == 0.0);
      CHECK(e.jump1 == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(e.jump2 == 0.0);
      CHECK(e.total == e.bulk + e.jump1 + e.jump2);
    }
  }

  TEST_CASE("quadratic bulk") {
    for (int n : {1, 4, 9}) {
      const BoxDomain dom({0.0}, {1.0}, {n});
      const PiecewiseField u =
          sample_field(dom, {1}, 2, [](const Point& y) { return Tensor::vector({0.5 * y[0] * y[0]}); });
      const EnergyBreakdown e = total_energy(u, catalog(1, 1));
      CHECK(e.bulk == doctest::Approx(1.5).epsilon(1e-14));
      CHECK(e.jump1 < 1e-12);
      CHECK(e.jump2 < 1e-12);
    }
  }

  TEST_CASE("shape mismatch") {
    CHECK_THROWS_AS(total_energy(PiecewiseField(BoxDomain::unit_cube({2}), {2}), catalog(1, 1)), ValidationError);
  }

  TEST_CASE("disarrangement densities") {
    const auto aff = corpus::affine();
    CHECK(l1_norm(disarrangement_density(aff.sd2)) < 1e-13);
    const auto slip = corpus::slip();
    const PiecewiseField m = disarrangement_density(slip.sd2);
    for (std::size_t c = 0; c < m.cell_count(); ++c) CHECK(m.value(c)[0] == doctest::Approx(1.0));

    const BoxDomain dom = BoxDomain::unit_cube({2, 2});
    SD2Triple half = corpus::make(
        dom, 2, [](const Point& y) { return Tensor::vector({y[0], y[1]}); },
        [](const Point&) { return Tensor::matrix({{0.5, 0.0}, {0.0, 0.5}}); },
        [](const Point&) { return Tensor({2, 2, 2}); });
    const PiecewiseField hm = disarrangement_density(half);
    for (std::size_t c = 0; c < hm.cell_count(); ++c)
      CHECK((hm.value(c) - Tensor::matrix({{0.5, 0.0}, {0.0, 0.5}})).max_abs() < 1e-14);

    // ∇G - Γ
    Tensor L({2, 2, 2});
    for (std::size_t k = 0; k < L.size(); ++k) L[k] = double(k + 1);
    SD2Triple lin = corpus::make(
        dom, 2, [](const Point&) { return Tensor({2}); },
        [&](const Point& y) {
          Tensor G({2, 2});
          for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
              for (int j = 0; j < 2; ++j) G[i * 2 + k] += L.at({i, j, k}) * y[j];
          return G;
        },
        [](const Point&) { return Tensor({2, 2, 2}); });
    const PiecewiseField gd = gradient_disarrangement_density(lin);
    for (std::size_t c = 0; c < gd.cell_count(); ++c) CHECK((gd.value(c) - L).max_abs() < 1e-13);
    lin.Gamma = gd;
    const PiecewiseField zero = gradient_disarrangement_density(lin);
    for (std::size_t c = 0; c < zero.cell_count(); ++c) CHECK(zero.value(c).max_abs() < 1e-13);
    for (std::size_t c = 0; c < gd.cell_count(); ++c) lin.Gamma.set_value(c, 0.5 * L);
    const PiecewiseField halfp = gradient_disarrangement_density(lin);
    for (std::size_t c = 0; c < halfp.cell_count(); ++c) CHECK((halfp.value(c) - 0.5 * L).max_abs() < 1e-13);
  }

  TEST_CASE("additivity under bisection") {
    const PiecewiseField u = wavy(BoxDomain::unit_cube({4, 3}));
    const DensityTriple dens = catalog(2, 2);
    const EnergyBreakdown whole = total_energy(u, dens);
    const std::vector<int> lo0{0, 0}, mid{2, 3}, lo1{2, 0}, hi{4, 3};
    const EnergyBreakdown a = total_energy(restrict_to(u, lo0, mid), dens);
    const EnergyBreakdown b = total_energy(restrict_to(u, lo1, hi), dens);
    // cut facets: interior facets of u on the plane between cell columns 1 and 2
    std::vector<JumpFacet> cut1, cut2;
    for (const auto& f : jump_set(u))
      if (f.axis == 0 && std::abs(f.centroid[0]) < 1e-14) cut1.push_back(f);
    for (const auto& f : jump_set(u.gradient_field()))
      if (f.axis == 0 && std::abs(f.centroid[0]) < 1e-14) cut2.push_back(f);
    CHECK(whole.bulk == doctest::Approx(a.bulk + b.bulk).epsilon(1e-14));
    CHECK(whole.jump1 == doctest::Approx(a.jump1 + b.jump1 + interfacial_energy(cut1, dens.psi1)).epsilon(1e-14));
    CHECK(whole.jump2 == doctest::Approx(a.jump2 + b.jump2 + interfacial_energy(cut2, dens.psi2)).epsilon(1e-14));
  }

  TEST_CASE("monotonicity in the densities") {
    const PiecewiseField u = wavy(BoxDomain::unit_cube({3, 3}));
    const DensityTriple small = densities_from_json(
        {{"W", {{"catalog", "W_zero"}}}, {"psi1", {{"catalog", "psi1_norm"}}}, {"psi2", {{"expression", "0.5*norm(Lam)"}}}},
        2, 2);
    const DensityTriple big = densities_from_json(
        {{"W", {{"catalog", "W_norm"}}}, {"psi1", {{"catalog", "psi1_weighted"}}}, {"psi2", {{"catalog", "psi2_norm"}}}},
        2, 2);
    // psi1_norm <= psi1_weighted only where the weight is >= 1; compare against its own floor instead
    const DensityTriple floor1 = densities_from_json(
        {{"W", {{"catalog", "W_zero"}}}, {"psi1", {{"expression", "0.5*norm(lam)"}}}, {"psi2", {{"expression", "0.5*norm(Lam)"}}}},
        2, 2);
    const EnergyBreakdown s = total_energy(u, floor1), b = total_energy(u, big), m = total_energy(u, small);
    CHECK(s.bulk <= b.bulk);
    CHECK(s.jump1 <= b.jump1);
    CHECK(s.jump2 <= b.jump2);
    CHECK(s.jump1 <= m.jump1);
  }

  TEST_CASE("sequence energies stay within the growth bound") {
    for (const auto& c : {corpus::slip(), corpus::quadratic(), corpus::bending()}) {
      INFO(c.name);
      const DensityTriple dens = catalog(1, 1);
      const double scale = 1.0 + total_jump_mass(c.sd2.g) + l1_norm(c.sd2.g.gradient_field()) + l1_norm(c.sd2.G) +
                           total_jump_mass(c.sd2.G) + l1_norm(c.sd2.G.gradient_field()) + l1_norm(c.sd2.Gamma);
      double lo = 1e300, hi = 0.0;
      for (int n : {4, 8, 16, 32}) {
        const ApproxResult r = approximating_sequence(c.sd2, n);
        const double ratio = total_energy(r.u, dens).total / scale;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      CHECK(hi < 10.0);
      CHECK(hi <= 2.0 * lo + 1e-12);
    }
  }
}
