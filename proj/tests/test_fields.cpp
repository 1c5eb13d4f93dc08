#include <cmath>

#include "doctest.h"
#include "sd2/errors.hpp"
#include "sd2/fields.hpp"

using namespace sd2;

namespace {

PiecewiseField staircase_1d(int n) {
  PiecewiseField u(BoxDomain({0.0}, {1.0}, {n}), {});
  for (int k = 0; k < n; ++k) {
    const double c = (k + 0.5) / n;
    u.set_value(k, Tensor::scalar(c - double(k) / n));
    u.set_gradient(k, Tensor::vector({1.0}));
  }
  return u;
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("affine field has no jumps") {
    PiecewiseField u(BoxDomain::unit_cube({3, 4}), {2});
    const Tensor a = Tensor::matrix({{1.0, 2.0}, {-3.0, 0.5}});
    for (std::size_t i = 0; i < u.cell_count(); ++i) {
      const Point c = u.domain().cell_center(i);
      u.set_value(i, contract_last(a, c) + Tensor::vector({0.3, 0.1}));
      u.set_gradient(i, a);
    }
    CHECK(jump_set(u).empty());
    CHECK(total_jump_mass(u) == 0.0);
  }

  TEST_CASE("single step") {
    PiecewiseField u(BoxDomain({0.0}, {1.0}, {2}), {});
    u.set_value(1, Tensor::scalar(1.0));
    const auto f = jump_set(u);
    REQUIRE(f.size() == 1);
    CHECK(f[0].centroid[0] == doctest::Approx(0.5));
    CHECK(f[0].jump[0] == 1.0);
    CHECK(f[0].normal[0] == 1.0);
    CHECK(total_jump_mass(u) == 1.0);
  }

  TEST_CASE("staircase jumps and boundary mass") {
    const PiecewiseField u = staircase_1d(4);
    const auto f = jump_set(u);
    REQUIRE(f.size() == 3);
    for (const auto& x : f) CHECK(std::abs(x.jump[0]) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(total_jump_mass(u) == doctest::Approx(0.75));
    const auto bc = BoundaryCondition::uniform(1, BoundaryMode::periodic);
    const auto all = jump_set(u, bc);
    CHECK(all.size() == 4);
    CHECK(total_jump_mass(all) == doctest::Approx(1.0).epsilon(1e-14));
    // jump_set is idempotent
    const auto again = jump_set(u);
    REQUIRE(again.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(again[i].jump == f[i].jump);
  }

  TEST_CASE("l1 distance of identity to midpoint staircase") {
    for (int n : {1, 3, 10}) {
      PiecewiseField f(BoxDomain({0.0}, {1.0}, {n}), {});
      PiecewiseField g(f.domain(), {});
      for (int k = 0; k < n; ++k) {
        const double c = (k + 0.5) / n;
        f.set_value(k, Tensor::scalar(c));
        f.set_gradient(k, Tensor::vector({1.0}));
        g.set_value(k, Tensor::scalar(c));
      }
      CHECK(l1_distance(f, g) == doctest::Approx(1.0 / (4 * n)).epsilon(1e-13));
      CHECK(l1_distance(f, f) == 0.0);
    }
    PiecewiseField one(BoxDomain({0.0}, {1.0}, {1}), {});
    one.set_value(0, Tensor::scalar(1.0));
    CHECK(l1_norm(one) == 1.0);
  }

  TEST_CASE("l1 on nested grids and shape mismatch") {
    PiecewiseField coarse(BoxDomain({0.0}, {1.0}, {2}), {});
    coarse.set_value(1, Tensor::scalar(2.0));
    PiecewiseField fine(BoxDomain({0.0}, {1.0}, {4}), {});
    CHECK(l1_distance(coarse, fine) == doctest::Approx(1.0));
    PiecewiseField vec(BoxDomain({0.0}, {1.0}, {4}), {2});
    CHECK_THROWS_AS(l1_distance(coarse, vec), ValidationError);
  }

  TEST_CASE("boundary trace of a linear field") {
    PiecewiseField u(BoxDomain::unit_cube({2, 2}), {2});
    const Tensor l = Tensor::matrix({{1.0, 2.0}, {3.0, 4.0}});
    for (std::size_t i = 0; i < u.cell_count(); ++i) {
      u.set_value(i, contract_last(l, u.domain().cell_center(i)));
      u.set_gradient(i, l);
    }
    const auto tr = trace_boundary(u);
    CHECK(tr.size() == 8);
    for (const auto& t : tr) {
      const Tensor expect = contract_last(l, t.centroid);
      CHECK((t.value - expect).max_abs() < 1e-15);
    }
  }

  TEST_CASE("weak-star pairing") {
    PiecewiseField u(BoxDomain::unit_cube({3, 3}), {});
    CHECK(weak_star_pairing(u, [](const Point&) { return 1.0; })[0] == 0.0);
    for (std::size_t i = 0; i < u.cell_count(); ++i) u.set_value(i, Tensor::scalar(1.0));
    CHECK(weak_star_pairing(u, [](const Point&) { return 1.0; })[0] == doctest::Approx(1.0));
    CHECK(std::abs(weak_star_pairing(u, [](const Point& y) { return y[0]; })[0]) < 1e-15);
    CHECK(monomial_battery(2).size() == 6);
  }

  TEST_CASE("Gauss-Green closure for quadratic fields") {
    PiecewiseField u(BoxDomain::unit_cube({3, 2}), {2});
    for (std::size_t i = 0; i < u.cell_count(); ++i) {
      const double s = double(i);
      u.set_value(i, Tensor::vector({s, -s * s}));
      u.set_gradient(i, Tensor::matrix({{s, 1.0}, {0.5, -s}}));
      Tensor q({2, 2, 2});
      for (std::size_t k = 0; k < q.size(); ++k) q[k] = std::sin(s + k);
      u.set_hessian(i, q);
    }
    CHECK(gauss_green_residual(u).max_abs() < 1e-12);
    for (auto mode : {BoundaryMode::dirichlet, BoundaryMode::periodic}) {
      CHECK(gauss_green_residual(u, BoundaryCondition::uniform(2, mode)).max_abs() < 1e-12);
      CHECK(gauss_green_residual(u, BoundaryCondition::uniform(2, mode, u)).max_abs() < 1e-12);
    }
  }

  TEST_CASE("mass is invariant under refinement") {
    PiecewiseField u(BoxDomain::unit_cube({3, 2}), {});
    for (std::size_t i = 0; i < u.cell_count(); ++i) {
      u.set_value(i, Tensor::scalar(std::cos(double(i))));
      u.set_gradient(i, Tensor::vector({0.3 * i, -0.2}));
    }
    const double m = total_jump_mass(u);
    for (int f : {2, 3}) CHECK(std::abs(total_jump_mass(refine(u, f)) - m) < 1e-12);
  }

  TEST_CASE("json round trip is bit exact") {
    PiecewiseField u(BoxDomain({0.1, -1.0}, {0.7, 2.0}, {2, 3}), {2});
    for (std::size_t i = 0; i < u.cell_count(); ++i) {
      u.set_value(i, Tensor::vector({1.0 / 3.0 + i, std::sqrt(2.0) * i}));
      u.set_gradient(i, Tensor::matrix({{0.1, 1e-300}, {std::exp(1.0), -7.0 / 9.0}}));
    }
    const auto text = to_json(u).dump();
    const PiecewiseField v = field_from_json(nlohmann::json::parse(text));
    CHECK(v.domain() == u.domain());
    for (std::size_t i = 0; i < u.cell_count(); ++i) {
      CHECK(v.value(i) == u.value(i));
      CHECK(v.gradient(i) == u.gradient(i));
    }
  }
}
