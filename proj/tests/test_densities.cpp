#include <chrono>
#include <cmath>

#include "doctest.h"
#include "sd2/densities.hpp"
#include "sd2/errors.hpp"
#include "sd2/expression.hpp"

using namespace sd2;

namespace {

Tensor unit_m(int d, int N) {
  Tensor m({d, N, N});
  m[0] = 1.0;
  return m;
}

SamplerConfig quick(std::size_t n = 2000) {
  SamplerConfig c;
  c.samples = n;
  c.seed = 7;
  c.threads = 4;
  return c;
}

void require_declared(const std::vector<HypothesisEntry>& entries) {
  for (const auto& e : entries) {
    INFO(e.density << " " << e.id << " " << e.note);
    for (const auto& c : e.constants) {
      INFO(c.key << " measured " << c.measured);
      if (c.declared) CHECK(c.matches);
    }
  }
}

}  // namespace

TEST_SUITE("densities") {
  TEST_CASE("expression language") {
    const Expression e("2*abs(-3) + sqrt(16)/2 - 2^3 + max(1, 4, 2) + min(0.5, 3)");
    CHECK(e(ExprArgs{}) == doctest::Approx(6 + 2 - 8 + 4 + 0.5));
    const Tensor A = Tensor::matrix({{3.0, 0.0}, {0.0, 4.0}});
    const int n = 2;
    const Point x{0.5, -1.0};
    ExprArgs args;
    args.groups.emplace("A", ExprArgs::Group{A.data(), std::span<const int>(A.shape())});
    args.groups.emplace("x", ExprArgs::Group{x, std::span<const int>(&n, 1)});
    CHECK(Expression("norm(A)")(args) == doctest::Approx(5.0));
    CHECK(Expression("A22 - A11 + x2")(args) == doctest::Approx(0.0));
    CHECK(Expression("dot(x, x)")(args) == doctest::Approx(1.25));
    CHECK(Expression("-x1^2")(args) == doctest::Approx(-0.25));
    CHECK(Expression("sin(x1)")(args) == doctest::Approx(std::sin(0.5)));
    CHECK(Expression("x1").uses("x"));
    CHECK_THROWS_AS(Expression("foo(1)"), ValidationError);
    CHECK_THROWS_AS(Expression("1 +"), ValidationError);
    CHECK_THROWS_AS(Expression("A0"), ValidationError);
    CHECK_THROWS_AS(Expression("M111")(args), ValidationError);
  }

  TEST_CASE("recession values") {
    const BulkDensity wn = bulk_catalog("W_norm");
    const Tensor A = Tensor::matrix({{1.0, 2.0}, {0.0, -1.0}});
    const Point x{0.0, 0.0};
    CHECK(recession(wn, x, A, unit_m(2, 2)).value == doctest::Approx(1.0));
    CHECK(recession(bulk_catalog("W_zero"), x, A, unit_m(2, 2)).value == 0.0);

    BulkDensity num = wn;
    num.recession = nullptr;  // force the numerical path
    const RecessionResult r = recession(num, x, A, 3.0 * unit_m(2, 2));
    CHECK(r.value == doctest::Approx(3.0).epsilon(1e-4));
    CHECK(r.envelope_ok);

    nlohmann::json j{{"W", {{"expression", "norm(M) + sqrt(1 + norm(M))"}, {"constants", {{"H4.alpha", 0.5}}}}}};
    const DensityTriple t = densities_from_json(j, 2, 2);
    const std::vector<double> sched{10.0, 100.0, 1000.0, 10000.0};
    const RecessionResult s = recession(t.W, x, A, unit_m(2, 2), sched);
    CHECK(std::abs(s.value - 1.0) < 2e-2);
    CHECK(s.envelope_ok);
    CHECK(!s.closed_form);

    CHECK_THROWS_AS(recession(wn, x, A, unit_m(2, 2), std::vector<double>{1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(recession(wn, x, A, unit_m(2, 2), std::vector<double>{1.0, 3.0, 2.0}), ValidationError);
  }

  TEST_CASE("recession of W_norm is |M| for large schedules") {
    const BulkDensity wn = bulk_catalog("W_norm");
    BulkDensity num = wn;
    num.recession = nullptr;
    const Tensor A = Tensor::matrix({{0.3, -0.2}, {0.1, 0.4}});
    Tensor M({2, 2, 2});
    for (std::size_t k = 0; k < M.size(); ++k) M[k] = std::cos(double(k));
    for (double last : {1e3, 1e4, 1e6}) {
      const std::vector<double> sched{last / 100, last / 10, last};
      CHECK(std::abs(recession(num, {0, 0}, A, M, sched).value - M.norm()) <= 1e-2 * M.norm());
      CHECK(recession(wn, {0, 0}, A, M, sched).value == M.norm());
    }
  }

  TEST_CASE("homogeneous extension") {
    const InterfacialDensity p1 = interfacial_catalog("psi1_norm", 1, 2, 2);
    const Tensor lam = Tensor::vector({1.0, 0.0});
    const Point x{0.0, 0.0};
    CHECK(extend_homogeneous(p1, x, lam, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(extend_homogeneous(p1, x, lam, std::vector<double>{2.0, 0.0}) == doctest::Approx(2.0));
    const InterfacialDensity p2 = interfacial_catalog("psi2_proj", 2, 2, 2, Point{1.0, 0.0});
    const Tensor J = Tensor::matrix({{1.0, 2.0}, {3.0, 4.0}});
    const Point nu0{0.6, 0.8};
    const double base = std::abs(0.6 * 1.0 + 0.8 * 3.0);
    CHECK(extend_homogeneous(p2, x, J, std::vector<double>{1.8, 2.4}) == doctest::Approx(3.0 * base));
    for (double t : {0.1, 3.0, 17.0}) {
      const std::vector<double> th{t * 0.3, t * -1.1};
      const std::vector<double> th1{0.3, -1.1};
      CHECK(extend_homogeneous(p2, x, J, th) == doctest::Approx(t * extend_homogeneous(p2, x, J, th1)).epsilon(1e-15));
    }
  }

  TEST_CASE("catalog constants are confirmed by the checker") {
    const auto cfg = quick();
    require_declared(check_bulk(bulk_catalog("W_norm"), 2, 2, cfg));
    require_declared(check_bulk(bulk_catalog("W_zero"), 2, 2, cfg));
    for (const char* n : {"psi1_norm", "psi1_weighted"})
      require_declared(check_interfacial(interfacial_catalog(n, 1, 2, 2), 2, 2, cfg));
    require_declared(check_interfacial(interfacial_catalog("psi2_norm", 2, 2, 2), 2, 2, cfg));
    require_declared(check_interfacial(interfacial_catalog("psi2_proj", 2, 2, 2, Point{1, 0}), 2, 2, cfg));
  }

  TEST_CASE("planted violator and non-coercive projection") {
    const auto cfg = quick();
    const auto sq = check_interfacial(interfacial_catalog("psi1_square", 1, 2, 2), 2, 2, cfg);
    const auto& h7 = sq[2];
    REQUIRE(h7.id == "H7");
    CHECK(h7.verdict == Verdict::fail);
    CHECK(h7.witness["t"] == 2.0);
    CHECK(h7.witness["lambda"] == std::vector<double>{1.0, 0.0});

    const auto proj = check_interfacial(interfacial_catalog("psi2_proj", 2, 2, 2, Point{1, 0}), 2, 2, cfg);
    CHECK(proj[0].verdict == Verdict::fail);
    CHECK_FALSE(proj[0].hard);
    CHECK(proj[0].note.find("non-coercive") != std::string::npos);
    // witness: tangential J with ν·Ja = 0
    CHECK(proj[0].witness["residual"] == 0.0);
    CHECK(proj[2].verdict == Verdict::pass);
    CHECK(proj[3].verdict == Verdict::pass);

    const auto norm1 = check_interfacial(interfacial_catalog("psi1_norm", 1, 2, 2), 2, 2, cfg);
    for (const auto& e : norm1) CHECK(e.verdict == Verdict::pass);
  }

  TEST_CASE("report is deterministic across thread counts") {
    DensityTriple t = densities_from_json({{"psi2", {{"catalog", "psi2_proj"}, {"a", {1, 0}}}}}, 2, 2);
    auto c1 = quick(500);
    c1.threads = 1;
    auto c8 = c1;
    c8.threads = 8;
    CHECK(check_hypotheses(t, c1).to_json().dump() == check_hypotheses(t, c8).to_json().dump());
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(densities_from_json({{"pressure", 1}}, 2, 2), ValidationError);
    CHECK_THROWS_AS(densities_from_json({{"W", {{"catalog", "W_foo"}}}}, 2, 2), ValidationError);
    CHECK_THROWS_AS(densities_from_json({{"psi2", {{"catalog", "psi2_proj"}}}}, 2, 2), ValidationError);
  }
}
