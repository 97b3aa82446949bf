#include <doctest.h>

#include "fhm/qp.hpp"

using namespace fhm;

TEST_CASE("interior optimum of a one-variable concave program") {
    // max 100x - 0.5*10*x^2 s.t. x <= 20  ->  x = 10, constraint dual 0
    qp::Problem p;
    p.resize(1, 0, 1);
    p.H(0, 0) = 10.0;
    p.g[0] = -100.0;
    p.Ain(0, 0) = 1.0;
    p.bin[0] = 20.0;
    p.lb[0] = 0.0;
    auto r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK(r.x[0] == doctest::Approx(10.0).epsilon(1e-10));
    CHECK(r.mu_in[0] == doctest::Approx(0.0));
    CHECK(r.kkt.max() <= 1e-8);
}

TEST_CASE("binding corner produces the reduced-gradient dual") {
    qp::Problem p;
    p.resize(1, 0, 1);
    p.H(0, 0) = 10.0;
    p.g[0] = -100.0;
    p.Ain(0, 0) = 1.0;
    p.bin[0] = 8.0;
    p.lb[0] = 0.0;
    auto r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK(r.x[0] == doctest::Approx(8.0));
    CHECK(r.mu_in[0] == doctest::Approx(20.0));  // 100 - 10*8
}

TEST_CASE("pure LP duals identify the marginal activity") {
    // max 1e5 x1 + 8e4 x2, x1+x2 <= 5, x1 <= 3(1+e), x2 <= 2(1+e)
    const double eps = 1e-6;
    qp::Problem p;
    p.resize(2, 0, 1);
    p.g[0] = -1e5;
    p.g[1] = -8e4;
    p.Ain(0, 0) = 1.0;
    p.Ain(0, 1) = 1.0;
    p.bin[0] = 5.0;
    p.lb.setZero();
    p.ub[0] = 3.0 * (1 + eps);
    p.ub[1] = 2.0 * (1 + eps);
    Eigen::VectorXd start(2);
    start << 3.0, 2.0;
    auto r = qp::solve(p, start);
    REQUIRE(r.ok());
    CHECK(r.mu_in[0] == doctest::Approx(8e4).epsilon(1e-9));      // land: marginal activity margin
    CHECK(r.mu_ub[0] == doctest::Approx(2e4).epsilon(1e-9));      // bound dual of the better activity
    CHECK(r.x[0] == doctest::Approx(3.0 * (1 + eps)));
}

TEST_CASE("slack resource has zero dual") {
    qp::Problem p;
    p.resize(1, 0, 1);
    p.g[0] = -50.0;
    p.Ain(0, 0) = 1.0;
    p.bin[0] = 100.0;
    p.lb[0] = 0.0;
    p.ub[0] = 2.0;
    auto r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.mu_in[0] == doctest::Approx(0.0));
}

TEST_CASE("equality constraints and mixed linear-quadratic variables") {
    // min 0.5*q*x^2 - m*x + c*f  s.t. f = k*x, f >= 0, x >= 0
    // (a linear variable tied to a quadratic one through an equality)
    qp::Problem p;
    p.resize(2, 1, 0);
    p.H(0, 0) = 2000.0;
    p.g[0] = -150000.0;
    p.g[1] = 300.0;  // per-kg cost of f
    p.Aeq(0, 0) = 4.0;
    p.Aeq(0, 1) = -1.0;
    p.beq[0] = 0.0;
    p.lb.setZero();
    auto r = qp::solve(p);
    REQUIRE(r.ok());
    // FOC: 2000 x - 150000 + 300*4 = 0 -> x = 74.4
    CHECK(r.x[0] == doctest::Approx(74.4).epsilon(1e-9));
    CHECK(r.x[1] == doctest::Approx(297.6).epsilon(1e-9));
    CHECK(r.kkt.max() <= 1e-8);
}

TEST_CASE("infeasible and unbounded detection") {
    qp::Problem p;
    p.resize(1, 0, 2);
    p.g[0] = -1.0;
    p.Ain(0, 0) = 1.0;
    p.bin[0] = 1.0;
    p.Ain(1, 0) = -1.0;
    p.bin[1] = -2.0;  // x >= 2 contradicts x <= 1
    auto r = qp::solve(p);
    CHECK(r.status == qp::Status::infeasible);

    qp::Problem u;
    u.resize(1, 0, 0);
    u.g[0] = -1.0;
    u.lb[0] = 0.0;
    auto ru = qp::solve(u);
    CHECK(ru.status == qp::Status::unbounded);
}

TEST_CASE("phase-1 recovers feasibility from an arbitrary start") {
    qp::Problem p;
    p.resize(2, 1, 1);
    p.H(0, 0) = 2.0;
    p.H(1, 1) = 2.0;
    p.g[0] = -2.0;
    p.g[1] = -4.0;
    p.Aeq(0, 0) = 1.0;
    p.Aeq(0, 1) = 1.0;
    p.beq[0] = 3.0;
    p.Ain(0, 0) = 1.0;
    p.bin[0] = 2.0;
    p.lb.setZero();
    Eigen::VectorXd start(2);
    start << 50.0, -10.0;
    auto r = qp::solve(p, start);
    REQUIRE(r.ok());
    // min (x-1)^2 + (y-2)^2 - 5 over x+y=3: exactly (1,2)
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.x[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("tranche-style structure fills the cheap segment first") {
    // min 150 f1 + 300 f2 s.t. f1 + f2 = 100, 0 <= f1 <= 75, f2 >= 0
    qp::Problem p;
    p.resize(2, 1, 0);
    p.g[0] = 150.0;
    p.g[1] = 300.0;
    p.Aeq(0, 0) = 1.0;
    p.Aeq(0, 1) = 1.0;
    p.beq[0] = 100.0;
    p.lb.setZero();
    p.ub[0] = 75.0;
    auto r = qp::solve(p);
    REQUIRE(r.ok());
    CHECK(r.x[0] == doctest::Approx(75.0));
    CHECK(r.x[1] == doctest::Approx(25.0));
    CHECK(r.objective == doctest::Approx(75 * 150 + 25 * 300));
}

TEST_CASE("larger random PSD problems satisfy KKT at 1e-8") {
    // deterministic pseudo-random battery
    std::uint64_t state = 42;
    auto rnd = [&]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / static_cast<double>(1ULL << 53);
    };
    for (int trial = 0; trial < 25; ++trial) {
        int n = 3 + trial % 5;
        qp::Problem p;
        p.resize(n, 1, 2);
        for (int i = 0; i < n; ++i) {
            p.H(i, i) = (trial % 3 == 0 && i == 0) ? 0.0 : 10.0 + 100.0 * rnd();
            p.g[i] = -100.0 * rnd();
            p.Aeq(0, i) = 1.0;
            p.Ain(0, i) = rnd();
            p.Ain(1, i) = rnd();
            p.lb[i] = 0.0;
            p.ub[i] = 10.0;
        }
        p.beq[0] = 2.0 + 3.0 * rnd();
        p.bin[0] = 2.0 + rnd();
        p.bin[1] = 2.0 + rnd();
        auto r = qp::solve(p);
        if (r.status == qp::Status::infeasible) continue;
        REQUIRE(r.ok());
        CHECK(r.kkt.max() <= 1e-8);
    }
}
