#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "obslab/rng.hpp"
#include "obslab/simplex.hpp"

using namespace obslab;

namespace {

LpProblem make_problem(std::vector<double> cost, std::vector<std::vector<double>> rows,
                       std::vector<double> b) {
    LpProblem p;
    p.vars = static_cast<int>(cost.size());
    p.rows = static_cast<int>(rows.size());
    p.cost = std::move(cost);
    p.b = std::move(b);
    for (const auto& r : rows)
        for (double v : r) p.a.push_back(v);
    return p;
}

void check_certificates(const LpProblem& p, const LpSolution& s) {
    REQUIRE(s.status == LpStatus::optimal);
    // primal feasibility
    for (int i = 0; i < p.rows; ++i) {
        double ax = 0.0;
        for (int j = 0; j < p.vars; ++j)
            ax += p.a[static_cast<std::size_t>(i) * p.vars + j] * s.x[static_cast<std::size_t>(j)];
        CHECK(ax <= p.b[static_cast<std::size_t>(i)] + 1e-8);
        // dual sign and complementary slackness
        CHECK(s.dual[static_cast<std::size_t>(i)] >= -1e-9);
        CHECK(std::abs(s.dual[static_cast<std::size_t>(i)] *
                       (p.b[static_cast<std::size_t>(i)] - ax)) <= 1e-8);
    }
    // strong duality: objective == -dual . b
    double dual_obj = 0.0;
    for (int i = 0; i < p.rows; ++i)
        dual_obj -= s.dual[static_cast<std::size_t>(i)] * p.b[static_cast<std::size_t>(i)];
    CHECK(s.objective == doctest::Approx(dual_obj).epsilon(1e-8));
}

} // namespace

TEST_CASE("small known optimum") {
    // min -x - y  s.t. x + 2y <= 4, x <= 3, x, y >= 0  ->  x = 3, y = 0.5
    const LpProblem p = make_problem({-1.0, -1.0}, {{1.0, 2.0}, {1.0, 0.0}}, {4.0, 3.0});
    const LpSolution s = solve_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == doctest::Approx(3.0));
    CHECK(s.x[1] == doctest::Approx(0.5));
    CHECK(s.objective == doctest::Approx(-3.5));
    check_certificates(p, s);
}

TEST_CASE("negative right-hand sides drive phase one") {
    // min x  s.t. -x <= -1  ->  x = 1
    const LpProblem p = make_problem({1.0}, {{-1.0}}, {-1.0});
    const LpSolution s = solve_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == doctest::Approx(1.0));
    CHECK(s.objective == doctest::Approx(1.0));
    check_certificates(p, s);
}

TEST_CASE("infeasible and unbounded problems are classified") {
    // x <= -1 with x >= 0 cannot hold
    CHECK(solve_lp(make_problem({1.0}, {{1.0}}, {-1.0})).status == LpStatus::infeasible);
    // min -x with only a vacuous row
    CHECK(solve_lp(make_problem({-1.0}, {{-1.0}}, {0.0})).status == LpStatus::unbounded);
}

TEST_CASE("degenerate tie-breaking terminates") {
    // several rows active at the optimum
    const LpProblem p = make_problem({-1.0, -1.0},
                                     {{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}},
                                     {1.0, 1.0, 1.0, 2.0});
    const LpSolution s = solve_lp(p);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == doctest::Approx(-2.0));
    check_certificates(p, s);
}

TEST_CASE("random bounded problems satisfy the optimality certificates") {
    Rng rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        const int nv = 2 + static_cast<int>(rng.next_below(4));
        const int extra = 1 + static_cast<int>(rng.next_below(4));
        std::vector<double> cost(static_cast<std::size_t>(nv));
        for (auto& c : cost) c = rng.uniform(-1.0, 1.0);
        std::vector<std::vector<double>> rows;
        std::vector<double> b;
        // box rows keep the problem bounded; x = 0 keeps it feasible
        for (int j = 0; j < nv; ++j) {
            std::vector<double> r(static_cast<std::size_t>(nv), 0.0);
            r[static_cast<std::size_t>(j)] = 1.0;
            rows.push_back(r);
            b.push_back(rng.uniform(0.5, 3.0));
        }
        for (int e = 0; e < extra; ++e) {
            std::vector<double> r(static_cast<std::size_t>(nv));
            for (auto& v : r) v = rng.uniform(-1.0, 1.0);
            rows.push_back(r);
            b.push_back(rng.uniform(0.1, 2.0));
        }
        const LpProblem p = make_problem(cost, rows, b);
        const LpSolution s = solve_lp(p);
        check_certificates(p, s);
    }
}
