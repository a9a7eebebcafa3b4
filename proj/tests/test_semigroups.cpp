#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "obslab/rng.hpp"
#include "obslab/semigroups.hpp"
#include "oracles.hpp"

using namespace obslab;

namespace {

SampledField random_field(const GridSpec& g, Rng& rng) {
    std::vector<double> v(g.point_count());
    for (auto& x : v) x = rng.normal();
    return SampledField(g, std::move(v));
}

// smooth bump decaying far below 1e-12 at the boundary
SampledField centered_bump(const GridSpec& g, double center, double width) {
    return sample_field(g, [&](const std::array<double, 2>& x) {
        const double dx = x[0] - center;
        return std::exp(-dx * dx / (2.0 * width * width));
    });
}

} // namespace

TEST_CASE("heat step basics") {
    GridSpec g(1, 12.0, 512);
    Rng rng(3);
    SampledField f = random_field(g, rng);

    SampledField same = gw_step(f, 0.0);
    for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(same.values[i] == f.values[i]);
    CHECK_THROWS(gw_step(f, -0.1));

    // semigroup law, exact for multipliers
    const SampledField ab = gw_step(gw_step(f, 0.12), 0.31);
    const SampledField once = gw_step(f, 0.43);
    double err = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        err = std::max(err, std::abs(ab.values[i] - once.values[i]));
    CHECK(err <= 1e-10 * sup_norm(f));
}

TEST_CASE("heat step matches the convolution quadrature oracle") {
    GridSpec g(1, 12.0, 256);
    const SampledField f = sample_gw_kernel(g, 0.3);
    const SampledField stepped = gw_step(f, 0.2);
    const SampledField oracle = oracles::gw_convolution_quadrature(f, 0.2);
    const SampledField analytic = sample_gw_kernel(g, 0.5);
    double vs_oracle = 0.0, vs_analytic = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        vs_oracle = std::max(vs_oracle, std::abs(stepped.values[i] - oracle.values[i]));
        vs_analytic = std::max(vs_analytic, std::abs(stepped.values[i] - analytic.values[i]));
    }
    CHECK(vs_oracle <= 1e-8);
    CHECK(vs_analytic <= 1e-8);
}

TEST_CASE("ou step constants and identity") {
    GridSpec g(1, 12.0, 512);
    PropagatorConfig cfg(SemigroupKind::ornstein_uhlenbeck, g);
    const SampledField one(g, std::vector<double>(g.point_count(), 1.0));

    for (double t : {0.25, 1.0}) {
        const OuField out = ou_step(one, t, cfg, /*enforce_decay=*/false);
        std::size_t safe_count = 0;
        for (std::size_t i = 0; i < out.field.values.size(); ++i) {
            if (!out.safe[i]) continue;
            ++safe_count;
            CHECK(std::abs(out.field.values[i] - 1.0) <= 1e-8);
        }
        CHECK(safe_count > g.point_count() / 2);
    }

    const OuField id = ou_step(one, 0.0, cfg);
    for (double v : id.field.values) CHECK(v == 1.0);

    CHECK_THROWS(ou_step(one, -1.0, cfg));
    // the constant violates the decay precondition when enforcement is on
    CHECK_THROWS_WITH(ou_step(one, 0.5, cfg), "OU quadrature truncation unsafe");
}

TEST_CASE("ou scaling identity against spectral convolution") {
    GridSpec g(1, 12.0, 512);
    PropagatorConfig cfg(SemigroupKind::ornstein_uhlenbeck, g);
    const SampledField f = centered_bump(g, 0.8, 0.7);

    for (double t : {0.25, 0.5, 1.0}) {
        const double s = std::exp(-t);
        // spectral route: k_s * f via the multiplier h_s
        const SampledField conv =
            apply_radial_multiplier(f, [&](double a) { return dilation_symbol(s, a); });
        // Mehler route evaluated at the dilated points x / s
        std::vector<std::array<double, 2>> queries;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < g.point_count(); ++i) {
            const double x = g.point(i)[0];
            if (std::abs(x / s) <= 0.8 * g.half_width) {
                queries.push_back({x / s, 0.0});
                where.push_back(i);
            }
        }
        const OuSamples mehler = ou_apply_at(f, t, queries, cfg);
        double err = 0.0;
        std::size_t used = 0;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            if (!mehler.safe[q]) continue;
            ++used;
            err = std::max(err, std::abs(mehler.values[q] - conv.values[where[q]]));
        }
        CHECK(used > 100);
        CHECK(err <= 1e-7);
    }
}

TEST_CASE("orbit evaluation") {
    GridSpec g(1, 12.0, 256);
    PropagatorConfig cfg(SemigroupKind::gauss_weierstrass, g);
    Rng rng(11);
    SampledField f = random_field(g, rng);

    const auto single = orbit(f, {0.0}, cfg);
    CHECK(single.size() == 1);
    for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(single[0].values[i] == f.values[i]);

    const auto two = orbit(f, {0.1, 0.2}, cfg);
    const SampledField chained = gw_step(two[0], 0.1);
    double err = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        err = std::max(err, std::abs(two[1].values[i] - chained.values[i]));
    CHECK(err <= 1e-10 * sup_norm(f));

    const auto path = orbit(f, {0.0, 0.05, 0.1, 0.4, 1.0}, cfg);
    for (std::size_t i = 1; i < path.size(); ++i)
        CHECK(sup_norm(path[i]) <= sup_norm(path[i - 1]) + 1e-8);

    CHECK_THROWS(orbit(f, {0.2, 0.1}, cfg));
    CHECK_THROWS(orbit(f, {-0.1, 0.2}, cfg));
}

TEST_CASE("both semigroups contract the sup norm") {
    GridSpec g(1, 12.0, 256);
    PropagatorConfig gw(SemigroupKind::gauss_weierstrass, g);
    PropagatorConfig ou(SemigroupKind::ornstein_uhlenbeck, g);
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        SampledField f = random_field(g, rng);
        const double t = rng.uniform(0.01, 2.0);
        CHECK(sup_norm(gw_step(f, t)) <= sup_norm(f) + 1e-10);

        SampledField bump = centered_bump(g, rng.uniform(-1.5, 1.5), rng.uniform(0.3, 0.65));
        const OuField out = ou_step(bump, t, ou);
        double safe_sup = 0.0;
        for (std::size_t k = 0; k < out.field.values.size(); ++k)
            if (out.safe[k]) safe_sup = std::max(safe_sup, std::abs(out.field.values[k]));
        CHECK(safe_sup <= sup_norm(bump) + 1e-8);
    }
}

TEST_CASE("heat flow commutes with the spectral projection") {
    GridSpec g(1, 12.0, 256);
    Rng rng(17);
    const Projection p(5.0);
    for (int i = 0; i < 20; ++i) {
        SampledField f = random_field(g, rng);
        const double t = rng.uniform(0.05, 1.0);
        const SampledField a = apply_projection(p, gw_step(f, t));
        const SampledField b = gw_step(apply_projection(p, f), t);
        double err = 0.0;
        for (std::size_t k = 0; k < f.values.size(); ++k)
            err = std::max(err, std::abs(a.values[k] - b.values[k]));
        CHECK(err <= 1e-10 * sup_norm(f));
    }
}

TEST_CASE("positive data stays positive") {
    GridSpec g(1, 12.0, 256);
    PropagatorConfig ou(SemigroupKind::ornstein_uhlenbeck, g);
    const SampledField bump = centered_bump(g, 1.0, 0.8);
    const SampledField heat = gw_step(bump, 0.7);
    for (double v : heat.values) CHECK(v >= -1e-10);
    const OuField mixed = ou_step(bump, 0.7, ou);
    for (double v : mixed.field.values) CHECK(v >= -1e-10);
}

TEST_CASE("two-dimensional steps") {
    GridSpec g(2, 6.0, 32);
    Rng rng(19);
    std::vector<double> v(g.point_count());
    for (auto& x : v) x = rng.normal();
    const SampledField f(g, v);

    // heat multiplier semigroup law holds in 2-d as well
    const SampledField two = gw_step(gw_step(f, 0.1), 0.15);
    const SampledField once = gw_step(f, 0.25);
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        err = std::max(err, std::abs(two.values[i] - once.values[i]));
    CHECK(err <= 1e-10 * sup_norm(f));

    CHECK(l1_norm(sample_gw_kernel(g, 0.3)) == doctest::Approx(1.0).epsilon(1e-6));

    // Mehler mass on the 2-d safe region
    PropagatorConfig ou(SemigroupKind::ornstein_uhlenbeck, g);
    const SampledField one(g, std::vector<double>(g.point_count(), 1.0));
    const OuField out = ou_step(one, 0.25, ou, /*enforce_decay=*/false);
    std::size_t safe = 0;
    for (std::size_t i = 0; i < out.field.values.size(); ++i) {
        if (!out.safe[i]) continue;
        ++safe;
        CHECK(std::abs(out.field.values[i] - 1.0) <= 1e-8);
    }
    CHECK(safe > 0);
}

TEST_CASE("ou cross validation of the two evaluation routes") {
    GridSpec g(1, 12.0, 512);
    PropagatorConfig cfg(SemigroupKind::ornstein_uhlenbeck, g);
    const SampledField f = centered_bump(g, -1.2, 0.9);
    for (double t : {0.25, 0.5, 1.0}) {
        const double s = std::exp(-t);
        const SampledField conv =
            apply_radial_multiplier(f, [&](double a) { return dilation_symbol(s, a); });
        std::vector<std::array<double, 2>> queries;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < g.point_count(); ++i) {
            const double x = g.point(i)[0];
            if (std::abs(x / s) <= 0.8 * g.half_width) {
                queries.push_back({x / s, 0.0});
                where.push_back(i);
            }
        }
        const OuSamples mehler = ou_apply_at(f, t, queries, cfg);
        double err = 0.0;
        std::size_t used = 0;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            if (!mehler.safe[q]) continue;
            ++used;
            err = std::max(err, std::abs(mehler.values[q] - conv.values[where[q]]));
        }
        CHECK(used > 50);
        CHECK(err <= 1e-6);
    }
}
