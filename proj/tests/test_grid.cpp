#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "obslab/grid.hpp"
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

} // namespace

TEST_CASE("grid spec validation") {
    CHECK_NOTHROW(GridSpec(1, 12.0, 512));
    CHECK_NOTHROW(GridSpec(2, 4.0, 32));
    CHECK_THROWS(GridSpec(3, 1.0, 8));
    CHECK_THROWS(GridSpec(1, -1.0, 8));
    CHECK_THROWS(GridSpec(1, 1.0, 7));  // odd
    CHECK_THROWS(GridSpec(1, 1.0, 4));  // too small
    GridSpec g(1, 12.0, 512);
    CHECK(g.spacing() == doctest::Approx(0.046875));
    CHECK(g.point_count() == 512);
    CHECK(g.coord(256) == doctest::Approx(0.0));
}

TEST_CASE("sup norm") {
    GridSpec g(1, 1.0, 8);
    CHECK(sup_norm(SampledField(g, std::vector<double>(8, 0.0))) == 0.0);

    std::vector<double> v(8, 0.0);
    v[0] = 1.0;
    v[1] = -3.0;
    v[2] = 2.0;
    CHECK(sup_norm(SampledField(g, v)) == 3.0);

    GridSpec fine(1, 8.0, 256);
    SampledField gauss = sample_field(fine, [](const std::array<double, 2>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]));
    });
    CHECK(sup_norm(gauss) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("l1 norm") {
    GridSpec g(1, 1.0, 8); // h = 0.25
    CHECK(l1_norm(SampledField(g, std::vector<double>(8, 0.0))) == 0.0);

    SampledField indicator = sample_field(g, [](const std::array<double, 2>& x) {
        return x[0] >= 0.0 && x[0] < 1.0 ? 1.0 : 0.0;
    });
    CHECK(l1_norm(indicator) == doctest::Approx(1.0).epsilon(1e-15));

    GridSpec fine(1, 12.0, 512);
    CHECK(l1_norm(sample_gw_kernel(fine, 0.5)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("heat kernel quadrature accuracy contract") {
    // within 1e-6 of 1 whenever L >= 8 sqrt(t) and h <= sqrt(t)/4
    for (double t : {0.1, 0.25, 1.0}) {
        const double L = std::ceil(8.0 * std::sqrt(t)) + 1.0;
        int n = 8;
        while (2.0 * L / n > std::sqrt(t) / 4.0) n *= 2;
        GridSpec g(1, L, n);
        CHECK(l1_norm(sample_gw_kernel(g, t)) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("norms are absolutely homogeneous and subadditive") {
    GridSpec g(1, 4.0, 64);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        SampledField f = random_field(g, rng);
        SampledField h = random_field(g, rng);
        const double c = rng.uniform(-3.0, 3.0);
        SampledField cf = f;
        for (auto& v : cf.values) v *= c;
        CHECK(sup_norm(cf) == doctest::Approx(std::abs(c) * sup_norm(f)).epsilon(1e-12));
        CHECK(l1_norm(cf) == doctest::Approx(std::abs(c) * l1_norm(f)).epsilon(1e-12));
        SampledField sum = f;
        for (std::size_t k = 0; k < sum.values.size(); ++k) sum.values[k] += h.values[k];
        CHECK(sup_norm(sum) <= sup_norm(f) + sup_norm(h) + 1e-12);
        CHECK(l1_norm(sum) <= l1_norm(f) + l1_norm(h) + 1e-12);
    }
}

TEST_CASE("restriction") {
    GridSpec g(1, 1.0, 8);
    std::vector<double> v{1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    SampledField f(g, v);

    ObservationMask full(g, std::vector<std::uint8_t>(8, 1));
    CHECK(sup_norm(restrict_to(f, full)) == sup_norm(f));

    std::vector<std::uint8_t> first_only(8, 0);
    first_only[0] = 1;
    ObservationMask m(g, first_only);
    CHECK(sup_norm(restrict_to(f, m)) == 1.0);

    CHECK_THROWS_WITH(ObservationMask(g, std::vector<std::uint8_t>(8, 0)),
                      "empty observation set");
    GridSpec other(1, 2.0, 8);
    CHECK_THROWS(restrict_to(SampledField(other, std::vector<double>(8, 0.0)), m));
}

TEST_CASE("restriction is a contraction and monotone in the mask") {
    GridSpec g(1, 4.0, 64);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        SampledField f = random_field(g, rng);
        std::vector<std::uint8_t> small(64, 0), big(64, 0);
        for (std::size_t k = 0; k < 64; ++k) {
            small[k] = rng.uniform() < 0.3 ? 1 : 0;
            big[k] = small[k] | (rng.uniform() < 0.3 ? 1 : 0);
        }
        small[0] = big[0] = 1;
        const double rs = sup_norm(restrict_to(f, ObservationMask(g, small)));
        const double rb = sup_norm(restrict_to(f, ObservationMask(g, big)));
        CHECK(rs <= sup_norm(f));
        CHECK(rs <= rb);
    }
}

TEST_CASE("make_mask geometries") {
    GridSpec g(1, 12.0, 512);

    ThickSetSpec all{{2.0}, 1.0, AllSpace{}};
    CHECK(make_mask(all, g).active_count() == g.point_count());

    ThickSetSpec alt{{2.0}, 0.5, std::vector<SlabAxis>{{2.0, 1.0, 0.0}}};
    ObservationMask mask = make_mask(alt, g);
    // alternating blocks: [2k, 2k+1) in, [2k+1, 2k+2) out
    for (std::size_t i = 0; i < g.point_count(); ++i) {
        const double x = g.point(i)[0];
        const double y = x - 2.0 * std::floor(x / 2.0);
        CHECK(static_cast<bool>(mask.indicator[i]) == (y < 1.0));
    }
    CHECK(mask.active_count() == g.point_count() / 2);

    // measured density of that mask with window 2 is 1/2 up to one spacing
    const ThicknessReport th = check_thickness(mask, {2.0}, 0.5);
    CHECK(th.min_density == doctest::Approx(0.5).epsilon(g.spacing()));
    CHECK(th.thick);

    // a slab placed strictly between lattice residues covers nothing
    // (grid coordinates mod 2 land on multiples of h/3; offset by half of that)
    ThickSetSpec miss{{2.0}, 0.001,
                      std::vector<SlabAxis>{{2.0, g.spacing() / 10.0, g.spacing() / 6.0}}};
    CHECK_THROWS_WITH(make_mask(miss, g), "observation set does not intersect the grid");

    // explicit geometry passthrough
    std::vector<std::uint8_t> ind(g.point_count(), 0);
    ind[7] = 1;
    ThickSetSpec expl{{2.0}, 0.001, ind};
    CHECK(make_mask(expl, g).active_count() == 1);
}

TEST_CASE("make_mask in two dimensions") {
    GridSpec g(2, 4.0, 32);
    ThickSetSpec spec{{2.0, 2.0}, 0.25,
                      std::vector<SlabAxis>{{2.0, 1.0, 0.0}, {2.0, 1.0, 0.0}}};
    ObservationMask mask = make_mask(spec, g);
    CHECK(mask.active_count() == g.point_count() / 4);
    const ThicknessReport th = check_thickness(mask, {2.0, 2.0}, 0.25);
    CHECK(th.min_density == doctest::Approx(0.25).epsilon(2.0 * g.spacing()));
    CHECK(th.thick);
}

TEST_CASE("check_thickness") {
    GridSpec g(1, 12.0, 512);
    ObservationMask full(g, std::vector<std::uint8_t>(g.point_count(), 1));
    const ThicknessReport tf = check_thickness(full, {2.0}, 1.0);
    CHECK(tf.min_density == 1.0);
    CHECK(tf.thick);

    // only [-1, 1] observed: a far window sees nothing
    SampledField ind = sample_field(g, [](const std::array<double, 2>& x) {
        return std::abs(x[0]) <= 1.0 ? 1.0 : 0.0;
    });
    std::vector<std::uint8_t> bits(g.point_count());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = ind.values[i] > 0.5 ? 1 : 0;
    ObservationMask local(g, bits);
    const ThicknessReport tl = check_thickness(local, {2.0}, 0.5);
    CHECK(tl.min_density == 0.0);
    CHECK_FALSE(tl.thick);

    CHECK_THROWS(check_thickness(full, {30.0}, 0.5)); // window exceeds the domain

    // sliding-window result matches the direct recount oracle
    ThickSetSpec alt{{2.0}, 0.5, std::vector<SlabAxis>{{2.0, 1.0, 0.0}}};
    ObservationMask mask = make_mask(alt, g);
    CHECK(check_thickness(mask, {2.0}, 0.5).min_density ==
          doctest::Approx(oracles::min_window_density_direct(mask, 2.0)).epsilon(1e-15));
}

TEST_CASE("check_thickness is monotone in the mask") {
    GridSpec g(1, 4.0, 64);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint8_t> small(64, 0);
        for (auto& b : small) b = rng.uniform() < 0.4 ? 1 : 0;
        small[5] = 1;
        std::vector<std::uint8_t> big = small;
        for (auto& b : big) b = b | (rng.uniform() < 0.3 ? 1 : 0);
        const double ds = check_thickness(ObservationMask(g, small), {1.0}, 0.5).min_density;
        const double db = check_thickness(ObservationMask(g, big), {1.0}, 0.5).min_density;
        CHECK(ds <= db + 1e-15);
    }
}

TEST_CASE("field serialization round trip") {
    GridSpec g(2, 3.0, 16);
    Rng rng(17);
    std::vector<double> v(g.point_count());
    for (auto& x : v) x = rng.normal();
    SampledField f(g, v);

    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_field_binary(f, bin);
    SampledField back = read_field_binary(bin);
    CHECK(back.grid == g);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.values[i] == v[i]);

    std::stringstream csv;
    write_field_csv(f, csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x1,x2,value");
    std::size_t lines = 0;
    for (std::string line; std::getline(csv, line);) ++lines;
    CHECK(lines == g.point_count());
}
