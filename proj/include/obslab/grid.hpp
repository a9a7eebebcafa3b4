#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "obslab/common.hpp"

namespace obslab {

// Uniform grid on the periodic box [-half_width, half_width)^d, d in {1, 2}.
// All convolutions downstream are circular on this torus; test functions are
// expected to decay below 1e-12 at the boundary so periodisation is benign.
struct GridSpec {
    int d;
    double half_width;
    int n_per_axis;

    GridSpec(int d_, double half_width_, int n_per_axis_)
        : d(d_), half_width(half_width_), n_per_axis(n_per_axis_) {
        require(d == 1 || d == 2, "GridSpec: dimension must be 1 or 2");
        require(half_width > 0.0, "GridSpec: half_width must be positive");
        require(n_per_axis >= 8, "GridSpec: need at least 8 points per axis");
        require(n_per_axis % 2 == 0, "GridSpec: n_per_axis must be even");
    }

    double spacing() const { return 2.0 * half_width / static_cast<double>(n_per_axis); }

    std::size_t point_count() const {
        const auto n = static_cast<std::size_t>(n_per_axis);
        return d == 1 ? n : n * n;
    }

    // largest representable frequency magnitude per axis
    double nyquist() const { return pi / spacing(); }

    double coord(int i) const { return -half_width + static_cast<double>(i) * spacing(); }

    std::size_t flat_index(int i, int j = 0) const {
        return d == 1 ? static_cast<std::size_t>(i)
                      : static_cast<std::size_t>(i) * static_cast<std::size_t>(n_per_axis) +
                            static_cast<std::size_t>(j);
    }

    std::array<int, 2> axis_indices(std::size_t flat) const {
        if (d == 1) return {static_cast<int>(flat), 0};
        return {static_cast<int>(flat / static_cast<std::size_t>(n_per_axis)),
                static_cast<int>(flat % static_cast<std::size_t>(n_per_axis))};
    }

    std::array<double, 2> point(std::size_t flat) const {
        const auto ij = axis_indices(flat);
        return {coord(ij[0]), d == 2 ? coord(ij[1]) : 0.0};
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Grid samples of a bounded continuous function, row-major over axes.
struct SampledField {
    GridSpec grid;
    std::vector<double> values;

    SampledField(GridSpec g, std::vector<double> v) : grid(g), values(std::move(v)) {
        require(values.size() == grid.point_count(), "SampledField: value count mismatch");
        for (double x : values)
            require(std::isfinite(x), "SampledField: values must be finite");
    }
};

template <typename F>
SampledField sample_field(const GridSpec& g, F&& fn) {
    std::vector<double> v(g.point_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g.point(i));
    return SampledField(g, std::move(v));
}

inline double sup_norm(const SampledField& f) {
    double m = 0.0;
    for (double x : f.values) m = std::max(m, std::abs(x));
    return m;
}

// left-endpoint Riemann sum of |f| over the box
inline double l1_norm(const SampledField& f) {
    double s = 0.0;
    for (double x : f.values) s += std::abs(x);
    const double h = f.grid.spacing();
    return s * (f.grid.d == 1 ? h : h * h);
}

struct ObservationMask {
    GridSpec grid;
    std::vector<std::uint8_t> indicator;

    ObservationMask(GridSpec g, std::vector<std::uint8_t> ind)
        : grid(g), indicator(std::move(ind)) {
        require(indicator.size() == grid.point_count(), "ObservationMask: size mismatch");
        bool any = false;
        for (auto b : indicator) any = any || (b != 0);
        guard(any, "empty observation set");
    }

    std::size_t active_count() const {
        std::size_t c = 0;
        for (auto b : indicator) c += (b != 0);
        return c;
    }
};

// A field together with the observation set it is restricted to; norms run
// over masked-in points only.
struct RestrictedField {
    SampledField field;
    ObservationMask mask;
};

inline RestrictedField restrict_to(const SampledField& f, const ObservationMask& m) {
    require(f.grid == m.grid, "restrict_to: grid mismatch");
    return RestrictedField{f, m};
}

inline double sup_norm(const RestrictedField& rf) {
    double m = 0.0;
    for (std::size_t i = 0; i < rf.field.values.size(); ++i)
        if (rf.mask.indicator[i]) m = std::max(m, std::abs(rf.field.values[i]));
    return m;
}

inline double restricted_sup_norm(const SampledField& f, const ObservationMask& m) {
    require(f.grid == m.grid, "restricted_sup_norm: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (m.indicator[i]) s = std::max(s, std::abs(f.values[i]));
    return s;
}

// ---------------------------------------------------------------------------
// Thick sets
// ---------------------------------------------------------------------------

// One axis of a periodic slab pattern: filled on [phase, phase + width) within
// every period.
struct SlabAxis {
    double period;
    double width;
    double phase = 0.0;
};

struct AllSpace {};

using ThickGeometry = std::variant<AllSpace, std::vector<SlabAxis>, std::vector<std::uint8_t>>;

struct ThickSetSpec {
    std::vector<double> windows; // the window sidelengths L
    double density;              // the density rho
    ThickGeometry geometry;

    void validate(int d) const {
        require(density > 0.0 && density <= 1.0, "ThickSetSpec: density must lie in (0, 1]");
        require(static_cast<int>(windows.size()) == d, "ThickSetSpec: window count != dimension");
        for (double w : windows) require(w > 0.0, "ThickSetSpec: window lengths must be positive");
    }
};

inline ObservationMask make_mask(const ThickSetSpec& spec, const GridSpec& g) {
    spec.validate(g.d);
    std::vector<std::uint8_t> ind(g.point_count(), 0);

    if (std::holds_alternative<AllSpace>(spec.geometry)) {
        std::fill(ind.begin(), ind.end(), 1);
    } else if (const auto* slabs = std::get_if<std::vector<SlabAxis>>(&spec.geometry)) {
        require(static_cast<int>(slabs->size()) == g.d, "make_mask: slab axis count != dimension");
        for (const auto& ax : *slabs) {
            require(ax.period > 0.0, "make_mask: slab period must be positive");
            require(ax.width > 0.0 && ax.width <= ax.period, "make_mask: slab width out of range");
        }
        for (std::size_t i = 0; i < ind.size(); ++i) {
            const auto p = g.point(i);
            bool in = true;
            for (int a = 0; a < g.d; ++a) {
                const auto& ax = (*slabs)[static_cast<std::size_t>(a)];
                const double rel = p[static_cast<std::size_t>(a)] - ax.phase;
                const double y = rel - ax.period * std::floor(rel / ax.period);
                in = in && (y < ax.width);
            }
            ind[i] = in ? 1 : 0;
        }
    } else {
        const auto& explicit_mask = std::get<std::vector<std::uint8_t>>(spec.geometry);
        require(explicit_mask.size() == g.point_count(), "make_mask: explicit mask size mismatch");
        ind = explicit_mask;
    }

    bool any = false;
    for (auto b : ind) any = any || (b != 0);
    guard(any, "observation set does not intersect the grid");
    return ObservationMask(g, std::move(ind));
}

struct ThicknessReport {
    bool thick;
    double min_density;
};

// Minimum covered fraction over all grid-aligned window placements with
// periodic wraparound. Continuum placements are matched to within one spacing;
// the pass test allows exactly that slack.
inline ThicknessReport check_thickness(const ObservationMask& mask,
                                       const std::vector<double>& windows, double rho) {
    const GridSpec& g = mask.grid;
    require(static_cast<int>(windows.size()) == g.d, "check_thickness: window count != dimension");
    const double h = g.spacing();
    const int n = g.n_per_axis;

    std::array<int, 2> m = {1, 1};
    for (int a = 0; a < g.d; ++a) {
        const double w = windows[static_cast<std::size_t>(a)];
        require(w > 0.0, "check_thickness: window lengths must be positive");
        require(w <= 2.0 * g.half_width, "check_thickness: window exceeds the domain");
        m[static_cast<std::size_t>(a)] = std::max(1, static_cast<int>(std::lround(w / h)));
    }

    double min_density = 1.0;
    if (g.d == 1) {
        // sliding window over the circle
        int count = 0;
        for (int k = 0; k < m[0]; ++k) count += mask.indicator[static_cast<std::size_t>(k % n)];
        for (int start = 0; start < n; ++start) {
            min_density = std::min(min_density, static_cast<double>(count) / m[0]);
            count -= mask.indicator[static_cast<std::size_t>(start)];
            count += mask.indicator[static_cast<std::size_t>((start + m[0]) % n)];
        }
    } else {
        const auto idx = [n](int i, int j) {
            return static_cast<std::size_t>(((i % n + n) % n)) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>((j % n + n) % n);
        };
        const double window_points = static_cast<double>(m[0]) * static_cast<double>(m[1]);
        for (int i0 = 0; i0 < n; ++i0) {
            for (int j0 = 0; j0 < n; ++j0) {
                int count = 0;
                for (int di = 0; di < m[0]; ++di)
                    for (int dj = 0; dj < m[1]; ++dj) count += mask.indicator[idx(i0 + di, j0 + dj)];
                min_density = std::min(min_density, static_cast<double>(count) / window_points);
            }
        }
    }

    double slack = 0.0;
    for (int a = 0; a < g.d; ++a) slack += h / windows[static_cast<std::size_t>(a)];
    return ThicknessReport{min_density >= rho - slack, min_density};
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void write_field_csv(const SampledField& f, std::ostream& os) {
    os << (f.grid.d == 1 ? "x,value\n" : "x1,x2,value\n");
    char buf[96];
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const auto p = f.grid.point(i);
        if (f.grid.d == 1)
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p[0], f.values[i]);
        else
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p[0], p[1], f.values[i]);
        os << buf;
    }
}

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "field binary format is little-endian; add byte swapping for this target");

inline void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    guard(static_cast<bool>(is), "field binary: truncated header");
    return v;
}

} // namespace detail

// header: d, n, L_box as little-endian 64-bit; payload: 64-bit floats row-major
inline void write_field_binary(const SampledField& f, std::ostream& os) {
    detail::put_u64(os, static_cast<std::uint64_t>(f.grid.d));
    detail::put_u64(os, static_cast<std::uint64_t>(f.grid.n_per_axis));
    std::uint64_t bits;
    std::memcpy(&bits, &f.grid.half_width, 8);
    detail::put_u64(os, bits);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(8 * f.values.size()));
}

inline SampledField read_field_binary(std::istream& is) {
    const auto d = static_cast<int>(detail::get_u64(is));
    const auto n = static_cast<int>(detail::get_u64(is));
    const std::uint64_t bits = detail::get_u64(is);
    double half_width;
    std::memcpy(&half_width, &bits, 8);
    GridSpec g(d, half_width, n);
    std::vector<double> v(g.point_count());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(8 * v.size()));
    guard(static_cast<bool>(is), "field binary: truncated payload");
    return SampledField(g, std::move(v));
}

} // namespace obslab
