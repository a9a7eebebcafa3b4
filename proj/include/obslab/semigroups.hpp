#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "obslab/common.hpp"
#include "obslab/grid.hpp"
#include "obslab/parallel.hpp"
#include "obslab/spectral.hpp"

namespace obslab {

enum class SemigroupKind { gauss_weierstrass, ornstein_uhlenbeck };

// Heat kernel k_t(x) = (4 pi t)^(-d/2) exp(-|x|^2 / (4t)).
inline double gw_kernel(int d, double t, const std::array<double, 2>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double norm = std::pow(4.0 * pi * t, -0.5 * d);
    return norm * std::exp(-r2 / (4.0 * t));
}

inline SampledField sample_gw_kernel(const GridSpec& g, double t) {
    require(t > 0.0, "sample_gw_kernel: time must be positive");
    return sample_field(g, [&](const std::array<double, 2>& x) { return gw_kernel(g.d, t, x); });
}

// Gaussian k_s(x) = (pi (1-s^2))^(-d/2) exp(-|x|^2 / (1-s^2)), the dilation
// kernel of the Ornstein-Uhlenbeck flow; its transform is
// h_s(xi) = exp(-(1-s^2)|xi|^2 / 4).
inline double dilation_kernel(int d, double s, const std::array<double, 2>& x) {
    const double v = 1.0 - s * s;
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return std::pow(pi * v, -0.5 * d) * std::exp(-r2 / v);
}

inline double dilation_symbol(double s, double abs_xi) {
    return std::exp(-(1.0 - s * s) * abs_xi * abs_xi / 4.0);
}

// Heat flow step, computed as the exact Fourier multiplier exp(-t |xi|^2).
// Kernel quadrature is kept only as a test oracle.
inline SampledField gw_step(const SampledField& f, double t) {
    require(t >= 0.0, "gw_step: time must be nonnegative");
    if (t == 0.0) return f;
    return apply_radial_multiplier(f, [t](double absxi) { return std::exp(-t * absxi * absxi); });
}

// Mehler kernel variance: M_t(x, .) is a Gaussian centred at e^{-t} x with
// per-axis density (pi sigma2)^(-1/2) exp(-(y - mu)^2 / sigma2).
inline double mehler_sigma2(double t) { return 1.0 - std::exp(-2.0 * t); }

struct PropagatorConfig {
    SemigroupKind kind;
    GridSpec grid;
    double ou_truncation_radius; // max-norm radius of the quadrature box

    PropagatorConfig(SemigroupKind k, GridSpec g)
        : kind(k), grid(g), ou_truncation_radius(g.half_width) {}

    PropagatorConfig(SemigroupKind k, GridSpec g, double radius)
        : kind(k), grid(g), ou_truncation_radius(radius) {
        require(radius > 0.0, "PropagatorConfig: truncation radius must be positive");
    }
};

struct OuSamples {
    std::vector<double> values;
    std::vector<std::uint8_t> safe;
};

struct OuField {
    SampledField field;
    std::vector<std::uint8_t> safe; // per point: truncated quadrature captures >= 1 - 1e-10 of kernel mass
};

namespace detail {

inline void ou_validate(const SampledField& f, double t, const PropagatorConfig& cfg,
                        bool enforce_decay) {
    const double sigma_std = std::sqrt(0.5 * mehler_sigma2(t));
    require(cfg.ou_truncation_radius >= 6.0 * sigma_std,
            "PropagatorConfig: truncation radius below 6 kernel standard deviations");
    if (!enforce_decay) return;
    const double decay_radius = cfg.ou_truncation_radius - 6.0 * sigma_std;
    double outside_max = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const auto p = f.grid.point(i);
        const double rinf = std::max(std::abs(p[0]), std::abs(p[1]));
        if (rinf > decay_radius) outside_max = std::max(outside_max, std::abs(f.values[i]));
    }
    guard(outside_max <= 1e-12, "OU quadrature truncation unsafe");
}

// fraction of a per-axis Mehler Gaussian centred at mu captured by [-c, c]
inline double axis_mass(double mu, double sigma_m, double c) {
    return 0.5 * (std::erf((c - mu) / sigma_m) + std::erf((c + mu) / sigma_m));
}

} // namespace detail

// Mehler quadrature at arbitrary query points: left-endpoint Riemann sum over
// the grid, truncated at the configured radius. O(n^d) per query.
inline OuSamples ou_apply_at(const SampledField& f, double t,
                             const std::vector<std::array<double, 2>>& queries,
                             const PropagatorConfig& cfg, bool enforce_decay = true) {
    require(t >= 0.0, "ou_apply_at: time must be nonnegative");
    const GridSpec& g = f.grid;
    OuSamples out;
    out.values.resize(queries.size());
    out.safe.assign(queries.size(), 1);
    if (t == 0.0) {
        for (std::size_t q = 0; q < queries.size(); ++q) {
            // exact only when the query is a grid point; callers use t > 0 otherwise
            const auto& p = queries[q];
            const double h = g.spacing();
            const auto snap = [&](double c) {
                return std::clamp(static_cast<int>(std::lround((c + g.half_width) / h)), 0,
                                  g.n_per_axis - 1);
            };
            out.values[q] = f.values[g.flat_index(snap(p[0]), g.d == 2 ? snap(p[1]) : 0)];
        }
        return out;
    }
    detail::ou_validate(f, t, cfg, enforce_decay);

    const double s = std::exp(-t);
    const double sigma2 = mehler_sigma2(t);
    const double sigma_m = std::sqrt(sigma2);
    const double c = std::min(g.half_width, cfg.ou_truncation_radius);
    const double norm = std::pow(pi * sigma2, -0.5 * g.d);
    const double h = g.spacing();
    const double hd = g.d == 1 ? h : h * h;
    const int n = g.n_per_axis;

    parallel_for(queries.size(), [&](std::size_t q) {
        const auto& p = queries[q];
        double acc = 0.0;
        double mass = 1.0;
        for (int a = 0; a < g.d; ++a)
            mass *= detail::axis_mass(s * p[static_cast<std::size_t>(a)], sigma_m, c);
        out.safe[q] = mass >= 1.0 - 1e-10 ? 1 : 0;
        if (g.d == 1) {
            const double mu = s * p[0];
            for (int i = 0; i < n; ++i) {
                const double y = g.coord(i);
                if (std::abs(y) > cfg.ou_truncation_radius) continue;
                const double dy = y - mu;
                acc += std::exp(-dy * dy / sigma2) * f.values[static_cast<std::size_t>(i)];
            }
        } else {
            const double mu0 = s * p[0];
            const double mu1 = s * p[1];
            for (int i = 0; i < n; ++i) {
                const double y0 = g.coord(i);
                if (std::abs(y0) > cfg.ou_truncation_radius) continue;
                const double w0 = std::exp(-(y0 - mu0) * (y0 - mu0) / sigma2);
                for (int j = 0; j < n; ++j) {
                    const double y1 = g.coord(j);
                    if (std::abs(y1) > cfg.ou_truncation_radius) continue;
                    acc += w0 * std::exp(-(y1 - mu1) * (y1 - mu1) / sigma2) *
                           f.values[g.flat_index(i, j)];
                }
            }
        }
        out.values[q] = acc * norm * hd;
    });
    return out;
}

// Full-grid Mehler step. Separable: one dense kernel matrix per axis, so the
// cost is O(n^2) in d = 1 and O(n^3) in d = 2.
inline OuField ou_step(const SampledField& f, double t, const PropagatorConfig& cfg,
                       bool enforce_decay = true) {
    require(t >= 0.0, "ou_step: time must be nonnegative");
    const GridSpec& g = f.grid;
    if (t == 0.0) return OuField{f, std::vector<std::uint8_t>(g.point_count(), 1)};
    detail::ou_validate(f, t, cfg, enforce_decay);

    const double s = std::exp(-t);
    const double sigma2 = mehler_sigma2(t);
    const double sigma_m = std::sqrt(sigma2);
    const double c = std::min(g.half_width, cfg.ou_truncation_radius);
    const double norm1d = std::pow(pi * sigma2, -0.5);
    const double h = g.spacing();
    const int n = g.n_per_axis;

    // K[a][b] = h * norm1d * exp(-(y_b - s x_a)^2 / sigma2), truncated in y
    std::vector<double> kernel(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t a) {
        const double mu = s * g.coord(static_cast<int>(a));
        for (int b = 0; b < n; ++b) {
            const double y = g.coord(b);
            if (std::abs(y) > cfg.ou_truncation_radius) continue;
            const double dy = y - mu;
            kernel[a * static_cast<std::size_t>(n) + static_cast<std::size_t>(b)] =
                h * norm1d * std::exp(-dy * dy / sigma2);
        }
    });

    std::vector<double> result(g.point_count(), 0.0);
    if (g.d == 1) {
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t a) {
            double acc = 0.0;
            const double* row = &kernel[a * static_cast<std::size_t>(n)];
            for (int b = 0; b < n; ++b) acc += row[b] * f.values[static_cast<std::size_t>(b)];
            result[a] = acc;
        });
    } else {
        // contract y1 first, then y0
        std::vector<double> half(g.point_count(), 0.0);
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            for (int a1 = 0; a1 < n; ++a1) {
                const double* row = &kernel[static_cast<std::size_t>(a1) * static_cast<std::size_t>(n)];
                double acc = 0.0;
                for (int b1 = 0; b1 < n; ++b1)
                    acc += row[b1] * f.values[g.flat_index(static_cast<int>(i), b1)];
                half[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(a1)] = acc;
            }
        });
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t a0) {
            const double* row = &kernel[a0 * static_cast<std::size_t>(n)];
            for (int a1 = 0; a1 < n; ++a1) {
                double acc = 0.0;
                for (int b0 = 0; b0 < n; ++b0)
                    acc += row[b0] * half[static_cast<std::size_t>(b0) * static_cast<std::size_t>(n) +
                                          static_cast<std::size_t>(a1)];
                result[g.flat_index(static_cast<int>(a0), a1)] = acc;
            }
        });
    }

    std::vector<std::uint8_t> safe(g.point_count(), 0);
    for (std::size_t q = 0; q < safe.size(); ++q) {
        const auto p = g.point(q);
        double mass = 1.0;
        for (int a = 0; a < g.d; ++a)
            mass *= detail::axis_mass(s * p[static_cast<std::size_t>(a)], sigma_m, c);
        safe[q] = mass >= 1.0 - 1e-10 ? 1 : 0;
    }
    return OuField{SampledField(g, std::move(result)), std::move(safe)};
}

// Batch evaluation t -> S_t f. Each element is a single-step evaluation from
// f (no compounding error for the heat flow).
inline std::vector<SampledField> orbit(const SampledField& f, const std::vector<double>& times,
                                       const PropagatorConfig& cfg) {
    require(!times.empty(), "orbit: need at least one time");
    for (std::size_t i = 0; i < times.size(); ++i) {
        require(times[i] >= 0.0, "orbit: times must be nonnegative");
        if (i > 0) require(times[i - 1] <= times[i], "orbit: times must be sorted");
    }
    std::vector<SampledField> out;
    out.reserve(times.size());
    for (double t : times) {
        if (cfg.kind == SemigroupKind::gauss_weierstrass)
            out.push_back(gw_step(f, t));
        else
            out.push_back(ou_step(f, t, cfg).field);
    }
    return out;
}

} // namespace obslab
