#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obslab/common.hpp"
#include "obslab/grid.hpp"
#include "obslab/linalg.hpp"
#include "obslab/parallel.hpp"
#include "obslab/rng.hpp"
#include "obslab/semigroups.hpp"
#include "obslab/spectral.hpp"

namespace obslab {

// Parameters of the uncertainty / dissipation pair and the observability
// horizon. r = infinity selects the sup-in-time norm.
struct ObsParams {
    double lambda_star = 0.0;
    double gamma1 = 1.0;
    double gamma2 = 2.0;
    double gamma3 = 1.0;
    double d0 = 1.0;
    double d1 = 1.0;
    double d2 = 1.0;
    double d3 = 1.0;
    double T = 1.0;
    double r = std::numeric_limits<double>::infinity();

    void validate() const {
        require(lambda_star >= 0.0, "ObsParams: lambda_star must be nonnegative");
        require(gamma1 > 0.0 && gamma2 > 0.0 && gamma3 > 0.0, "ObsParams: gammas must be positive");
        require(gamma1 < gamma2, "ObsParams: gamma1 must be below gamma2");
        require(d0 > 0.0 && d1 > 0.0 && d3 > 0.0, "ObsParams: d0, d1, d3 must be positive");
        require(d2 >= 1.0, "ObsParams: d2 must be at least 1");
        require(T > 0.0, "ObsParams: horizon must be positive");
        require(r >= 1.0, "ObsParams: r must be at least 1");
    }

    double blowup_exponent() const { return gamma1 * gamma3 / (gamma2 - gamma1); }
};

struct CobsShape {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

// One measured cell of a two-parameter sweep.
struct FitCell {
    double x0 = 0.0;
    double x1 = 0.0;
    double predictor = 0.0; // abscissa of the log-linear fit
    double measured = 0.0;
    double bound = 0.0;
    bool excluded = false;
    bool violated = false;
};

struct FitReport {
    std::array<std::string, 2> axes;
    std::vector<FitCell> cells;
    std::map<std::string, double> fitted;
    double r2 = 0.0;
    int violation_count = 0;
};

namespace detail {

// Log-space line through the included cells. The reported front constant is
// the smallest one whose bound dominates every included cell at the fitted
// rate (the OLS intercept lifted by the largest positive residual); r2 is the
// plain OLS diagnostic.
struct EnvelopeFit {
    double front;
    double rate; // log measured ~ log front + rate * predictor
    double r2;
};

inline EnvelopeFit envelope_fit(const std::vector<double>& predictor,
                                const std::vector<double>& log_measured) {
    const LineFit ols = fit_line(predictor, log_measured);
    double lift = 0.0;
    for (std::size_t i = 0; i < predictor.size(); ++i) {
        const double resid = log_measured[i] - (ols.intercept + ols.slope * predictor[i]);
        lift = std::max(lift, resid);
    }
    return EnvelopeFit{std::exp(ols.intercept + lift), ols.slope, ols.r2};
}

inline void mark_violations(FitReport& report, double front, double rate) {
    report.violation_count = 0;
    for (auto& cell : report.cells) {
        cell.bound = front * std::exp(rate * cell.predictor);
        cell.violated = !cell.excluded && cell.measured > cell.bound * (1.0 + 1e-9);
        report.violation_count += cell.violated ? 1 : 0;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Test function corpus
// ---------------------------------------------------------------------------

struct TestFunctionKind {
    enum class Tag { band_limited, gaussian_bumps, mixed };
    Tag tag = Tag::mixed;
    double lambda_max = 8.0;

    static TestFunctionKind band_limited(double lambda) { return {Tag::band_limited, lambda}; }
    static TestFunctionKind gaussian_bumps() { return {Tag::gaussian_bumps, 0.0}; }
    static TestFunctionKind mixed(double lambda) { return {Tag::mixed, lambda}; }
};

namespace detail {

inline SampledField normalized(SampledField f) {
    const double s = sup_norm(f);
    guard(s > 1e-300, "test function degenerated to zero");
    for (auto& v : f.values) v /= s;
    return f;
}

inline SampledField band_limited_draw(Rng& rng, const GridSpec& g, double lambda_max) {
    require(lambda_max > 0.0 && lambda_max < g.nyquist(),
            "band-limited corpus: lambda_max must lie below Nyquist");
    std::vector<double> noise(g.point_count());
    for (auto& v : noise) v = rng.normal();
    SampledField white(g, std::move(noise));
    SpectrumField spec = forward_transform(white);
    for (std::size_t i = 0; i < spec.coefficients.size(); ++i)
        spec.coefficients[i] *= chi(frequency_norm(g, i), lambda_max);
    return normalized(inverse_transform(spec));
}

inline SampledField bump_draw(Rng& rng, const GridSpec& g) {
    const double L = g.half_width;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const int bumps = 1 + static_cast<int>(rng.next_below(3));
        std::vector<std::array<double, 3>> centers; // x0, x1, width
        std::vector<double> amps;
        for (int b = 0; b < bumps; ++b) {
            centers.push_back({rng.uniform(-0.55 * L, 0.55 * L),
                               g.d == 2 ? rng.uniform(-0.55 * L, 0.55 * L) : 0.0,
                               rng.uniform(0.25, std::min(1.25, L / 8.0))});
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            amps.push_back(sign * rng.uniform(0.5, 1.0));
        }
        SampledField f = sample_field(g, [&](const std::array<double, 2>& x) {
            double acc = 0.0;
            for (std::size_t b = 0; b < centers.size(); ++b) {
                const double dx = x[0] - centers[b][0];
                const double dy = x[1] - centers[b][1];
                const double w2 = centers[b][2] * centers[b][2];
                acc += amps[b] * std::exp(-(dx * dx + dy * dy) / (2.0 * w2));
            }
            return acc;
        });
        // boundary decay below 1e-12 of the peak, else resample
        const double peak = sup_norm(f);
        double edge = 0.0;
        const int n = g.n_per_axis;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            const auto ij = g.axis_indices(i);
            const bool boundary = ij[0] == 0 || ij[0] == n - 1 ||
                                  (g.d == 2 && (ij[1] == 0 || ij[1] == n - 1));
            if (boundary) edge = std::max(edge, std::abs(f.values[i]));
        }
        if (peak > 1e-300 && edge <= 1e-12 * peak) return normalized(std::move(f));
    }
    guard(false, "gaussian bump rejected 100 times; box too small for the requested decay");
    throw std::logic_error("unreachable");
}

} // namespace detail

// Seeded corpus standing in for the universal quantifier over the state
// space; every empirical constant below is a lower bound that is monotone in
// this corpus. Outputs are normalized to sup norm 1.
inline std::vector<SampledField> generate_test_functions(const TestFunctionKind& kind, int count,
                                                         std::uint64_t seed, const GridSpec& g) {
    require(count >= 1, "generate_test_functions: count must be at least 1");
    Rng rng(seed);
    std::vector<SampledField> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        switch (kind.tag) {
        case TestFunctionKind::Tag::band_limited:
            out.push_back(detail::band_limited_draw(rng, g, kind.lambda_max));
            break;
        case TestFunctionKind::Tag::gaussian_bumps:
            out.push_back(detail::bump_draw(rng, g));
            break;
        case TestFunctionKind::Tag::mixed:
            if (i % 2 == 0)
                out.push_back(detail::band_limited_draw(rng, g, kind.lambda_max));
            else
                out.push_back(detail::bump_draw(rng, g));
            break;
        }
    }
    return out;
}

// Pure cosine waves at exact frequency bins. They are eigenfunctions of every
// radial multiplier, so dissipation ratios measured over them track the
// multiplier itself; deterministic, no seed.
inline std::vector<SampledField> cosine_probe_fields(const GridSpec& g,
                                                     const std::vector<double>& frequencies) {
    std::vector<SampledField> out;
    const double dxi = pi / g.half_width;
    for (double xi : frequencies) {
        require(xi > 0.0 && xi < g.nyquist(), "cosine_probe_fields: frequency out of band");
        const double snapped = dxi * std::lround(xi / dxi); // exact bin, exactly periodic
        out.push_back(sample_field(
            g, [&](const std::array<double, 2>& x) { return std::cos(snapped * x[0]); }));
    }
    return out;
}

// Band-limited probes hiding in the gaps of a periodic slab mask (d = 1):
// cos(pi (x - c) / p)^m peaks at the gap centre c and is bounded by
// cos(pi w / (2p))^m on the filled part, with top frequency m pi / p. One
// probe per power up to the requested band limit; the sup over the corpus
// picks the strongest survivor per cutoff.
inline std::vector<SampledField> gap_probe_fields(const GridSpec& g, const SlabAxis& slab,
                                                  double lambda_max) {
    require(g.d == 1, "gap_probe_fields: one-dimensional masks only");
    require(slab.width < slab.period, "gap_probe_fields: mask has no gaps");
    const double p = slab.period;
    const double ratio = 2.0 * g.half_width / p;
    // odd powers have period 2p, so the box must hold an even number of periods
    require(std::abs(ratio - std::lround(ratio)) < 1e-9 && std::lround(ratio) % 2 == 0,
            "gap_probe_fields: box must hold an even number of mask periods");
    const double centre = slab.phase + slab.width + 0.5 * (p - slab.width);
    const int m_max = static_cast<int>(std::floor(lambda_max * p / pi));
    require(m_max >= 1, "gap_probe_fields: band limit too small for this period");
    std::vector<SampledField> out;
    for (int m = 1; m <= m_max; ++m) {
        out.push_back(sample_field(g, [&](const std::array<double, 2>& x) {
            return std::pow(std::cos(pi * (x[0] - centre) / p), m);
        }));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uncertainty (spectral inequality) measurement
// ---------------------------------------------------------------------------

// For each lambda: the worst ratio  |P_lambda f|_inf / |P_lambda f|_inf,Omega
// over the corpus, fitted as log ratio = log d0 + d1 * lambda.
inline FitReport measure_up(const ObservationMask& mask, const std::vector<double>& windows,
                            double rho, const std::vector<double>& lambdas,
                            const std::vector<SampledField>& fns) {
    require(lambdas.size() >= 2 && !fns.empty(), "measure_up: need two cutoffs and a corpus");
    const GridSpec& g = mask.grid;
    for (const auto& f : fns) require(f.grid == g, "measure_up: corpus grid mismatch");
    const ThicknessReport th = check_thickness(mask, windows, rho);
    guard(th.thick, "measure_up: observation set is not thick for the given parameters");

    FitReport report;
    report.axes = {"lambda", ""};
    std::vector<double> xs, ys;
    for (double lambda : lambdas) {
        const Projection p(lambda);
        double worst = 0.0;
        for (const auto& f : fns) {
            const SampledField pf = apply_projection(p, f);
            const double num = sup_norm(pf);
            if (num <= 1e-13) continue; // projection annihilated this sample
            const double den = restricted_sup_norm(pf, mask);
            // an observed sup at rounding level signals a grid the continuum
            // theorem cannot survive on
            guard(den > 1e-13 * num, "observation annihilates test function");
            worst = std::max(worst, num / den);
        }
        guard(worst > 0.0, "measure_up: corpus has no content below the cutoff");
        FitCell cell;
        cell.x0 = lambda;
        cell.predictor = lambda;
        cell.measured = worst;
        report.cells.push_back(cell);
        xs.push_back(lambda);
        ys.push_back(std::log(worst));
    }

    const auto fit = detail::envelope_fit(xs, ys);
    report.fitted["d0"] = fit.front;
    report.fitted["d1"] = fit.rate;
    report.r2 = fit.r2;
    detail::mark_violations(report, fit.front, fit.rate);
    return report;
}

// ---------------------------------------------------------------------------
// Dissipation measurement
// ---------------------------------------------------------------------------

namespace detail {

inline double dissipation_ratio(const PropagatorConfig& cfg, double lambda, double t,
                                const SampledField& f) {
    if (cfg.kind == SemigroupKind::gauss_weierstrass) {
        // one multiplier pass: (1 - chi_lambda) e^{-t |xi|^2}
        const SampledField w = apply_radial_multiplier(f, [&](double absxi) {
            return (1.0 - chi(absxi, lambda)) * std::exp(-t * absxi * absxi);
        });
        return sup_norm(w) / sup_norm(f);
    }
    const OuField g = ou_step(f, t, cfg);
    const SampledField pf = apply_projection(Projection(lambda), g.field);
    double worst = 0.0;
    for (std::size_t i = 0; i < pf.values.size(); ++i)
        if (g.safe[i]) worst = std::max(worst, std::abs(g.field.values[i] - pf.values[i]));
    return worst / sup_norm(f);
}

} // namespace detail

// ratio(lambda, t) = max over the corpus of |(I - P_lambda) S_t f| / |f|,
// fitted as log ratio = log d2 - d3 * lambda^2 t. Cells below the double
// precision floor are excluded and flagged. Passing fixed (d2, d3) skips the
// fit and only marks violations (held-out verification).
inline FitReport measure_diss(const PropagatorConfig& cfg, const std::vector<double>& lambdas,
                              const std::vector<double>& times,
                              const std::vector<SampledField>& fns,
                              std::optional<std::pair<double, double>> fixed = std::nullopt) {
    require(!lambdas.empty() && !times.empty() && !fns.empty(), "measure_diss: empty grid");
    const GridSpec& g = cfg.grid;
    for (double lambda : lambdas)
        require(lambda > 0.0 && lambda < g.nyquist(), "cutoff exceeds Nyquist");
    for (double t : times) require(t > 0.0, "measure_diss: times must be positive");
    for (const auto& f : fns) require(f.grid == g, "measure_diss: corpus grid mismatch");

    FitReport report;
    report.axes = {"lambda", "t"};
    struct Cell {
        double lambda, t, ratio;
    };
    std::vector<Cell> raw(lambdas.size() * times.size());
    parallel_for(raw.size(), [&](std::size_t idx) {
        const double lambda = lambdas[idx / times.size()];
        const double t = times[idx % times.size()];
        double worst = 0.0;
        for (const auto& f : fns)
            worst = std::max(worst, detail::dissipation_ratio(cfg, lambda, t, f));
        raw[idx] = Cell{lambda, t, worst};
    });

    std::vector<double> xs, ys;
    for (const auto& c : raw) {
        FitCell cell;
        cell.x0 = c.lambda;
        cell.x1 = c.t;
        cell.predictor = c.lambda * c.lambda * c.t;
        cell.measured = c.ratio;
        cell.excluded = c.ratio < 1e-14; // below the double precision floor
        report.cells.push_back(cell);
        if (!cell.excluded) {
            xs.push_back(cell.predictor);
            ys.push_back(std::log(c.ratio));
        }
    }

    double front, rate;
    if (fixed) {
        front = fixed->first;
        rate = -fixed->second;
        report.r2 = 0.0;
    } else {
        guard(xs.size() >= 2, "measure_diss: not enough cells above the precision floor");
        const auto fit = detail::envelope_fit(xs, ys);
        guard(-fit.rate > 0.0, "measure_diss: fitted decay rate is not positive");
        front = fit.front;
        rate = fit.rate;
        report.r2 = fit.r2;
    }
    report.fitted["d2"] = front;
    report.fitted["d3"] = -rate;
    detail::mark_violations(report, front, rate);
    return report;
}

// ---------------------------------------------------------------------------
// High-frequency multiplier tail (dissipation lemma for the OU dilation)
// ---------------------------------------------------------------------------

// value(lambda, s) = L1 norm of the inverse transform of (1 - chi_lambda) h_s,
// fitted as log value = log d2 - d3 * lambda^2 (1 - s^2). lambda = 0 encodes
// the vanishing-cutoff limit (multiplier h_s alone); those cells are reported
// but excluded from the fit.
inline FitReport measure_lemma_l1(const GridSpec& g, const std::vector<double>& lambdas,
                                  const std::vector<double>& s_values,
                                  std::optional<std::pair<double, double>> fixed = std::nullopt) {
    require(!lambdas.empty() && !s_values.empty(), "measure_lemma_l1: empty grid");
    const double dxi = pi / g.half_width;
    for (double s : s_values) require(s > 0.0 && s < 1.0, "measure_lemma_l1: s must lie in (0, 1)");
    for (double lambda : lambdas) {
        require(lambda >= 0.0, "measure_lemma_l1: lambda must be nonnegative");
        if (lambda > 0.0) {
            require(lambda < g.nyquist(), "cutoff exceeds Nyquist");
            require(lambda >= 4.0 * dxi, "measure_lemma_l1: cutoff not resolvable on the grid");
        }
    }

    FitReport report;
    report.axes = {"lambda", "s"};
    std::vector<double> values(lambdas.size() * s_values.size());
    parallel_for(values.size(), [&](std::size_t idx) {
        const double lambda = lambdas[idx / s_values.size()];
        const double s = s_values[idx % s_values.size()];
        values[idx] = multiplier_l1(g, [&](double absxi) {
            return (1.0 - chi(absxi, lambda)) * dilation_symbol(s, absxi);
        });
    });

    std::vector<double> xs, ys;
    std::size_t idx = 0;
    for (double lambda : lambdas) {
        for (double s : s_values) {
            FitCell cell;
            cell.x0 = lambda;
            cell.x1 = s;
            cell.predictor = lambda * lambda * (1.0 - s * s);
            cell.measured = values[idx++];
            cell.excluded = lambda == 0.0;
            report.cells.push_back(cell);
            if (!cell.excluded) {
                guard(cell.measured > 0.0, "measure_lemma_l1: vanishing tail value");
                xs.push_back(cell.predictor);
                ys.push_back(std::log(cell.measured));
            }
        }
    }

    double front, rate;
    if (fixed) {
        front = fixed->first;
        rate = -fixed->second;
        report.r2 = 0.0;
    } else {
        guard(xs.size() >= 2, "measure_lemma_l1: not enough cells to fit");
        const auto fit = detail::envelope_fit(xs, ys);
        guard(-fit.rate > 0.0, "measure_lemma_l1: fitted decay rate is not positive");
        front = fit.front;
        rate = fit.rate;
        report.r2 = fit.r2;
    }
    report.fitted["d2"] = front;
    report.fitted["d3"] = -rate;
    detail::mark_violations(report, front, rate);
    return report;
}

// ---------------------------------------------------------------------------
// Observability constant measurement and functional form
// ---------------------------------------------------------------------------

// max over the corpus of |S_T f|_inf divided by the L^r-in-time norm of the
// observed orbit on N_t left endpoints.
inline double estimate_cobs(const PropagatorConfig& cfg, const ObservationMask& mask, double T,
                            double r, int time_steps, const std::vector<SampledField>& fns) {
    require(T > 0.0, "estimate_cobs: horizon must be positive");
    require(time_steps >= 32, "estimate_cobs: need at least 32 time steps");
    require(r >= 1.0, "estimate_cobs: r must be at least 1");
    require(!fns.empty(), "estimate_cobs: empty corpus");
    require(mask.grid == cfg.grid, "estimate_cobs: mask grid mismatch");
    const double dt = T / static_cast<double>(time_steps);
    std::vector<double> times(static_cast<std::size_t>(time_steps));
    for (int i = 0; i < time_steps; ++i) times[static_cast<std::size_t>(i)] = dt * i;
    const bool sup_in_time = std::isinf(r);

    std::vector<double> ratios(fns.size());
    parallel_for(fns.size(), [&](std::size_t k) {
        const auto& f = fns[k];
        const std::vector<SampledField> path = orbit(f, times, cfg);
        double norm_obs = 0.0;
        for (const auto& state : path) {
            const double v = restricted_sup_norm(state, mask);
            if (sup_in_time)
                norm_obs = std::max(norm_obs, v);
            else
                norm_obs += std::pow(v, r) * dt;
        }
        if (!sup_in_time) norm_obs = std::pow(norm_obs, 1.0 / r);
        guard(norm_obs > 1e-13 * sup_norm(f), "observation annihilates test function");
        const double final_sup = cfg.kind == SemigroupKind::gauss_weierstrass
                                     ? sup_norm(gw_step(f, T))
                                     : sup_norm(ou_step(f, T, cfg).field);
        ratios[k] = final_sup / norm_obs;
    });
    double best = 0.0;
    for (double v : ratios) best = std::max(best, v);
    return best;
}

// C_obs(T) = (C1 / T^{1/r}) exp(C2 / T^e + C3 T) with e the blow-up exponent
// of the parameter set and T^{1/r} = 1 for r = infinity.
inline double cobs_form(double T, const CobsShape& shape, const ObsParams& p) {
    require(T > 0.0, "cobs_form: horizon must be positive");
    const double prefactor =
        std::isinf(p.r) ? shape.c1 : shape.c1 / std::pow(T, 1.0 / p.r);
    return prefactor * std::exp(shape.c2 / std::pow(T, p.blowup_exponent()) + shape.c3 * T);
}

struct CobsFit {
    CobsShape shape;
    double r2;
};

// Least squares of log measured against {-(1/r) log T, T^{-e}, T} with the
// known -(1/r) log T offset moved to the left side; C2 and C3 are kept
// nonnegative by active-set enumeration.
inline CobsFit fit_cobs_scaling(const std::vector<double>& horizons,
                                const std::vector<double>& measured, const ObsParams& p) {
    p.validate();
    require(horizons.size() == measured.size(), "fit_cobs_scaling: size mismatch");
    std::vector<double> distinct = horizons;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    require(distinct.size() >= 4, "fit_cobs_scaling: need at least 4 distinct horizons");

    const std::size_t nrows = horizons.size();
    const double e = p.blowup_exponent();
    std::vector<double> y(nrows), ones(nrows, 1.0), z2(nrows), z3(nrows);
    for (std::size_t i = 0; i < nrows; ++i) {
        require(horizons[i] > 0.0, "fit_cobs_scaling: horizons must be positive");
        require(measured[i] > 0.0, "fit_cobs_scaling: measured constants must be positive");
        y[i] = std::log(measured[i]);
        if (!std::isinf(p.r)) y[i] += std::log(horizons[i]) / p.r;
        z2[i] = std::pow(horizons[i], -e);
        z3[i] = horizons[i];
    }

    struct Candidate {
        double b0, b2, b3, sse;
        bool ok;
    };
    const auto evaluate = [&](bool use2, bool use3) -> Candidate {
        std::vector<std::vector<double>> cols{ones};
        if (use2) cols.push_back(z2);
        if (use3) cols.push_back(z3);
        std::vector<double> beta;
        try {
            beta = least_squares(cols, y);
        } catch (const std::exception&) {
            return Candidate{0, 0, 0, 0, false};
        }
        Candidate c{beta[0], 0.0, 0.0, 0.0, true};
        std::size_t k = 1;
        if (use2) c.b2 = beta[k++];
        if (use3) c.b3 = beta[k++];
        if (c.b2 < -1e-12 || c.b3 < -1e-12) c.ok = false;
        c.b2 = std::max(0.0, c.b2);
        c.b3 = std::max(0.0, c.b3);
        for (std::size_t i = 0; i < nrows; ++i) {
            const double resid = y[i] - (c.b0 + c.b2 * z2[i] + c.b3 * z3[i]);
            c.sse += resid * resid;
        }
        return c;
    };

    Candidate best{0, 0, 0, std::numeric_limits<double>::infinity(), false};
    bool any = false;
    for (const auto& [use2, use3] :
         {std::pair{true, true}, std::pair{true, false}, std::pair{false, true},
          std::pair{false, false}}) {
        const Candidate c = evaluate(use2, use3);
        if (c.ok && c.sse < best.sse) {
            best = c;
            any = true;
        }
    }
    guard(any, "degenerate design matrix");

    std::vector<double> fitted(nrows);
    for (std::size_t i = 0; i < nrows; ++i) fitted[i] = best.b0 + best.b2 * z2[i] + best.b3 * z3[i];
    return CobsFit{CobsShape{std::exp(best.b0), best.b2, best.b3}, r_squared(y, fitted)};
}

} // namespace obslab
