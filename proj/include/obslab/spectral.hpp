#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "obslab/common.hpp"
#include "obslab/fft.hpp"
#include "obslab/grid.hpp"

namespace obslab {

// Smooth radial cutoff profile: 1 on [0, 1/2], 0 on [1, inf), glued on
// (1/2, 1) by the exp(-1/x) partition of unity. Symmetric around r = 3/4,
// so eta(3/4) = 1/2 exactly.
inline double eta(double r) {
    require(r >= 0.0, "eta: radius must be nonnegative");
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    const double x = 2.0 * (1.0 - r); // in (0, 1)
    const double gx = std::exp(-1.0 / x);
    const double gy = std::exp(-1.0 / (1.0 - x));
    return gx / (gx + gy);
}

// chi_lambda(|xi|) = eta(|xi| / lambda); lambda = 0 is the vanishing-support
// limit (multiplier identically zero).
inline double chi(double abs_xi, double lambda) {
    if (lambda <= 0.0) return 0.0;
    return eta(abs_xi / lambda);
}

// Frequency-side coefficients under the convention
//   (F f)(xi) = integral f(x) e^{-i x.xi} dx
// sampled at xi_k = (pi / L_box) k, k in {-n/2, .., n/2 - 1}^d. Coefficients
// are stored in DFT order: axis index m maps to k = m for m < n/2 and
// k = m - n otherwise.
struct SpectrumField {
    GridSpec grid;
    std::vector<std::complex<double>> coefficients;

    SpectrumField(GridSpec g, std::vector<std::complex<double>> c)
        : grid(g), coefficients(std::move(c)) {
        require(coefficients.size() == grid.point_count(), "SpectrumField: size mismatch");
    }
};

inline int frequency_integer(const GridSpec& g, int axis_index) {
    return axis_index < g.n_per_axis / 2 ? axis_index : axis_index - g.n_per_axis;
}

inline double frequency(const GridSpec& g, int axis_index) {
    return pi * static_cast<double>(frequency_integer(g, axis_index)) / g.half_width;
}

inline std::array<double, 2> frequency_vector(const GridSpec& g, std::size_t flat) {
    const auto ij = g.axis_indices(flat);
    return {frequency(g, ij[0]), g.d == 2 ? frequency(g, ij[1]) : 0.0};
}

inline double frequency_norm(const GridSpec& g, std::size_t flat) {
    const auto xi = frequency_vector(g, flat);
    return g.d == 1 ? std::abs(xi[0]) : std::hypot(xi[0], xi[1]);
}

namespace detail {

// (-1)^(sum of axis indices); the phase that re-centres the DFT onto the
// box [-L, L)^d.
inline double centre_phase(const GridSpec& g, std::size_t flat) {
    const auto ij = g.axis_indices(flat);
    return ((ij[0] + ij[1]) & 1) ? -1.0 : 1.0;
}

inline std::vector<cdouble> inverse_transform_complex(const SpectrumField& s) {
    const GridSpec& g = s.grid;
    const double hd = g.d == 1 ? g.spacing() : g.spacing() * g.spacing();
    std::vector<cdouble> buf(s.coefficients.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = s.coefficients[i] * (centre_phase(g, i) / hd);
    fft_axes(buf, g.d, static_cast<std::size_t>(g.n_per_axis), true);
    return buf;
}

} // namespace detail

inline SpectrumField forward_transform(const SampledField& f) {
    const GridSpec& g = f.grid;
    std::vector<detail::cdouble> buf(f.values.begin(), f.values.end());
    detail::fft_axes(buf, g.d, static_cast<std::size_t>(g.n_per_axis), false);
    const double hd = g.d == 1 ? g.spacing() : g.spacing() * g.spacing();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= hd * detail::centre_phase(g, i);
    return SpectrumField(g, std::move(buf));
}

// Inverse of forward_transform. The imaginary residue of a conjugate-symmetric
// spectrum is pure rounding noise and is dropped.
inline SampledField inverse_transform(const SpectrumField& s) {
    const auto buf = detail::inverse_transform_complex(s);
    std::vector<double> v(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) v[i] = buf[i].real();
    return SampledField(s.grid, std::move(v));
}

template <typename Mult>
SampledField apply_radial_multiplier(const SampledField& f, Mult&& mult) {
    SpectrumField s = forward_transform(f);
    for (std::size_t i = 0; i < s.coefficients.size(); ++i)
        s.coefficients[i] *= mult(frequency_norm(f.grid, i));
    return inverse_transform(s);
}

// Low-pass projection P_lambda: multiply the spectrum by chi_lambda.
struct Projection {
    double lambda;

    explicit Projection(double lambda_) : lambda(lambda_) {
        require(lambda > 0.0, "Projection: lambda must be positive");
    }
};

inline SampledField apply_projection(const Projection& p, const SampledField& f) {
    require(p.lambda < f.grid.nyquist(), "cutoff exceeds Nyquist");
    return apply_radial_multiplier(f, [&p](double absxi) { return chi(absxi, p.lambda); });
}

// Discrete L1 norm of the inverse transform of a radial frequency multiplier.
// The multiplier must have decayed at the representable band edge, otherwise
// the result is an aliased artefact.
template <typename Mult>
double multiplier_l1(const GridSpec& g, Mult&& mult) {
    const int n = g.n_per_axis;
    std::vector<std::complex<double>> coeff(g.point_count());
    double edge_max = 0.0;
    for (std::size_t i = 0; i < coeff.size(); ++i) {
        const double value = mult(frequency_norm(g, i));
        coeff[i] = value;
        const auto ij = g.axis_indices(i);
        bool on_edge = false;
        for (int a = 0; a < g.d; ++a) {
            const int k = frequency_integer(g, ij[static_cast<std::size_t>(a)]);
            on_edge = on_edge || (k == -n / 2) || (k == n / 2 - 1);
        }
        if (on_edge) edge_max = std::max(edge_max, std::abs(value));
    }
    guard(edge_max <= 1e-14, "aliasing risk");

    const auto values = detail::inverse_transform_complex(SpectrumField(g, std::move(coeff)));
    double s = 0.0;
    for (const auto& z : values) s += std::abs(z);
    const double h = g.spacing();
    return s * (g.d == 1 ? h : h * h);
}

} // namespace obslab
