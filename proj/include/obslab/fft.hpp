#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "obslab/common.hpp"

namespace obslab {
namespace detail {

using cdouble = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform. sign = -1 forward, +1 backward.
// Twiddles are refreshed from polar() every 32 butterflies to keep the
// accumulated rounding at the 1e-15 level even for long transforms.
inline void fft_pow2(std::vector<cdouble>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * pi / static_cast<double>(len);
        const cdouble wlen = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                if ((k & 31u) == 0u) w = std::polar(1.0, ang * static_cast<double>(k));
                const cdouble u = a[i + k];
                const cdouble v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein chirp transform for arbitrary n, via one power-of-two convolution.
inline void fft_bluestein(std::vector<cdouble>& a, int sign) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    // chirp_j = exp(sign * i * pi * j^2 / n); j^2 taken mod 2n to keep the
    // phase argument small.
    std::vector<cdouble> chirp(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t q = (j * j) % (2 * n);
        chirp[j] = std::polar(1.0, sign * pi * static_cast<double>(q) / static_cast<double>(n));
    }

    std::vector<cdouble> u(m, cdouble(0.0, 0.0));
    std::vector<cdouble> v(m, cdouble(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) u[j] = a[j] * chirp[j];
    for (std::size_t j = 0; j < n; ++j) {
        v[j] = std::conj(chirp[j]);
        if (j != 0) v[m - j] = std::conj(chirp[j]);
    }
    fft_pow2(u, -1);
    fft_pow2(v, -1);
    for (std::size_t j = 0; j < m; ++j) u[j] *= v[j];
    fft_pow2(u, +1);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < n; ++j) a[j] = u[j] * scale * chirp[j];
}

// Unitary-free DFT pair: forward X_m = sum_j x_j e^{-2pi i jm/n};
// inverse applies the conjugate kernel and the 1/n scale.
inline void fft(std::vector<cdouble>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if (is_power_of_two(n)) {
        fft_pow2(a, inverse ? +1 : -1);
    } else {
        fft_bluestein(a, inverse ? +1 : -1);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= scale;
    }
}

// Separable transform of a row-major d-dimensional array (d = 1 or 2,
// n points per axis).
inline void fft_axes(std::vector<cdouble>& data, int d, std::size_t n, bool inverse) {
    if (d == 1) {
        fft(data, inverse);
        return;
    }
    if (d != 2 || data.size() != n * n) throw std::invalid_argument("fft_axes: bad shape");
    std::vector<cdouble> line(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::copy(data.begin() + r * n, data.begin() + (r + 1) * n, line.begin());
        fft(line, inverse);
        std::copy(line.begin(), line.end(), data.begin() + r * n);
    }
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) line[r] = data[r * n + c];
        fft(line, inverse);
        for (std::size_t r = 0; r < n; ++r) data[r * n + c] = line[r];
    }
}

} // namespace detail
} // namespace obslab
