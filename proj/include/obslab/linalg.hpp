#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "obslab/common.hpp"

namespace obslab {

// Small dense row-major matrix; everything downstream is desk scale (n <= 64).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {
        require(r >= 0 && c >= 0, "Matrix: negative shape");
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Matrix operator*(const Matrix& x, const Matrix& y) {
    require(x.cols == y.rows, "matrix product: shape mismatch");
    Matrix z(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double v = x(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) z(i, j) += v * y(k, j);
        }
    return z;
}

inline Matrix operator+(const Matrix& x, const Matrix& y) {
    require(x.rows == y.rows && x.cols == y.cols, "matrix sum: shape mismatch");
    Matrix z = x;
    for (std::size_t i = 0; i < z.a.size(); ++i) z.a[i] += y.a[i];
    return z;
}

inline Matrix operator*(double s, const Matrix& x) {
    Matrix z = x;
    for (auto& v : z.a) v *= s;
    return z;
}

inline Matrix transpose(const Matrix& x) {
    Matrix z(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) z(j, i) = x(i, j);
    return z;
}

inline std::vector<double> mat_vec(const Matrix& x, const std::vector<double>& v) {
    require(static_cast<std::size_t>(x.cols) == v.size(), "mat_vec: shape mismatch");
    std::vector<double> out(static_cast<std::size_t>(x.rows), 0.0);
    for (int i = 0; i < x.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < x.cols; ++j) acc += x(i, j) * v[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

inline double norm_inf(const Matrix& x) {
    double m = 0.0;
    for (int i = 0; i < x.rows; ++i) {
        double row = 0.0;
        for (int j = 0; j < x.cols; ++j) row += std::abs(x(i, j));
        m = std::max(m, row);
    }
    return m;
}

// Solve A X = B by Gaussian elimination with partial pivoting.
inline Matrix lu_solve(Matrix A, Matrix B) {
    require(A.rows == A.cols && A.rows == B.rows, "lu_solve: shape mismatch");
    const int n = A.rows;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
        guard(std::abs(A(piv, k)) > 1e-300, "lu_solve: singular matrix");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            for (int j = 0; j < B.cols; ++j) std::swap(B(k, j), B(piv, j));
        }
        for (int i = k + 1; i < n; ++i) {
            const double f = A(i, k) / A(k, k);
            if (f == 0.0) continue;
            for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
            for (int j = 0; j < B.cols; ++j) B(i, j) -= f * B(k, j);
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = 0; j < B.cols; ++j) {
            double acc = B(k, j);
            for (int i = k + 1; i < n; ++i) acc -= A(k, i) * B(i, j);
            B(k, j) = acc / A(k, k);
        }
    }
    return B;
}

namespace detail {

// Classic Pade(6)/scaling-and-squaring matrix exponential.
inline Matrix expm(const Matrix& m) {
    const int n = m.rows;
    require(n == m.cols, "expm: square matrix required");
    const double nrm = norm_inf(m);
    int s = 0;
    if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    const Matrix a = std::ldexp(1.0, -s) * m;

    const int q = 6;
    Matrix x = a;
    Matrix e = Matrix::identity(n) + 0.5 * a;
    Matrix d = Matrix::identity(n) + (-0.5) * a;
    double c = 0.5;
    bool plus = true; // denominator signs alternate: +, -, +, ...
    for (int k = 2; k <= q; ++k) {
        c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
        x = a * x;
        e = e + c * x;
        d = plus ? d + c * x : d + (-c) * x;
        plus = !plus;
    }
    Matrix r = lu_solve(d, e);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

} // namespace detail

// Propagator of x' = -A x:   propagator(A, t) = exp(-t A).  n <= 64.
inline Matrix propagator(const Matrix& A, double t) {
    require(A.rows == A.cols, "propagator: square matrix required");
    require(A.rows <= 64, "propagator: dimension capped at 64");
    return detail::expm(-t * A);
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct LineFit {
    double intercept;
    double slope;
    double r2;
};

inline double r_squared(const std::vector<double>& y, const std::vector<double>& fitted) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_tot += (y[i] - mean) * (y[i] - mean);
        ss_res += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    }
    if (ss_tot <= 1e-300) return ss_res <= 1e-300 ? 1.0 : -1.0 / 0.0;
    return 1.0 - ss_res / ss_tot;
}

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    guard(std::abs(det) > 1e-300 * std::max(1.0, sxx), "fit_line: degenerate abscissae");
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / n;
    std::vector<double> fitted(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = intercept + slope * x[i];
    return LineFit{intercept, slope, r_squared(y, fitted)};
}

// Ordinary least squares for a small column set (p <= 4), via normal equations.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& columns,
                                         const std::vector<double>& y) {
    const std::size_t p = columns.size();
    require(p >= 1, "least_squares: empty design");
    for (const auto& c : columns)
        require(c.size() == y.size(), "least_squares: column length mismatch");
    Matrix gram(static_cast<int>(p), static_cast<int>(p));
    Matrix rhs(static_cast<int>(p), 1);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < y.size(); ++k) acc += columns[i][k] * columns[j][k];
            gram(static_cast<int>(i), static_cast<int>(j)) = acc;
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) acc += columns[i][k] * y[k];
        rhs(static_cast<int>(i), 0) = acc;
    }
    Matrix sol = lu_solve(gram, rhs);
    std::vector<double> out(p);
    for (std::size_t i = 0; i < p; ++i) out[i] = sol(static_cast<int>(i), 0);
    return out;
}

} // namespace obslab
