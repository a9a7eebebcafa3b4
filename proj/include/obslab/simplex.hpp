#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "obslab/common.hpp"

namespace obslab {

// Self-contained dense two-phase simplex with Bland's rule.
//
//   minimise  cost . x   subject to   A x <= b,  x >= 0.
//
// The returned dual vector uses the convention of the paired problem
//   maximise  -b . y   subject to   A^T y >= -cost,  y >= 0,
// so at an optimum: dual >= 0, objective == -dual . b, and
// dual_i * (b_i - (A x)_i) == 0 (complementary slackness).
enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpProblem {
    int vars = 0;
    int rows = 0;
    std::vector<double> cost; // vars
    std::vector<double> a;    // rows x vars, row-major
    std::vector<double> b;    // rows
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> dual;
};

namespace detail {

class SimplexTableau {
public:
    SimplexTableau(const LpProblem& p) : nv_(p.vars), m_(p.rows) {
        require(p.cost.size() == static_cast<std::size_t>(nv_), "simplex: cost size");
        require(p.b.size() == static_cast<std::size_t>(m_), "simplex: rhs size");
        require(p.a.size() == static_cast<std::size_t>(nv_) * static_cast<std::size_t>(m_),
                "simplex: matrix size");

        int artificials = 0;
        for (int i = 0; i < m_; ++i)
            if (p.b[static_cast<std::size_t>(i)] < 0.0) ++artificials;
        na_ = artificials;
        cols_ = nv_ + m_ + na_;
        t_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(cols_), 0.0);
        rhs_.assign(static_cast<std::size_t>(m_), 0.0);
        basis_.assign(static_cast<std::size_t>(m_), -1);

        int next_art = nv_ + m_;
        for (int i = 0; i < m_; ++i) {
            const bool neg = p.b[static_cast<std::size_t>(i)] < 0.0;
            const double sgn = neg ? -1.0 : 1.0;
            for (int j = 0; j < nv_; ++j)
                at(i, j) = sgn * p.a[static_cast<std::size_t>(i) * nv_ + j];
            at(i, nv_ + i) = sgn; // slack
            rhs_[static_cast<std::size_t>(i)] = sgn * p.b[static_cast<std::size_t>(i)];
            if (neg) {
                at(i, next_art) = 1.0;
                basis_[static_cast<std::size_t>(i)] = next_art;
                ++next_art;
            } else {
                basis_[static_cast<std::size_t>(i)] = nv_ + i;
            }
        }
    }

    LpSolution solve(const LpProblem& p) {
        LpSolution out;

        if (na_ > 0) {
            std::vector<double> phase1(static_cast<std::size_t>(cols_), 0.0);
            for (int j = nv_ + m_; j < cols_; ++j) phase1[static_cast<std::size_t>(j)] = 1.0;
            const LpStatus st = run(phase1, /*allow_artificial=*/true);
            if (st != LpStatus::optimal) {
                out.status = st;
                return out;
            }
            if (objective_ > 1e-7) {
                out.status = LpStatus::infeasible;
                return out;
            }
            pivot_out_artificials();
        }

        std::vector<double> phase2(static_cast<std::size_t>(cols_), 0.0);
        for (int j = 0; j < nv_; ++j) phase2[static_cast<std::size_t>(j)] = p.cost[static_cast<std::size_t>(j)];
        const LpStatus st = run(phase2, /*allow_artificial=*/false);
        out.status = st;
        if (st != LpStatus::optimal) return out;

        out.objective = objective_;
        out.x.assign(static_cast<std::size_t>(nv_), 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[static_cast<std::size_t>(i)] < nv_)
                out.x[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] =
                    rhs_[static_cast<std::size_t>(i)];
        // dual of row i = final reduced cost of its slack column
        out.dual.assign(static_cast<std::size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            double d = reduced_[static_cast<std::size_t>(nv_ + i)];
            if (std::abs(d) < 1e-11) d = 0.0;
            out.dual[static_cast<std::size_t>(i)] = d;
        }
        return out;
    }

private:
    double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * cols_ + j]; }

    void compute_reduced(const std::vector<double>& cost) {
        reduced_ = cost;
        objective_ = 0.0;
        for (int i = 0; i < m_; ++i) {
            const double cb = cost[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
            objective_ += cb * rhs_[static_cast<std::size_t>(i)];
            if (cb == 0.0) continue;
            for (int j = 0; j < cols_; ++j) reduced_[static_cast<std::size_t>(j)] -= cb * at(i, j);
        }
    }

    void pivot(int row, int col) {
        const double pv = at(row, col);
        const double inv = 1.0 / pv;
        for (int j = 0; j < cols_; ++j) at(row, j) *= inv;
        rhs_[static_cast<std::size_t>(row)] *= inv;
        at(row, col) = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double f = at(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j < cols_; ++j) at(i, j) -= f * at(row, j);
            at(i, col) = 0.0;
            rhs_[static_cast<std::size_t>(i)] -= f * rhs_[static_cast<std::size_t>(row)];
            if (rhs_[static_cast<std::size_t>(i)] < 0.0 && rhs_[static_cast<std::size_t>(i)] > -1e-11)
                rhs_[static_cast<std::size_t>(i)] = 0.0;
        }
        const double rc = reduced_[static_cast<std::size_t>(col)];
        if (rc != 0.0) {
            for (int j = 0; j < cols_; ++j) reduced_[static_cast<std::size_t>(j)] -= rc * at(row, j);
            reduced_[static_cast<std::size_t>(col)] = 0.0;
            objective_ += rc * rhs_[static_cast<std::size_t>(row)];
        }
        basis_[static_cast<std::size_t>(row)] = col;
    }

    LpStatus run(const std::vector<double>& cost, bool allow_artificial) {
        compute_reduced(cost);
        const long max_iter = 2000 + 200L * (static_cast<long>(m_) + cols_);
        for (long iter = 0; iter < max_iter; ++iter) {
            // Bland: entering = lowest-index column with negative reduced cost
            int enter = -1;
            const int scan_end = allow_artificial ? cols_ : nv_ + m_;
            for (int j = 0; j < scan_end; ++j) {
                if (reduced_[static_cast<std::size_t>(j)] < -1e-9) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return LpStatus::optimal;

            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                const double aij = at(i, enter);
                if (aij > 1e-11) {
                    const double ratio = rhs_[static_cast<std::size_t>(i)] / aij;
                    if (ratio < best - 1e-12 ||
                        (ratio < best + 1e-12 &&
                         (leave < 0 || basis_[static_cast<std::size_t>(i)] <
                                           basis_[static_cast<std::size_t>(leave)]))) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            pivot(leave, enter);
            // objective update inside pivot uses the pre-pivot reduced cost; recompute
            // exactly every so often to stop drift on long runs
            if ((iter & 255) == 255) compute_reduced(cost);
        }
        return LpStatus::iteration_limit;
    }

    // After phase 1, swap any artificial still in the basis (at value 0) for a
    // structural or slack column; rows with no candidate stay pinned at zero.
    void pivot_out_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < nv_ + m_) continue;
            int col = -1;
            for (int j = 0; j < nv_ + m_; ++j) {
                if (std::abs(at(i, j)) > 1e-9) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) {
                compute_reduced(std::vector<double>(static_cast<std::size_t>(cols_), 0.0));
                pivot(i, col);
            }
        }
    }

    int nv_;
    int m_;
    int na_ = 0;
    int cols_ = 0;
    std::vector<double> t_;
    std::vector<double> rhs_;
    std::vector<int> basis_;
    std::vector<double> reduced_;
    double objective_ = 0.0;
};

} // namespace detail

inline LpSolution solve_lp(const LpProblem& p) {
    detail::SimplexTableau tab(p);
    LpSolution sol = tab.solve(p);
    if (sol.status == LpStatus::optimal) {
        // recompute the objective from the primal point; tableau accumulation
        // can drift over many pivots
        double obj = 0.0;
        for (int j = 0; j < p.vars; ++j)
            obj += p.cost[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];
        sol.objective = obj;
    }
    return sol;
}

} // namespace obslab
