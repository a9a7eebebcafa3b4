#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "obslab/common.hpp"
#include "obslab/linalg.hpp"
#include "obslab/rng.hpp"
#include "obslab/simplex.hpp"

namespace obslab {

// Finite-dimensional control system  x' = -A x + B u  on the horizon [0, T],
// discretised on N_t uniform left endpoints t_i = i T / N_t. State norm is
// the max norm (dual: sum norm); the control norm is the sup over time steps
// and input coordinates.
struct ControlSystem {
    int n;
    int m;
    Matrix A;
    Matrix B;
    double horizon;
    int time_steps;
    std::vector<Matrix> propagators; // S_{t_i} = exp(-t_i A), i = 0 .. N_t (inclusive)

    static ControlSystem build(Matrix A, Matrix B, double T, int time_steps) {
        require(A.rows == A.cols, "ControlSystem: A must be square");
        require(B.rows == A.rows && B.cols >= 1, "ControlSystem: B shape mismatch");
        require(T > 0.0, "ControlSystem: horizon must be positive");
        require(time_steps >= 1, "ControlSystem: need at least one time step");
        ControlSystem sys{A.rows, B.cols, A, B, T, time_steps, {}};
        const double dt = T / static_cast<double>(time_steps);
        sys.propagators.reserve(static_cast<std::size_t>(time_steps) + 1);
        for (int i = 0; i <= time_steps; ++i)
            sys.propagators.push_back(propagator(A, dt * static_cast<double>(i)));
        // semigroup identity sanity: S_{t_{i+j}} = S_{t_i} S_{t_j}
        if (time_steps >= 2) {
            const Matrix composed = sys.propagators[1] * sys.propagators[time_steps - 1];
            const Matrix direct = sys.propagators[time_steps];
            double err = 0.0;
            for (std::size_t k = 0; k < composed.a.size(); ++k)
                err = std::max(err, std::abs(composed.a[k] - direct.a[k]));
            guard(err <= 1e-10 * std::max(1.0, norm_inf(direct)),
                  "ControlSystem: propagators violate the semigroup identity");
        }
        return sys;
    }

    double dt() const { return horizon / static_cast<double>(time_steps); }
    const Matrix& final_propagator() const { return propagators.back(); }
};

// Piecewise-constant control on the time grid, N_t x m row-major.
struct ControlSignal {
    int time_steps;
    int inputs;
    std::vector<double> values;

    ControlSignal(int steps, int m)
        : time_steps(steps), inputs(m),
          values(static_cast<std::size_t>(steps) * static_cast<std::size_t>(m), 0.0) {}

    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * inputs + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * inputs + j]; }

    double sup_norm() const {
        double s = 0.0;
        for (double v : values) s = std::max(s, std::abs(v));
        return s;
    }
};

inline double max_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline double sum_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

// Mild solution at the final time by the left-endpoint rule:
//   x(T) = S_T x0 + dt * sum_i S_{T - t_i} B u_i.
inline std::vector<double> duhamel(const ControlSystem& sys, const std::vector<double>& x0,
                                   const ControlSignal& u) {
    require(static_cast<int>(x0.size()) == sys.n, "duhamel: state dimension mismatch");
    require(u.time_steps == sys.time_steps && u.inputs == sys.m,
            "duhamel: control shape mismatch");
    std::vector<double> x = mat_vec(sys.final_propagator(), x0);
    const double dt = sys.dt();
    std::vector<double> ui(static_cast<std::size_t>(sys.m));
    for (int i = 0; i < sys.time_steps; ++i) {
        for (int j = 0; j < sys.m; ++j) ui[static_cast<std::size_t>(j)] = u.at(i, j);
        const std::vector<double> bu = mat_vec(sys.B, ui);
        // S_{T - t_i} = propagators[N_t - i]
        const std::vector<double> sbu = mat_vec(sys.propagators[static_cast<std::size_t>(
                                                    sys.time_steps - i)],
                                                bu);
        for (int k = 0; k < sys.n; ++k) x[static_cast<std::size_t>(k)] += dt * sbu[static_cast<std::size_t>(k)];
    }
    return x;
}

struct MinNormResult {
    ControlSignal u;
    double cost;
    std::vector<double> dual;       // row duals of the LP, see lp layout below
    std::vector<double> final_state;
};

// Smallest sup-norm control steering x0 into the eps max-norm ball around the
// origin. LP variables are w = u + c (componentwise, w >= 0) and the bound
// c >= 0; rows are (w_ij - 2c <= 0) for every entry, then the 2n final-state
// inequalities.
inline MinNormResult min_norm_control(const ControlSystem& sys, const std::vector<double>& x0,
                                      double eps) {
    require(eps > 0.0, "min_norm_control: target radius must be positive");
    require(static_cast<int>(x0.size()) == sys.n, "min_norm_control: state dimension mismatch");
    const int nt = sys.time_steps;
    const int m = sys.m;
    const int n = sys.n;
    const int nu = nt * m;   // control entries
    const int vars = nu + 1; // + the bound c
    const double dt = sys.dt();

    // columns of the Duhamel map: col(i, j) = dt * S_{T - t_i} B e_j
    std::vector<double> duh(static_cast<std::size_t>(n) * static_cast<std::size_t>(nu));
    for (int i = 0; i < nt; ++i) {
        const Matrix sb = sys.propagators[static_cast<std::size_t>(nt - i)] * sys.B;
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < n; ++k)
                duh[static_cast<std::size_t>(k) * nu + (static_cast<std::size_t>(i) * m + j)] =
                    dt * sb(k, j);
    }
    std::vector<double> q(static_cast<std::size_t>(n), 0.0); // row sums = Duhamel image of u == 1
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < nu; ++c) q[static_cast<std::size_t>(k)] += duh[static_cast<std::size_t>(k) * nu + c];

    const std::vector<double> sTx0 = mat_vec(sys.final_propagator(), x0);

    LpProblem lp;
    lp.vars = vars;
    lp.rows = nu + 2 * n;
    lp.cost.assign(static_cast<std::size_t>(vars), 0.0);
    lp.cost.back() = 1.0;
    lp.a.assign(static_cast<std::size_t>(lp.rows) * vars, 0.0);
    lp.b.assign(static_cast<std::size_t>(lp.rows), 0.0);
    const auto A_at = [&lp, vars](int r, int c) -> double& {
        return lp.a[static_cast<std::size_t>(r) * vars + c];
    };
    for (int c = 0; c < nu; ++c) { // w_c - 2 bound <= 0
        A_at(c, c) = 1.0;
        A_at(c, nu) = -2.0;
    }
    for (int k = 0; k < n; ++k) {
        const int rp = nu + 2 * k;     //  (final state)_k <= eps
        const int rm = nu + 2 * k + 1; // -(final state)_k <= eps
        for (int c = 0; c < nu; ++c) {
            A_at(rp, c) = duh[static_cast<std::size_t>(k) * nu + c];
            A_at(rm, c) = -duh[static_cast<std::size_t>(k) * nu + c];
        }
        A_at(rp, nu) = -q[static_cast<std::size_t>(k)];
        A_at(rm, nu) = q[static_cast<std::size_t>(k)];
        lp.b[static_cast<std::size_t>(rp)] = eps - sTx0[static_cast<std::size_t>(k)];
        lp.b[static_cast<std::size_t>(rm)] = eps + sTx0[static_cast<std::size_t>(k)];
    }

    const LpSolution sol = solve_lp(lp);
    guard(sol.status != LpStatus::unbounded && sol.status != LpStatus::iteration_limit,
          "min_norm_control: solver failed");
    guard(sol.status == LpStatus::optimal, "target ball unreachable with this discretization");

    MinNormResult out{ControlSignal(nt, m), std::max(0.0, sol.objective), sol.dual, {}};
    const double c = sol.x.back();
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < m; ++j)
            out.u.at(i, j) = sol.x[static_cast<std::size_t>(i) * m + j] - c;
    out.final_state = duhamel(sys, x0, out.u);
    return out;
}

// All sign vertices of the max-norm unit ball (exact maximiser set for the
// convex per-x0 cost), plus seeded random unit vectors.
inline std::vector<std::vector<double>> control_sample_states(int n, int sample_count,
                                                              std::uint64_t seed) {
    require(n <= 10, "control sampling: vertex enumeration capped at n = 10");
    std::vector<std::vector<double>> states;
    const std::size_t vertices = static_cast<std::size_t>(1) << n;
    for (std::size_t v = 0; v < vertices; ++v) {
        std::vector<double> x0(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) x0[static_cast<std::size_t>(k)] = (v >> k) & 1 ? 1.0 : -1.0;
        states.push_back(std::move(x0));
    }
    Rng rng(seed);
    for (int s = 0; s < sample_count; ++s) {
        std::vector<double> x0(static_cast<std::size_t>(n));
        double mx = 0.0;
        for (auto& v : x0) {
            v = rng.uniform(-1.0, 1.0);
            mx = std::max(mx, std::abs(v));
        }
        if (mx < 1e-12) {
            x0[0] = 1.0;
            mx = 1.0;
        }
        for (auto& v : x0) v /= mx;
        states.push_back(std::move(x0));
    }
    return states;
}

// Empirical cost-uniform control constant: max over sampled unit-max-norm
// initial states of the minimal control cost. Monotone in the sample set.
inline double control_cost_constant(const ControlSystem& sys, double eps, int sample_count,
                                    std::uint64_t seed) {
    const auto states = control_sample_states(sys.n, sample_count, seed);
    double best = 0.0;
    for (const auto& x0 : states) best = std::max(best, min_norm_control(sys, x0, eps).cost);
    return best;
}

// Semivariation of a vector-measure density sampled on the time grid: the
// refinement limit of the partition supremum for a continuous density, i.e.
// dt * sum_i (l1 norm over input coordinates of g(t_i)).
inline double semivariation_norm(const std::vector<std::vector<double>>& density, double dt) {
    require(dt > 0.0, "semivariation_norm: dt must be positive");
    double s = 0.0;
    for (const auto& g : density) s += sum_norm(g);
    return dt * s;
}

struct ObservabilityResult {
    bool finite;
    double value;
    std::vector<double> witness;
};

namespace detail {

// ratio  |S_T' x'|_1 / semivariation(t_i -> B' S_{t_i}' x')
inline double observability_ratio(const ControlSystem& sys, const Matrix& sT_t,
                                  const std::vector<Matrix>& bst,
                                  const std::vector<double>& xp, bool& zero_den) {
    const double num = sum_norm(mat_vec(sT_t, xp));
    double den = 0.0;
    for (int i = 0; i < sys.time_steps; ++i)
        den += sum_norm(mat_vec(bst[static_cast<std::size_t>(i)], xp));
    den *= sys.dt();
    if (den <= 0.0) {
        zero_den = num > 0.0;
        return 0.0;
    }
    zero_den = false;
    return num / den;
}

} // namespace detail

// Brute-force lower bound of the final state observability constant of the
// dual system: max over sampled dual vectors (sum-norm sphere vertices plus
// seeded random directions), locally refined by coordinate descent.
inline ObservabilityResult observability_constant(const ControlSystem& sys, int sample_count,
                                                  std::uint64_t seed) {
    require(sys.n <= 10, "observability_constant: vertex enumeration capped at n = 10");
    const Matrix sT_t = transpose(sys.final_propagator());
    std::vector<Matrix> bst;
    bst.reserve(static_cast<std::size_t>(sys.time_steps));
    const Matrix bT = transpose(sys.B);
    for (int i = 0; i < sys.time_steps; ++i)
        bst.push_back(bT * transpose(sys.propagators[static_cast<std::size_t>(i)]));

    std::vector<std::vector<double>> samples;
    for (int k = 0; k < sys.n; ++k) {
        std::vector<double> e(static_cast<std::size_t>(sys.n), 0.0);
        e[static_cast<std::size_t>(k)] = 1.0;
        samples.push_back(e);
        e[static_cast<std::size_t>(k)] = -1.0;
        samples.push_back(e);
    }
    Rng rng(seed);
    for (int s = 0; s < sample_count; ++s) {
        std::vector<double> xp(static_cast<std::size_t>(sys.n));
        double l1 = 0.0;
        for (auto& v : xp) {
            v = rng.normal();
            l1 += std::abs(v);
        }
        if (l1 < 1e-12) continue;
        for (auto& v : xp) v /= l1;
        samples.push_back(std::move(xp));
    }

    double best = 0.0;
    std::vector<double> witness(static_cast<std::size_t>(sys.n), 0.0);
    for (const auto& xp : samples) {
        bool zero_den = false;
        const double r = detail::observability_ratio(sys, sT_t, bst, xp, zero_den);
        if (zero_den) return ObservabilityResult{false, std::numeric_limits<double>::infinity(), xp};
        if (r > best) {
            best = r;
            witness = xp;
        }
    }

    // coordinate descent around the best sample; the ratio is scale invariant
    std::vector<double> xp = witness;
    double step = 0.5;
    for (int sweep = 0; sweep < 200 && step > 1e-5; ++sweep) {
        bool improved = false;
        for (int k = 0; k < sys.n; ++k) {
            for (double sgn : {+1.0, -1.0}) {
                std::vector<double> trial = xp;
                trial[static_cast<std::size_t>(k)] += sgn * step;
                bool zero_den = false;
                const double r = detail::observability_ratio(sys, sT_t, bst, trial, zero_den);
                if (zero_den)
                    return ObservabilityResult{false, std::numeric_limits<double>::infinity(),
                                               trial};
                if (r > best * (1.0 + 1e-12)) {
                    best = r;
                    xp = trial;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return ObservabilityResult{true, best, xp};
}

struct DualityReport {
    double c_control = 0.0;
    double c_obs = 0.0;
    double relative_gap = 0.0;
    bool observable = true;
    bool pass = false;
    double tolerance = 0.0;
    std::vector<double> control_costs_by_eps;
    std::vector<double> per_x0_costs; // at the smallest eps, sample order
    std::vector<double> witness;      // maximising dual vector
};

// Empirical check that the optimal control-cost constant and the dual
// observability constant coincide. The eps -> 0 limit is taken by linear
// extrapolation over the two smallest radii (the LP value is eventually
// affine in eps).
inline DualityReport check_duality(const ControlSystem& sys, std::vector<double> eps_sequence,
                                   double tol, int sample_count = 32, std::uint64_t seed = 1) {
    require(sys.n <= 5 && sys.m <= 3 && sys.time_steps <= 64,
            "check_duality: desk-scale limits are n <= 5, m <= 3, N_t <= 64");
    require(!eps_sequence.empty(), "check_duality: need at least one eps");
    std::sort(eps_sequence.begin(), eps_sequence.end(), std::greater<double>());

    DualityReport rep;
    rep.tolerance = tol;

    const ObservabilityResult obs = observability_constant(sys, sample_count, seed);
    rep.observable = obs.finite;
    rep.witness = obs.witness;
    if (!obs.finite) {
        rep.c_obs = std::numeric_limits<double>::infinity();
        rep.pass = false;
        return rep;
    }
    rep.c_obs = obs.value;

    for (double eps : eps_sequence)
        rep.control_costs_by_eps.push_back(control_cost_constant(sys, eps, sample_count, seed));

    const std::size_t ne = eps_sequence.size();
    if (ne >= 2) {
        const double e1 = eps_sequence[ne - 2], c1 = rep.control_costs_by_eps[ne - 2];
        const double e2 = eps_sequence[ne - 1], c2 = rep.control_costs_by_eps[ne - 1];
        const double slope = (c2 - c1) / (e1 - e2); // cost grows as eps shrinks
        rep.c_control = c2 + slope * e2;
    } else {
        rep.c_control = rep.control_costs_by_eps[0];
    }

    const auto states = control_sample_states(sys.n, sample_count, seed);
    for (const auto& x0 : states)
        rep.per_x0_costs.push_back(min_norm_control(sys, x0, eps_sequence.back()).cost);

    const double scale = std::max(std::max(rep.c_control, rep.c_obs), 1e-300);
    rep.relative_gap = std::abs(rep.c_control - rep.c_obs) / scale;
    rep.pass = rep.relative_gap <= tol;
    return rep;
}

} // namespace obslab
