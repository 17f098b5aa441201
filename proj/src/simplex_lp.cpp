#include "engagemax/simplex_lp.hpp"

#include <algorithm>
#include <cmath>

#include "engagemax/errors.hpp"

namespace engagemax {

namespace {

// Tableau: rows = constraints, columns = variables plus rhs. basis[i] holds
// the variable occupying row i.
struct Tableau {
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<int> basis;
};

// One simplex phase maximizing reduced costs `cost` over the current tableau.
// Returns false if unbounded.
bool run_phase(Tableau& t, std::vector<double>& cost, double& objective, double tol) {
    const std::size_t m = t.rows.size();
    const std::size_t n = cost.size();
    for (int iter = 0; iter < 10000; ++iter) {
        // Bland: entering variable = lowest index with positive reduced cost.
        int enter = -1;
        for (std::size_t j = 0; j < n; ++j) {
            if (cost[j] > tol) {
                enter = static_cast<int>(j);
                break;
            }
        }
        if (enter < 0) return true;

        // Ratio test, ties broken by lowest basis variable index (Bland).
        int leave = -1;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = t.rows[i][enter];
            if (a > tol) {
                const double ratio = t.rhs[i] / a;
                if (leave < 0 || ratio < best_ratio - tol ||
                    (ratio < best_ratio + tol && t.basis[i] < t.basis[leave])) {
                    leave = static_cast<int>(i);
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) return false;  // unbounded

        const double pivot = t.rows[leave][enter];
        for (std::size_t j = 0; j < n; ++j) t.rows[leave][j] /= pivot;
        t.rhs[leave] /= pivot;
        for (std::size_t i = 0; i < m; ++i) {
            if (static_cast<int>(i) == leave) continue;
            const double f = t.rows[i][enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) t.rows[i][j] -= f * t.rows[leave][j];
            t.rhs[i] -= f * t.rhs[leave];
        }
        const double fc = cost[enter];
        for (std::size_t j = 0; j < n; ++j) cost[j] -= fc * t.rows[leave][j];
        objective += fc * t.rhs[leave];
        t.basis[leave] = enter;
    }
    throw numerical_error("simplex: iteration cap reached");
}

}  // namespace

LpResult solve_lp_max(const std::vector<double>& c, const std::vector<std::vector<double>>& a,
                      const std::vector<double>& b, double tol) {
    const std::size_t m = a.size();
    const std::size_t n = c.size();
    for (const auto& row : a)
        if (row.size() != n) throw input_error("lp: constraint row size mismatch");
    if (b.size() != m) throw input_error("lp: rhs size mismatch");

    // Phase I: n structural variables + m artificials.
    Tableau t;
    t.rows.assign(m, std::vector<double>(n + m, 0.0));
    t.rhs = b;
    t.basis.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const double sign = (b[i] < 0.0) ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) t.rows[i][j] = sign * a[i][j];
        t.rhs[i] = sign * b[i];
        t.rows[i][n + i] = 1.0;
        t.basis[i] = static_cast<int>(n + i);
    }
    // Maximize -(sum of artificials).
    std::vector<double> cost1(n + m, 0.0);
    double obj1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost1[j] += t.rows[i][j];
        obj1 -= t.rhs[i];
    }
    if (!run_phase(t, cost1, obj1, tol)) throw numerical_error("simplex: phase 1 unbounded");
    if (obj1 < -1e-8) return {LpStatus::infeasible, 0.0, {}};

    // Drive any artificial still basic (at zero level) out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
        if (t.basis[i] >= static_cast<int>(n)) {
            int enter = -1;
            for (std::size_t j = 0; j < n; ++j) {
                if (std::abs(t.rows[i][j]) > tol) {
                    enter = static_cast<int>(j);
                    break;
                }
            }
            if (enter < 0) continue;  // redundant row
            const double pivot = t.rows[i][enter];
            for (std::size_t j = 0; j < n + m; ++j) t.rows[i][j] /= pivot;
            t.rhs[i] /= pivot;
            for (std::size_t k = 0; k < m; ++k) {
                if (k == i) continue;
                const double f = t.rows[k][enter];
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < n + m; ++j) t.rows[k][j] -= f * t.rows[i][j];
                t.rhs[k] -= f * t.rhs[i];
            }
            t.basis[i] = enter;
        }
    }

    // Phase II on structural columns only.
    Tableau t2;
    t2.rows.assign(m, std::vector<double>(n, 0.0));
    t2.rhs = t.rhs;
    t2.basis = t.basis;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) t2.rows[i][j] = t.rows[i][j];

    std::vector<double> cost2 = c;
    double obj2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int bi = t2.basis[i];
        if (bi >= 0 && bi < static_cast<int>(n) && c[bi] != 0.0) {
            const double f = c[bi];
            for (std::size_t j = 0; j < n; ++j) cost2[j] -= f * t2.rows[i][j];
            obj2 += f * t2.rhs[i];
        }
    }
    // Zero out reduced costs of basic columns exactly.
    for (std::size_t i = 0; i < m; ++i) {
        const int bi = t2.basis[i];
        if (bi >= 0 && bi < static_cast<int>(n)) cost2[bi] = 0.0;
    }
    if (!run_phase(t2, cost2, obj2, tol)) return {LpStatus::unbounded, 0.0, {}};

    LpResult out;
    out.status = LpStatus::optimal;
    out.objective = obj2;
    out.solution.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const int bi = t2.basis[i];
        if (bi >= 0 && bi < static_cast<int>(n)) out.solution[bi] = std::max(0.0, t2.rhs[i]);
    }
    return out;
}

}  // namespace engagemax
