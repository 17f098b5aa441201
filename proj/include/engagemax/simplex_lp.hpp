#pragma once

#include <vector>

namespace engagemax {

// Dense two-phase simplex for tiny equality-form programs:
//   maximize c'w  s.t.  A w = b,  w >= 0.
// Bland's rule for anti-cycling. Intended for problems with at most a few
// dozen variables (mixtures over posterior atoms).
enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> solution;
};

LpResult solve_lp_max(const std::vector<double>& c, const std::vector<std::vector<double>>& a,
                      const std::vector<double>& b, double tol = 1e-11);

}  // namespace engagemax
