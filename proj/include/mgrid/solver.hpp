#pragma once

#include <string>
#include <vector>

#include "mgrid/milp.hpp"

namespace mgrid {

struct SolverOptions {
    double feasibility_tol = 1e-7;
    double integrality_tol = 1e-6;
    double relative_gap = 1e-6;
    long max_bb_nodes = 100000;
    long max_simplex_iters = 50000;
    unsigned deterministic_seed = 0; // reserved; the solver itself is deterministic
};

struct LpSolution {
    SolveStatus status = SolveStatus::IterationLimit;
    std::vector<double> values; // structural variables
    std::vector<double> duals;  // one multiplier per row
    double objective = 0.0;
    long iterations = 0;
};

// Bounded-variable revised simplex on the LP relaxation (binaries treated as
// continuous within their bounds). Optimal results are verified against the
// KKT conditions; infeasibility is certified by a positive phase-1 optimum.
// Deterministic: Dantzig pricing with index tie-breaks, switching to Bland's
// rule under prolonged degeneracy.
LpSolution solve_lp(const MilpProblem& p, const SolverOptions& opts = {});

// Exact branch-and-bound over the binary variables: best-first node selection,
// branching on the most fractional binary (lowest index on ties), fixing the
// partner of each sum-to-1 pair alongside the branched variable. Exceeding the
// node limit returns the incumbent with the remaining gap reported.
Solution solve_milp(const MilpProblem& p, const SolverOptions& opts = {});

struct Violation {
    enum class Kind { Row, Bound, Integrality };
    Kind kind;
    std::string name; // row or variable name
    int index;        // row or variable index
    double amount;    // magnitude of the violation
};

struct FeasibilityReport {
    std::vector<Violation> violations;
    bool feasible() const { return violations.empty(); }
};

// Lists every constraint, bound, and integrality violation exceeding tol.
FeasibilityReport check_feasibility(const MilpProblem& p, const Solution& sol, double tol);

} // namespace mgrid
