#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mgrid/domain.hpp"
#include "mgrid/schedule.hpp"

namespace mgrid {

enum class VarKind { Continuous, Binary };
enum class RowSense { LE, EQ, GE };

struct MilpVariable {
    std::string name;
    double lb;
    double ub;
    VarKind kind;
};

struct LinTerm {
    int var;
    double coef;
};

struct MilpRow {
    std::string name;
    std::vector<LinTerm> terms;
    RowSense sense;
    double rhs;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(SolveStatus st);

struct Solution {
    SolveStatus status = SolveStatus::IterationLimit;
    std::vector<double> values; // one entry per variable
    double objective_value = 0.0;
    double gap = 0.0; // relative optimality gap at termination
    long nodes_explored = 0;
    long simplex_iterations = 0;
};

// Solver-agnostic minimization tableau. Variables are laid out slot-major in a
// fixed symbol order; names are "<symbol>_<slot>" with an optional trailing
// "ppeak" for the demand-charge epigraph variable.
class MilpProblem {
public:
    std::vector<MilpVariable> vars;
    std::vector<MilpRow> rows;
    std::vector<double> objective; // dense, one coefficient per variable
    double objective_constant = 0.0;
    std::vector<std::pair<int, int>> binary_pairs; // couples with a sum-to-1 row
    int n_slots = 0;
    int peak_var = -1; // index of ppeak, or -1 when absent

    int add_variable(std::string name, double lb, double ub, VarKind kind);

    // Lookup by (symbol, slot); throws std::out_of_range for unknown names.
    int var_index(std::string_view symbol, int slot) const;
    int var_index(const std::string& name) const;
    const std::unordered_map<std::string, int>& index_map() const { return index_; }

    static const std::vector<std::string>& slot_symbols(); // the 15 per-slot names

private:
    std::unordered_map<std::string, int> index_;
};

// Compiles a validated scenario into the tableau: state-of-charge recursions
// anchored at the initial state, binary-gated rate limits, one-mode-per-slot
// equalities, availability gating for the vehicle, affine HVAC and lighting
// definitions, per-slot power balance with PV as a fixed injection, and the
// chosen objective (with an epigraph variable for the demand charge).
// Throws ValidationError when the scenario does not validate.
MilpProblem compile(const Scenario& s);

// Reads the dispatch out of an optimal solution and recomputes the cost split
// from first principles, verifying it against the reported objective.
// Throws SolveError (std::runtime_error) on non-optimal input or any
// consistency violation.
Schedule extract_schedule(const MilpProblem& p, const Solution& sol, const Scenario& s);

// Serializes the problem in LP text format (minimize section, constraint rows,
// bounds, binary list). Output is deterministic. Throws std::invalid_argument
// for a problem with no variables.
std::string export_lp(const MilpProblem& p);

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, SolveStatus status)
        : std::runtime_error(what), status_(status) {}
    SolveStatus status() const { return status_; }

private:
    SolveStatus status_;
};

} // namespace mgrid
