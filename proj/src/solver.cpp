#include "mgrid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace mgrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum VarStatus : uint8_t { kNonbasicLower, kNonbasicUpper, kNonbasicFree, kBasic };

// Bounded-variable revised simplex over the computational form
//   min c'x  s.t.  A x + s = b,  l <= (x, s) <= u,
// with one slack per row (bounds encode the row sense) and artificial columns
// for rows whose slack cannot host the initial residual. Maintains an explicit
// dense basis inverse updated by elementary row operations, refactorized from
// scratch when a residual check fails.
class Simplex {
public:
    Simplex(const MilpProblem& p, const SolverOptions& opts,
            const std::vector<double>* lb_override, const std::vector<double>* ub_override)
        : opts_(opts), m_(static_cast<int>(p.rows.size())),
          nstruct_(static_cast<int>(p.vars.size())) {
        ncols_ = nstruct_ + 2 * m_;
        cols_.resize(ncols_);
        lb_.resize(ncols_);
        ub_.resize(ncols_);
        cost_.assign(ncols_, 0.0);
        rhs_.resize(m_);

        for (int j = 0; j < nstruct_; ++j) {
            lb_[j] = lb_override ? (*lb_override)[j] : p.vars[j].lb;
            ub_[j] = ub_override ? (*ub_override)[j] : p.vars[j].ub;
        }
        for (int i = 0; i < m_; ++i) {
            const MilpRow& row = p.rows[i];
            rhs_[i] = row.rhs;
            for (const auto& [var, coef] : row.terms)
                if (coef != 0.0) cols_[var].push_back({i, coef});
            const int sj = nstruct_ + i;
            cols_[sj].push_back({i, 1.0});
            switch (row.sense) {
                case RowSense::LE: lb_[sj] = 0.0; ub_[sj] = kInf; break;
                case RowSense::EQ: lb_[sj] = 0.0; ub_[sj] = 0.0; break;
                case RowSense::GE: lb_[sj] = -kInf; ub_[sj] = 0.0; break;
            }
            // Artificial column; its sign is settled when the initial basis is built.
            cols_[nstruct_ + m_ + i].push_back({i, 1.0});
            lb_[nstruct_ + m_ + i] = 0.0;
            ub_[nstruct_ + m_ + i] = kInf;
        }
        real_cost_.assign(ncols_, 0.0);
        for (int j = 0; j < nstruct_; ++j) real_cost_[j] = p.objective[j];
    }

    // Runs phase 1 + phase 2. Returns the status; on Optimal the primal values
    // and duals can be read through values()/duals()/objective().
    SolveStatus run() {
        init_basis();

        // Phase 1: minimize the artificial total.
        bool need_phase1 = false;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= nstruct_ + m_) need_phase1 = true;
        if (need_phase1) {
            for (int j = 0; j < ncols_; ++j) cost_[j] = j >= nstruct_ + m_ ? 1.0 : 0.0;
            const SolveStatus st = iterate();
            if (st != SolveStatus::Optimal) return st; // iteration limit
            const double infeas = current_objective();
            if (infeas > opts_.feasibility_tol * (1.0 + rhs_scale()))
                return SolveStatus::Infeasible;
        }
        // Pin artificials at zero and optimize the real objective.
        for (int i = 0; i < m_; ++i) ub_[nstruct_ + m_ + i] = 0.0;
        cost_ = real_cost_;
        phase2_ = true;
        return iterate();
    }

    double objective() const { return current_objective(); }
    long iterations() const { return iters_; }

    std::vector<double> values() const {
        std::vector<double> v(nstruct_);
        for (int j = 0; j < nstruct_; ++j) v[j] = value_of(j);
        return v;
    }

    std::vector<double> duals() const {
        std::vector<double> y(m_, 0.0);
        compute_duals(y);
        return y;
    }

private:
    double value_of(int j) const { return stat_[j] == kBasic ? xb_[pos_in_basis_[j]] : xval_[j]; }

    double rhs_scale() const {
        double s = 0.0;
        for (double b : rhs_) s = std::max(s, std::fabs(b));
        return s;
    }

    double current_objective() const {
        double obj = 0.0;
        for (int j = 0; j < ncols_; ++j) {
            const double x = value_of(j);
            if (x != 0.0 && cost_[j] != 0.0) obj += cost_[j] * x;
        }
        return obj;
    }

    void init_basis() {
        stat_.assign(ncols_, kNonbasicLower);
        xval_.assign(ncols_, 0.0);
        for (int j = 0; j < ncols_; ++j) {
            if (std::isfinite(lb_[j])) {
                stat_[j] = kNonbasicLower;
                xval_[j] = lb_[j];
            } else if (std::isfinite(ub_[j])) {
                stat_[j] = kNonbasicUpper;
                xval_[j] = ub_[j];
            } else {
                stat_[j] = kNonbasicFree;
                xval_[j] = 0.0;
            }
        }

        std::vector<double> act(m_, 0.0);
        for (int j = 0; j < nstruct_; ++j) {
            const double x = xval_[j];
            if (x == 0.0) continue;
            for (const auto& [row, coef] : cols_[j]) act[row] += coef * x;
        }

        basis_.assign(m_, -1);
        pos_in_basis_.assign(ncols_, -1);
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        xb_.assign(m_, 0.0);

        for (int i = 0; i < m_; ++i) {
            const int sj = nstruct_ + i;
            const int aj = nstruct_ + m_ + i;
            const double want = rhs_[i] - act[i];
            double diag = 1.0;
            int bj;
            if (want >= lb_[sj] && want <= ub_[sj]) {
                bj = sj;
                xb_[i] = want;
            } else {
                // Slack parked at the bound nearest the target, residual hosted
                // by a signed artificial.
                const double sv = std::isfinite(lb_[sj]) && want < lb_[sj] ? lb_[sj] : ub_[sj];
                stat_[sj] = sv == lb_[sj] ? kNonbasicLower : kNonbasicUpper;
                xval_[sj] = sv;
                const double r = want - sv;
                if (r < 0.0) {
                    cols_[aj].clear();
                    cols_[aj].push_back({i, -1.0});
                    diag = -1.0;
                }
                bj = aj;
                xb_[i] = std::fabs(r);
            }
            basis_[i] = bj;
            stat_[bj] = kBasic;
            pos_in_basis_[bj] = i;
            binv_[static_cast<size_t>(i) * m_ + i] = diag;
        }
    }

    void compute_duals(std::vector<double>& y) const {
        y.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const double c = cost_[basis_[i]];
            if (c == 0.0) continue;
            const double* row = &binv_[static_cast<size_t>(i) * m_];
            for (int k = 0; k < m_; ++k) y[k] += c * row[k];
        }
    }

    double reduced_cost(int j, const std::vector<double>& y) const {
        double d = cost_[j];
        for (const auto& [row, coef] : cols_[j]) d -= y[row] * coef;
        return d;
    }

    void ftran(int j, std::vector<double>& w) const {
        w.assign(m_, 0.0);
        for (const auto& [row, coef] : cols_[j])
            for (int i = 0; i < m_; ++i) w[i] += coef * binv_[static_cast<size_t>(i) * m_ + row];
    }

    // Rebuilds the inverse from the basis columns (Gauss-Jordan with partial
    // pivoting) and recomputes the basic values from scratch.
    bool refactor() {
        std::vector<double> mat(static_cast<size_t>(m_) * m_, 0.0);
        for (int k = 0; k < m_; ++k)
            for (const auto& [row, coef] : cols_[basis_[k]])
                mat[static_cast<size_t>(row) * m_ + k] = coef;
        std::vector<double> inv(static_cast<size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) inv[static_cast<size_t>(i) * m_ + i] = 1.0;

        for (int k = 0; k < m_; ++k) {
            int piv = k;
            double best = std::fabs(mat[static_cast<size_t>(k) * m_ + k]);
            for (int i = k + 1; i < m_; ++i) {
                const double a = std::fabs(mat[static_cast<size_t>(i) * m_ + k]);
                if (a > best) { best = a; piv = i; }
            }
            if (best < 1e-12) return false; // singular basis
            if (piv != k) {
                for (int c = 0; c < m_; ++c) {
                    std::swap(mat[static_cast<size_t>(piv) * m_ + c],
                              mat[static_cast<size_t>(k) * m_ + c]);
                    std::swap(inv[static_cast<size_t>(piv) * m_ + c],
                              inv[static_cast<size_t>(k) * m_ + c]);
                }
            }
            const double d = 1.0 / mat[static_cast<size_t>(k) * m_ + k];
            for (int c = 0; c < m_; ++c) {
                mat[static_cast<size_t>(k) * m_ + c] *= d;
                inv[static_cast<size_t>(k) * m_ + c] *= d;
            }
            for (int i = 0; i < m_; ++i) {
                if (i == k) continue;
                const double f = mat[static_cast<size_t>(i) * m_ + k];
                if (f == 0.0) continue;
                for (int c = 0; c < m_; ++c) {
                    mat[static_cast<size_t>(i) * m_ + c] -= f * mat[static_cast<size_t>(k) * m_ + c];
                    inv[static_cast<size_t>(i) * m_ + c] -= f * inv[static_cast<size_t>(k) * m_ + c];
                }
            }
        }
        binv_ = std::move(inv);
        recompute_xb();
        return true;
    }

    void recompute_xb() {
        std::vector<double> v = rhs_;
        for (int j = 0; j < ncols_; ++j) {
            if (stat_[j] == kBasic) continue;
            const double x = xval_[j];
            if (x == 0.0) continue;
            for (const auto& [row, coef] : cols_[j]) v[row] -= coef * x;
        }
        for (int i = 0; i < m_; ++i) {
            const double* row = &binv_[static_cast<size_t>(i) * m_];
            double s = 0.0;
            for (int k = 0; k < m_; ++k) s += row[k] * v[k];
            xb_[i] = s;
        }
    }

    // Largest residual of B xb = b - N x_N, used to decide when to refactor.
    double basis_residual() const {
        std::vector<double> v = rhs_;
        for (int j = 0; j < ncols_; ++j) {
            const double x = value_of(j);
            if (x == 0.0) continue;
            for (const auto& [row, coef] : cols_[j]) v[row] -= coef * x;
        }
        double r = 0.0;
        for (int i = 0; i < m_; ++i) r = std::max(r, std::fabs(v[i]));
        return r;
    }

    SolveStatus iterate() {
        const double dual_tol = 1e-9 * (1.0 + cost_scale());
        std::vector<double> y(m_), w(m_);
        int degenerate_run = 0;
        bool bland = false;

        while (true) {
            if (iters_ >= opts_.max_simplex_iters) return SolveStatus::IterationLimit;

            compute_duals(y);

            int enter = -1;
            double best_score = dual_tol;
            double enter_d = 0.0;
            for (int j = 0; j < ncols_; ++j) {
                if (stat_[j] == kBasic) continue;
                if (lb_[j] == ub_[j] && stat_[j] != kNonbasicFree) continue; // fixed
                const double d = reduced_cost(j, y);
                bool eligible = false;
                if (stat_[j] == kNonbasicLower || stat_[j] == kNonbasicFree)
                    eligible = d < -dual_tol;
                if (!eligible && (stat_[j] == kNonbasicUpper || stat_[j] == kNonbasicFree))
                    eligible = d > dual_tol;
                if (!eligible) continue;
                if (bland) { enter = j; enter_d = d; break; }
                if (std::fabs(d) > best_score) {
                    best_score = std::fabs(d);
                    enter = j;
                    enter_d = d;
                }
            }

            if (enter < 0) {
                // Candidate optimum: accept only with a clean basis.
                if (basis_residual() > 1e-10 * (1.0 + rhs_scale())) {
                    if (!refactor()) return SolveStatus::IterationLimit;
                    continue; // re-price with the fresh factorization
                }
                for (int i = 0; i < m_; ++i) {
                    const int bv = basis_[i];
                    if (xb_[i] < lb_[bv] - opts_.feasibility_tol ||
                        xb_[i] > ub_[bv] + opts_.feasibility_tol)
                        return SolveStatus::IterationLimit; // lost feasibility; refuse to answer
                }
                return SolveStatus::Optimal;
            }

            const double sigma = enter_d < 0.0 ? 1.0 : -1.0;
            ftran(enter, w);

            // Two-pass ratio test: find the tightest limit with slightly
            // relaxed bounds, then take the largest pivot within it.
            const double ftol = opts_.feasibility_tol;
            double tmax = kInf;
            for (int i = 0; i < m_; ++i) {
                const double delta = -sigma * w[i];
                if (std::fabs(delta) <= 1e-9) continue;
                const int bv = basis_[i];
                double t;
                if (delta < 0.0) {
                    if (!std::isfinite(lb_[bv])) continue;
                    t = (xb_[i] - (lb_[bv] - ftol)) / (-delta);
                } else {
                    if (!std::isfinite(ub_[bv])) continue;
                    t = ((ub_[bv] + ftol) - xb_[i]) / delta;
                }
                tmax = std::min(tmax, std::max(0.0, t));
            }

            int leave_pos = -1;
            double leave_t = kInf;
            double leave_w = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double delta = -sigma * w[i];
                if (std::fabs(delta) <= 1e-9) continue;
                const int bv = basis_[i];
                double t;
                if (delta < 0.0) {
                    if (!std::isfinite(lb_[bv])) continue;
                    t = (xb_[i] - lb_[bv]) / (-delta);
                } else {
                    if (!std::isfinite(ub_[bv])) continue;
                    t = (ub_[bv] - xb_[i]) / delta;
                }
                t = std::max(0.0, t);
                if (t <= tmax + 1e-12) {
                    const double aw = std::fabs(w[i]);
                    if (leave_pos < 0 || aw > std::fabs(leave_w) + 1e-12 ||
                        (std::fabs(aw - std::fabs(leave_w)) <= 1e-12 && bv < basis_[leave_pos])) {
                        leave_pos = i;
                        leave_t = t;
                        leave_w = w[i];
                    }
                }
            }

            const double flip_range =
                std::isfinite(ub_[enter]) && std::isfinite(lb_[enter]) ? ub_[enter] - lb_[enter]
                                                                       : kInf;

            if (leave_pos < 0 && !std::isfinite(flip_range)) {
                if (!phase2_) return SolveStatus::IterationLimit; // cannot happen; guard
                return SolveStatus::Unbounded;
            }

            ++iters_;
            const double t_block = leave_pos < 0 ? kInf : leave_t;
            if (flip_range < t_block) {
                // Bound flip: the entering variable crosses to its other bound.
                for (int i = 0; i < m_; ++i) xb_[i] += -sigma * w[i] * flip_range;
                if (stat_[enter] == kNonbasicLower) {
                    stat_[enter] = kNonbasicUpper;
                    xval_[enter] = ub_[enter];
                } else {
                    stat_[enter] = kNonbasicLower;
                    xval_[enter] = lb_[enter];
                }
                degenerate_run = 0;
                bland = false;
                continue;
            }

            const double t = std::min(t_block, flip_range);
            const int leave_var = basis_[leave_pos];
            const double enter_val = xval_[enter] + sigma * t;

            for (int i = 0; i < m_; ++i) xb_[i] += -sigma * w[i] * t;

            const double delta_r = -sigma * w[leave_pos];
            if (delta_r < 0.0) {
                stat_[leave_var] = kNonbasicLower;
                xval_[leave_var] = lb_[leave_var];
            } else {
                stat_[leave_var] = kNonbasicUpper;
                xval_[leave_var] = ub_[leave_var];
            }
            pos_in_basis_[leave_var] = -1;

            basis_[leave_pos] = enter;
            stat_[enter] = kBasic;
            pos_in_basis_[enter] = leave_pos;
            xb_[leave_pos] = enter_val;

            // Elementary update of the explicit inverse.
            {
                double* prow = &binv_[static_cast<size_t>(leave_pos) * m_];
                const double inv_piv = 1.0 / w[leave_pos];
                for (int k = 0; k < m_; ++k) prow[k] *= inv_piv;
                for (int i = 0; i < m_; ++i) {
                    if (i == leave_pos) continue;
                    const double f = w[i];
                    if (f == 0.0) continue;
                    double* row = &binv_[static_cast<size_t>(i) * m_];
                    for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
                }
            }

            if (t < 1e-10) {
                if (++degenerate_run > 50) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }

            if (iters_ % 512 == 0 && basis_residual() > 1e-10 * (1.0 + rhs_scale()))
                if (!refactor()) return SolveStatus::IterationLimit;
        }
    }

    double cost_scale() const {
        double s = 0.0;
        for (double c : cost_) s = std::max(s, std::fabs(c));
        return s;
    }

    const SolverOptions opts_;
    int m_;
    int nstruct_;
    int ncols_;
    bool phase2_ = false;
    long iters_ = 0;

    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lb_, ub_, cost_, real_cost_, rhs_;
    std::vector<int> basis_, pos_in_basis_;
    std::vector<uint8_t> stat_;
    std::vector<double> xval_, xb_, binv_;
};

LpSolution solve_lp_impl(const MilpProblem& p, const SolverOptions& opts,
                         const std::vector<double>* lb, const std::vector<double>* ub) {
    LpSolution out;
    if (p.vars.empty()) throw std::invalid_argument("solve_lp: problem has no variables");
    Simplex sx(p, opts, lb, ub);
    out.status = sx.run();
    out.iterations = sx.iterations();
    if (out.status == SolveStatus::Optimal) {
        out.values = sx.values();
        out.duals = sx.duals();
        out.objective = sx.objective() + p.objective_constant;
    }
    return out;
}

} // namespace

LpSolution solve_lp(const MilpProblem& p, const SolverOptions& opts) {
    return solve_lp_impl(p, opts, nullptr, nullptr);
}

namespace {

struct BbNode {
    double bound;
    long seq;
    std::vector<std::pair<int, double>> fixes; // (binary var, value)
};

struct BbNodeOrder {
    bool operator()(const BbNode& a, const BbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    }
};

double row_activity(const MilpRow& row, const std::vector<double>& x) {
    double a = 0.0;
    for (const auto& [var, coef] : row.terms) a += coef * x[var];
    return a;
}

bool row_ok(const MilpRow& row, double act, double tol) {
    switch (row.sense) {
        case RowSense::LE: return act <= row.rhs + tol;
        case RowSense::GE: return act >= row.rhs - tol;
        case RowSense::EQ: return std::fabs(act - row.rhs) <= tol;
    }
    return false;
}

} // namespace

Solution solve_milp(const MilpProblem& p, const SolverOptions& opts) {
    Solution out;
    if (p.vars.empty()) throw std::invalid_argument("solve_milp: problem has no variables");

    const int nvars = static_cast<int>(p.vars.size());
    std::vector<int> binaries;
    for (int j = 0; j < nvars; ++j)
        if (p.vars[j].kind == VarKind::Binary) binaries.push_back(j);

    std::vector<int> partner(nvars, -1);
    for (const auto& [a, b] : p.binary_pairs) {
        partner[a] = b;
        partner[b] = a;
    }

    // Rows touching each binary, used by the integral-repair heuristic.
    std::vector<std::vector<int>> rows_of(nvars);
    for (int r = 0; r < static_cast<int>(p.rows.size()); ++r)
        for (const auto& [var, coef] : p.rows[r].terms)
            if (p.vars[var].kind == VarKind::Binary && coef != 0.0) rows_of[var].push_back(r);

    const double ftol = opts.feasibility_tol;
    const double itol = opts.integrality_tol;

    bool have_incumbent = false;
    double incumbent_obj = kInf;
    std::vector<double> incumbent_values;

    std::priority_queue<BbNode, std::vector<BbNode>, BbNodeOrder> open;
    long seq = 0;
    open.push(BbNode{-kInf, seq++, {}});

    const std::vector<double> base_lb = [&] {
        std::vector<double> v(nvars);
        for (int j = 0; j < nvars; ++j) v[j] = p.vars[j].lb;
        return v;
    }();
    const std::vector<double> base_ub = [&] {
        std::vector<double> v(nvars);
        for (int j = 0; j < nvars; ++j) v[j] = p.vars[j].ub;
        return v;
    }();

    double best_open_bound = -kInf;
    bool hit_node_limit = false;

    auto gap_abs = [&] { return opts.relative_gap * std::max(1.0, std::fabs(incumbent_obj)); };

    while (!open.empty()) {
        if (out.nodes_explored >= opts.max_bb_nodes) {
            hit_node_limit = true;
            best_open_bound = open.top().bound;
            break;
        }
        BbNode node = open.top();
        open.pop();
        if (have_incumbent && node.bound >= incumbent_obj - gap_abs()) continue;

        std::vector<double> lb = base_lb, ub = base_ub;
        for (const auto& [var, val] : node.fixes) {
            lb[var] = val;
            ub[var] = val;
        }
        ++out.nodes_explored;
        LpSolution lp = solve_lp_impl(p, opts, &lb, &ub);
        out.simplex_iterations += lp.iterations;
        if (lp.status == SolveStatus::Unbounded) {
            out.status = SolveStatus::Unbounded;
            return out;
        }
        if (lp.status == SolveStatus::IterationLimit) {
            hit_node_limit = true;
            best_open_bound = node.bound;
            break;
        }
        if (lp.status == SolveStatus::Infeasible) continue;
        if (have_incumbent && lp.objective >= incumbent_obj - gap_abs()) continue;

        // Fractionality scan.
        int branch_var = -1;
        double branch_frac = itol;
        for (int j : binaries) {
            const double x = lp.values[j];
            const double frac = std::min(x - std::floor(x), std::ceil(x) - x);
            if (frac > branch_frac) {
                branch_frac = frac;
                branch_var = j;
            }
        }

        if (branch_var < 0) {
            // Integral: round the binaries exactly and accept.
            std::vector<double> vals = lp.values;
            double obj = p.objective_constant;
            for (int j : binaries) vals[j] = std::round(vals[j]);
            for (int j = 0; j < nvars; ++j) obj += p.objective[j] * vals[j];
            if (!have_incumbent || obj < incumbent_obj) {
                have_incumbent = true;
                incumbent_obj = obj;
                incumbent_values = std::move(vals);
            }
            continue;
        }

        // Repair heuristic: when every fractional pair admits an integral mode
        // assignment consistent with the continuous dispatch, the node bound is
        // attained by a feasible point and no branching is needed.
        {
            std::vector<double> vals = lp.values;
            bool ok = true;
            for (int j : binaries) {
                const double x = vals[j];
                if (std::min(x - std::floor(x), std::ceil(x) - x) <= itol) {
                    vals[j] = std::round(x);
                    continue;
                }
                if (partner[j] < 0) { ok = false; break; }
                bool done = false;
                for (const double choice : {1.0, 0.0}) {
                    const double saved_a = vals[j], saved_b = vals[partner[j]];
                    vals[j] = choice;
                    vals[partner[j]] = 1.0 - choice;
                    bool feas = true;
                    for (int r : rows_of[j])
                        if (!row_ok(p.rows[r], row_activity(p.rows[r], vals), ftol)) feas = false;
                    for (int r : rows_of[partner[j]])
                        if (!row_ok(p.rows[r], row_activity(p.rows[r], vals), ftol)) feas = false;
                    if (feas) { done = true; break; }
                    vals[j] = saved_a;
                    vals[partner[j]] = saved_b;
                }
                if (!done) { ok = false; break; }
            }
            if (ok) {
                double obj = p.objective_constant;
                for (int j = 0; j < nvars; ++j) obj += p.objective[j] * vals[j];
                if (!have_incumbent || obj < incumbent_obj) {
                    have_incumbent = true;
                    incumbent_obj = obj;
                    incumbent_values = vals;
                }
                if (obj <= lp.objective + 1e-12 * (1.0 + std::fabs(obj)))
                    continue; // node bound attained; subtree exhausted
            }
        }

        for (const double choice : {0.0, 1.0}) {
            BbNode child{lp.objective, seq++, node.fixes};
            child.fixes.emplace_back(branch_var, choice);
            if (partner[branch_var] >= 0)
                child.fixes.emplace_back(partner[branch_var], 1.0 - choice);
            open.push(child);
        }
    }

    if (have_incumbent) {
        out.values = std::move(incumbent_values);
        out.objective_value = incumbent_obj;
        if (hit_node_limit) {
            out.status = SolveStatus::IterationLimit;
            out.gap = std::isfinite(best_open_bound)
                          ? std::max(0.0, (incumbent_obj - best_open_bound) /
                                              std::max(1.0, std::fabs(incumbent_obj)))
                          : 1.0;
        } else {
            out.status = SolveStatus::Optimal;
            out.gap = 0.0;
        }
    } else {
        out.status = hit_node_limit ? SolveStatus::IterationLimit : SolveStatus::Infeasible;
    }
    return out;
}

FeasibilityReport check_feasibility(const MilpProblem& p, const Solution& sol, double tol) {
    FeasibilityReport rep;
    if (sol.values.size() != p.vars.size()) {
        rep.violations.push_back(
            {Violation::Kind::Bound, "<size mismatch>", -1,
             std::fabs(static_cast<double>(sol.values.size()) - static_cast<double>(p.vars.size()))});
        return rep;
    }
    for (int j = 0; j < static_cast<int>(p.vars.size()); ++j) {
        const MilpVariable& v = p.vars[j];
        const double x = sol.values[j];
        if (x < v.lb - tol)
            rep.violations.push_back({Violation::Kind::Bound, v.name, j, v.lb - x});
        else if (x > v.ub + tol)
            rep.violations.push_back({Violation::Kind::Bound, v.name, j, x - v.ub});
        if (v.kind == VarKind::Binary) {
            const double frac = std::fabs(x - std::round(x));
            if (frac > tol)
                rep.violations.push_back({Violation::Kind::Integrality, v.name, j, frac});
        }
    }
    for (int r = 0; r < static_cast<int>(p.rows.size()); ++r) {
        const MilpRow& row = p.rows[r];
        const double act = row_activity(row, sol.values);
        double excess = 0.0;
        switch (row.sense) {
            case RowSense::LE: excess = act - row.rhs; break;
            case RowSense::GE: excess = row.rhs - act; break;
            case RowSense::EQ: excess = std::fabs(act - row.rhs); break;
        }
        if (excess > tol)
            rep.violations.push_back({Violation::Kind::Row, row.name, r, excess});
    }
    return rep;
}

} // namespace mgrid
