#include "mgrid/milp.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mgrid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string slot_name(std::string_view symbol, int slot) {
    std::string s(symbol);
    s += '_';
    s += std::to_string(slot);
    return s;
}
} // namespace

std::string to_string(SolveStatus st) {
    switch (st) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

const std::vector<std::string>& MilpProblem::slot_symbols() {
    static const std::vector<std::string> syms = {
        "pgrid", "pchb", "pdischb", "pg2v", "pv2g", "socb", "socev",
        "phvac", "plighting", "tset", "phi", "b1", "d1", "e1", "e2"};
    return syms;
}

int MilpProblem::add_variable(std::string name, double lb, double ub, VarKind kind) {
    const int idx = static_cast<int>(vars.size());
    index_.emplace(name, idx);
    vars.push_back(MilpVariable{std::move(name), lb, ub, kind});
    return idx;
}

int MilpProblem::var_index(std::string_view symbol, int slot) const {
    return var_index(slot_name(symbol, slot));
}

int MilpProblem::var_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no variable named " + name);
    return it->second;
}

MilpProblem compile(const Scenario& s) {
    auto issues = validate_scenario(s);
    if (!issues.empty())
        throw ValidationError("compile: scenario failed validation", std::move(issues));

    const int n = s.grid.n_slots;
    const double dt = s.grid.delta_t;
    const StorageParams& bess = s.bess;
    const StorageParams& ev = s.pev.storage;
    const bool demand = s.objective_kind == ObjectiveKind::WithDemandCharge;

    MilpProblem p;
    p.n_slots = n;
    p.vars.reserve(static_cast<size_t>(15) * n + 1);

    const double light_coef = 0.0929 * s.lighting.effective_area_ft2() / s.lighting.eta_lighting;

    for (int t = 0; t < n; ++t) {
        const bool avail = s.pev.available(t);
        const double ev_soc_lb =
            (t == n - 1) ? std::max(ev.soc_min, s.pev.soc_final_min) : ev.soc_min;
        p.add_variable(slot_name("pgrid", t), s.allow_grid_export ? -kInf : 0.0, kInf,
                       VarKind::Continuous);
        p.add_variable(slot_name("pchb", t), 0.0, bess.max_charge_kw, VarKind::Continuous);
        p.add_variable(slot_name("pdischb", t), 0.0, bess.max_discharge_kw, VarKind::Continuous);
        p.add_variable(slot_name("pg2v", t), 0.0, avail ? ev.max_charge_kw : 0.0,
                       VarKind::Continuous);
        p.add_variable(slot_name("pv2g", t), 0.0, avail ? ev.max_discharge_kw : 0.0,
                       VarKind::Continuous);
        p.add_variable(slot_name("socb", t), bess.soc_min, bess.soc_max, VarKind::Continuous);
        p.add_variable(slot_name("socev", t), ev_soc_lb, ev.soc_max, VarKind::Continuous);
        p.add_variable(slot_name("phvac", t), 0.0, kInf, VarKind::Continuous);
        p.add_variable(slot_name("plighting", t), 0.0, kInf, VarKind::Continuous);
        p.add_variable(slot_name("tset", t), s.hvac.t_set_min, s.hvac.t_set_max,
                       VarKind::Continuous);
        p.add_variable(slot_name("phi", t), s.lighting.phi_min, s.lighting.phi_max,
                       VarKind::Continuous);
        const int b1 = p.add_variable(slot_name("b1", t), 0.0, 1.0, VarKind::Binary);
        const int d1 = p.add_variable(slot_name("d1", t), 0.0, 1.0, VarKind::Binary);
        const int e1 = p.add_variable(slot_name("e1", t), avail ? 0.0 : 1.0, 1.0, VarKind::Binary);
        const int e2 = p.add_variable(slot_name("e2", t), 0.0, avail ? 1.0 : 0.0, VarKind::Binary);
        p.binary_pairs.emplace_back(b1, d1);
        p.binary_pairs.emplace_back(e1, e2);
    }
    if (demand) p.peak_var = p.add_variable("ppeak", 0.0, kInf, VarKind::Continuous);

    p.objective.assign(p.vars.size(), 0.0);
    for (int t = 0; t < n; ++t) {
        p.objective[p.var_index("pgrid", t)] = dt * s.tariff.energy_price[t];
        p.objective[p.var_index("pchb", t)] = bess.eta_charge * bess.degradation_rate * dt;
        p.objective[p.var_index("pdischb", t)] = bess.degradation_rate * dt / bess.eta_discharge;
        p.objective[p.var_index("pg2v", t)] = ev.eta_charge * ev.degradation_rate * dt;
        p.objective[p.var_index("pv2g", t)] = ev.degradation_rate * dt / ev.eta_discharge;
    }
    if (demand) p.objective[p.peak_var] = s.tariff.demand_charge;

    auto add_row = [&p](std::string name, std::vector<LinTerm> terms, RowSense sense, double rhs) {
        p.rows.push_back(MilpRow{std::move(name), std::move(terms), sense, rhs});
    };

    for (int t = 0; t < n; ++t) {
        const int pgrid = p.var_index("pgrid", t);
        const int pchb = p.var_index("pchb", t);
        const int pdischb = p.var_index("pdischb", t);
        const int pg2v = p.var_index("pg2v", t);
        const int pv2g = p.var_index("pv2g", t);
        const int socb = p.var_index("socb", t);
        const int socev = p.var_index("socev", t);
        const int phvac = p.var_index("phvac", t);
        const int plighting = p.var_index("plighting", t);
        const int tset = p.var_index("tset", t);
        const int phi = p.var_index("phi", t);
        const int b1 = p.var_index("b1", t);
        const int d1 = p.var_index("d1", t);
        const int e1 = p.var_index("e1", t);
        const int e2 = p.var_index("e2", t);

        // SOC recursion, slot 0 anchored at the initial state.
        {
            const double kch = bess.eta_charge * dt / bess.capacity_kwh;
            const double kdis = dt / (bess.capacity_kwh * bess.eta_discharge);
            std::vector<LinTerm> terms{{socb, 1.0}, {pchb, -kch}, {pdischb, kdis}};
            double rhs = 0.0;
            if (t == 0)
                rhs = bess.soc_initial;
            else
                terms.push_back({p.var_index("socb", t - 1), -1.0});
            add_row(slot_name("socb_rec", t), std::move(terms), RowSense::EQ, rhs);
        }
        {
            const double kch = ev.eta_charge * dt / ev.capacity_kwh;
            const double kdis = dt / (ev.capacity_kwh * ev.eta_discharge);
            std::vector<LinTerm> terms{{socev, 1.0}, {pg2v, -kch}, {pv2g, kdis}};
            double rhs = 0.0;
            if (t == 0)
                rhs = ev.soc_initial;
            else
                terms.push_back({p.var_index("socev", t - 1), -1.0});
            add_row(slot_name("socev_rec", t), std::move(terms), RowSense::EQ, rhs);
        }

        // Rate limits gated by the mode binaries.
        add_row(slot_name("chb_gate", t), {{pchb, 1.0}, {b1, -bess.max_charge_kw}},
                RowSense::LE, 0.0);
        add_row(slot_name("dischb_gate", t), {{pdischb, 1.0}, {d1, -bess.max_discharge_kw}},
                RowSense::LE, 0.0);
        add_row(slot_name("g2v_gate", t), {{pg2v, 1.0}, {e1, -ev.max_charge_kw}},
                RowSense::LE, 0.0);
        add_row(slot_name("v2g_gate", t), {{pv2g, 1.0}, {e2, -ev.max_discharge_kw}},
                RowSense::LE, 0.0);

        // Exactly one mode selected per slot.
        add_row(slot_name("bess_mode", t), {{b1, 1.0}, {d1, 1.0}}, RowSense::EQ, 1.0);
        add_row(slot_name("pev_mode", t), {{e1, 1.0}, {e2, 1.0}}, RowSense::EQ, 1.0);

        // Affine device definitions.
        add_row(slot_name("hvac_def", t), {{phvac, 1.0}, {tset, -s.hvac.slope}}, RowSense::EQ,
                s.hvac.intercept - s.hvac.slope * s.profile.t_out[t]);
        add_row(slot_name("light_def", t), {{plighting, 1.0}, {phi, -light_coef}},
                RowSense::EQ, 0.0);

        // Power balance with PV injected as a per-slot constant.
        const double pv_t = pv_power(s.pv, s.profile.ghi[t], s.profile.t_out[t]);
        add_row(slot_name("balance", t),
                {{pgrid, 1.0},
                 {pdischb, 1.0},
                 {pv2g, 1.0},
                 {pchb, -1.0},
                 {pg2v, -1.0},
                 {phvac, -1.0},
                 {plighting, -1.0}},
                RowSense::EQ, s.profile.misc_load[t] - pv_t);
    }

    if (demand) {
        for (int t = 0; t < n; ++t)
            add_row(slot_name("peak", t), {{p.var_index("pgrid", t), 1.0}, {p.peak_var, -1.0}},
                    RowSense::LE, 0.0);
    }

    return p;
}

Schedule extract_schedule(const MilpProblem& p, const Solution& sol, const Scenario& s) {
    if (sol.status != SolveStatus::Optimal)
        throw SolveError("extract_schedule: solution status is " + to_string(sol.status),
                         sol.status);
    if (sol.values.size() != p.vars.size())
        throw SolveError("extract_schedule: value vector size mismatch", sol.status);

    const int n = p.n_slots;
    Schedule sched;
    auto series = [&](std::string_view sym) {
        std::vector<double> v(n);
        for (int t = 0; t < n; ++t) v[t] = sol.values[p.var_index(sym, t)];
        return v;
    };
    sched.grid_kw = series("pgrid");
    sched.bess_charge_kw = series("pchb");
    sched.bess_discharge_kw = series("pdischb");
    sched.pev_charge_kw = series("pg2v");
    sched.pev_discharge_kw = series("pv2g");
    sched.soc_bess = series("socb");
    sched.soc_pev = series("socev");
    sched.hvac_kw = series("phvac");
    sched.lighting_kw = series("plighting");
    sched.tsetpoint_c = series("tset");
    sched.phi_kw_m2 = series("phi");

    auto modes = [&](std::string_view sym) {
        std::vector<int> v(n);
        for (int t = 0; t < n; ++t) {
            const double x = sol.values[p.var_index(sym, t)];
            v[t] = static_cast<int>(std::lround(x));
            if (std::fabs(x - v[t]) > 1e-5)
                throw SolveError("extract_schedule: non-integral binary " +
                                     p.vars[p.var_index(sym, t)].name,
                                 sol.status);
        }
        return v;
    };
    sched.bess_charge_mode = modes("b1");
    sched.bess_discharge_mode = modes("d1");
    sched.pev_charge_mode = modes("e1");
    sched.pev_discharge_mode = modes("e2");

    sched.pv_kw.resize(n);
    sched.pv_spill_kw.assign(n, 0.0);
    sched.misc_kw = s.profile.misc_load;
    for (int t = 0; t < n; ++t)
        sched.pv_kw[t] = pv_power(s.pv, s.profile.ghi[t], s.profile.t_out[t]);

    // Internal consistency: one mode per slot, balance closed, recursions exact.
    const double dt = s.grid.delta_t;
    for (int t = 0; t < n; ++t) {
        if (sched.bess_charge_mode[t] + sched.bess_discharge_mode[t] != 1 ||
            sched.pev_charge_mode[t] + sched.pev_discharge_mode[t] != 1)
            throw SolveError("extract_schedule: mode pair does not sum to 1 at slot " +
                                 std::to_string(t),
                             sol.status);
        const double bal = sched.grid_kw[t] + sched.pv_kw[t] + sched.bess_discharge_kw[t] +
                           sched.pev_discharge_kw[t] - sched.bess_charge_kw[t] -
                           sched.pev_charge_kw[t] - sched.hvac_kw[t] - sched.lighting_kw[t] -
                           sched.misc_kw[t];
        if (std::fabs(bal) > 1e-6)
            throw SolveError("extract_schedule: power balance residual " + std::to_string(bal) +
                                 " kW at slot " + std::to_string(t),
                             sol.status);
        const double prev_b = t == 0 ? s.bess.soc_initial : sched.soc_bess[t - 1];
        const double rec_b = prev_b + (s.bess.eta_charge * sched.bess_charge_kw[t] -
                                       sched.bess_discharge_kw[t] / s.bess.eta_discharge) /
                                          s.bess.capacity_kwh * dt;
        const double prev_e = t == 0 ? s.pev.storage.soc_initial : sched.soc_pev[t - 1];
        const double rec_e = prev_e + (s.pev.storage.eta_charge * sched.pev_charge_kw[t] -
                                       sched.pev_discharge_kw[t] / s.pev.storage.eta_discharge) /
                                          s.pev.storage.capacity_kwh * dt;
        if (std::fabs(sched.soc_bess[t] - rec_b) > 1e-9 ||
            std::fabs(sched.soc_pev[t] - rec_e) > 1e-9)
            throw SolveError("extract_schedule: SOC recursion violated at slot " +
                                 std::to_string(t),
                             sol.status);
    }

    auto [peak, slot] = peak_demand(sched);
    sched.peak_grid_kw = peak;
    sched.peak_slot = slot;
    sched.cost = cost_breakdown(sched, s);

    const double reported = sol.objective_value;
    const double recomputed = sched.cost.total_usd;
    if (std::fabs(recomputed - reported) > 1e-6 * std::max(1.0, std::fabs(reported)))
        throw SolveError("extract_schedule: recomputed cost " + std::to_string(recomputed) +
                             " disagrees with solver objective " + std::to_string(reported),
                         sol.status);
    return sched;
}

namespace {

void append_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_terms(std::string& out, const std::vector<LinTerm>& terms,
                  const std::vector<MilpVariable>& vars) {
    bool first = true;
    for (const auto& [var, coef] : terms) {
        if (coef == 0.0) continue;
        if (first) {
            if (coef < 0.0) out += "- ";
            first = false;
        } else {
            out += coef < 0.0 ? " - " : " + ";
        }
        append_number(out, std::fabs(coef));
        out += ' ';
        out += vars[var].name;
    }
    if (first) out += "0";
}

} // namespace

std::string export_lp(const MilpProblem& p) {
    if (p.vars.empty()) throw std::invalid_argument("export_lp: problem has no variables");

    std::string out;
    out.reserve(64 * p.rows.size() + 32 * p.vars.size());
    out += "Minimize\n obj: ";
    {
        std::vector<LinTerm> obj_terms;
        for (int j = 0; j < static_cast<int>(p.vars.size()); ++j)
            if (p.objective[j] != 0.0) obj_terms.push_back({j, p.objective[j]});
        if (obj_terms.empty()) obj_terms.push_back({0, 0.0});
        append_terms(out, obj_terms, p.vars);
    }
    out += "\nSubject To\n";
    for (const auto& row : p.rows) {
        out += ' ';
        out += row.name;
        out += ": ";
        append_terms(out, row.terms, p.vars);
        switch (row.sense) {
            case RowSense::LE: out += " <= "; break;
            case RowSense::EQ: out += " = "; break;
            case RowSense::GE: out += " >= "; break;
        }
        append_number(out, row.rhs);
        out += '\n';
    }
    out += "Bounds\n";
    for (const auto& v : p.vars) {
        out += ' ';
        const bool lo = std::isfinite(v.lb);
        const bool hi = std::isfinite(v.ub);
        if (lo && hi && v.lb == v.ub) {
            out += v.name;
            out += " = ";
            append_number(out, v.lb);
        } else if (lo && hi) {
            append_number(out, v.lb);
            out += " <= ";
            out += v.name;
            out += " <= ";
            append_number(out, v.ub);
        } else if (lo) {
            append_number(out, v.lb);
            out += " <= ";
            out += v.name;
        } else if (hi) {
            out += v.name;
            out += " <= ";
            append_number(out, v.ub);
        } else {
            out += v.name;
            out += " free";
        }
        out += '\n';
    }
    bool any_binary = false;
    for (const auto& v : p.vars)
        if (v.kind == VarKind::Binary) {
            if (!any_binary) out += "Binary\n";
            any_binary = true;
            out += ' ';
            out += v.name;
            out += '\n';
        }
    out += "End\n";
    return out;
}

} // namespace mgrid
