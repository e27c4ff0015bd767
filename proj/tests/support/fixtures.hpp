#pragma once

#include <random>
#include <string>

#include "mgrid/config.hpp"
#include "mgrid/milp.hpp"
#include "mgrid/schedule.hpp"
#include "mgrid/solver.hpp"

namespace mgrid::test {

inline std::string data_path(const std::string& name) {
    return std::string(MGRID_DATA_DIR) + "/" + name;
}

inline Scenario base_scenario() {
    return load_scenario(data_path("base_scenario.cfg"), data_path("profile_sunny.csv"));
}

inline Scenario cloudy_scenario() {
    return load_scenario(data_path("base_scenario.cfg"), data_path("profile_cloudy.csv"));
}

// Random valid scenario with a short horizon, for oracle and property tests.
inline Scenario random_scenario(std::mt19937& rng, int max_slots = 4) {
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto uin = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
    Scenario s;
    s.grid.start_hour = 9.0;
    s.grid.delta_t = uin(0, 1) ? 0.25 : 0.5;
    s.grid.n_slots = uin(1, max_slots);
    const int n = s.grid.n_slots;
    for (int t = 0; t < n; ++t) {
        s.profile.ghi.push_back(uni(0.0, 1.0));
        s.profile.t_out.push_back(uni(20.0, 35.0));
        s.profile.energy_price.push_back(uni(0.05, 0.5));
        s.profile.misc_load.push_back(uni(0.0, 30.0));
    }
    s.tariff.energy_price = s.profile.energy_price;
    s.tariff.demand_charge = uni(0.0, 4.0);
    s.pv.area_m2 = uni(1.0, 200.0);
    auto rand_storage = [&](StorageParams& st) {
        st.capacity_kwh = uni(10.0, 100.0);
        st.max_charge_kw = uni(0.0, 20.0);
        st.max_discharge_kw = uni(0.0, 20.0);
        st.eta_charge = uni(0.85, 1.0);
        st.eta_discharge = uni(0.85, 1.0);
        st.soc_min = uni(0.0, 0.3);
        st.soc_max = uni(0.7, 1.0);
        st.soc_initial = uni(st.soc_min, st.soc_max);
        st.degradation_rate = uni(0.0, 0.15);
    };
    rand_storage(s.bess);
    rand_storage(s.pev.storage);
    s.pev.available_from_slot = uin(0, n);
    s.pev.available_to_slot = uin(s.pev.available_from_slot, n);
    s.pev.soc_final_min = uni(s.pev.storage.soc_min, s.pev.storage.soc_initial);
    // Sometimes force end-of-day charging through the terminal requirement.
    if (uin(0, 3) == 0 && s.pev.available_to_slot == n &&
        s.pev.available_to_slot > s.pev.available_from_slot)
        s.pev.soc_final_min = uni(s.pev.storage.soc_initial, s.pev.storage.soc_max);
    s.hvac.t_set_min = uni(22.0, 25.0);
    s.hvac.t_set_max = uni(s.hvac.t_set_min, 28.0);
    s.lighting.phi_min = uni(0.0, 0.1);
    s.lighting.phi_max = uni(s.lighting.phi_min, 0.15);
    s.lighting.building_area_ft2 = uni(500.0, 3000.0);
    s.lighting.eta_lighting = uni(0.7, 1.0);
    s.objective_kind =
        uin(0, 1) ? ObjectiveKind::WithDemandCharge : ObjectiveKind::EnergyPlusDegradation;
    return s;
}

inline Scenario random_valid_scenario(std::mt19937& rng, int max_slots = 4) {
    for (;;) {
        Scenario s = random_scenario(rng, max_slots);
        if (validate_scenario(s).empty()) return s;
    }
}

struct OracleResult {
    bool feasible = false;
    double objective = 0.0;
    long patterns = 0;
};

// Enumerates every binary pattern consistent with the sum-to-1 pairs and the
// variable bounds, solving the LP of each; independent of branch-and-bound.
inline OracleResult brute_force_milp(const MilpProblem& p, const SolverOptions& opts = {}) {
    std::vector<std::pair<int, int>> free_pairs;
    for (auto [a, b] : p.binary_pairs)
        if (p.vars[a].lb != p.vars[a].ub || p.vars[b].lb != p.vars[b].ub)
            free_pairs.push_back({a, b});
    const int k = static_cast<int>(free_pairs.size());
    OracleResult best;
    for (long mask = 0; mask < (1L << k); ++mask) {
        MilpProblem q = p;
        for (int i = 0; i < k; ++i) {
            const double first = (mask >> i) & 1 ? 1.0 : 0.0;
            q.vars[free_pairs[i].first].lb = q.vars[free_pairs[i].first].ub = first;
            q.vars[free_pairs[i].second].lb = q.vars[free_pairs[i].second].ub = 1.0 - first;
        }
        LpSolution lp = solve_lp(q, opts);
        ++best.patterns;
        if (lp.status == SolveStatus::Optimal &&
            (!best.feasible || lp.objective < best.objective)) {
            best.feasible = true;
            best.objective = lp.objective;
        }
    }
    return best;
}

inline Schedule solve_to_schedule(const Scenario& s, const SolverOptions& opts = {}) {
    MilpProblem p = compile(s);
    Solution sol = solve_milp(p, opts);
    return extract_schedule(p, sol, s);
}

// Maps a schedule back onto the problem's variable layout (for feasibility
// checks of hand-built dispatches such as the heuristic baseline).
inline Solution solution_from_schedule(const MilpProblem& p, const Schedule& sched) {
    Solution sol;
    sol.status = SolveStatus::Optimal;
    sol.values.assign(p.vars.size(), 0.0);
    for (int t = 0; t < p.n_slots; ++t) {
        sol.values[p.var_index("pgrid", t)] = sched.grid_kw[t];
        sol.values[p.var_index("pchb", t)] = sched.bess_charge_kw[t];
        sol.values[p.var_index("pdischb", t)] = sched.bess_discharge_kw[t];
        sol.values[p.var_index("pg2v", t)] = sched.pev_charge_kw[t];
        sol.values[p.var_index("pv2g", t)] = sched.pev_discharge_kw[t];
        sol.values[p.var_index("socb", t)] = sched.soc_bess[t];
        sol.values[p.var_index("socev", t)] = sched.soc_pev[t];
        sol.values[p.var_index("phvac", t)] = sched.hvac_kw[t];
        sol.values[p.var_index("plighting", t)] = sched.lighting_kw[t];
        sol.values[p.var_index("tset", t)] = sched.tsetpoint_c[t];
        sol.values[p.var_index("phi", t)] = sched.phi_kw_m2[t];
        sol.values[p.var_index("b1", t)] = sched.bess_charge_mode[t];
        sol.values[p.var_index("d1", t)] = sched.bess_discharge_mode[t];
        sol.values[p.var_index("e1", t)] = sched.pev_charge_mode[t];
        sol.values[p.var_index("e2", t)] = sched.pev_discharge_mode[t];
    }
    if (p.peak_var >= 0) sol.values[p.peak_var] = sched.peak_grid_kw;
    return sol;
}

} // namespace mgrid::test
