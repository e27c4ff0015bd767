#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "mgrid/milp.hpp"
#include "mgrid/solver.hpp"
#include "support/fixtures.hpp"

using namespace mgrid;
using doctest::Approx;

namespace {

Scenario sized_scenario(int n_slots) {
    Scenario s = mgrid::test::base_scenario();
    s.grid.n_slots = n_slots;
    s.grid.delta_t = std::min(0.25, 15.0 / n_slots); // keep the horizon inside one day
    auto resize_all = [&](std::vector<double>& v) { v.resize(n_slots, v.empty() ? 0.0 : v[0]); };
    resize_all(s.profile.ghi);
    resize_all(s.profile.t_out);
    resize_all(s.profile.energy_price);
    resize_all(s.profile.misc_load);
    s.tariff.energy_price = s.profile.energy_price;
    s.pev.available_to_slot = std::min(s.pev.available_to_slot, n_slots);
    return s;
}

} // namespace

TEST_CASE("compile produces the documented variable layout for 48 slots") {
    Scenario s = mgrid::test::base_scenario();
    s.objective_kind = ObjectiveKind::EnergyPlusDegradation;
    MilpProblem p = compile(s);

    CHECK(p.vars.size() == 720);
    int continuous = 0, binary = 0;
    for (const auto& v : p.vars)
        (v.kind == VarKind::Binary ? binary : continuous)++;
    CHECK(continuous == 528);
    CHECK(binary == 192);
    CHECK(p.peak_var == -1);
    CHECK(p.rows.size() == 11 * 48);

    // No peak term in the objective.
    for (size_t j = 0; j < p.vars.size(); ++j)
        if (p.vars[j].name == "ppeak") CHECK(false);
}

TEST_CASE("compile adds the epigraph variable and rows for the demand objective") {
    Scenario s = mgrid::test::base_scenario();
    s.objective_kind = ObjectiveKind::WithDemandCharge;
    MilpProblem p = compile(s);
    CHECK(p.vars.size() == 721);
    CHECK(p.peak_var == 720);
    CHECK(p.rows.size() == 12 * 48);
    int peak_rows = 0;
    for (const auto& row : p.rows)
        if (row.name.rfind("peak_", 0) == 0) ++peak_rows;
    CHECK(peak_rows == 48);
    CHECK(p.objective[p.peak_var] == Approx(3.83));
}

TEST_CASE("variable and row counts follow the closed form for n in [1, 96]") {
    for (int n : {1, 2, 3, 5, 8, 13, 24, 48, 96}) {
        Scenario s = sized_scenario(n);
        s.objective_kind = ObjectiveKind::EnergyPlusDegradation;
        MilpProblem p = compile(s);
        CHECK(static_cast<int>(p.vars.size()) == 15 * n);
        CHECK(static_cast<int>(p.rows.size()) == 11 * n);
        CHECK(static_cast<int>(p.binary_pairs.size()) == 2 * n);
        s.objective_kind = ObjectiveKind::WithDemandCharge;
        MilpProblem q = compile(s);
        CHECK(static_cast<int>(q.vars.size()) == 15 * n + 1);
        CHECK(static_cast<int>(q.rows.size()) == 12 * n);
    }
}

TEST_CASE("index map is a bijection onto the variables") {
    MilpProblem p = compile(sized_scenario(5));
    CHECK(p.index_map().size() == p.vars.size());
    std::set<int> seen;
    for (const auto& [name, idx] : p.index_map()) {
        CHECK(p.vars[idx].name == name);
        seen.insert(idx);
    }
    CHECK(seen.size() == p.vars.size());
    CHECK(p.var_index("socb", 3) == p.var_index("socb_3"));
    CHECK_THROWS_AS(p.var_index("nope", 0), std::out_of_range);
}

TEST_CASE("compile rejects an invalid scenario") {
    Scenario s = mgrid::test::base_scenario();
    s.bess.soc_initial = 0.1;
    CHECK_THROWS_AS(compile(s), ValidationError);
}

TEST_CASE("availability gating pins vehicle power and modes outside the window") {
    Scenario s = sized_scenario(1);
    s.pev.available_from_slot = 0;
    s.pev.available_to_slot = 0; // never plugged in
    s.pev.soc_final_min = s.pev.storage.soc_initial;
    MilpProblem p = compile(s);
    CHECK(p.vars[p.var_index("pg2v", 0)].ub == 0.0);
    CHECK(p.vars[p.var_index("pv2g", 0)].ub == 0.0);
    CHECK(p.vars[p.var_index("e1", 0)].lb == 1.0);
    CHECK(p.vars[p.var_index("e2", 0)].ub == 0.0);

    Solution sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[p.var_index("pg2v", 0)] == 0.0);
    CHECK(sol.values[p.var_index("pv2g", 0)] == 0.0);
}

TEST_CASE("every per-slot symbol maps to one variable family") {
    MilpProblem p = compile(sized_scenario(3));
    for (const auto& sym : MilpProblem::slot_symbols())
        for (int t = 0; t < 3; ++t) CHECK(p.var_index(sym, t) >= 0);
}

TEST_CASE("compile is total on randomized valid scenarios") {
    std::mt19937 rng(2024);
    for (int i = 0; i < 50; ++i) {
        Scenario s = mgrid::test::random_valid_scenario(rng);
        CHECK_NOTHROW(compile(s));
    }
}

TEST_CASE("trivial one-slot scenario with no load solves to an all-zero dispatch") {
    Scenario s = sized_scenario(1);
    s.profile.ghi = {0.0};
    s.profile.misc_load = {0.0};
    s.profile.energy_price = {0.0};
    s.tariff.energy_price = {0.0};
    s.lighting.phi_min = 0.0;
    s.lighting.phi_max = 0.0;
    s.hvac.intercept = 0.0;
    s.hvac.t_set_min = s.hvac.t_set_max = s.profile.t_out[0]; // power pinned at zero
    s.bess.degradation_rate = 0.1;
    s.pev.storage.degradation_rate = 0.1;
    s.pev.available_to_slot = 1;
    s.pev.soc_final_min = s.pev.storage.soc_initial;

    MilpProblem p = compile(s);
    Solution sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    Schedule sched = extract_schedule(p, sol, s);
    CHECK(sched.cost.total_usd == Approx(0.0).epsilon(1e-12));
    CHECK(sched.grid_kw[0] == 0.0);
    CHECK(sched.bess_charge_kw[0] == 0.0);
    CHECK(sched.pev_charge_kw[0] == 0.0);
}

TEST_CASE("base fixture dispatch discharges the vehicle at its 7 kW cap on peak") {
    Scenario s = mgrid::test::base_scenario();
    Schedule sched = mgrid::test::solve_to_schedule(s);
    bool cap_hit = false;
    for (int t = 0; t < s.grid.n_slots; ++t)
        if (s.grid.slot_start_hour(t) >= 16.0 && sched.pev_discharge_kw[t] >= 7.0 - 1e-6)
            cap_hit = true;
    CHECK(cap_hit);
}

TEST_CASE("extract_schedule rejects non-optimal input and tampered objectives") {
    Scenario s = sized_scenario(2);
    MilpProblem p = compile(s);
    Solution sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::Optimal);

    Solution bad = sol;
    bad.status = SolveStatus::Infeasible;
    CHECK_THROWS_AS(extract_schedule(p, bad, s), SolveError);

    Solution tampered = sol;
    tampered.objective_value += 1.0;
    CHECK_THROWS_AS(extract_schedule(p, tampered, s), SolveError);
}

TEST_CASE("relaxing the binaries can only lower the optimum") {
    std::mt19937 rng(99);
    for (int i = 0; i < 20; ++i) {
        Scenario s = mgrid::test::random_valid_scenario(rng);
        MilpProblem p = compile(s);
        Solution milp = solve_milp(p);
        LpSolution lp = solve_lp(p);
        if (milp.status != SolveStatus::Optimal || lp.status != SolveStatus::Optimal) continue;
        CHECK(lp.objective <= milp.objective_value + 1e-7 * (1.0 + std::fabs(milp.objective_value)));
    }
}

TEST_CASE("export_lp emits the documented sections deterministically") {
    Scenario s = sized_scenario(1);
    MilpProblem p = compile(s);
    const std::string text = export_lp(p);
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("Binary") != std::string::npos);
    CHECK(text.rfind("End\n") == text.size() - 4);

    // Exactly one mode-coupling row for the battery pair.
    size_t first = text.find("b1_0 + 1 d1_0 = 1");
    CHECK(first != std::string::npos);
    CHECK(text.find("b1_0 + 1 d1_0 = 1", first + 1) == std::string::npos);

    CHECK(export_lp(p) == text); // stable across calls
}

TEST_CASE("export_lp rejects an empty problem") {
    MilpProblem p;
    CHECK_THROWS_AS(export_lp(p), std::invalid_argument);
}

TEST_CASE("base-case objective matches an external solver on the exported problem") {
    // Reference objectives computed once by HiGHS (via scipy.optimize.milp)
    // on the exact files written by export_lp for the bundled fixtures.
    Scenario s = mgrid::test::base_scenario();
    MilpProblem p = compile(s);
    Solution sol = solve_milp(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective_value == Approx(444.558441006).epsilon(1e-4));

    Scenario d = s;
    d.objective_kind = ObjectiveKind::WithDemandCharge;
    MilpProblem pd = compile(d);
    Solution sold = solve_milp(pd);
    REQUIRE(sold.status == SolveStatus::Optimal);
    CHECK(sold.objective_value == Approx(1003.307641876).epsilon(1e-4));
}

TEST_CASE("no slot carries simultaneous charge and discharge") {
    std::mt19937 rng(5);
    for (int i = 0; i < 10; ++i) {
        Scenario s = mgrid::test::random_valid_scenario(rng);
        MilpProblem p = compile(s);
        Solution sol = solve_milp(p);
        if (sol.status != SolveStatus::Optimal) continue;
        for (int t = 0; t < s.grid.n_slots; ++t) {
            CHECK(!(sol.values[p.var_index("pchb", t)] > 1e-6 &&
                    sol.values[p.var_index("pdischb", t)] > 1e-6));
            CHECK(!(sol.values[p.var_index("pg2v", t)] > 1e-6 &&
                    sol.values[p.var_index("pv2g", t)] > 1e-6));
        }
    }
}

TEST_CASE("price scale-up never lowers the energy-objective optimum") {
    std::mt19937 rng(17);
    for (int i = 0; i < 20; ++i) {
        Scenario s = mgrid::test::random_valid_scenario(rng);
        s.objective_kind = ObjectiveKind::EnergyPlusDegradation;
        Solution a = solve_milp(compile(s));
        if (a.status != SolveStatus::Optimal) continue;
        Scenario scaled = s;
        for (double& price : scaled.tariff.energy_price) price *= 1.7;
        Solution b = solve_milp(compile(scaled));
        REQUIRE(b.status == SolveStatus::Optimal);
        CHECK(b.objective_value >= a.objective_value - 1e-7 * (1.0 + std::fabs(a.objective_value)));
    }
}

TEST_CASE("widening comfort or lighting bands never raises the optimum") {
    std::mt19937 rng(23);
    int tried = 0;
    for (int i = 0; i < 30 && tried < 12; ++i) {
        Scenario s = mgrid::test::random_valid_scenario(rng);
        Solution a = solve_milp(compile(s));
        if (a.status != SolveStatus::Optimal) continue;
        ++tried;

        Scenario wider = s;
        wider.hvac.t_set_min -= 1.0;
        wider.hvac.t_set_max += 1.0;
        if (validate_scenario(wider).empty()) {
            Solution b = solve_milp(compile(wider));
            REQUIRE(b.status == SolveStatus::Optimal);
            CHECK(b.objective_value <=
                  a.objective_value + 1e-7 * (1.0 + std::fabs(a.objective_value)));
        }

        Scenario wider_phi = s;
        wider_phi.lighting.phi_min *= 0.5;
        wider_phi.lighting.phi_max *= 1.1;
        Solution c = solve_milp(compile(wider_phi));
        REQUIRE(c.status == SolveStatus::Optimal);
        CHECK(c.objective_value <= a.objective_value + 1e-7 * (1.0 + std::fabs(a.objective_value)));
    }
    CHECK(tried > 0);
}
