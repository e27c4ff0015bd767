#pragma once

#include <vector>

#include "mgrid/domain.hpp"

namespace mgrid {

// Daily cost split. Parts are nonnegative and sum to total (export disabled).
struct CostBreakdown {
    double energy_usd = 0.0;
    double demand_usd = 0.0;
    double bess_degradation_usd = 0.0;
    double pev_degradation_usd = 0.0;
    double total_usd = 0.0;
};

// Per-slot dispatch of every decision variable plus the inputs a downstream
// feeder study needs (PV injection and miscellaneous load).
struct Schedule {
    std::vector<double> grid_kw;
    std::vector<double> bess_charge_kw;
    std::vector<double> bess_discharge_kw;
    std::vector<double> pev_charge_kw;
    std::vector<double> pev_discharge_kw;
    std::vector<double> soc_bess; // fraction of capacity at end of slot
    std::vector<double> soc_pev;
    std::vector<double> hvac_kw;
    std::vector<double> lighting_kw;
    std::vector<double> tsetpoint_c;
    std::vector<double> phi_kw_m2;
    std::vector<int> bess_charge_mode;    // b1
    std::vector<int> bess_discharge_mode; // d1
    std::vector<int> pev_charge_mode;     // e1
    std::vector<int> pev_discharge_mode;  // e2
    std::vector<double> pv_kw;       // available PV injection per slot
    std::vector<double> pv_spill_kw; // PV curtailed by the heuristic baseline (0 when optimized)
    std::vector<double> misc_kw;

    double peak_grid_kw = 0.0;
    int peak_slot = 0;
    CostBreakdown cost;

    int n_slots() const { return static_cast<int>(grid_kw.size()); }
};

// Recomputes the cost split from the dispatch series. The demand part is zero
// when the scenario objective excludes the demand charge.
CostBreakdown cost_breakdown(const Schedule& sched, const Scenario& s);

// Uncontrolled reference dispatch: the vehicle charges at full rate from
// plug-in until full and never discharges, the stationary battery idles at its
// initial state, the setpoint sits at the band midpoint, lighting runs at
// phi_max, and the grid closes the balance each slot (floored at zero; any PV
// excess is spilled and recorded in pv_spill_kw).
Schedule heuristic_baseline(const Scenario& s);

// Percent cost reduction of the optimized dispatch against the baseline.
double savings(double optimized_total, double baseline_total);

// Maximum grid draw and its slot (first occurrence on ties).
std::pair<double, int> peak_demand(const Schedule& sched);

} // namespace mgrid
