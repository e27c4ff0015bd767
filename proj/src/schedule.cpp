#include "mgrid/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgrid {

CostBreakdown cost_breakdown(const Schedule& sched, const Scenario& s) {
    const int n = sched.n_slots();
    if (n != s.grid.n_slots || static_cast<int>(s.tariff.energy_price.size()) != n)
        throw std::invalid_argument("cost_breakdown: schedule/scenario length mismatch");

    const double dt = s.grid.delta_t;
    CostBreakdown c;
    for (int t = 0; t < n; ++t) {
        c.energy_usd += sched.grid_kw[t] * dt * s.tariff.energy_price[t];
        c.bess_degradation_usd +=
            (s.bess.eta_charge * sched.bess_charge_kw[t] +
             sched.bess_discharge_kw[t] / s.bess.eta_discharge) *
            s.bess.degradation_rate * dt;
        c.pev_degradation_usd +=
            (s.pev.storage.eta_charge * sched.pev_charge_kw[t] +
             sched.pev_discharge_kw[t] / s.pev.storage.eta_discharge) *
            s.pev.storage.degradation_rate * dt;
    }
    if (s.objective_kind == ObjectiveKind::WithDemandCharge) {
        double peak = 0.0;
        for (double g : sched.grid_kw) peak = std::max(peak, g);
        c.demand_usd = s.tariff.demand_charge * peak;
    }
    c.total_usd = c.energy_usd + c.demand_usd + c.bess_degradation_usd + c.pev_degradation_usd;
    return c;
}

Schedule heuristic_baseline(const Scenario& s) {
    validate_or_throw(s);
    const int n = s.grid.n_slots;
    const double dt = s.grid.delta_t;
    const StorageParams& ev = s.pev.storage;

    Schedule b;
    auto zero = [n] { return std::vector<double>(n, 0.0); };
    b.grid_kw = zero();
    b.bess_charge_kw = zero();
    b.bess_discharge_kw = zero();
    b.pev_charge_kw = zero();
    b.pev_discharge_kw = zero();
    b.soc_bess.assign(n, s.bess.soc_initial);
    b.soc_pev = zero();
    b.hvac_kw = zero();
    b.lighting_kw = zero();
    b.tsetpoint_c.assign(n, 0.5 * (s.hvac.t_set_min + s.hvac.t_set_max));
    b.phi_kw_m2.assign(n, s.lighting.phi_max);
    b.bess_charge_mode.assign(n, 1);
    b.bess_discharge_mode.assign(n, 0);
    b.pev_charge_mode.assign(n, 1);
    b.pev_discharge_mode.assign(n, 0);
    b.pv_kw = zero();
    b.pv_spill_kw = zero();
    b.misc_kw = s.profile.misc_load;

    double soc = ev.soc_initial;
    for (int t = 0; t < n; ++t) {
        b.pv_kw[t] = pv_power(s.pv, s.profile.ghi[t], s.profile.t_out[t]);
        b.hvac_kw[t] = hvac_power(s.hvac, b.tsetpoint_c[t], s.profile.t_out[t]);
        b.lighting_kw[t] = lighting_power(s.lighting, b.phi_kw_m2[t]);

        if (s.pev.available(t) && soc < ev.soc_max - 1e-12) {
            const double headroom_kw =
                (ev.soc_max - soc) * ev.capacity_kwh / (ev.eta_charge * dt);
            b.pev_charge_kw[t] = std::min(ev.max_charge_kw, headroom_kw);
            soc += ev.eta_charge * b.pev_charge_kw[t] * dt / ev.capacity_kwh;
        }
        b.soc_pev[t] = soc;

        const double need = b.pev_charge_kw[t] + b.hvac_kw[t] + b.lighting_kw[t] +
                            s.profile.misc_load[t] - b.pv_kw[t];
        if (need >= 0.0) {
            b.grid_kw[t] = need;
        } else {
            b.grid_kw[t] = 0.0;
            b.pv_spill_kw[t] = -need; // PV implicitly curtailed
        }
    }

    auto [peak, slot] = peak_demand(b);
    b.peak_grid_kw = peak;
    b.peak_slot = slot;
    b.cost = cost_breakdown(b, s);
    return b;
}

double savings(double optimized_total, double baseline_total) {
    if (!(baseline_total > 0.0))
        throw std::domain_error("savings: baseline total must be positive");
    return 100.0 * (baseline_total - optimized_total) / baseline_total;
}

std::pair<double, int> peak_demand(const Schedule& sched) {
    if (sched.grid_kw.empty()) throw std::invalid_argument("peak_demand: empty series");
    int arg = 0;
    for (int t = 1; t < sched.n_slots(); ++t)
        if (sched.grid_kw[t] > sched.grid_kw[arg]) arg = t;
    return {sched.grid_kw[arg], arg};
}

} // namespace mgrid
