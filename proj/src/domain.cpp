#include "mgrid/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mgrid {

double pv_power(const PvParams& pv, double ghi, double t_out) {
    if (ghi < 0.0) throw std::invalid_argument("pv_power: ghi must be nonnegative");
    const double derate = 1.0 - pv.temp_coeff * (t_out - pv.ambient_ref_temp);
    const double p = pv.efficiency * pv.area_m2 * ghi * derate;
    return std::max(0.0, p);
}

double hvac_power(const HvacParams& h, double t_setpoint, double t_out) {
    if (t_setpoint < h.t_set_min || t_setpoint > h.t_set_max)
        throw std::invalid_argument("hvac_power: setpoint outside comfort band");
    const double p = h.slope * (t_setpoint - t_out) + h.intercept;
    if (p < 0.0) {
        std::ostringstream os;
        os << "hvac_power: fitted model out of range (power " << p
           << " kW at setpoint " << t_setpoint << ", outdoor " << t_out << ")";
        throw std::domain_error(os.str());
    }
    return p;
}

double lighting_power(const LightingParams& l, double phi) {
    if (phi < l.phi_min || phi > l.phi_max)
        throw std::domain_error("lighting_power: phi outside [phi_min, phi_max]");
    return 0.0929 * phi * l.effective_area_ft2() / l.eta_lighting;
}

double degradation_rate(double c_dep_daily, double e_dep_daily, double k_dep) {
    if (e_dep_daily <= 0.0) throw std::domain_error("degradation_rate: e_dep_daily must be > 0");
    if (k_dep <= 0.0) throw std::domain_error("degradation_rate: k_dep must be > 0");
    return c_dep_daily / (e_dep_daily / k_dep);
}

namespace {

class IssueList {
public:
    template <typename... Parts>
    void add(Parts&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        issues_.push_back(os.str());
    }
    std::vector<std::string> take() { return std::move(issues_); }

private:
    std::vector<std::string> issues_;
};

void check_series(IssueList& out, const std::string& path, const std::vector<double>& v,
                  int n_slots, bool nonnegative) {
    if (static_cast<int>(v.size()) != n_slots) {
        out.add(path, ": length ", v.size(), " does not match n_slots ", n_slots);
        return;
    }
    if (!nonnegative) return;
    for (int i = 0; i < n_slots; ++i) {
        if (v[i] < 0.0) out.add(path, "[", i, "]: negative value ", v[i]);
        if (!std::isfinite(v[i])) out.add(path, "[", i, "]: non-finite value");
    }
}

void check_storage(IssueList& out, const std::string& path, const StorageParams& s) {
    if (!(s.capacity_kwh > 0.0)) out.add(path, ".capacity_kwh: must be > 0, got ", s.capacity_kwh);
    if (s.max_charge_kw < 0.0) out.add(path, ".max_charge_kw: must be >= 0");
    if (s.max_discharge_kw < 0.0) out.add(path, ".max_discharge_kw: must be >= 0");
    if (!(s.eta_charge > 0.0 && s.eta_charge <= 1.0))
        out.add(path, ".eta_charge: must be in (0, 1], got ", s.eta_charge);
    if (!(s.eta_discharge > 0.0 && s.eta_discharge <= 1.0))
        out.add(path, ".eta_discharge: must be in (0, 1], got ", s.eta_discharge);
    if (s.soc_min < 0.0) out.add(path, ".soc_min: must be >= 0");
    if (s.soc_max > 1.0) out.add(path, ".soc_max: must be <= 1");
    if (s.soc_min > s.soc_initial)
        out.add(path, ".soc_initial: ", s.soc_initial, " below soc_min ", s.soc_min);
    if (s.soc_initial > s.soc_max)
        out.add(path, ".soc_initial: ", s.soc_initial, " above soc_max ", s.soc_max);
    if (s.degradation_rate < 0.0) out.add(path, ".degradation_rate: must be >= 0");
}

} // namespace

std::vector<std::string> validate_scenario(const Scenario& s) {
    IssueList out;

    const int n = s.grid.n_slots;
    if (!(s.grid.delta_t > 0.0)) out.add("grid.delta_t: must be > 0, got ", s.grid.delta_t);
    if (n < 1) out.add("grid.n_slots: must be >= 1, got ", n);
    if (s.grid.start_hour < 0.0) out.add("grid.start_hour: must be >= 0");
    if (n >= 1 && s.grid.delta_t > 0.0 &&
        s.grid.start_hour + s.grid.horizon_hours() > 24.0 + 1e-9)
        out.add("grid: single-day horizon exceeds 24h (start ", s.grid.start_hour,
                " + ", s.grid.horizon_hours(), "h)");

    if (n < 1 || !(s.grid.delta_t > 0.0)) return out.take();

    check_series(out, "profile.ghi", s.profile.ghi, n, true);
    check_series(out, "profile.t_out", s.profile.t_out, n, false);
    check_series(out, "profile.energy_price", s.profile.energy_price, n, true);
    check_series(out, "profile.misc_load", s.profile.misc_load, n, true);
    check_series(out, "tariff.energy_price", s.tariff.energy_price, n, true);
    if (s.tariff.demand_charge < 0.0) out.add("tariff.demand_charge: must be >= 0");

    if (!(s.pv.efficiency > 0.0 && s.pv.efficiency <= 1.0))
        out.add("pv.efficiency: must be in (0, 1], got ", s.pv.efficiency);
    if (!(s.pv.area_m2 > 0.0)) out.add("pv.area_m2: must be > 0");
    if (s.pv.temp_coeff < 0.0) out.add("pv.temp_coeff: must be >= 0");

    check_storage(out, "bess", s.bess);
    check_storage(out, "pev.storage", s.pev.storage);

    if (s.pev.available_from_slot < 0)
        out.add("pev.available_from_slot: must be >= 0");
    if (s.pev.available_from_slot > s.pev.available_to_slot)
        out.add("pev.available_from_slot: ", s.pev.available_from_slot,
                " exceeds available_to_slot ", s.pev.available_to_slot);
    if (s.pev.available_to_slot > n)
        out.add("pev.available_to_slot: ", s.pev.available_to_slot, " exceeds n_slots ", n);
    if (s.pev.soc_final_min < s.pev.storage.soc_min)
        out.add("pev.soc_final_min: below soc_min");
    if (s.pev.soc_final_min > s.pev.storage.soc_max)
        out.add("pev.soc_final_min: above soc_max");

    if (s.hvac.t_set_min > s.hvac.t_set_max)
        out.add("hvac.t_set_min: exceeds t_set_max");
    if (!(s.hvac.slope < 0.0))
        out.add("hvac.slope: fitted model requires slope < 0, got ", s.hvac.slope);

    if (s.lighting.phi_min < 0.0) out.add("lighting.phi_min: must be >= 0");
    if (s.lighting.phi_min > s.lighting.phi_max)
        out.add("lighting.phi_min: exceeds phi_max");
    if (!(s.lighting.building_area_ft2 > 0.0)) out.add("lighting.building_area_ft2: must be > 0");
    if (!(s.lighting.area_fraction > 0.0 && s.lighting.area_fraction <= 1.0))
        out.add("lighting.area_fraction: must be in (0, 1]");
    if (!(s.lighting.eta_lighting > 0.0 && s.lighting.eta_lighting <= 1.0))
        out.add("lighting.eta_lighting: must be in (0, 1]");

    // The dispatch model needs the HVAC power to stay nonnegative over the whole
    // comfort band. With slope < 0 the minimum is attained at t_set_max.
    if (s.hvac.slope < 0.0 && s.hvac.t_set_min <= s.hvac.t_set_max &&
        static_cast<int>(s.profile.t_out.size()) == n) {
        for (int t = 0; t < n; ++t) {
            const double pmin = s.hvac.slope * (s.hvac.t_set_max - s.profile.t_out[t]) + s.hvac.intercept;
            if (pmin < 0.0)
                out.add("hvac: model range violation at slot ", t, " (t_out ",
                        s.profile.t_out[t], " C gives minimum power ", pmin, " kW)");
        }
    }

    return out.take();
}

const Scenario& validate_or_throw(const Scenario& s) {
    auto issues = validate_scenario(s);
    if (!issues.empty()) throw ValidationError("scenario validation failed", std::move(issues));
    return s;
}

} // namespace mgrid
