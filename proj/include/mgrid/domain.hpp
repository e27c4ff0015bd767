#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mgrid {

// Thrown when a scenario (or other structured input) fails validation.
// Carries the full list of violations, one string per offending field.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& what, std::vector<std::string> issues)
        : std::runtime_error(what + " (" + std::to_string(issues.size()) + " issue(s))"),
          issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

// Uniform time discretization of the scheduling horizon.
struct TimeGrid {
    double start_hour = 9.0; // hour of day the first slot begins
    double delta_t = 0.25;   // slot length in hours
    int n_slots = 48;

    double slot_start_hour(int t) const { return start_hour + delta_t * t; }
    double horizon_hours() const { return delta_t * n_slots; }
};

// Per-slot exogenous series. All series must have length n_slots.
struct Profile {
    std::vector<double> ghi;          // global horizontal irradiance, kW/m^2
    std::vector<double> t_out;        // outdoor temperature, deg C
    std::vector<double> energy_price; // $/kWh
    std::vector<double> misc_load;    // non-controllable building load, kW
};

struct PvParams {
    double efficiency = 0.17;
    double area_m2 = 1058.8; // sized so peak output is about 180 kW at 1 kW/m^2
    double temp_coeff = 0.005;      // derating per deg C above the reference
    double ambient_ref_temp = 25.0; // deg C
};

// Shared by the stationary battery and the vehicle battery.
// State of charge is handled as a fraction of capacity throughout;
// conversion to kWh happens only in reports.
struct StorageParams {
    double capacity_kwh = 0.0;
    double max_charge_kw = 0.0;
    double max_discharge_kw = 0.0;
    double eta_charge = 0.9;
    double eta_discharge = 0.9;
    double soc_min = 0.0;
    double soc_max = 1.0;
    double soc_initial = 0.5;
    double degradation_rate = 0.10; // $/kWh of throughput
};

struct PevParams {
    StorageParams storage;
    // Plug-in window as a half-open slot range [from, to).
    int available_from_slot = 0;
    int available_to_slot = 0;
    double soc_final_min = 0.0; // required state of charge at the end of the horizon

    bool available(int slot) const {
        return slot >= available_from_slot && slot < available_to_slot;
    }
};

// Fitted affine electrical model: power = slope*(t_setpoint - t_out) + intercept.
struct HvacParams {
    double slope = -0.2186; // kW per deg C, negative for a cooling-dominated fit
    double intercept = 5.63; // kW
    double t_set_min = 24.0;
    double t_set_max = 26.0;
};

struct LightingParams {
    double phi_min = 0.10; // lighting intensity bounds, kW/m^2
    double phi_max = 0.15;
    double building_area_ft2 = 21352.0;
    double area_fraction = 1.0; // share of the building area that is lit
    double eta_lighting = 1.0;

    double effective_area_ft2() const { return building_area_ft2 * area_fraction; }
};

struct Tariff {
    std::vector<double> energy_price; // $/kWh per slot (usually mirrors Profile)
    double demand_charge = 0.0;       // $/kW applied to the peak grid draw
};

enum class ObjectiveKind {
    EnergyPlusDegradation, // energy cost + battery wear
    WithDemandCharge       // the above plus demand charge on peak grid draw
};

struct Scenario {
    TimeGrid grid;
    Profile profile;
    PvParams pv;
    StorageParams bess;
    PevParams pev;
    HvacParams hvac;
    LightingParams lighting;
    Tariff tariff;
    ObjectiveKind objective_kind = ObjectiveKind::EnergyPlusDegradation;
    bool allow_grid_export = false; // when false, grid power is purchase-only
};

// PV output in kW for one slot, clamped below at zero (extreme temperature
// derating cannot produce negative generation).
double pv_power(const PvParams& pv, double ghi, double t_out);

// HVAC electrical power in kW for one slot. Throws std::domain_error when the
// fitted model leaves its valid (nonnegative) range.
double hvac_power(const HvacParams& h, double t_setpoint, double t_out);

// Lighting power in kW. phi must lie within [phi_min, phi_max].
double lighting_power(const LightingParams& l, double phi);

// Battery wear cost in $/kWh from daily depreciation figures.
double degradation_rate(double c_dep_daily, double e_dep_daily, double k_dep);

// Checks every type invariant plus cross-field consistency (series lengths,
// HVAC model range over the whole horizon). Returns one message per violation,
// each carrying the field path and slot index where applicable.
std::vector<std::string> validate_scenario(const Scenario& s);

// Convenience wrapper: returns the scenario unchanged or throws ValidationError.
const Scenario& validate_or_throw(const Scenario& s);

} // namespace mgrid
