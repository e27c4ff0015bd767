#pragma once

#include <string>
#include <vector>

#include "mgrid/domain.hpp"

namespace mgrid {

// Reads the per-slot profile CSV. The header must be exactly
//   slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw
// with one row per slot in ascending slot order. Missing or misnamed columns
// are reported by name.
Profile read_profile_csv(const std::string& path);
void write_profile_csv(const std::string& path, const Profile& p);

enum class TariffPreset { IouTou, MuniTou, MuniFlat };

// Per-slot energy prices for the named utility rate, resolved on slot start
// times (on-peak begins at hour 16).
std::vector<double> tariff_prices(TariffPreset preset, const TimeGrid& grid);
TariffPreset tariff_preset_from_string(const std::string& name);
std::string to_string(TariffPreset preset);

// Charger-level parameter bundles: level 2 is 64 kWh at 7 kW, level 3 is
// 100 kWh at 50 kW (both directions). Leaves efficiencies, SOC limits, and
// degradation rate untouched.
void apply_pev_level(StorageParams& storage, int level);

// Loads a scenario from a sectioned key-value config file plus a profile CSV.
// Unknown sections or keys are validation errors. The tariff energy price
// mirrors the profile prices unless [tariff] preset overrides them.
Scenario load_scenario(const std::string& config_path, const std::string& profile_path);

// Same, but with the profile passed in directly.
Scenario load_scenario_with_profile(const std::string& config_path, Profile profile);

} // namespace mgrid
