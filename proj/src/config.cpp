#include "mgrid/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mgrid {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(line);
    while (std::getline(is, item, ',')) out.push_back(trim(item));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

Profile read_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open profile " + path, {path + ": unreadable"});

    static const std::vector<std::string> expected = {"slot", "ghi_kw_m2", "t_out_c",
                                                      "price_usd_kwh", "misc_kw"};
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("profile " + path + " is empty", {path + ": missing header"});
    const auto header = split_csv_line(line);
    std::vector<std::string> issues;
    for (const auto& col : expected)
        if (std::find(header.begin(), header.end(), col) == header.end())
            issues.push_back("profile: missing column '" + col + "'");
    for (const auto& col : header)
        if (std::find(expected.begin(), expected.end(), col) == expected.end())
            issues.push_back("profile: unexpected column '" + col + "'");
    if (!issues.empty()) throw ValidationError("profile header mismatch in " + path, issues);

    std::vector<int> pos(expected.size());
    for (size_t i = 0; i < expected.size(); ++i)
        pos[i] = static_cast<int>(
            std::find(header.begin(), header.end(), expected[i]) - header.begin());

    Profile p;
    int row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ValidationError("profile row width mismatch",
                                  {"profile[" + std::to_string(row) + "]: expected " +
                                   std::to_string(header.size()) + " cells, got " +
                                   std::to_string(cells.size())});
        auto cell = [&](int i) -> double {
            try {
                return std::stod(cells[pos[i]]);
            } catch (...) {
                throw ValidationError("profile cell parse error",
                                      {"profile[" + std::to_string(row) + "]." + expected[i] +
                                       ": malformed number '" + cells[pos[i]] + "'"});
            }
        };
        const int slot = static_cast<int>(cell(0));
        if (slot != row)
            throw ValidationError("profile slot order",
                                  {"profile[" + std::to_string(row) + "].slot: expected " +
                                   std::to_string(row) + ", got " + std::to_string(slot)});
        p.ghi.push_back(cell(1));
        p.t_out.push_back(cell(2));
        p.energy_price.push_back(cell(3));
        p.misc_load.push_back(cell(4));
        ++row;
    }
    return p;
}

void write_profile_csv(const std::string& path, const Profile& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write profile " + path);
    out << "slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw\n";
    char buf[160];
    for (size_t t = 0; t < p.ghi.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g\n", t, p.ghi[t], p.t_out[t],
                      p.energy_price[t], p.misc_load[t]);
        out << buf;
    }
}

std::vector<double> tariff_prices(TariffPreset preset, const TimeGrid& grid) {
    std::vector<double> prices(grid.n_slots);
    for (int t = 0; t < grid.n_slots; ++t) {
        const bool on_peak = grid.slot_start_hour(t) >= 16.0;
        switch (preset) {
            case TariffPreset::IouTou: prices[t] = on_peak ? 0.41 : 0.22; break;
            case TariffPreset::MuniTou: prices[t] = on_peak ? 0.1079 : 0.0874; break;
            case TariffPreset::MuniFlat: prices[t] = 0.1684; break;
        }
    }
    return prices;
}

TariffPreset tariff_preset_from_string(const std::string& name) {
    if (name == "iou_tou") return TariffPreset::IouTou;
    if (name == "muni_tou") return TariffPreset::MuniTou;
    if (name == "muni_flat") return TariffPreset::MuniFlat;
    throw ValidationError("unknown tariff preset",
                          {"tariff.preset: unknown value '" + name +
                           "' (expected iou_tou, muni_tou, or muni_flat)"});
}

std::string to_string(TariffPreset preset) {
    switch (preset) {
        case TariffPreset::IouTou: return "iou_tou";
        case TariffPreset::MuniTou: return "muni_tou";
        case TariffPreset::MuniFlat: return "muni_flat";
    }
    return "?";
}

void apply_pev_level(StorageParams& storage, int level) {
    if (level == 2) {
        storage.capacity_kwh = 64.0;
        storage.max_charge_kw = 7.0;
        storage.max_discharge_kw = 7.0;
    } else if (level == 3) {
        storage.capacity_kwh = 100.0;
        storage.max_charge_kw = 50.0;
        storage.max_discharge_kw = 50.0;
    } else {
        throw ValidationError("unknown charger level",
                              {"pev.level: expected 2 or 3, got " + std::to_string(level)});
    }
}

namespace {

class IniFile {
public:
    explicit IniFile(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config " + path, {path + ": unreadable"});
        std::string line, section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    issues_.push_back("config line " + std::to_string(line_no) +
                                      ": unterminated section header");
                else
                    section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                issues_.push_back("config line " + std::to_string(line_no) +
                                  ": expected key = value");
                continue;
            }
            const std::string key = section + "." + trim(line.substr(0, eq));
            values_[key] = trim(line.substr(eq + 1));
        }
    }

    double number(const std::string& key, double fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(it->first);
        try {
            return std::stod(it->second);
        } catch (...) {
            issues_.push_back(key + ": malformed number '" + it->second + "'");
            return fallback;
        }
    }

    int integer(const std::string& key, int fallback) {
        return static_cast<int>(std::lround(number(key, fallback)));
    }

    bool boolean(const std::string& key, bool fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(it->first);
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        issues_.push_back(key + ": expected true/false, got '" + it->second + "'");
        return fallback;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(it->first);
        return it->second;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void finish(const std::string& path) {
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key)) issues_.push_back(key + ": unknown setting");
        if (!issues_.empty())
            throw ValidationError("config " + path + " has errors", std::move(issues_));
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
    std::vector<std::string> issues_;
};

void load_storage(IniFile& ini, const std::string& sec, StorageParams& s) {
    s.capacity_kwh = ini.number(sec + ".capacity_kwh", s.capacity_kwh);
    s.max_charge_kw = ini.number(sec + ".max_charge_kw", s.max_charge_kw);
    s.max_discharge_kw = ini.number(sec + ".max_discharge_kw", s.max_discharge_kw);
    s.eta_charge = ini.number(sec + ".eta_charge", s.eta_charge);
    s.eta_discharge = ini.number(sec + ".eta_discharge", s.eta_discharge);
    s.soc_min = ini.number(sec + ".soc_min", s.soc_min);
    s.soc_max = ini.number(sec + ".soc_max", s.soc_max);
    s.soc_initial = ini.number(sec + ".soc_initial", s.soc_initial);
    s.degradation_rate = ini.number(sec + ".degradation_rate", s.degradation_rate);
}

} // namespace

Scenario load_scenario_with_profile(const std::string& config_path, Profile profile) {
    IniFile ini(config_path);
    Scenario s;

    s.grid.start_hour = ini.number("time.start_hour", s.grid.start_hour);
    s.grid.delta_t = ini.number("time.delta_t", s.grid.delta_t);
    s.grid.n_slots = ini.integer("time.n_slots", s.grid.n_slots);

    s.pv.efficiency = ini.number("pv.efficiency", s.pv.efficiency);
    s.pv.area_m2 = ini.number("pv.area_m2", s.pv.area_m2);
    s.pv.temp_coeff = ini.number("pv.temp_coeff", s.pv.temp_coeff);
    s.pv.ambient_ref_temp = ini.number("pv.ambient_ref_temp", s.pv.ambient_ref_temp);

    load_storage(ini, "bess", s.bess);

    if (ini.has("pev.level")) apply_pev_level(s.pev.storage, ini.integer("pev.level", 2));
    load_storage(ini, "pev", s.pev.storage);
    s.pev.available_from_slot = ini.integer("pev.available_from_slot", 0);
    s.pev.available_to_slot = ini.integer("pev.available_to_slot", s.grid.n_slots);
    s.pev.soc_final_min = ini.number("pev.soc_final_min", s.pev.storage.soc_initial);

    s.hvac.slope = ini.number("hvac.slope", s.hvac.slope);
    s.hvac.intercept = ini.number("hvac.intercept", s.hvac.intercept);
    s.hvac.t_set_min = ini.number("hvac.t_set_min", s.hvac.t_set_min);
    s.hvac.t_set_max = ini.number("hvac.t_set_max", s.hvac.t_set_max);

    s.lighting.building_area_ft2 = ini.number("lighting.building_area_ft2", 21352.0);
    s.lighting.area_fraction = ini.number("lighting.area_fraction", 1.0);
    s.lighting.phi_min = ini.number("lighting.phi_min", s.lighting.phi_min);
    s.lighting.phi_max = ini.number("lighting.phi_max", s.lighting.phi_max);
    s.lighting.eta_lighting = ini.number("lighting.eta_lighting", s.lighting.eta_lighting);

    s.tariff.demand_charge = ini.number("tariff.demand_charge", 0.0);
    const std::string preset = ini.text("tariff.preset", "");

    const std::string objective = ini.text("objective.kind", "energy");
    if (objective == "energy")
        s.objective_kind = ObjectiveKind::EnergyPlusDegradation;
    else if (objective == "demand")
        s.objective_kind = ObjectiveKind::WithDemandCharge;
    else
        throw ValidationError("config error",
                              {"objective.kind: expected energy or demand, got '" + objective + "'"});

    s.allow_grid_export = ini.boolean("grid.allow_export", false);

    ini.finish(config_path);

    s.profile = std::move(profile);
    s.tariff.energy_price =
        preset.empty() ? s.profile.energy_price
                       : tariff_prices(tariff_preset_from_string(preset), s.grid);
    return s;
}

Scenario load_scenario(const std::string& config_path, const std::string& profile_path) {
    return load_scenario_with_profile(config_path, read_profile_csv(profile_path));
}

} // namespace mgrid
