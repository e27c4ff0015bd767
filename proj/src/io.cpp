#include "mgrid/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mgrid {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kScheduleColumns = {
    "slot",          "grid_kw",       "bess_charge_kw", "bess_discharge_kw",
    "pev_charge_kw", "pev_discharge_kw", "soc_bess",    "soc_pev",
    "hvac_kw",       "lighting_kw",   "tsetpoint_c",    "phi_kw_m2",
    "b1",            "d1",            "e1",             "e2",
    "pv_kw",         "pv_spill_kw",   "misc_kw"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(line);
    while (std::getline(is, item, ',')) out.push_back(item);
    return out;
}

ordered_json breakdown_json(const CostBreakdown& c) {
    ordered_json j;
    j["energy_usd"] = c.energy_usd;
    j["demand_usd"] = c.demand_usd;
    j["bess_degradation_usd"] = c.bess_degradation_usd;
    j["pev_degradation_usd"] = c.pev_degradation_usd;
    j["total_usd"] = c.total_usd;
    return j;
}

CostBreakdown breakdown_from_json(const nlohmann::json& j) {
    CostBreakdown c;
    c.energy_usd = j.at("energy_usd").get<double>();
    c.demand_usd = j.at("demand_usd").get<double>();
    c.bess_degradation_usd = j.at("bess_degradation_usd").get<double>();
    c.pev_degradation_usd = j.at("pev_degradation_usd").get<double>();
    c.total_usd = j.at("total_usd").get<double>();
    return c;
}

} // namespace

void write_schedule_csv(const std::string& path, const Schedule& sched) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (size_t i = 0; i < kScheduleColumns.size(); ++i)
        out << (i ? "," : "") << kScheduleColumns[i];
    out << '\n';
    for (int t = 0; t < sched.n_slots(); ++t) {
        out << t << ',' << fmt(sched.grid_kw[t]) << ',' << fmt(sched.bess_charge_kw[t]) << ','
            << fmt(sched.bess_discharge_kw[t]) << ',' << fmt(sched.pev_charge_kw[t]) << ','
            << fmt(sched.pev_discharge_kw[t]) << ',' << fmt(sched.soc_bess[t]) << ','
            << fmt(sched.soc_pev[t]) << ',' << fmt(sched.hvac_kw[t]) << ','
            << fmt(sched.lighting_kw[t]) << ',' << fmt(sched.tsetpoint_c[t]) << ','
            << fmt(sched.phi_kw_m2[t]) << ',' << sched.bess_charge_mode[t] << ','
            << sched.bess_discharge_mode[t] << ',' << sched.pev_charge_mode[t] << ','
            << sched.pev_discharge_mode[t] << ',' << fmt(sched.pv_kw[t]) << ','
            << fmt(sched.pv_spill_kw[t]) << ',' << fmt(sched.misc_kw[t]) << '\n';
    }
}

Schedule read_schedule_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schedule " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("schedule " + path + " is empty");
    const auto header = split_line(line);
    std::vector<int> pos;
    for (const auto& col : kScheduleColumns) {
        const auto it = std::find(header.begin(), header.end(), col);
        if (it == header.end())
            throw std::runtime_error("schedule " + path + ": missing column '" + col + "'");
        pos.push_back(static_cast<int>(it - header.begin()));
    }
    Schedule s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() < header.size())
            throw std::runtime_error("schedule " + path + ": short row");
        auto num = [&](int i) { return std::stod(cells[pos[i]]); };
        s.grid_kw.push_back(num(1));
        s.bess_charge_kw.push_back(num(2));
        s.bess_discharge_kw.push_back(num(3));
        s.pev_charge_kw.push_back(num(4));
        s.pev_discharge_kw.push_back(num(5));
        s.soc_bess.push_back(num(6));
        s.soc_pev.push_back(num(7));
        s.hvac_kw.push_back(num(8));
        s.lighting_kw.push_back(num(9));
        s.tsetpoint_c.push_back(num(10));
        s.phi_kw_m2.push_back(num(11));
        s.bess_charge_mode.push_back(static_cast<int>(num(12)));
        s.bess_discharge_mode.push_back(static_cast<int>(num(13)));
        s.pev_charge_mode.push_back(static_cast<int>(num(14)));
        s.pev_discharge_mode.push_back(static_cast<int>(num(15)));
        s.pv_kw.push_back(num(16));
        s.pv_spill_kw.push_back(num(17));
        s.misc_kw.push_back(num(18));
    }
    if (!s.grid_kw.empty()) {
        auto [peak, slot] = peak_demand(s);
        s.peak_grid_kw = peak;
        s.peak_slot = slot;
    }
    return s;
}

void write_costs_json(const std::string& path, const CostsArtifact& art) {
    ordered_json j;
    j["kind"] = "costs";
    j["label"] = art.label;
    j["objective"] = art.objective;
    j["pev_level"] = art.pev_level;
    j["optimized"] = breakdown_json(art.optimized);
    j["baseline"] = breakdown_json(art.baseline);
    j["savings_pct"] = art.savings_pct;
    j["peak_kw"] = art.peak_kw;
    j["peak_slot"] = art.peak_slot;
    j["baseline_peak_kw"] = art.baseline_peak_kw;
    j["bess_throughput_kwh"] = art.bess_throughput_kwh;
    j["pev_throughput_kwh"] = art.pev_throughput_kwh;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

CostsArtifact read_costs_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("kind", "") != "costs")
        throw std::runtime_error(path + " is not a costs artifact");
    CostsArtifact art;
    art.label = j.value("label", "");
    art.objective = j.value("objective", "");
    art.pev_level = j.value("pev_level", 0);
    art.optimized = breakdown_from_json(j.at("optimized"));
    art.baseline = breakdown_from_json(j.at("baseline"));
    art.savings_pct = j.value("savings_pct", 0.0);
    art.peak_kw = j.value("peak_kw", 0.0);
    art.peak_slot = j.value("peak_slot", 0);
    art.baseline_peak_kw = j.value("baseline_peak_kw", 0.0);
    art.bess_throughput_kwh = j.value("bess_throughput_kwh", 0.0);
    art.pev_throughput_kwh = j.value("pev_throughput_kwh", 0.0);
    return art;
}

void write_vdi_json(const std::string& path, const VdiArtifact& art) {
    ordered_json j;
    j["kind"] = "vdi";
    j["label"] = art.label;
    j["vnom_pu"] = art.vnom_pu;
    ordered_json nodes;
    for (size_t b = 0; b < art.report.bus_ids.size(); ++b) {
        ordered_json entry;
        ordered_json phases;
        for (int p = 0; p < 3; ++p)
            if (art.report.per_phase[b][p])
                phases[std::string(1, "abc"[p])] = *art.report.per_phase[b][p];
        entry["phases"] = phases;
        entry["mean"] = art.report.phase_mean[b];
        nodes[art.report.bus_ids[b]] = entry;
    }
    j["nodes"] = nodes;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

VdiArtifact read_vdi_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("kind", "") != "vdi") throw std::runtime_error(path + " is not a vdi artifact");
    VdiArtifact art;
    art.label = j.value("label", "");
    art.vnom_pu = j.value("vnom_pu", 1.0);
    art.report.nominal_voltage_pu = art.vnom_pu;
    for (const auto& [bus, entry] : j.at("nodes").items()) {
        art.report.bus_ids.push_back(bus);
        std::array<std::optional<double>, 3> per{};
        for (int p = 0; p < 3; ++p) {
            const std::string key(1, "abc"[p]);
            if (entry.at("phases").contains(key)) per[p] = entry.at("phases").at(key).get<double>();
        }
        art.report.per_phase.push_back(per);
        art.report.phase_mean.push_back(entry.at("mean").get<double>());
    }
    return art;
}

void write_voltages_csv(const std::string& path, const VoltageTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "slot,bus,phase,v_pu\n";
    for (int t = 0; t < trace.n_slots(); ++t)
        for (size_t b = 0; b < trace.bus_ids.size(); ++b)
            for (int p = 0; p < 3; ++p)
                if (trace.phase_masks[b][p])
                    out << t << ',' << trace.bus_ids[b] << ',' << "abc"[p] << ','
                        << fmt(std::abs(trace.v[t][b][p])) << '\n';
}

double storage_throughput_kwh(const std::vector<double>& charge_kw,
                              const std::vector<double>& discharge_kw, double delta_t) {
    double acc = 0.0;
    for (size_t t = 0; t < charge_kw.size(); ++t) acc += (charge_kw[t] + discharge_kw[t]) * delta_t;
    return acc;
}

} // namespace mgrid
