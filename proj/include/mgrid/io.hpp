#pragma once

#include <string>
#include <vector>

#include "mgrid/feeder.hpp"
#include "mgrid/schedule.hpp"

namespace mgrid {

// Schedule CSV: slot plus one column per decision series plus the PV and
// miscellaneous inputs, in a fixed column order. Deterministic output.
void write_schedule_csv(const std::string& path, const Schedule& sched);
Schedule read_schedule_csv(const std::string& path);

// Cost report consumed by the `report` subcommand. `label` names the run
// (e.g. level2), `objective` is "energy" or "demand".
struct CostsArtifact {
    std::string label;
    std::string objective;
    int pev_level = 0; // 0 = custom parameters
    CostBreakdown optimized;
    CostBreakdown baseline;
    double savings_pct = 0.0;
    double peak_kw = 0.0;
    int peak_slot = 0;
    double baseline_peak_kw = 0.0;
    double bess_throughput_kwh = 0.0; // charge + discharge energy
    double pev_throughput_kwh = 0.0;
};

void write_costs_json(const std::string& path, const CostsArtifact& art);
CostsArtifact read_costs_json(const std::string& path);

struct VdiArtifact {
    std::string label;
    double vnom_pu = 1.0;
    VdiReport report;
};

void write_vdi_json(const std::string& path, const VdiArtifact& art);
VdiArtifact read_vdi_json(const std::string& path);

// Long-format |V| trace: slot,bus,phase,v_pu.
void write_voltages_csv(const std::string& path, const VoltageTrace& trace);

// Throughput helpers shared by reports and the sweep.
double storage_throughput_kwh(const std::vector<double>& charge_kw,
                              const std::vector<double>& discharge_kw, double delta_t);

} // namespace mgrid
