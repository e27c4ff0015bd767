#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgrid/schedule.hpp"

namespace mgrid {

using cplx = std::complex<double>;
using PhaseArray = std::array<cplx, 3>; // indexed a=0, b=1, c=2

class FeederError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FeederBus {
    std::string id;
    double kv_ll = 0.0; // nominal line-to-line kV
    std::array<bool, 3> phases{false, false, false};
};

// Series impedance per mile, 3x3 complex in the abc frame; rows/columns of
// absent phases are zero.
struct LineCode {
    std::string id;
    std::array<bool, 3> phases{};
    std::array<std::array<cplx, 3>, 3> z_per_mile{};
};

enum class BranchKind { Line, Switch, Transformer };

struct FeederBranch {
    BranchKind kind = BranchKind::Line;
    std::string from, to;
    // line
    std::string code;
    double length_ft = 0.0;
    // transformer (wye-wye, per-phase)
    double kva = 0.0, kv_hi = 0.0, kv_lo = 0.0, r_pct = 0.0, x_pct = 0.0;
    // switch
    bool closed = true;
    int line_no = 0; // position in the source file, for diagnostics
};

// Fixed per-phase voltage multipliers applied at the sending end of a branch.
struct RegulatorSpec {
    std::string from, to;
    std::array<double, 3> ratio{1.0, 1.0, 1.0};
};

struct CapacitorSpec {
    std::string bus;
    std::array<double, 3> kvar{0.0, 0.0, 0.0};
};

enum class LoadConn { Wye, Delta };
enum class LoadModel { PQ, Z, I };

// For wye loads the three entries are per-phase a/b/c; for delta loads they
// are the ab/bc/ca legs.
struct LoadSpec {
    std::string bus;
    LoadConn conn = LoadConn::Wye;
    LoadModel model = LoadModel::PQ;
    std::array<double, 3> kw{}, kvar{};
};

struct DistributedLoadSpec {
    std::string from, to;
    LoadConn conn = LoadConn::Wye;
    LoadModel model = LoadModel::PQ;
    std::array<double, 3> kw{}, kvar{};
};

struct FeederModel {
    std::string source_bus;
    double vsource_pu = 1.0;
    double base_kva = 5000.0; // power base for per-unit reporting
    std::vector<FeederBus> buses;
    std::vector<LineCode> linecodes;
    std::vector<FeederBranch> branches;
    std::vector<RegulatorSpec> regulators;
    std::vector<CapacitorSpec> capacitors;
    std::vector<LoadSpec> loads;
    std::vector<DistributedLoadSpec> distributed_loads;

    int bus_index(const std::string& id) const; // -1 when unknown
};

// Parses the line-oriented feeder description (sections: feeder, bus,
// linecode, line, switch, transformer, regulator, capacitor, load,
// distributed_load). Validates references, radial topology, and connectivity;
// every diagnostic carries the offending line number.
FeederModel parse_feeder(const std::string& text);
FeederModel parse_feeder_file(const std::string& path);

struct PowerFlowOptions {
    double tol_pu = 1e-6; // convergence threshold on the voltage update
    int max_iterations = 100;
    bool base_loads_on = true; // include the model's own spot/distributed loads
};

struct PowerFlowResult {
    std::vector<PhaseArray> v_pu; // per bus (model order), per phase; absent phases zero
    int iterations = 0;
    double max_update_pu = 0.0;
    std::vector<double> residual_history; // max voltage update per sweep, pu
    // Complex power for the conservation identity, in kW/kvar.
    cplx source_injection_kva;
    cplx total_load_kva;
    cplx total_loss_kva;
};

// Additional wye-connected PQ injections per bus and phase, kW + j*kvar,
// positive = consumption. Superimposed on the model's own loads.
using ExtraInjections = std::map<std::string, PhaseArray>;

// Forward-backward sweep on the radial network. Loads are honored per their
// model (PQ constant power, Z constant impedance, I constant current),
// capacitors as constant shunt susceptance, regulator taps as fixed ratios.
// Throws FeederError on divergence or voltage collapse.
PowerFlowResult power_flow(const FeederModel& f, const ExtraInjections& extra = {},
                           const PowerFlowOptions& opts = {});

struct InjectionPoint {
    std::string bus;
    std::array<bool, 3> phases{};
    double power_factor = 1.0;
};

// Where each scheduled device sits on the feeder.
struct InjectionMap {
    InjectionPoint pv{"671", {true, false, false}, 1.0};
    InjectionPoint bess{"671", {false, false, true}, 1.0};
    InjectionPoint pev{"611", {false, false, true}, 1.0};
    InjectionPoint building{"675", {true, true, true}, 1.0};
};

struct VoltageTrace {
    std::vector<std::string> bus_ids;
    std::vector<std::array<bool, 3>> phase_masks;
    std::vector<std::vector<PhaseArray>> v; // [slot][bus][phase], per-unit
    int n_slots() const { return static_cast<int>(v.size()); }
};

// Runs one power flow per slot with the schedule's device powers superimposed
// as injections: generation (PV, discharging) as negative load, consumption
// (charging, building aggregate) as positive load.
VoltageTrace time_series_flow(const FeederModel& f, const InjectionMap& map,
                              const Schedule& sched, bool base_loads_on = true,
                              const PowerFlowOptions& opts = {});

struct VdiReport {
    double nominal_voltage_pu = 1.0;
    std::vector<std::string> bus_ids;
    std::vector<std::array<std::optional<double>, 3>> per_phase; // VDI per present phase
    std::vector<double> phase_mean;                              // mean over present phases

    std::optional<double> value(const std::string& bus, int phase) const;
    std::optional<double> mean(const std::string& bus) const;
};

// Root-mean-square deviation of |V| from the nominal per-unit voltage over
// the trace, per bus and phase. Throws std::domain_error on an empty trace.
VdiReport vdi(const VoltageTrace& trace, double v_nominal = 1.0);

} // namespace mgrid
