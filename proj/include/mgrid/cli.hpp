#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgrid/domain.hpp"
#include "mgrid/solver.hpp"

namespace mgrid {

// Process exit codes shared by all subcommands.
enum ExitCode {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitSolve = 3,
    kExitIo = 4,
};

struct SolveArgs {
    std::string config_path;
    std::string profile_path;
    std::string out_dir = ".";
    std::optional<ObjectiveKind> objective; // overrides the config when set
    int pev_level = 0;                      // 0 = use config parameters
    bool export_lp = false;
    std::string label; // artifact tag; defaults from pev_level
    SolverOptions solver;
};

// Solves one scenario; writes schedule.csv, costs.json, and optionally
// problem.lp into out_dir; prints total, peak, and savings vs the baseline.
int run_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

enum class SweepAxis { LightingLevel, TemperatureBand, Tariff, Weather, PevLevel };

SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepArgs {
    std::string config_path;
    std::string profile_path;
    std::string out_dir = ".";
    SweepAxis axis = SweepAxis::LightingLevel;
    std::vector<std::string> values; // empty = axis default
    std::optional<ObjectiveKind> objective;
    int pev_level = 0;
    SolverOptions solver;
};

// One solve per axis value; writes sweep.csv plus long-format per-slot data
// (sweep_long.csv) and prints the directional findings for the axis.
int run_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

struct FeederArgs {
    std::string feeder_path;
    std::string schedule_path;
    std::string out_dir = ".";
    double vnom_pu = 1.0;
    std::string label = "run";
    bool base_loads_on = true;
    double pv_pf = 1.0, bess_pf = 1.0, pev_pf = 1.0, building_pf = 1.0;
};

// Time-series power flow of a schedule on the feeder; writes voltages.csv and
// vdi.json; prints the VDI at the instrumented nodes.
int run_feeder(const FeederArgs& args, std::ostream& out, std::ostream& err);

struct ReportArgs {
    std::vector<std::string> inputs; // files or directories holding artifacts
    std::string out_dir = ".";
};

// Consolidates costs/vdi artifacts into report.md with a cost-comparison table
// (rows heuristic/level II/level III, columns per objective with savings) and
// a per-node VDI table. Missing artifacts are listed; exit stays 0.
int run_report(const ReportArgs& args, std::ostream& out, std::ostream& err);

} // namespace mgrid
