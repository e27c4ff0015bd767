#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mgrid/cli.hpp"

namespace {

std::string env_out_dir() {
    const char* v = std::getenv("MGRID_OUT_DIR");
    return v ? v : ".";
}

void add_objective_flag(CLI::App* cmd, std::string& objective) {
    cmd->add_option("--objective", objective, "Objective: energy or demand")
        ->check(CLI::IsMember({"energy", "demand"}));
}

std::optional<mgrid::ObjectiveKind> parse_objective(const std::string& s) {
    if (s == "energy") return mgrid::ObjectiveKind::EnergyPlusDegradation;
    if (s == "demand") return mgrid::ObjectiveKind::WithDemandCharge;
    return std::nullopt;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Building-microgrid dispatch optimizer and feeder impact study"};
    app.require_subcommand(1);

    mgrid::SolveArgs solve_args;
    solve_args.out_dir = env_out_dir();
    std::string solve_objective;
    auto* solve = app.add_subcommand("solve", "Optimize one scenario");
    solve->add_option("--config", solve_args.config_path, "Scenario config file")->required();
    solve->add_option("--profile", solve_args.profile_path, "Profile CSV")->required();
    solve->add_option("--out-dir", solve_args.out_dir, "Output directory");
    add_objective_flag(solve, solve_objective);
    solve->add_option("--pev-level", solve_args.pev_level, "Charger level preset (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    solve->add_flag("--export-lp", solve_args.export_lp, "Also write problem.lp");
    solve->add_option("--label", solve_args.label, "Artifact label");
    solve->add_option("--seed", solve_args.solver.deterministic_seed, "Deterministic seed");

    mgrid::SweepArgs sweep_args;
    sweep_args.out_dir = env_out_dir();
    std::string sweep_axis = "lighting";
    std::string sweep_objective;
    auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep along one axis");
    sweep->add_option("--config", sweep_args.config_path, "Scenario config file")->required();
    sweep->add_option("--profile", sweep_args.profile_path, "Profile CSV")->required();
    sweep->add_option("--out-dir", sweep_args.out_dir, "Output directory");
    sweep->add_option("--axis", sweep_axis,
                      "Axis: lighting|temperature|tariff|weather|pev-level")
        ->required();
    sweep->add_option("--values", sweep_args.values, "Axis values (defaults per axis)");
    add_objective_flag(sweep, sweep_objective);
    sweep->add_option("--pev-level", sweep_args.pev_level, "Charger level preset (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    sweep->add_option("--seed", sweep_args.solver.deterministic_seed, "Deterministic seed");

    mgrid::FeederArgs feeder_args;
    feeder_args.out_dir = env_out_dir();
    auto* feeder = app.add_subcommand("feeder", "Feeder voltage impact of a schedule");
    feeder->add_option("--feeder", feeder_args.feeder_path, "Feeder model file")->required();
    feeder->add_option("--schedule", feeder_args.schedule_path, "Schedule CSV")->required();
    feeder->add_option("--out-dir", feeder_args.out_dir, "Output directory");
    feeder->add_option("--vnom", feeder_args.vnom_pu, "Nominal voltage in pu for the VDI");
    feeder->add_option("--label", feeder_args.label, "Artifact label");
    feeder->add_flag("!--no-base-loads", feeder_args.base_loads_on,
                     "Drop the feeder's own spot loads");
    feeder->add_option("--pv-pf", feeder_args.pv_pf, "PV power factor");
    feeder->add_option("--bess-pf", feeder_args.bess_pf, "BESS power factor");
    feeder->add_option("--pev-pf", feeder_args.pev_pf, "PEV power factor");
    feeder->add_option("--building-pf", feeder_args.building_pf, "Building power factor");

    mgrid::ReportArgs report_args;
    report_args.out_dir = env_out_dir();
    auto* report = app.add_subcommand("report", "Consolidate cost and VDI artifacts");
    report->add_option("inputs", report_args.inputs, "Artifact files or directories");
    report->add_option("--out-dir", report_args.out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        solve_args.objective = parse_objective(solve_objective);
        return mgrid::run_solve(solve_args, std::cout, std::cerr);
    }
    if (sweep->parsed()) {
        sweep_args.objective = parse_objective(sweep_objective);
        try {
            sweep_args.axis = mgrid::sweep_axis_from_string(sweep_axis);
        } catch (const mgrid::ValidationError& e) {
            std::cerr << e.what() << "\n";
            return mgrid::kExitUsage;
        }
        return mgrid::run_sweep(sweep_args, std::cout, std::cerr);
    }
    if (feeder->parsed()) return mgrid::run_feeder(feeder_args, std::cout, std::cerr);
    if (report->parsed()) return mgrid::run_report(report_args, std::cout, std::cerr);
    return mgrid::kExitUsage;
}
