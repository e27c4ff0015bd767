#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mgrid/feeder.hpp"
#include "support/fixtures.hpp"

using namespace mgrid;
using doctest::Approx;

namespace {

FeederModel load_ieee13() { return parse_feeder_file(mgrid::test::data_path("ieee13.feeder")); }

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Balanced three-phase two-bus network on a 1 kV per-phase base with unit
// impedance base (length one mile, z in ohms/mile).
FeederModel two_bus(double r, double x, double load_kw, double load_kvar) {
    FeederModel f;
    f.source_bus = "src";
    f.vsource_pu = 1.0;
    f.base_kva = 3000.0;
    const double kvll = std::numbers::sqrt3;
    f.buses.push_back({"src", kvll, {true, true, true}});
    f.buses.push_back({"load", kvll, {true, true, true}});
    LineCode lc;
    lc.id = "z";
    lc.phases = {true, true, true};
    for (int p = 0; p < 3; ++p) lc.z_per_mile[p][p] = cplx(r, x);
    f.linecodes.push_back(lc);
    FeederBranch br;
    br.kind = BranchKind::Line;
    br.from = "src";
    br.to = "load";
    br.code = "z";
    br.length_ft = 5280.0;
    f.branches.push_back(br);
    LoadSpec ld;
    ld.bus = "load";
    ld.conn = LoadConn::Wye;
    ld.model = LoadModel::PQ;
    ld.kw = {load_kw, load_kw, load_kw};
    ld.kvar = {load_kvar, load_kvar, load_kvar};
    f.loads.push_back(ld);
    return f;
}

Schedule zero_schedule(int n) {
    Schedule s;
    auto zero = [n] { return std::vector<double>(n, 0.0); };
    s.grid_kw = zero();
    s.bess_charge_kw = zero();
    s.bess_discharge_kw = zero();
    s.pev_charge_kw = zero();
    s.pev_discharge_kw = zero();
    s.soc_bess = zero();
    s.soc_pev = zero();
    s.hvac_kw = zero();
    s.lighting_kw = zero();
    s.tsetpoint_c = zero();
    s.phi_kw_m2 = zero();
    s.bess_charge_mode.assign(n, 1);
    s.bess_discharge_mode.assign(n, 0);
    s.pev_charge_mode.assign(n, 1);
    s.pev_discharge_mode.assign(n, 0);
    s.pv_kw = zero();
    s.pv_spill_kw = zero();
    s.misc_kw = zero();
    return s;
}

} // namespace

TEST_CASE("the bundled feeder parses to thirteen buses rooted at the source") {
    FeederModel f = load_ieee13();
    CHECK(f.buses.size() == 13);
    CHECK(f.source_bus == "650");
    CHECK(f.bus_index("650") >= 0);
    CHECK(f.branches.size() == 12); // 10 lines + switch + transformer
    CHECK(f.loads.size() == 8);
    CHECK(f.distributed_loads.size() == 1);
    CHECK(f.regulators.size() == 1);
    CHECK(f.capacitors.size() == 2);
}

TEST_CASE("parse_feeder reports unknown buses with the offending line number") {
    std::string text = read_file(mgrid::test::data_path("ieee13.feeder"));
    text += "\nline 632 9999 code=601 length=100\n";
    try {
        parse_feeder(text);
        CHECK(false);
    } catch (const FeederError& e) {
        const std::string what = e.what();
        CHECK(what.find("9999") != std::string::npos);
        CHECK(what.find("line") != std::string::npos);
    }
}

TEST_CASE("parse_feeder rejects cyclic topology") {
    std::string text = read_file(mgrid::test::data_path("ieee13.feeder"));
    text += "\nline 675 680 code=601 length=100\n";
    CHECK_THROWS_WITH_AS(parse_feeder(text), doctest::Contains("not radial"), FeederError);
}

TEST_CASE("parse_feeder flags the subtree isolated by an open switch") {
    std::string text = read_file(mgrid::test::data_path("ieee13.feeder"));
    const auto pos = text.find("switch 671 692 state=closed");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("switch 671 692 state=closed").size(),
                 "switch 671 692 state=open");
    try {
        parse_feeder(text);
        CHECK(false);
    } catch (const FeederError& e) {
        const std::string what = e.what();
        CHECK(what.find("disconnected") != std::string::npos);
        CHECK(what.find("692") != std::string::npos);
        CHECK(what.find("675") != std::string::npos);
    }
}

TEST_CASE("parse_feeder rejects malformed impedance matrices") {
    const std::string text =
        "feeder source=a base_kva=100\n"
        "bus a kv_ll=4.16 phases=abc\n"
        "bus b kv_ll=4.16 phases=abc\n"
        "linecode bad phases=abc r=1,2,3 x=1,2,3\n" // needs 6 entries
        "line a b code=bad length=100\n";
    CHECK_THROWS_WITH_AS(parse_feeder(text), doctest::Contains("upper-triangular"), FeederError);
}

TEST_CASE("a no-load network with unity taps solves flat at 1 pu") {
    FeederModel f = two_bus(0.01, 0.02, 0.0, 0.0);
    PowerFlowResult r = power_flow(f);
    for (int b = 0; b < 2; ++b)
        for (int p = 0; p < 3; ++p) CHECK(std::abs(r.v_pu[b][p]) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the two-bus case matches the closed-form quadratic to 1e-6 pu") {
    // z = 0.01 + j0.02 pu, S = 0.5 + j0.1 pu per phase on the 1 MVA-per-phase base.
    FeederModel f = two_bus(0.01, 0.02, 500.0, 100.0);
    PowerFlowOptions opts;
    opts.tol_pu = 1e-10;
    PowerFlowResult res = power_flow(f, {}, opts);
    const double r = 0.01, x = 0.02, P = 0.5, Q = 0.1;
    const double b = 2.0 * (r * P + x * Q) - 1.0;
    const double c = (r * r + x * x) * (P * P + Q * Q);
    const double v_analytic = std::sqrt((-b + std::sqrt(b * b - 4.0 * c)) / 2.0);
    for (int p = 0; p < 3; ++p)
        CHECK(std::abs(res.v_pu[1][p]) == Approx(v_analytic).epsilon(1e-6));
}

TEST_CASE("the bundled base case matches the published snapshot within 1.5 percent") {
    FeederModel f = load_ieee13();
    PowerFlowResult r = power_flow(f);
    std::ifstream in(mgrid::test::data_path("ieee13_solution.csv"));
    REQUIRE(in);
    std::string line;
    std::getline(in, line); // header
    int compared = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string bus, phase, mag, ang;
        std::getline(is, bus, ',');
        std::getline(is, phase, ',');
        std::getline(is, mag, ',');
        std::getline(is, ang, ',');
        const int b = f.bus_index(bus);
        REQUIRE(b >= 0);
        const int p = phase == "a" ? 0 : phase == "b" ? 1 : 2;
        const double ours = std::abs(r.v_pu[b][p]);
        const double published = std::stod(mag);
        CHECK(std::fabs(ours - published) / published < 0.015);
        ++compared;
    }
    CHECK(compared == 32); // every bus and present phase
}

TEST_CASE("sweep residuals shrink monotonically on the bundled fixture") {
    FeederModel f = load_ieee13();
    PowerFlowResult r = power_flow(f);
    REQUIRE(r.residual_history.size() >= 2);
    for (size_t i = 1; i < r.residual_history.size(); ++i)
        CHECK(r.residual_history[i] < r.residual_history[i - 1]);
}

TEST_CASE("complex power is conserved across the converged network") {
    FeederModel f = load_ieee13();
    PowerFlowResult r = power_flow(f);
    const cplx residual = r.source_injection_kva - r.total_load_kva - r.total_loss_kva;
    CHECK(std::abs(residual) < 1e-4 * f.base_kva);
}

TEST_CASE("added consumption lowers and generation raises the local voltage") {
    FeederModel f = load_ieee13();
    PowerFlowResult base = power_flow(f);

    ExtraInjections charge;
    charge["611"] = {cplx(0, 0), cplx(0, 0), cplx(50.0, 0.0)};
    PowerFlowResult loaded = power_flow(f, charge);
    const int b611 = f.bus_index("611");
    CHECK(std::abs(loaded.v_pu[b611][2]) < std::abs(base.v_pu[b611][2]));

    ExtraInjections gen;
    gen["671"] = {cplx(-180.0, 0.0), cplx(0, 0), cplx(0, 0)};
    PowerFlowResult lifted = power_flow(f, gen);
    const int b671 = f.bus_index("671");
    CHECK(std::abs(lifted.v_pu[b671][0]) > std::abs(base.v_pu[b671][0]));
}

TEST_CASE("power_flow reports divergence on an absurd load") {
    FeederModel f = two_bus(0.01, 0.02, 5.0e6, 1.0e6); // far beyond the feeder limit
    CHECK_THROWS_AS(power_flow(f), FeederError);
}

TEST_CASE("an all-zero schedule leaves the trace at the base-case voltages") {
    FeederModel f = load_ieee13();
    PowerFlowResult base = power_flow(f);
    VoltageTrace trace = time_series_flow(f, InjectionMap{}, zero_schedule(3));
    REQUIRE(trace.n_slots() == 3);
    for (int t = 0; t < 3; ++t)
        for (size_t b = 0; b < trace.bus_ids.size(); ++b)
            for (int p = 0; p < 3; ++p)
                if (trace.phase_masks[b][p])
                    CHECK(std::abs(trace.v[t][b][p]) ==
                          Approx(std::abs(base.v_pu[b][p])).epsilon(1e-9));
}

TEST_CASE("a vehicle charge burst depresses phase C at its bus for that slot") {
    FeederModel f = load_ieee13();
    Schedule sched = zero_schedule(2);
    sched.pev_charge_kw[1] = 50.0;
    VoltageTrace trace = time_series_flow(f, InjectionMap{}, sched);
    const int b611 = f.bus_index("611");
    CHECK(std::abs(trace.v[1][b611][2]) < std::abs(trace.v[0][b611][2]));
}

TEST_CASE("time_series_flow reports the failing slot on divergence") {
    FeederModel f = load_ieee13();
    Schedule sched = zero_schedule(3);
    sched.pev_charge_kw[2] = 1.0e7;
    try {
        time_series_flow(f, InjectionMap{}, sched);
        CHECK(false);
    } catch (const FeederError& e) {
        CHECK(std::string(e.what()).find("slot 2") != std::string::npos);
    }
}

TEST_CASE("vdi evaluates the rms deviation formula exactly") {
    VoltageTrace trace;
    trace.bus_ids = {"n"};
    trace.phase_masks = {{true, false, false}};

    auto fill = [&](std::vector<double> mags) {
        trace.v.clear();
        for (double m : mags) trace.v.push_back({PhaseArray{cplx(m, 0), 0, 0}});
    };

    fill({1.0, 1.0, 1.0});
    CHECK(*vdi(trace, 1.0).value("n", 0) == 0.0);

    fill({1.05, 1.05, 1.05, 1.05});
    CHECK(*vdi(trace, 1.0).value("n", 0) == Approx(0.05).epsilon(1e-12));

    fill({0.98, 1.02});
    CHECK(*vdi(trace, 1.0).value("n", 0) == Approx(0.02).epsilon(1e-12));
}

TEST_CASE("vdi is slot-permutation invariant and scales with the deviation") {
    VoltageTrace a, b;
    a.bus_ids = b.bus_ids = {"n"};
    a.phase_masks = b.phase_masks = {{true, false, false}};
    const std::vector<double> mags = {0.97, 1.01, 1.04, 0.99};
    for (double m : mags) a.v.push_back({PhaseArray{cplx(m, 0), 0, 0}});
    for (auto it = mags.rbegin(); it != mags.rend(); ++it)
        b.v.push_back({PhaseArray{cplx(*it, 0), 0, 0}});
    CHECK(*vdi(a, 1.0).value("n", 0) == Approx(*vdi(b, 1.0).value("n", 0)).epsilon(1e-15));

    VoltageTrace scaled;
    scaled.bus_ids = {"n"};
    scaled.phase_masks = {{true, false, false}};
    for (double m : mags) scaled.v.push_back({PhaseArray{cplx(1.0 + 3.0 * (m - 1.0), 0), 0, 0}});
    CHECK(*vdi(scaled, 1.0).value("n", 0) ==
          Approx(3.0 * *vdi(a, 1.0).value("n", 0)).epsilon(1e-12));
}

TEST_CASE("vdi rejects an empty trace and reports per-bus means") {
    VoltageTrace empty;
    empty.bus_ids = {"n"};
    empty.phase_masks = {{true, false, false}};
    CHECK_THROWS_AS(vdi(empty, 1.0), std::domain_error);

    VoltageTrace t;
    t.bus_ids = {"n"};
    t.phase_masks = {{true, true, false}};
    t.v.push_back({PhaseArray{cplx(1.02, 0), cplx(0.98, 0), 0}});
    VdiReport rep = vdi(t, 1.0);
    CHECK(*rep.value("n", 0) == Approx(0.02).epsilon(1e-12));
    CHECK(*rep.value("n", 1) == Approx(0.02).epsilon(1e-12));
    CHECK(!rep.value("n", 2).has_value());
    CHECK(*rep.mean("n") == Approx(0.02).epsilon(1e-12));
    CHECK(!rep.mean("missing").has_value());
}
