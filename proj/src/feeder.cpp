#include "mgrid/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mgrid {

namespace {

constexpr double kSqrt3 = std::numbers::sqrt3;

struct Tok {
    std::string keyword;
    std::vector<std::string> positional;
    std::map<std::string, std::string> kv;
    int line_no = 0;
};

[[noreturn]] void fail(int line_no, const std::string& msg) {
    throw FeederError("feeder line " + std::to_string(line_no) + ": " + msg);
}

double to_double(const Tok& t, const std::string& s) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) fail(t.line_no, "malformed number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(t.line_no, "malformed number '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(t.line_no, "number out of range '" + s + "'");
    }
}

std::vector<double> to_doubles(const Tok& t, const std::string& s) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) out.push_back(to_double(t, item));
    return out;
}

std::string need(const Tok& t, const std::string& key) {
    auto it = t.kv.find(key);
    if (it == t.kv.end()) fail(t.line_no, "missing " + key + "=");
    return it->second;
}

std::array<bool, 3> parse_phases(const Tok& t, const std::string& s) {
    std::array<bool, 3> ph{false, false, false};
    for (char c : s) {
        switch (std::tolower(c)) {
            case 'a': ph[0] = true; break;
            case 'b': ph[1] = true; break;
            case 'c': ph[2] = true; break;
            default: fail(t.line_no, std::string("unknown phase '") + c + "'");
        }
    }
    return ph;
}

std::array<double, 3> parse_triplet(const Tok& t, const std::string& s) {
    auto v = to_doubles(t, s);
    if (v.size() != 3) fail(t.line_no, "expected 3 comma-separated values, got " +
                                           std::to_string(v.size()));
    return {v[0], v[1], v[2]};
}

LoadConn parse_conn(const Tok& t, const std::string& s) {
    if (s == "y" || s == "wye") return LoadConn::Wye;
    if (s == "d" || s == "delta") return LoadConn::Delta;
    fail(t.line_no, "unknown connection '" + s + "' (expected y or d)");
}

LoadModel parse_model(const Tok& t, const std::string& s) {
    if (s == "pq") return LoadModel::PQ;
    if (s == "z") return LoadModel::Z;
    if (s == "i") return LoadModel::I;
    fail(t.line_no, "unknown load model '" + s + "' (expected pq, z, or i)");
}

} // namespace

int FeederModel::bus_index(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(buses.size()); ++i)
        if (buses[i].id == id) return i;
    return -1;
}

FeederModel parse_feeder(const std::string& text) {
    FeederModel f;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;

    std::vector<Tok> toks;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        Tok t;
        t.line_no = line_no;
        std::string word;
        while (ls >> word) {
            const auto eq = word.find('=');
            if (t.keyword.empty())
                t.keyword = word;
            else if (eq == std::string::npos)
                t.positional.push_back(word);
            else
                t.kv[word.substr(0, eq)] = word.substr(eq + 1);
        }
        if (!t.keyword.empty()) toks.push_back(std::move(t));
    }

    for (const Tok& t : toks) {
        if (t.keyword == "feeder") {
            if (auto it = t.kv.find("source"); it != t.kv.end()) f.source_bus = it->second;
            if (auto it = t.kv.find("base_kva"); it != t.kv.end())
                f.base_kva = to_double(t, it->second);
            if (auto it = t.kv.find("vsource_pu"); it != t.kv.end())
                f.vsource_pu = to_double(t, it->second);
        } else if (t.keyword == "bus") {
            if (t.positional.size() != 1) fail(t.line_no, "bus needs exactly one id");
            FeederBus b;
            b.id = t.positional[0];
            b.kv_ll = to_double(t, need(t, "kv_ll"));
            b.phases = parse_phases(t, need(t, "phases"));
            if (f.bus_index(b.id) >= 0) fail(t.line_no, "duplicate bus " + b.id);
            f.buses.push_back(std::move(b));
        } else if (t.keyword == "linecode") {
            if (t.positional.size() != 1) fail(t.line_no, "linecode needs exactly one id");
            LineCode lc;
            lc.id = t.positional[0];
            lc.phases = parse_phases(t, need(t, "phases"));
            const auto r = to_doubles(t, need(t, "r"));
            const auto x = to_doubles(t, need(t, "x"));
            std::vector<int> present;
            for (int p = 0; p < 3; ++p)
                if (lc.phases[p]) present.push_back(p);
            const size_t want = present.size() * (present.size() + 1) / 2;
            if (r.size() != want || x.size() != want)
                fail(t.line_no, "impedance matrix needs " + std::to_string(want) +
                                    " upper-triangular entries, got r:" + std::to_string(r.size()) +
                                    " x:" + std::to_string(x.size()));
            size_t k = 0;
            for (size_t i = 0; i < present.size(); ++i)
                for (size_t j = i; j < present.size(); ++j, ++k) {
                    const cplx z(r[k], x[k]);
                    lc.z_per_mile[present[i]][present[j]] = z;
                    lc.z_per_mile[present[j]][present[i]] = z;
                }
            f.linecodes.push_back(std::move(lc));
        } else if (t.keyword == "line" || t.keyword == "switch" || t.keyword == "transformer") {
            if (t.positional.size() != 2) fail(t.line_no, t.keyword + " needs from and to buses");
            FeederBranch br;
            br.from = t.positional[0];
            br.to = t.positional[1];
            br.line_no = t.line_no;
            if (t.keyword == "line") {
                br.kind = BranchKind::Line;
                br.code = need(t, "code");
                br.length_ft = to_double(t, need(t, "length"));
            } else if (t.keyword == "switch") {
                br.kind = BranchKind::Switch;
                const std::string st = need(t, "state");
                if (st != "closed" && st != "open") fail(t.line_no, "switch state must be closed|open");
                br.closed = st == "closed";
            } else {
                br.kind = BranchKind::Transformer;
                br.kva = to_double(t, need(t, "kva"));
                br.kv_hi = to_double(t, need(t, "kv_hi"));
                br.kv_lo = to_double(t, need(t, "kv_lo"));
                br.r_pct = to_double(t, need(t, "r_pct"));
                br.x_pct = to_double(t, need(t, "x_pct"));
                if (br.kva <= 0 || br.kv_hi <= 0 || br.kv_lo <= 0)
                    fail(t.line_no, "transformer ratings must be positive");
            }
            f.branches.push_back(std::move(br));
        } else if (t.keyword == "regulator") {
            if (t.positional.size() != 2) fail(t.line_no, "regulator needs from and to buses");
            RegulatorSpec rg;
            rg.from = t.positional[0];
            rg.to = t.positional[1];
            if (auto it = t.kv.find("ratio_a"); it != t.kv.end()) rg.ratio[0] = to_double(t, it->second);
            if (auto it = t.kv.find("ratio_b"); it != t.kv.end()) rg.ratio[1] = to_double(t, it->second);
            if (auto it = t.kv.find("ratio_c"); it != t.kv.end()) rg.ratio[2] = to_double(t, it->second);
            f.regulators.push_back(std::move(rg));
        } else if (t.keyword == "capacitor") {
            if (t.positional.size() != 1) fail(t.line_no, "capacitor needs a bus");
            CapacitorSpec cp;
            cp.bus = t.positional[0];
            const auto ph = parse_phases(t, need(t, "phases"));
            const auto vals = to_doubles(t, need(t, "kvar"));
            size_t k = 0;
            for (int p = 0; p < 3; ++p)
                if (ph[p]) {
                    if (k >= vals.size()) fail(t.line_no, "kvar list shorter than phase list");
                    cp.kvar[p] = vals[k++];
                }
            if (k != vals.size()) fail(t.line_no, "kvar list longer than phase list");
            f.capacitors.push_back(std::move(cp));
        } else if (t.keyword == "load" || t.keyword == "distributed_load") {
            const bool dist = t.keyword == "distributed_load";
            if (t.positional.size() != (dist ? 2u : 1u))
                fail(t.line_no, t.keyword + " has wrong bus arguments");
            const LoadConn conn = parse_conn(t, need(t, "conn"));
            const LoadModel model = parse_model(t, need(t, "model"));
            const auto kw = parse_triplet(t, need(t, "kw"));
            const auto kvar = parse_triplet(t, need(t, "kvar"));
            if (dist) {
                f.distributed_loads.push_back(
                    DistributedLoadSpec{t.positional[0], t.positional[1], conn, model, kw, kvar});
            } else {
                f.loads.push_back(LoadSpec{t.positional[0], conn, model, kw, kvar});
            }
        } else {
            fail(t.line_no, "unknown section '" + t.keyword + "'");
        }
    }

    // Reference and topology validation.
    if (f.buses.empty()) throw FeederError("feeder: no buses defined");
    if (f.source_bus.empty()) throw FeederError("feeder: no source bus defined");
    if (f.bus_index(f.source_bus) < 0)
        throw FeederError("feeder: source bus " + f.source_bus + " is not defined");

    auto check_bus = [&](const std::string& id, int line_no_, const char* what) {
        if (f.bus_index(id) < 0)
            fail(line_no_, std::string(what) + " references unknown bus " + id);
    };
    for (const auto& br : f.branches) {
        check_bus(br.from, br.line_no, "branch");
        check_bus(br.to, br.line_no, "branch");
        if (br.kind == BranchKind::Line) {
            bool found = false;
            for (const auto& lc : f.linecodes) found = found || lc.id == br.code;
            if (!found) fail(br.line_no, "line references unknown linecode " + br.code);
        }
    }
    for (const auto& rg : f.regulators) {
        bool found = false;
        for (const auto& br : f.branches)
            found = found || (br.from == rg.from && br.to == rg.to);
        if (!found)
            throw FeederError("regulator " + rg.from + "-" + rg.to +
                              " does not match any branch");
    }
    for (const auto& cp : f.capacitors)
        if (f.bus_index(cp.bus) < 0)
            throw FeederError("capacitor references unknown bus " + cp.bus);
    for (const auto& ld : f.loads)
        if (f.bus_index(ld.bus) < 0)
            throw FeederError("load references unknown bus " + ld.bus);
    for (const auto& dl : f.distributed_loads)
        if (f.bus_index(dl.from) < 0 || f.bus_index(dl.to) < 0)
            throw FeederError("distributed_load references unknown bus " + dl.from + " or " + dl.to);

    // Connectivity and radiality over closed branches.
    const int nb = static_cast<int>(f.buses.size());
    std::vector<std::vector<int>> adj(nb);
    int closed_edges = 0;
    for (int e = 0; e < static_cast<int>(f.branches.size()); ++e) {
        const auto& br = f.branches[e];
        if (br.kind == BranchKind::Switch && !br.closed) continue;
        ++closed_edges;
        adj[f.bus_index(br.from)].push_back(f.bus_index(br.to));
        adj[f.bus_index(br.to)].push_back(f.bus_index(br.from));
    }
    std::vector<bool> seen(nb, false);
    std::vector<int> stack{f.bus_index(f.source_bus)};
    seen[stack[0]] = true;
    int reached = 0;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        ++reached;
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
    }
    if (reached != nb) {
        std::string missing;
        for (int i = 0; i < nb; ++i)
            if (!seen[i]) missing += (missing.empty() ? "" : ", ") + f.buses[i].id;
        throw FeederError("feeder: buses disconnected from source " + f.source_bus + ": " +
                          missing);
    }
    if (closed_edges != nb - 1)
        throw FeederError("feeder: network is not radial (" + std::to_string(closed_edges) +
                          " closed branches for " + std::to_string(nb) + " buses)");

    return f;
}

FeederModel parse_feeder_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FeederError("cannot open feeder file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_feeder(ss.str());
}

namespace {

struct TreeBranch {
    const FeederBranch* spec;
    int parent, child;       // bus indices
    bool forward;            // written orientation matches parent->child
    const RegulatorSpec* reg = nullptr;
    std::array<std::array<cplx, 3>, 3> z{}; // line: series ohms; transformer: diag on low side
    double turns = 1.0;                     // transformer per-phase ratio hi/lo
    PhaseArray i_dn{};                      // current at the child side, amps
};

struct SolverState {
    const FeederModel& f;
    std::vector<int> order;           // BFS bus order from the source
    std::vector<int> parent_branch;   // per bus, index into tree; -1 for source
    std::vector<TreeBranch> tree;
    std::vector<std::vector<std::pair<const LoadSpec*, double>>> bus_loads; // load, scale
    explicit SolverState(const FeederModel& model) : f(model) {}
};

double phase_nominal_v(const FeederBus& b) { return b.kv_ll * 1000.0 / kSqrt3; }

SolverState build_state(const FeederModel& f, std::vector<LoadSpec>& dist_storage) {
    SolverState st(f);
    const int nb = static_cast<int>(f.buses.size());

    std::vector<std::vector<std::pair<int, int>>> adj(nb); // (bus, branch index)
    for (int e = 0; e < static_cast<int>(f.branches.size()); ++e) {
        const auto& br = f.branches[e];
        if (br.kind == BranchKind::Switch && !br.closed) continue;
        adj[f.bus_index(br.from)].push_back({f.bus_index(br.to), e});
        adj[f.bus_index(br.to)].push_back({f.bus_index(br.from), e});
    }

    st.parent_branch.assign(nb, -1);
    std::vector<bool> seen(nb, false);
    const int root = f.bus_index(f.source_bus);
    seen[root] = true;
    std::vector<int> queue{root};
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        const int u = queue[qi];
        st.order.push_back(u);
        for (const auto& [v, e] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            const FeederBranch& br = f.branches[e];
            TreeBranch tb;
            tb.spec = &br;
            tb.parent = u;
            tb.child = v;
            tb.forward = f.bus_index(br.from) == u;
            if (!tb.forward && br.kind != BranchKind::Line && br.kind != BranchKind::Switch)
                throw FeederError("branch " + br.from + "-" + br.to +
                                  " must be written parent-to-child");
            if (br.kind == BranchKind::Line) {
                const LineCode* lc = nullptr;
                for (const auto& c : f.linecodes)
                    if (c.id == br.code) lc = &c;
                const double miles = br.length_ft / 5280.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) tb.z[i][j] = lc->z_per_mile[i][j] * miles;
            } else if (br.kind == BranchKind::Transformer) {
                tb.turns = br.kv_hi / br.kv_lo;
                const double zbase_lo = br.kv_lo * br.kv_lo * 1000.0 / br.kva;
                const cplx z = cplx(br.r_pct, br.x_pct) / 100.0 * zbase_lo;
                for (int p = 0; p < 3; ++p) tb.z[p][p] = z;
            }
            for (const auto& rg : f.regulators)
                if (rg.from == br.from && rg.to == br.to) tb.reg = &rg;
            st.parent_branch[v] = static_cast<int>(st.tree.size());
            st.tree.push_back(tb);
            queue.push_back(v);
        }
    }

    // Distributed loads approximated as half at each terminal bus.
    dist_storage.clear();
    for (const auto& dl : f.distributed_loads) {
        LoadSpec half;
        half.conn = dl.conn;
        half.model = dl.model;
        for (int p = 0; p < 3; ++p) {
            half.kw[p] = dl.kw[p] / 2.0;
            half.kvar[p] = dl.kvar[p] / 2.0;
        }
        half.bus = dl.from;
        dist_storage.push_back(half);
        half.bus = dl.to;
        dist_storage.push_back(half);
    }

    st.bus_loads.assign(nb, {});
    for (const auto& ld : f.loads) st.bus_loads[f.bus_index(ld.bus)].push_back({&ld, 1.0});
    for (const auto& ld : dist_storage) st.bus_loads[f.bus_index(ld.bus)].push_back({&ld, 1.0});
    return st;
}

// Current drawn by one load given the present bus voltage.
void accumulate_load_current(const FeederBus& bus, const LoadSpec& ld, double scale,
                             const PhaseArray& v, PhaseArray& i_out) {
    const double vnom_ph = phase_nominal_v(bus);
    const double vnom_ll = bus.kv_ll * 1000.0;
    if (ld.conn == LoadConn::Wye) {
        for (int p = 0; p < 3; ++p) {
            const cplx s(ld.kw[p] * 1000.0 * scale, ld.kvar[p] * 1000.0 * scale);
            if (s == cplx(0.0, 0.0)) continue;
            if (!bus.phases[p])
                throw FeederError("load at bus " + bus.id + " uses absent phase " +
                                  std::string(1, "abc"[p]));
            switch (ld.model) {
                case LoadModel::PQ:
                    i_out[p] += std::conj(s / v[p]);
                    break;
                case LoadModel::Z:
                    i_out[p] += v[p] * std::conj(s) / (vnom_ph * vnom_ph);
                    break;
                case LoadModel::I: {
                    const double mag = std::abs(s) / vnom_ph;
                    const double ang = std::arg(v[p]) - std::arg(s);
                    i_out[p] += std::polar(mag, ang);
                    break;
                }
            }
        }
    } else {
        static constexpr int legs[3][2] = {{0, 1}, {1, 2}, {2, 0}}; // ab, bc, ca
        for (int leg = 0; leg < 3; ++leg) {
            const cplx s(ld.kw[leg] * 1000.0 * scale, ld.kvar[leg] * 1000.0 * scale);
            if (s == cplx(0.0, 0.0)) continue;
            const int p = legs[leg][0], q = legs[leg][1];
            if (!bus.phases[p] || !bus.phases[q])
                throw FeederError("delta load at bus " + bus.id + " uses absent phases");
            const cplx vpq = v[p] - v[q];
            cplx ileg;
            switch (ld.model) {
                case LoadModel::PQ:
                    ileg = std::conj(s / vpq);
                    break;
                case LoadModel::Z:
                    ileg = vpq * std::conj(s) / (vnom_ll * vnom_ll);
                    break;
                case LoadModel::I: {
                    const double mag = std::abs(s) / vnom_ll;
                    const double ang = std::arg(vpq) - std::arg(s);
                    ileg = std::polar(mag, ang);
                    break;
                }
            }
            i_out[p] += ileg;
            i_out[q] -= ileg;
        }
    }
}

} // namespace

PowerFlowResult power_flow(const FeederModel& f, const ExtraInjections& extra,
                           const PowerFlowOptions& opts) {
    std::vector<LoadSpec> dist_storage;
    SolverState st = build_state(f, dist_storage);
    const int nb = static_cast<int>(f.buses.size());
    const int root = f.bus_index(f.source_bus);

    for (const auto& [bus_id, s] : extra) {
        (void)s;
        if (f.bus_index(bus_id) < 0)
            throw FeederError("injection references unknown bus " + bus_id);
    }

    // Flat balanced start at each bus's own nominal.
    std::vector<PhaseArray> v(nb);
    const double ang[3] = {0.0, -2.0 * std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0};
    for (int b = 0; b < nb; ++b)
        for (int p = 0; p < 3; ++p)
            v[b][p] = f.buses[b].phases[p]
                          ? std::polar(f.vsource_pu * phase_nominal_v(f.buses[b]), ang[p])
                          : cplx(0.0, 0.0);

    std::vector<PhaseArray> i_bus(nb);
    PowerFlowResult res;
    res.v_pu.assign(nb, PhaseArray{});

    auto compute_bus_currents = [&]() {
        for (int b = 0; b < nb; ++b) {
            i_bus[b] = PhaseArray{};
            const FeederBus& bus = f.buses[b];
            if (opts.base_loads_on)
                for (const auto& [ld, scale] : st.bus_loads[b])
                    accumulate_load_current(bus, *ld, scale, v[b], i_bus[b]);
            for (const auto& cp : f.capacitors) {
                if (f.bus_index(cp.bus) != b) continue;
                const double vnom = phase_nominal_v(bus);
                for (int p = 0; p < 3; ++p) {
                    if (cp.kvar[p] == 0.0) continue;
                    const double bsus = cp.kvar[p] * 1000.0 / (vnom * vnom);
                    i_bus[b][p] += v[b][p] * cplx(0.0, bsus);
                }
            }
            if (auto it = extra.find(bus.id); it != extra.end()) {
                LoadSpec ex;
                ex.bus = bus.id;
                ex.conn = LoadConn::Wye;
                ex.model = LoadModel::PQ;
                for (int p = 0; p < 3; ++p) {
                    ex.kw[p] = it->second[p].real();
                    ex.kvar[p] = it->second[p].imag();
                }
                accumulate_load_current(bus, ex, 1.0, v[b], i_bus[b]);
            }
        }
    };

    int iter = 0;
    double mismatch = 0.0;
    for (iter = 1; iter <= opts.max_iterations; ++iter) {
        compute_bus_currents();

        // Backward: aggregate branch currents toward the source.
        std::vector<PhaseArray> i_acc = i_bus;
        for (int k = static_cast<int>(st.order.size()) - 1; k >= 1; --k) {
            const int b = st.order[k];
            TreeBranch& tb = st.tree[st.parent_branch[b]];
            tb.i_dn = i_acc[b];
            PhaseArray up = tb.i_dn;
            if (tb.spec->kind == BranchKind::Transformer)
                for (int p = 0; p < 3; ++p) up[p] /= tb.turns;
            if (tb.reg)
                for (int p = 0; p < 3; ++p) up[p] *= tb.reg->ratio[p];
            for (int p = 0; p < 3; ++p) i_acc[tb.parent][p] += up[p];
        }

        // Forward: push voltages away from the source.
        mismatch = 0.0;
        for (int k = 1; k < static_cast<int>(st.order.size()); ++k) {
            const int b = st.order[k];
            const TreeBranch& tb = st.tree[st.parent_branch[b]];
            PhaseArray vp = v[tb.parent];
            if (tb.reg)
                for (int p = 0; p < 3; ++p) vp[p] *= tb.reg->ratio[p];
            PhaseArray vn{};
            switch (tb.spec->kind) {
                case BranchKind::Switch:
                    vn = vp;
                    break;
                case BranchKind::Line:
                    for (int p = 0; p < 3; ++p) {
                        cplx drop = 0.0;
                        for (int q = 0; q < 3; ++q) drop += tb.z[p][q] * tb.i_dn[q];
                        vn[p] = vp[p] - drop;
                    }
                    break;
                case BranchKind::Transformer:
                    for (int p = 0; p < 3; ++p)
                        vn[p] = vp[p] / tb.turns - tb.z[p][p] * tb.i_dn[p];
                    break;
            }
            const double vbase = phase_nominal_v(f.buses[b]);
            for (int p = 0; p < 3; ++p) {
                if (!f.buses[b].phases[p]) {
                    vn[p] = cplx(0.0, 0.0);
                    continue;
                }
                mismatch = std::max(mismatch, std::abs(vn[p] - v[b][p]) / vbase);
                if (!std::isfinite(vn[p].real()) || !std::isfinite(vn[p].imag()) ||
                    std::abs(vn[p]) < 0.05 * vbase)
                    throw FeederError("power_flow: voltage collapse at bus " + f.buses[b].id +
                                      " phase " + std::string(1, "abc"[p]));
            }
            v[b] = vn;
        }
        res.residual_history.push_back(mismatch);
        if (mismatch < opts.tol_pu) break;
    }
    if (mismatch >= opts.tol_pu)
        throw FeederError("power_flow: no convergence after " +
                          std::to_string(opts.max_iterations) +
                          " iterations (residual " + std::to_string(mismatch) + " pu)");

    // Final currents consistent with the converged voltages.
    compute_bus_currents();
    std::vector<PhaseArray> i_acc = i_bus;
    for (int k = static_cast<int>(st.order.size()) - 1; k >= 1; --k) {
        const int b = st.order[k];
        TreeBranch& tb = st.tree[st.parent_branch[b]];
        tb.i_dn = i_acc[b];
        PhaseArray up = tb.i_dn;
        if (tb.spec->kind == BranchKind::Transformer)
            for (int p = 0; p < 3; ++p) up[p] /= tb.turns;
        if (tb.reg)
            for (int p = 0; p < 3; ++p) up[p] *= tb.reg->ratio[p];
        for (int p = 0; p < 3; ++p) i_acc[tb.parent][p] += up[p];
    }

    res.iterations = iter;
    res.max_update_pu = mismatch;
    for (int b = 0; b < nb; ++b) {
        const double vbase = phase_nominal_v(f.buses[b]);
        for (int p = 0; p < 3; ++p)
            res.v_pu[b][p] = f.buses[b].phases[p] ? v[b][p] / vbase : cplx(0.0, 0.0);
    }
    cplx s_src = 0.0;
    for (int p = 0; p < 3; ++p) s_src += v[root][p] * std::conj(i_acc[root][p]);
    res.source_injection_kva = s_src / 1000.0;

    cplx s_load = 0.0;
    for (int b = 0; b < nb; ++b)
        for (int p = 0; p < 3; ++p) s_load += v[b][p] * std::conj(i_bus[b][p]);
    res.total_load_kva = s_load / 1000.0;

    cplx s_loss = 0.0;
    for (const TreeBranch& tb : st.tree) {
        PhaseArray vp = v[tb.parent];
        if (tb.reg)
            for (int p = 0; p < 3; ++p) vp[p] *= tb.reg->ratio[p];
        for (int p = 0; p < 3; ++p) {
            const cplx s_in = tb.spec->kind == BranchKind::Transformer
                                  ? vp[p] / tb.turns * std::conj(tb.i_dn[p])
                                  : vp[p] * std::conj(tb.i_dn[p]);
            const cplx s_out = v[tb.child][p] * std::conj(tb.i_dn[p]);
            s_loss += s_in - s_out;
        }
    }
    res.total_loss_kva = s_loss / 1000.0;
    return res;
}

VoltageTrace time_series_flow(const FeederModel& f, const InjectionMap& map,
                              const Schedule& sched, bool base_loads_on,
                              const PowerFlowOptions& opts) {
    const int n = sched.n_slots();
    VoltageTrace trace;
    for (const auto& b : f.buses) {
        trace.bus_ids.push_back(b.id);
        trace.phase_masks.push_back(b.phases);
    }
    trace.v.reserve(n);

    auto add_device = [&](ExtraInjections& inj, const InjectionPoint& pt, double kw) {
        if (kw == 0.0) return;
        int nph = 0;
        for (bool on : pt.phases) nph += on ? 1 : 0;
        if (nph == 0) throw FeederError("injection point at bus " + pt.bus + " has no phases");
        const double pf = std::clamp(pt.power_factor, 0.05, 1.0);
        const double tanphi = std::tan(std::acos(pf));
        const double p_per = kw / nph;
        for (int p = 0; p < 3; ++p)
            if (pt.phases[p]) inj[pt.bus][p] += cplx(p_per, p_per * tanphi);
    };

    PowerFlowOptions slot_opts = opts;
    slot_opts.base_loads_on = base_loads_on;
    for (int t = 0; t < n; ++t) {
        ExtraInjections inj;
        add_device(inj, map.pv, -(sched.pv_kw[t] - sched.pv_spill_kw[t]));
        add_device(inj, map.bess, sched.bess_charge_kw[t] - sched.bess_discharge_kw[t]);
        add_device(inj, map.pev, sched.pev_charge_kw[t] - sched.pev_discharge_kw[t]);
        add_device(inj, map.building, sched.hvac_kw[t] + sched.lighting_kw[t] + sched.misc_kw[t]);
        try {
            trace.v.push_back(power_flow(f, inj, slot_opts).v_pu);
        } catch (const FeederError& e) {
            throw FeederError("slot " + std::to_string(t) + ": " + e.what());
        }
    }
    return trace;
}

std::optional<double> VdiReport::value(const std::string& bus, int phase) const {
    for (size_t i = 0; i < bus_ids.size(); ++i)
        if (bus_ids[i] == bus) return per_phase[i][phase];
    return std::nullopt;
}

std::optional<double> VdiReport::mean(const std::string& bus) const {
    for (size_t i = 0; i < bus_ids.size(); ++i)
        if (bus_ids[i] == bus) return phase_mean[i];
    return std::nullopt;
}

VdiReport vdi(const VoltageTrace& trace, double v_nominal) {
    const int n = trace.n_slots();
    if (n == 0) throw std::domain_error("vdi: empty voltage trace");
    VdiReport rep;
    rep.nominal_voltage_pu = v_nominal;
    rep.bus_ids = trace.bus_ids;
    const int nb = static_cast<int>(trace.bus_ids.size());
    rep.per_phase.resize(nb);
    rep.phase_mean.assign(nb, 0.0);
    for (int b = 0; b < nb; ++b) {
        double mean_acc = 0.0;
        int nph = 0;
        for (int p = 0; p < 3; ++p) {
            if (!trace.phase_masks[b][p]) continue;
            double acc = 0.0;
            for (int t = 0; t < n; ++t) {
                const double dev = std::abs(trace.v[t][b][p]) - v_nominal;
                acc += dev * dev;
            }
            const double val = std::sqrt(acc / n);
            rep.per_phase[b][p] = val;
            mean_acc += val;
            ++nph;
        }
        rep.phase_mean[b] = nph > 0 ? mean_acc / nph : 0.0;
    }
    return rep;
}

} // namespace mgrid
