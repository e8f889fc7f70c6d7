#include "lvtariff/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"

namespace lvtariff {

namespace {

std::array<Complex, 3> slack_voltage(const Network& net) {
    const double mag = net.v0_pu * net.nominal_voltage_v;
    const double rad = 2.0 * std::numbers::pi / 3.0;
    return {Complex(mag, 0.0), std::polar(mag, -rad), std::polar(mag, rad)};
}

// Tree orientation: parents, BFS order and the inbound edge of every node.
struct Topology {
    std::vector<int> parent;
    std::vector<int> order;         // BFS from the slack, slack first
    std::vector<int> inbound_edge;  // edge index whose child is this node
    int head_edge = -1;             // edge incident to the slack
};

Topology orient(const Network& net) {
    std::vector<std::vector<std::pair<int, int>>> adj(net.num_nodes);  // (neighbor, edge)
    for (int e = 0; e < static_cast<int>(net.edges.size()); ++e) {
        adj[net.edges[e].from].push_back({net.edges[e].to, e});
        adj[net.edges[e].to].push_back({net.edges[e].from, e});
    }
    Topology t;
    t.parent.assign(net.num_nodes, -1);
    t.inbound_edge.assign(net.num_nodes, -1);
    std::vector<char> seen(net.num_nodes, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
        const int n = q.front();
        q.pop();
        t.order.push_back(n);
        for (auto [m, e] : adj[n]) {
            if (seen[m]) continue;
            seen[m] = 1;
            t.parent[m] = n;
            t.inbound_edge[m] = e;
            if (n == 0) t.head_edge = e;
            q.push(m);
        }
    }
    return t;
}

std::array<Complex, 3> mat_vec(const PhaseMatrix& z, const std::array<Complex, 3>& i) {
    std::array<Complex, 3> out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out[r] += z[r][c] * i[c];
    }
    return out;
}

// Shared sweep core over pre-aggregated nodal powers in watts.
SnapshotResult sweep(const Network& net, const Topology& topo,
                     const std::vector<std::array<double, 3>>& p_watts) {
    const double v_base = net.nominal_voltage_v;
    SnapshotResult out;
    out.node_voltage_v.assign(net.num_nodes, slack_voltage(net));
    out.branch_current_a.assign(net.edges.size(), {});

    std::vector<std::array<Complex, 3>> accum(net.num_nodes);
    for (out.iterations = 1; out.iterations <= 100; ++out.iterations) {
        // backward: load currents plus child branches, leaves first
        for (int k = net.num_nodes - 1; k >= 0; --k) {
            const int n = topo.order[k];
            std::array<Complex, 3>& a = accum[n];  // child branches are already in
            for (int ph = 0; ph < 3; ++ph) {
                const Complex v = out.node_voltage_v[n][ph];
                if (std::abs(v) > 1e-6) a[ph] += std::conj(Complex(p_watts[n][ph], 0.0) / v);
            }
            if (n != 0) {
                for (int ph = 0; ph < 3; ++ph) {
                    out.branch_current_a[topo.inbound_edge[n]][ph] = a[ph];
                    accum[topo.parent[n]][ph] += a[ph];
                }
            }
        }
        // forward: propagate drops from the slack
        double dv_max = 0.0;
        for (int k = 1; k < net.num_nodes; ++k) {
            const int n = topo.order[k];
            const int e = topo.inbound_edge[n];
            const std::array<Complex, 3> drop = mat_vec(net.edges[e].z_ohm, out.branch_current_a[e]);
            for (int ph = 0; ph < 3; ++ph) {
                const Complex v_new = out.node_voltage_v[topo.parent[n]][ph] - drop[ph];
                dv_max = std::max(dv_max, std::abs(v_new - out.node_voltage_v[n][ph]));
                out.node_voltage_v[n][ph] = v_new;
            }
        }
        for (auto& a : accum) a = {};
        if (dv_max / v_base <= 1e-6) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, 100);

    if (topo.head_edge >= 0) {
        for (int ph = 0; ph < 3; ++ph) {
            out.head_current_a[ph] = std::abs(out.branch_current_a[topo.head_edge][ph]);
        }
    }
    return out;
}

std::vector<std::array<double, 3>> nodal_powers(const Network& net,
                                                const std::map<std::string, double>& injections_kw) {
    std::vector<std::array<double, 3>> p(net.num_nodes, {0.0, 0.0, 0.0});
    std::map<std::string, const Network::Tap*> taps;
    for (const Network::Tap& t : net.taps) taps[t.customer_id] = &t;
    for (const auto& [id, kw] : injections_kw) {
        auto it = taps.find(id);
        if (it == taps.end()) throw std::invalid_argument("unknown customer in injections: " + id);
        if (!std::isfinite(kw)) throw std::invalid_argument("non-finite injection for " + id);
        p[it->second->node][it->second->phase] += kw * 1000.0;
    }
    return p;
}

int parse_phase(const nlohmann::json& j) {
    const std::string s = j.get<std::string>();
    if (s == "a" || s == "A") return 0;
    if (s == "b" || s == "B") return 1;
    if (s == "c" || s == "C") return 2;
    throw ConfigError("network: phase must be a, b or c, got '" + s + "'");
}

PhaseMatrix impedance_from_json(const nlohmann::json& je) {
    const auto& r = je.at("r");
    const auto& x = je.at("x");
    if (!r.is_array() || !x.is_array() || r.size() != x.size() || (r.size() != 3 && r.size() != 4)) {
        throw ConfigError("network: r and x must both be 3x3 or 4x4 matrices");
    }
    const std::size_t n = r.size();
    std::vector<std::vector<Complex>> z(n, std::vector<Complex>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (r[i].size() != n || x[i].size() != n) throw ConfigError("network: ragged impedance matrix");
        for (std::size_t k = 0; k < n; ++k) {
            z[i][k] = Complex(r[i][k].get<double>(), x[i][k].get<double>());
        }
    }
    const double length = je.value("length_km", 1.0);
    if (length <= 0.0) throw ConfigError("network: length_km must be positive");
    for (auto& row : z) {
        for (Complex& v : row) v *= length;
    }
    PhaseMatrix out{};
    if (n == 3) {
        for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < 3; ++k) out[i][k] = z[i][k];
        }
        return out;
    }
    // fold the explicit neutral into the phase block
    if (std::abs(z[3][3]) == 0.0) throw ConfigError("network: neutral self-impedance is zero");
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) out[i][k] = z[i][k] - z[i][3] * z[3][k] / z[3][3];
    }
    return out;
}

}  // namespace

void Network::validate() const {
    if (num_nodes < 2) throw ConfigError("network: needs at least a slack and one node");
    if (static_cast<int>(edges.size()) != num_nodes - 1) {
        throw ConfigError("network: a radial feeder has exactly nodes-1 edges");
    }
    for (const Edge& e : edges) {
        if (e.from < 0 || e.from >= num_nodes || e.to < 0 || e.to >= num_nodes || e.from == e.to) {
            throw ConfigError("network: edge endpoints out of range");
        }
        for (int i = 0; i < 3; ++i) {
            if (e.z_ohm[i][i].real() <= 0.0) throw ConfigError("network: line resistance must be positive");
            for (int k = 0; k < 3; ++k) {
                if (!std::isfinite(e.z_ohm[i][k].real()) || !std::isfinite(e.z_ohm[i][k].imag())) {
                    throw ConfigError("network: non-finite impedance");
                }
                if (std::abs(e.z_ohm[i][k] - e.z_ohm[k][i]) > 1e-9 * (1.0 + std::abs(e.z_ohm[i][k]))) {
                    throw ConfigError("network: impedance matrices must be symmetric");
                }
            }
        }
    }
    Topology topo = orient(*this);
    if (static_cast<int>(topo.order.size()) != num_nodes) {
        throw ConfigError("network: graph is not connected");
    }
    std::map<std::string, int> seen;
    for (const Tap& t : taps) {
        if (t.customer_id.empty()) throw ConfigError("network: tap with empty customer id");
        if (t.node <= 0 || t.node >= num_nodes) {
            throw ConfigError("network: customer " + t.customer_id + " taps an invalid node");
        }
        if (t.phase < 0 || t.phase > 2) throw ConfigError("network: bad phase for " + t.customer_id);
        if (++seen[t.customer_id] > 1) throw ConfigError("network: duplicate tap for " + t.customer_id);
    }
    if (head_rating_a <= 0.0) throw ConfigError("network: head_rating_a must be positive");
    if (nominal_voltage_v <= 0.0) throw ConfigError("network: nominal_voltage_v must be positive");
    if (v0_pu <= 0.0) throw ConfigError("network: v0_pu must be positive");
    if (s_base_kva <= 0.0) throw ConfigError("network: s_base_kva must be positive");
}

Network network_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "network") throw DataError("network json: wrong kind");
    if (j.value("version", 0) != 1) throw DataError("network json: unsupported version");
    Network net;
    net.num_nodes = j.at("nodes").get<int>();
    for (const auto& je : j.at("edges")) {
        Network::Edge e;
        e.from = je.at("from").get<int>();
        e.to = je.at("to").get<int>();
        e.z_ohm = impedance_from_json(je);
        net.edges.push_back(e);
    }
    for (const auto& jc : j.at("customers")) {
        Network::Tap t;
        t.customer_id = jc.at("id").get<std::string>();
        t.node = jc.at("node").get<int>();
        t.phase = parse_phase(jc.at("phase"));
        net.taps.push_back(t);
    }
    net.head_rating_a = j.at("head_rating_a").get<double>();
    net.nominal_voltage_v = j.value("nominal_voltage_v", 230.0);
    net.v0_pu = j.value("v0_pu", 1.0);
    net.s_base_kva = j.value("s_base_kva", 100.0);
    net.validate();
    return net;
}

nlohmann::json network_to_json(const Network& net) {
    net.validate();
    nlohmann::json j;
    j["kind"] = "network";
    j["version"] = 1;
    j["nodes"] = net.num_nodes;
    j["edges"] = nlohmann::json::array();
    for (const Network::Edge& e : net.edges) {
        nlohmann::json je;
        je["from"] = e.from;
        je["to"] = e.to;
        nlohmann::json r = nlohmann::json::array();
        nlohmann::json x = nlohmann::json::array();
        for (int i = 0; i < 3; ++i) {
            nlohmann::json rr = nlohmann::json::array();
            nlohmann::json xr = nlohmann::json::array();
            for (int k = 0; k < 3; ++k) {
                rr.push_back(e.z_ohm[i][k].real());
                xr.push_back(e.z_ohm[i][k].imag());
            }
            r.push_back(rr);
            x.push_back(xr);
        }
        je["r"] = r;
        je["x"] = x;
        j["edges"].push_back(je);
    }
    j["customers"] = nlohmann::json::array();
    for (const Network::Tap& t : net.taps) {
        j["customers"].push_back({{"id", t.customer_id},
                                  {"node", t.node},
                                  {"phase", std::string(1, "abc"[t.phase])}});
    }
    j["head_rating_a"] = net.head_rating_a;
    j["nominal_voltage_v"] = net.nominal_voltage_v;
    j["v0_pu"] = net.v0_pu;
    j["s_base_kva"] = net.s_base_kva;
    return j;
}

Network read_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open network file: " + path);
    nlohmann::json j;
    in >> j;
    return network_from_json(j);
}

void write_network(const std::string& path, const Network& net) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write network file: " + path);
    out << network_to_json(net).dump(2) << "\n";
}

SnapshotResult solve_snapshot(const Network& net, const std::map<std::string, double>& injections_kw) {
    net.validate();
    const Topology topo = orient(net);
    return sweep(net, topo, nodal_powers(net, injections_kw));
}

double power_mismatch_pu(const Network& net, const std::map<std::string, double>& injections_kw,
                         const SnapshotResult& snap) {
    const Topology topo = orient(net);
    double supply_w = 0.0;
    if (topo.head_edge >= 0) {
        const std::array<Complex, 3> v0 = slack_voltage(net);
        for (int ph = 0; ph < 3; ++ph) {
            supply_w += (v0[ph] * std::conj(snap.branch_current_a[topo.head_edge][ph])).real();
        }
    }
    double loads_w = 0.0;
    for (const auto& [id, kw] : injections_kw) loads_w += kw * 1000.0;
    double losses_w = 0.0;
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const int child = topo.parent[net.edges[e].from] == net.edges[e].to ? net.edges[e].from
                                                                            : net.edges[e].to;
        const int parent = topo.parent[child];
        for (int ph = 0; ph < 3; ++ph) {
            const Complex dv = snap.node_voltage_v[parent][ph] - snap.node_voltage_v[child][ph];
            losses_w += (dv * std::conj(snap.branch_current_a[e][ph])).real();
        }
    }
    return std::abs(supply_w - loads_w - losses_w) / (net.s_base_kva * 1000.0);
}

int TimeseriesResult::slot_index(int day, int slot) const {
    if (day < first_day || day >= first_day + num_days || slot < 1 || slot > kSlotsPerDay) {
        throw std::out_of_range("timeseries index out of range");
    }
    return (day - first_day) * kSlotsPerDay + (slot - 1);
}

double TimeseriesResult::voltage_at(int day, int slot, int customer) const {
    return voltage_pu[static_cast<std::size_t>(slot_index(day, slot)) * customer_ids.size() + customer];
}

TimeseriesResult run_timeseries(const Network& net, const std::map<std::string, SlotGrid>& injections_kw) {
    net.validate();
    if (injections_kw.empty()) throw std::invalid_argument("run_timeseries: no injections");
    const Topology topo = orient(net);

    TimeseriesResult ts;
    const SlotGrid& ref = injections_kw.begin()->second;
    ts.first_day = ref.first_day;
    ts.num_days = ref.num_days;
    if (ts.num_days <= 0) throw std::invalid_argument("run_timeseries: empty injection span");

    std::vector<const SlotGrid*> grids;
    std::vector<int> node_of, phase_of;
    std::map<std::string, const Network::Tap*> taps;
    for (const Network::Tap& t : net.taps) taps[t.customer_id] = &t;
    for (const auto& [id, grid] : injections_kw) {
        auto it = taps.find(id);
        if (it == taps.end()) throw std::invalid_argument("unknown customer in injections: " + id);
        if (grid.first_day != ts.first_day || grid.num_days != ts.num_days) {
            throw std::invalid_argument("injection spans differ for " + id);
        }
        ts.customer_ids.push_back(id);
        grids.push_back(&grid);
        node_of.push_back(it->second->node);
        phase_of.push_back(it->second->phase);
    }

    const std::size_t n_cust = ts.customer_ids.size();
    ts.voltage_pu.assign(static_cast<std::size_t>(ts.n_slots()) * n_cust, 0.0);
    ts.head_current_a.assign(ts.n_slots(), 0.0);
    for (auto& v : ts.head_phase_a) v.assign(ts.n_slots(), 0.0);

    const double v_base = net.nominal_voltage_v;
    std::vector<std::array<double, 3>> p(net.num_nodes);
    for (int d = ts.first_day; d < ts.first_day + ts.num_days; ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            for (auto& row : p) row = {0.0, 0.0, 0.0};
            for (std::size_t c = 0; c < n_cust; ++c) {
                p[node_of[c]][phase_of[c]] += grids[c]->at(d, s) * 1000.0;
            }
            const SnapshotResult snap = sweep(net, topo, p);
            const int idx = ts.slot_index(d, s);
            if (!snap.converged) ts.non_converged.push_back({d, s});
            for (std::size_t c = 0; c < n_cust; ++c) {
                ts.voltage_pu[static_cast<std::size_t>(idx) * n_cust + c] =
                    std::abs(snap.node_voltage_v[node_of[c]][phase_of[c]]) / v_base;
            }
            double head = 0.0;
            for (int ph = 0; ph < 3; ++ph) {
                ts.head_phase_a[ph][idx] = snap.head_current_a[ph];
                head = std::max(head, snap.head_current_a[ph]);
            }
            ts.head_current_a[idx] = head;
        }
    }
    return ts;
}

int VoltageReport::flagged_count() const {
    int n = 0;
    for (bool f : flagged) n += f ? 1 : 0;
    return n;
}

VoltageReport detect_voltage_problems(const TimeseriesResult& ts) {
    VoltageReport rep;
    rep.customer_ids = ts.customer_ids;
    rep.covered_days = ts.num_days;
    const std::size_t n_cust = ts.customer_ids.size();
    rep.violating_days.assign(n_cust, 0);
    rep.flagged.assign(n_cust, false);
    for (std::size_t c = 0; c < n_cust; ++c) {
        for (int d = 0; d < ts.num_days; ++d) {
            for (int s = 0; s < kSlotsPerDay; ++s) {
                const double v = ts.voltage_pu[static_cast<std::size_t>(d * kSlotsPerDay + s) * n_cust + c];
                if (v < 0.95 || v > 1.05) {
                    rep.violating_days[c] += 1;
                    break;
                }
            }
        }
        rep.flagged[c] = rep.violating_days[c] > 0.05 * rep.covered_days;
    }
    return rep;
}

ThermalReport detect_thermal_overload(const std::vector<double>& head_currents_a, double rating_a) {
    if (head_currents_a.empty()) throw std::invalid_argument("detect_thermal_overload: empty series");
    if (rating_a <= 0.0) throw std::invalid_argument("detect_thermal_overload: rating must be positive");
    ThermalReport rep;
    for (double a : head_currents_a) {
        rep.worst_a = std::max(rep.worst_a, a);
        if (a > rating_a) rep.slots_over += 1;
    }
    rep.overloaded = rep.slots_over > 0;
    return rep;
}

void write_timeseries_csv(const std::string& path, const TimeseriesResult& ts) {
    std::string header = "day,slot,head_current_a,head_a,head_b,head_c";
    for (const std::string& id : ts.customer_ids) header += ",v_pu_" + id;
    CsvWriter w(path, header);
    for (int d = ts.first_day; d < ts.first_day + ts.num_days; ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            const int idx = ts.slot_index(d, s);
            w.field(d);
            w.field(s);
            w.field(ts.head_current_a[idx]);
            for (int ph = 0; ph < 3; ++ph) w.field(ts.head_phase_a[ph][idx]);
            for (std::size_t c = 0; c < ts.customer_ids.size(); ++c) {
                w.field(ts.voltage_pu[static_cast<std::size_t>(idx) * ts.customer_ids.size() + c]);
            }
            w.end_row();
        }
    }
    w.close();
}

}  // namespace lvtariff
