#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvtariff/domain.hpp"

namespace lvtariff {

using Complex = std::complex<double>;
using PhaseMatrix = std::array<std::array<Complex, 3>, 3>;  // row-major ohms

// Radial three-phase feeder. Node 0 is the slack bus; the edge touching it is
// the feeder head, whose ampacity bounds thermal loading checks.
struct Network {
    struct Edge {
        int from = 0;
        int to = 0;
        PhaseMatrix z_ohm{};
    };
    struct Tap {
        std::string customer_id;
        int node = 0;
        int phase = 0;  // 0, 1, 2 for a, b, c
    };

    int num_nodes = 0;
    std::vector<Edge> edges;
    std::vector<Tap> taps;
    double head_rating_a = 0.0;
    double nominal_voltage_v = 230.0;  // line-to-neutral
    double v0_pu = 1.0;
    double s_base_kva = 100.0;  // power-mismatch reference

    // rejects non-tree topologies, bad phases, duplicate or dangling taps
    void validate() const;
};

// Accepts 3x3 impedance blocks directly, or 4x4 with an explicit neutral that
// is folded into the phase matrix. Per-km impedances scale by `length_km`.
Network network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const Network& net);
Network read_network(const std::string& path);
void write_network(const std::string& path, const Network& net);

struct SnapshotResult {
    std::vector<std::array<Complex, 3>> node_voltage_v;    // per node
    std::vector<std::array<Complex, 3>> branch_current_a;  // per edge, parent->child
    std::array<double, 3> head_current_a{};                // per-phase magnitude
    bool converged = false;
    int iterations = 0;
};

// Backward/forward sweep with constant-power unity-pf single-phase loads.
// Positive injection = consumption, negative = export.
SnapshotResult solve_snapshot(const Network& net, const std::map<std::string, double>& injections_kw);

// Real-power mismatch |slack supply - loads - line losses| in pu of s_base.
double power_mismatch_pu(const Network& net, const std::map<std::string, double>& injections_kw,
                         const SnapshotResult& snap);

struct TimeseriesResult {
    int first_day = 1;
    int num_days = 0;
    std::vector<std::string> customer_ids;  // column order for voltage_pu
    std::vector<double> voltage_pu;         // ((day*48)+slot)*n_customers + c
    std::vector<double> head_current_a;     // per slot, max over phases
    std::array<std::vector<double>, 3> head_phase_a;
    std::vector<std::pair<int, int>> non_converged;  // (day, slot)

    int n_slots() const { return num_days * kSlotsPerDay; }
    int slot_index(int day, int slot) const;
    double voltage_at(int day, int slot, int customer) const;
};

// One snapshot per covered slot. Non-converged slots are recorded and the
// sweep continues.
TimeseriesResult run_timeseries(const Network& net, const std::map<std::string, SlotGrid>& injections_kw);

struct VoltageReport {
    std::vector<std::string> customer_ids;
    std::vector<int> violating_days;
    std::vector<bool> flagged;
    int covered_days = 0;

    int flagged_count() const;
};

// A customer's day is violating when any slot leaves [0.95, 1.05] pu; the
// customer is flagged when violating days exceed 5% of the covered days.
VoltageReport detect_voltage_problems(const TimeseriesResult& ts);

struct ThermalReport {
    bool overloaded = false;
    double worst_a = 0.0;
    long slots_over = 0;
};

ThermalReport detect_thermal_overload(const std::vector<double>& head_currents_a, double rating_a);

void write_timeseries_csv(const std::string& path, const TimeseriesResult& ts);

}  // namespace lvtariff
