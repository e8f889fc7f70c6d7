#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lvtariff/domain.hpp"
#include "lvtariff/solver.hpp"

namespace lvtariff {

enum class Horizon { Daily, Monthly };

// One scheduling window for one customer. run_rolling_horizon slices a full
// span into windows and threads battery SOC, tank temperature and (for
// demand tariffs under daily windows) the month-to-date peak through here.
struct HemsInstance {
    const CustomerRecord* customer = nullptr;
    const CustomerTraces* traces = nullptr;
    Horizon horizon = Horizon::Monthly;
    int window_first_day = 1;
    int window_num_days = 1;
    double soc_initial_kwh = 0.0;  // unused without a battery
    double temp_initial_c = 60.0;
    double peak_coupling_kw = 0.0;  // lower bound on the peak variable

    void validate() const;
};

// Dispatch series produced by the optimizer, all grids window-aligned.
struct Schedule {
    SlotGrid grid_import_kw;
    SlotGrid grid_export_kw;
    SlotGrid batt_charge_kw;
    SlotGrid batt_discharge_kw;
    SlotGrid soc_kwh;
    SlotGrid ewh_kw;       // electrical element power
    SlotGrid ewh_temp_c;
    SlotGrid ewh_duty;     // fraction of the slot the element runs
    SlotGrid total_demand_kw;  // base plus water heater
    std::map<int, double> month_peak_kw;  // demand tariffs only

    static Schedule zeros(int first_day, int num_days);
};

// One battery step at slot resolution: e + dt*(eta_c*p_ch - p_dis/eta_d).
double step_battery_soc(double e_prev_kwh, double p_charge_kw, double p_discharge_kw,
                        const BatteryParams& b);

// One tank step: t + psi*eta_th*p + lambda*(ambient - t) + phi*(inlet - t)
// with psi = 3600*dt/C, lambda = 3.6*U*A*dt/C, phi = draw/V. Throws when a
// single draw exceeds the tank volume.
double step_ewh_temp(double t_prev_c, double p_kw, double draw_l, const EwhParams& w);

// The window MILP together with its variable layout.
struct HemsProblem {
    MilpProblem milp;
    int H = 0;  // slots in the window

    // block offsets into the variable vector; -1 when the block is absent
    int off_import = -1;
    int off_export = -1;
    int off_duty = -1;
    int off_temp = -1;
    int off_charge = -1;
    int off_discharge = -1;
    int off_soc = -1;
    int off_batt_mode = -1;  // s binaries
    int off_grid_mode = -1;  // d binaries
    int var_peak = -1;

    int first_day = 1;
    int num_days = 0;

    Schedule extract(const HemsInstance& inst, const MilpSolution& sol) const;
    double peak_value(const MilpSolution& sol) const;
};

// Assembles the scheduling MILP for one window: battery dynamics and mode
// exclusivity, tank thermal band with continuous duty, the scenario energy
// balance, grid direction exclusivity, and for demand tariffs a peak
// variable bounded below by every import slot and by peak_coupling. Energy
// terms in the objective carry the slot duration so summed window
// objectives reconcile against energy bills.
HemsProblem build_hems_problem(const HemsInstance& inst);

struct WindowStat {
    int first_day = 0;
    int num_days = 0;
    MilpStatus status = MilpStatus::LimitReached;
    // window cost; demand tariffs count only the peak-charge increment over
    // the carried peak, so summed window objectives equal the span cost
    double objective = 0.0;
    double gap = 0.0;
    long nodes_explored = 0;
    long simplex_iterations = 0;
    double solve_seconds = 0.0;
};

struct RollingResult {
    Schedule schedule;
    std::vector<WindowStat> windows;
};

// Solves the instance span window by window (one day, or month-bounded
// chunks), threading state between windows. Any non-Optimal window aborts
// with the window identity; an unreachable thermal band is diagnosed with
// the first day on which full-power heating still undershoots t_min.
RollingResult run_rolling_horizon(const HemsInstance& inst, const MilpLimits& limits = {});

// Full-power and zero-power temperature envelopes; returns a message naming
// the first violating day when even they cannot hold the band.
std::optional<std::string> diagnose_thermal_infeasibility(const HemsInstance& inst);

extern const char* const kScheduleCsvHeader;

void write_schedule_csv(const std::string& path,
                        const std::map<std::string, Schedule>& schedules);
std::map<std::string, Schedule> read_schedule_csv(const std::string& path);

nlohmann::json window_stats_to_json(const std::vector<WindowStat>& stats);

}  // namespace lvtariff
