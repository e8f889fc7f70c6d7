#include "lvtariff/hems.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"

namespace lvtariff {

void HemsInstance::validate() const {
    if (!customer || !traces) throw std::invalid_argument("hems instance: customer and traces required");
    customer->validate();
    traces->validate(customer->pv_size_kwp.has_value());
    if (window_num_days <= 0) throw std::invalid_argument("hems instance: window must span at least one day");
    if (!traces->base_demand_kw.covers(window_first_day, window_num_days))
        throw std::invalid_argument("hems instance: traces do not cover days " +
                                    std::to_string(window_first_day) + ".." +
                                    std::to_string(window_first_day + window_num_days - 1));
    if (peak_coupling_kw < 0.0) throw std::invalid_argument("hems instance: negative peak coupling");
    const double volume = customer->ewh.volume_l;
    for (int d = window_first_day; d < window_first_day + window_num_days; ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            if (traces->base_demand_kw.at(d, s) > customer->grid_limit_kw + 1e-9)
                throw std::invalid_argument("hems instance: base demand " +
                                            format_double(traces->base_demand_kw.at(d, s)) +
                                            " kW on day " + std::to_string(d) +
                                            " exceeds the grid limit");
            if (traces->hw_draw_l.at(d, s) > volume)
                throw std::invalid_argument("hems instance: draw on day " + std::to_string(d) + " slot " +
                                            std::to_string(s) + " exceeds the tank volume");
        }
    }
    if (customer->scenario == Scenario::III) {
        const BatteryParams& b = customer->battery.value();
        if (soc_initial_kwh < b.soc_min_kwh - 1e-9 || soc_initial_kwh > b.capacity_kwh + 1e-9)
            throw std::invalid_argument("hems instance: initial SOC outside the battery range");
    }
    const EwhParams& w = customer->ewh;
    if (temp_initial_c < w.t_min_c - 1e-9 || temp_initial_c > w.t_max_c + 1e-9)
        throw std::invalid_argument("hems instance: initial temperature outside the band");
}

Schedule Schedule::zeros(int first_day, int num_days) {
    Schedule s;
    s.grid_import_kw = SlotGrid::zeros(first_day, num_days);
    s.grid_export_kw = SlotGrid::zeros(first_day, num_days);
    s.batt_charge_kw = SlotGrid::zeros(first_day, num_days);
    s.batt_discharge_kw = SlotGrid::zeros(first_day, num_days);
    s.soc_kwh = SlotGrid::zeros(first_day, num_days);
    s.ewh_kw = SlotGrid::zeros(first_day, num_days);
    s.ewh_temp_c = SlotGrid::zeros(first_day, num_days);
    s.ewh_duty = SlotGrid::zeros(first_day, num_days);
    s.total_demand_kw = SlotGrid::zeros(first_day, num_days);
    return s;
}

double step_battery_soc(double e_prev_kwh, double p_charge_kw, double p_discharge_kw,
                        const BatteryParams& b) {
    if (p_charge_kw < 0.0 || p_discharge_kw < 0.0)
        throw std::invalid_argument("step_battery_soc: powers must be nonnegative");
    return e_prev_kwh + kSlotHours * (b.eta_charge * p_charge_kw - p_discharge_kw / b.eta_discharge);
}

double step_ewh_temp(double t_prev_c, double p_kw, double draw_l, const EwhParams& w) {
    if (p_kw < 0.0 || draw_l < 0.0) throw std::invalid_argument("step_ewh_temp: negative input");
    if (draw_l > w.volume_l) throw std::invalid_argument("step_ewh_temp: draw exceeds the tank volume");
    const double heat_capacity = w.heat_capacity_kj_c();
    const double psi = 3600.0 * kSlotHours / heat_capacity;
    const double lambda = 3.6 * w.conductance_w_m2c * w.surface_m2 * kSlotHours / heat_capacity;
    const double phi = draw_l / w.volume_l;
    return t_prev_c + psi * w.eta_thermal * p_kw + lambda * (w.t_ambient_c - t_prev_c) +
           phi * (w.t_inlet_c - t_prev_c);
}

HemsProblem build_hems_problem(const HemsInstance& inst) {
    inst.validate();
    const CustomerRecord& c = *inst.customer;
    const CustomerTraces& tr = *inst.traces;
    const bool has_batt = c.scenario == Scenario::III;
    const bool has_export = c.scenario != Scenario::I;
    const bool demand = c.tariff.has_demand_charge();
    const int D = inst.window_num_days;
    const int H = D * kSlotsPerDay;
    const double dt = kSlotHours;

    HemsProblem hp;
    hp.H = H;
    hp.first_day = inst.window_first_day;
    hp.num_days = D;
    LpProblem& lp = hp.milp.lp;

    const EwhParams& w = c.ewh;
    const double heat_capacity = w.heat_capacity_kj_c();
    const double psi = 3600.0 * dt / heat_capacity;
    const double lambda = 3.6 * w.conductance_w_m2c * w.surface_m2 * dt / heat_capacity;
    const double heat_gain = psi * w.eta_thermal * w.element_kw;  // degC per unit duty

    auto day_of = [&](int h) { return inst.window_first_day + h / kSlotsPerDay; };
    auto slot_of = [&](int h) { return h % kSlotsPerDay + 1; };

    hp.off_import = lp.num_vars();
    for (int h = 0; h < H; ++h)
        lp.add_variable(0.0, c.grid_limit_kw, dt * price_at(c.tariff, TimeSlot(day_of(h), slot_of(h))));
    if (has_export) {
        hp.off_export = lp.num_vars();
        for (int h = 0; h < H; ++h) lp.add_variable(0.0, c.grid_limit_kw, -dt * c.tariff.fit);
    }
    hp.off_duty = lp.num_vars();
    for (int h = 0; h < H; ++h) lp.add_variable(0.0, 1.0, 0.0);
    hp.off_temp = lp.num_vars();
    for (int h = 0; h < H; ++h) lp.add_variable(w.t_min_c, w.t_max_c, 0.0);
    if (has_batt) {
        const BatteryParams& b = c.battery.value();
        hp.off_charge = lp.num_vars();
        for (int h = 0; h < H; ++h) lp.add_variable(0.0, b.p_charge_max_kw, 0.0);
        hp.off_discharge = lp.num_vars();
        for (int h = 0; h < H; ++h) lp.add_variable(0.0, b.p_discharge_max_kw, 0.0);
        hp.off_soc = lp.num_vars();
        for (int h = 0; h < H; ++h) lp.add_variable(b.soc_min_kwh, b.capacity_kwh, 0.0);
        hp.off_batt_mode = lp.num_vars();
        for (int h = 0; h < H; ++h) {
            hp.milp.binaries.push_back(lp.add_variable(0.0, 1.0, 0.0));
        }
    }
    if (has_export) {
        hp.off_grid_mode = lp.num_vars();
        for (int h = 0; h < H; ++h) {
            hp.milp.binaries.push_back(lp.add_variable(0.0, 1.0, 0.0));
        }
    }
    if (demand) {
        hp.var_peak = lp.add_variable(inst.peak_coupling_kw, kInfinity, c.tariff.demand_charge.value());
    }

    const double eta_i = c.inverter_eta;
    std::vector<int> idx;
    std::vector<double> coef;
    auto add_row = [&](Relation rel, double rhs) {
        lp.add_constraint(idx, coef, rel, rhs);
        idx.clear();
        coef.clear();
    };

    for (int h = 0; h < H; ++h) {
        const int d = day_of(h);
        const int s = slot_of(h);
        // Scenario energy balance: import-export covers base demand, water
        // heating and battery flows net of inverter-scaled generation.
        idx = {hp.off_import + h};
        coef = {1.0};
        if (has_export) {
            idx.push_back(hp.off_export + h);
            coef.push_back(-1.0);
        }
        idx.push_back(hp.off_duty + h);
        coef.push_back(-w.element_kw);
        if (has_batt) {
            idx.push_back(hp.off_charge + h);
            coef.push_back(-eta_i);
            idx.push_back(hp.off_discharge + h);
            coef.push_back(eta_i);
        }
        double rhs = tr.base_demand_kw.at(d, s);
        if (has_export) rhs -= eta_i * tr.pv_kw.at(d, s);
        add_row(Relation::Eq, rhs);
    }

    if (has_batt) {
        const BatteryParams& b = c.battery.value();
        for (int h = 0; h < H; ++h) {
            idx = {hp.off_soc + h, hp.off_charge + h, hp.off_discharge + h};
            coef = {1.0, -dt * b.eta_charge, dt / b.eta_discharge};
            if (h == 0) {
                add_row(Relation::Eq, inst.soc_initial_kwh);
            } else {
                idx.push_back(hp.off_soc + h - 1);
                coef.push_back(-1.0);
                add_row(Relation::Eq, 0.0);
            }
        }
        for (int h = 0; h < H; ++h) {
            idx = {hp.off_charge + h, hp.off_batt_mode + h};
            coef = {1.0, -b.p_charge_max_kw};
            add_row(Relation::Le, 0.0);
            idx = {hp.off_discharge + h, hp.off_batt_mode + h};
            coef = {1.0, b.p_discharge_max_kw};
            add_row(Relation::Le, b.p_discharge_max_kw);
        }
    }

    for (int h = 0; h < H; ++h) {
        const double phi = tr.hw_draw_l.at(day_of(h), slot_of(h)) / w.volume_l;
        const double keep = 1.0 - lambda - phi;
        const double rhs_fixed = lambda * w.t_ambient_c + phi * w.t_inlet_c;
        idx = {hp.off_temp + h, hp.off_duty + h};
        coef = {1.0, -heat_gain};
        if (h == 0) {
            add_row(Relation::Eq, keep * inst.temp_initial_c + rhs_fixed);
        } else {
            idx.push_back(hp.off_temp + h - 1);
            coef.push_back(-keep);
            add_row(Relation::Eq, rhs_fixed);
        }
    }

    if (has_export) {
        for (int h = 0; h < H; ++h) {
            idx = {hp.off_import + h, hp.off_grid_mode + h};
            coef = {1.0, -c.grid_limit_kw};
            add_row(Relation::Le, 0.0);
            idx = {hp.off_export + h, hp.off_grid_mode + h};
            coef = {1.0, c.grid_limit_kw};
            add_row(Relation::Le, c.grid_limit_kw);
        }
    }

    if (demand) {
        for (int h = 0; h < H; ++h) {
            idx = {hp.off_import + h, hp.var_peak};
            coef = {1.0, -1.0};
            add_row(Relation::Le, 0.0);
        }
    }

    hp.milp.validate();
    return hp;
}

Schedule HemsProblem::extract(const HemsInstance& inst, const MilpSolution& sol) const {
    if (static_cast<int>(sol.values.size()) != milp.lp.num_vars())
        throw std::invalid_argument("extract: solution does not match the problem");
    const CustomerRecord& c = *inst.customer;
    Schedule out = Schedule::zeros(first_day, num_days);
    // power series are bounded below by zero in the LP; snap off float drift
    const auto pos = [](double v) { return std::max(v, 0.0); };
    for (int h = 0; h < H; ++h) {
        const int d = first_day + h / kSlotsPerDay;
        const int s = h % kSlotsPerDay + 1;
        out.grid_import_kw.at(d, s) = pos(sol.values[off_import + h]);
        if (off_export >= 0) out.grid_export_kw.at(d, s) = pos(sol.values[off_export + h]);
        const double duty = std::clamp(sol.values[off_duty + h], 0.0, 1.0);
        out.ewh_duty.at(d, s) = duty;
        out.ewh_kw.at(d, s) = c.ewh.element_kw * duty;
        out.ewh_temp_c.at(d, s) = sol.values[off_temp + h];
        if (off_charge >= 0) {
            out.batt_charge_kw.at(d, s) = pos(sol.values[off_charge + h]);
            out.batt_discharge_kw.at(d, s) = pos(sol.values[off_discharge + h]);
            out.soc_kwh.at(d, s) = sol.values[off_soc + h];
        }
        out.total_demand_kw.at(d, s) = inst.traces->base_demand_kw.at(d, s) + out.ewh_kw.at(d, s);
    }
    return out;
}

double HemsProblem::peak_value(const MilpSolution& sol) const {
    if (var_peak < 0) throw std::logic_error("peak_value: no demand charge in this problem");
    return sol.values[var_peak];
}

std::optional<std::string> diagnose_thermal_infeasibility(const HemsInstance& inst) {
    const EwhParams& w = inst.customer->ewh;
    double t = inst.temp_initial_c;
    for (int d = inst.window_first_day; d < inst.window_first_day + inst.window_num_days; ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            t = step_ewh_temp(t, w.element_kw, inst.traces->hw_draw_l.at(d, s), w);
            if (t < w.t_min_c - 1e-9)
                return "thermal band unreachable: full-power heating still falls below t_min on day " +
                       std::to_string(d) + " slot " + std::to_string(s);
            t = std::min(t, w.t_max_c);
        }
    }
    return std::nullopt;
}

RollingResult run_rolling_horizon(const HemsInstance& inst, const MilpLimits& limits) {
    inst.validate();
    const CustomerRecord& c = *inst.customer;
    const bool demand = c.tariff.has_demand_charge();
    const bool has_batt = c.scenario == Scenario::III;

    RollingResult out;
    out.schedule = Schedule::zeros(inst.window_first_day, inst.window_num_days);

    double soc = inst.soc_initial_kwh;
    double temp = inst.temp_initial_c;
    double coupling = demand ? inst.peak_coupling_kw : 0.0;
    int cur_month = month_of_day(inst.window_first_day);

    int day = inst.window_first_day;
    const int end_day = inst.window_first_day + inst.window_num_days - 1;
    while (day <= end_day) {
        if (month_of_day(day) != cur_month) {
            cur_month = month_of_day(day);
            coupling = 0.0;  // the demand charge accrues per calendar month
        }
        int wlen = 1;
        if (inst.horizon == Horizon::Monthly) {
            const int month_end = first_day_of_month(cur_month) + days_in_month(cur_month) - 1;
            wlen = std::min(month_end, end_day) - day + 1;
        }

        HemsInstance wi = inst;
        wi.window_first_day = day;
        wi.window_num_days = wlen;
        wi.soc_initial_kwh = soc;
        wi.temp_initial_c = temp;
        wi.peak_coupling_kw = coupling;

        HemsProblem hp = build_hems_problem(wi);
        const auto t0 = std::chrono::steady_clock::now();
        MilpSolution sol = solve_milp(hp.milp, limits);
        WindowStat stat;
        stat.first_day = day;
        stat.num_days = wlen;
        stat.status = sol.status;
        // For demand tariffs only the increment over the carried peak is
        // this window's cost, so daily objectives telescope to the month.
        stat.objective = sol.objective - (demand ? c.tariff.demand_charge.value() * coupling : 0.0);
        stat.gap = sol.gap;
        stat.nodes_explored = sol.nodes_explored;
        stat.simplex_iterations = sol.simplex_iterations;
        stat.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.windows.push_back(stat);

        if (sol.status != MilpStatus::Optimal) {
            std::string msg = "customer " + c.id + ": window starting day " + std::to_string(day) + " (" +
                              std::to_string(wlen) + " days) ended " + to_string(sol.status);
            if (sol.status == MilpStatus::Infeasible) {
                if (auto diag = diagnose_thermal_infeasibility(wi)) msg += "; " + *diag;
            }
            throw SolverError(msg);
        }

        Schedule ws = hp.extract(wi, sol);
        for (int d = day; d < day + wlen; ++d) {
            for (int s = 1; s <= kSlotsPerDay; ++s) {
                out.schedule.grid_import_kw.at(d, s) = ws.grid_import_kw.at(d, s);
                out.schedule.grid_export_kw.at(d, s) = ws.grid_export_kw.at(d, s);
                out.schedule.batt_charge_kw.at(d, s) = ws.batt_charge_kw.at(d, s);
                out.schedule.batt_discharge_kw.at(d, s) = ws.batt_discharge_kw.at(d, s);
                out.schedule.soc_kwh.at(d, s) = ws.soc_kwh.at(d, s);
                out.schedule.ewh_kw.at(d, s) = ws.ewh_kw.at(d, s);
                out.schedule.ewh_temp_c.at(d, s) = ws.ewh_temp_c.at(d, s);
                out.schedule.ewh_duty.at(d, s) = ws.ewh_duty.at(d, s);
                out.schedule.total_demand_kw.at(d, s) = ws.total_demand_kw.at(d, s);
            }
        }

        // Thread terminal state, snapping LP-tolerance drift back into range.
        temp = std::clamp(ws.ewh_temp_c.at(day + wlen - 1, kSlotsPerDay), c.ewh.t_min_c, c.ewh.t_max_c);
        if (has_batt) {
            soc = std::clamp(ws.soc_kwh.at(day + wlen - 1, kSlotsPerDay), c.battery->soc_min_kwh,
                             c.battery->capacity_kwh);
        }
        if (demand) {
            const double peak = hp.peak_value(sol);
            coupling = std::max(coupling, peak);
            auto [it, inserted] = out.schedule.month_peak_kw.try_emplace(cur_month, peak);
            if (!inserted) it->second = std::max(it->second, peak);
        }
        day += wlen;
    }
    return out;
}

const char* const kScheduleCsvHeader =
    "customer_id,day,slot,grid_import_kw,grid_export_kw,batt_charge_kw,batt_discharge_kw,soc_kwh,ewh_kw,ewh_temp_c";

void write_schedule_csv(const std::string& path, const std::map<std::string, Schedule>& schedules) {
    CsvWriter w(path, kScheduleCsvHeader);
    for (const auto& [id, sch] : schedules) {
        for (int d = sch.grid_import_kw.first_day; d <= sch.grid_import_kw.last_day(); ++d) {
            for (int s = 1; s <= kSlotsPerDay; ++s) {
                w.field(id);
                w.field(static_cast<long>(d));
                w.field(static_cast<long>(s));
                w.field(sch.grid_import_kw.at(d, s));
                w.field(sch.grid_export_kw.at(d, s));
                w.field(sch.batt_charge_kw.at(d, s));
                w.field(sch.batt_discharge_kw.at(d, s));
                w.field(sch.soc_kwh.at(d, s));
                w.field(sch.ewh_kw.at(d, s));
                w.field(sch.ewh_temp_c.at(d, s));
                w.end_row();
            }
        }
    }
    w.close();
}

std::map<std::string, Schedule> read_schedule_csv(const std::string& path) {
    CsvReader reader(path, kScheduleCsvHeader);
    struct Cell {
        double v[7];
    };
    std::map<std::string, std::map<std::pair<int, int>, Cell>> raw;
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 10) throw DataError(reader.where() + ": expected 10 fields");
        const int d = static_cast<int>(parse_long(f[1], reader.where() + " day"));
        const int s = static_cast<int>(parse_long(f[2], reader.where() + " slot"));
        if (d < 1 || s < 1 || s > kSlotsPerDay) throw DataError(reader.where() + ": day/slot out of range");
        Cell cell;
        for (int k = 0; k < 7; ++k) cell.v[k] = parse_double(f[3 + k], reader.where());
        if (!raw[f[0]].insert({{d, s}, cell}).second)
            throw DataError(reader.where() + ": duplicate (customer, day, slot)");
    }
    if (raw.empty()) throw DataError(path + ": no data rows");

    std::map<std::string, Schedule> out;
    for (auto& [id, cells] : raw) {
        int lo = cells.begin()->first.first;
        int hi = lo;
        for (const auto& [key, cell] : cells) {
            lo = std::min(lo, key.first);
            hi = std::max(hi, key.first);
        }
        Schedule sch = Schedule::zeros(lo, hi - lo + 1);
        for (const auto& [key, cell] : cells) {
            sch.grid_import_kw.at(key.first, key.second) = cell.v[0];
            sch.grid_export_kw.at(key.first, key.second) = cell.v[1];
            sch.batt_charge_kw.at(key.first, key.second) = cell.v[2];
            sch.batt_discharge_kw.at(key.first, key.second) = cell.v[3];
            sch.soc_kwh.at(key.first, key.second) = cell.v[4];
            sch.ewh_kw.at(key.first, key.second) = cell.v[5];
            sch.ewh_temp_c.at(key.first, key.second) = cell.v[6];
        }
        out.emplace(id, std::move(sch));
    }
    return out;
}

nlohmann::json window_stats_to_json(const std::vector<WindowStat>& stats) {
    nlohmann::json arr = nlohmann::json::array();
    for (const WindowStat& s : stats) {
        nlohmann::json j;
        j["first_day"] = s.first_day;
        j["num_days"] = s.num_days;
        j["status"] = to_string(s.status);
        j["objective"] = s.objective;
        j["gap"] = s.gap;
        j["nodes_explored"] = s.nodes_explored;
        j["simplex_iterations"] = s.simplex_iterations;
        j["solve_seconds"] = s.solve_seconds;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace lvtariff
