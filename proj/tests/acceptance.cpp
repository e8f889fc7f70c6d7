// Acceptance gate: every release-blocking property on one line each, with
// the tolerances pinned in code. Exit status is the number of failures.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lvtariff/billing.hpp"
#include "lvtariff/domain.hpp"
#include "lvtariff/errors.hpp"
#include "lvtariff/fixtures.hpp"
#include "lvtariff/hems.hpp"
#include "lvtariff/montecarlo.hpp"
#include "lvtariff/pipeline.hpp"
#include "lvtariff/powerflow.hpp"
#include "lvtariff/rng.hpp"
#include "lvtariff/solver.hpp"
#include "lvtariff/synthesis.hpp"
#include "support.hpp"

using namespace lvtariff;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240815;

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- criterion 1

Outcome crit_solver_oracle(double budget_s) {
    const double t0 = now_s();
    Rng rng(mix_seed(kSeed, 1));
    MilpLimits lim;
    lim.rel_gap = 1e-9;
    int optimal = 0, infeasible = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int nb = 1 + static_cast<int>(rng.uniform_u64(12));  // 1..12 binaries
        const int nc = static_cast<int>(rng.uniform_u64(21));      // 0..20 continuous
        const int nr = 1 + static_cast<int>(rng.uniform_u64(10));
        const MilpProblem m = lvtest::random_milp(rng, nb + nc, nb, nr);
        const lvtest::BruteForceResult oracle = lvtest::brute_force_milp(m);
        const MilpSolution s = solve_milp(m, lim);
        if (oracle.feasible) {
            if (s.status != MilpStatus::Optimal) {
                return {false, "trial " + std::to_string(trial) + ": oracle feasible but solver said " +
                                   to_string(s.status)};
            }
            const double err =
                std::abs(s.objective - oracle.objective) / std::max(1.0, std::abs(oracle.objective));
            worst = std::max(worst, err);
            if (err > 1e-6) {
                return {false, "trial " + std::to_string(trial) + ": objective off by " + fmt(err)};
            }
            ++optimal;
        } else {
            if (s.status != MilpStatus::Infeasible) {
                return {false, "trial " + std::to_string(trial) + ": oracle infeasible but solver said " +
                                   to_string(s.status)};
            }
            ++infeasible;
        }
    }
    const double dt = now_s() - t0;
    return {dt < budget_s, "200 instances (" + std::to_string(optimal) + " optimal, " +
                               std::to_string(infeasible) + " infeasible), worst objective error " +
                               fmt(worst) + ", " + fmt(dt) + " s"};
}

// ------------------------------------------------------- criteria 2-5 fixture

const std::vector<std::string> kTariffNames = {"Flat", "ToU", "FlatD", "ToUD"};
const std::array<Scenario, 3> kScenarios{Scenario::I, Scenario::II, Scenario::III};

struct FixtureSchedules {
    Fixture fx;
    // tariff name -> scenario index -> customer id -> solved horizon
    std::map<std::string, std::array<std::map<std::string, RollingResult>, 3>> runs;
    bool ready = false;
};

void schedule_fixture(FixtureSchedules& out) {
    out.fx = make_fixture(10, kSeed, 1, 7, tariff_preset("Flat"));
    for (const std::string& name : kTariffNames) {
        const TariffSchedule tariff = tariff_preset(name);
        for (std::size_t si = 0; si < kScenarios.size(); ++si) {
            for (const CustomerRecord& full : out.fx.customers) {
                CustomerRecord c = customer_for_scenario(full, kScenarios[si]);
                c.tariff = tariff;
                const CustomerTraces tr =
                    traces_for_scenario(out.fx.traces.at(full.id), kScenarios[si]);
                HemsInstance inst;
                inst.customer = &c;
                inst.traces = &tr;
                inst.horizon = Horizon::Daily;
                inst.window_first_day = 1;
                inst.window_num_days = 7;
                if (c.battery) inst.soc_initial_kwh = c.battery->soc_initial_kwh;
                inst.temp_initial_c = c.ewh.t_initial_c;
                out.runs[name][si].emplace(full.id, run_rolling_horizon(inst, MilpLimits{}));
            }
        }
    }
    out.ready = true;
}

double span_max_import(const Schedule& sch) {
    double peak = 0.0;
    for (double v : sch.grid_import_kw.values) peak = std::max(peak, v);
    return peak;
}

Outcome crit_hems_physics(FixtureSchedules& fs, double budget_s) {
    const double t0 = now_s();
    schedule_fixture(fs);  // throws if any window ends non-Optimal
    double worst_soc = 0.0, worst_temp = 0.0, worst_comp = 0.0;
    long windows = 0;
    for (const std::string& name : kTariffNames) {
        for (std::size_t si = 0; si < kScenarios.size(); ++si) {
            for (const CustomerRecord& full : fs.fx.customers) {
                const RollingResult& rr = fs.runs[name][si].at(full.id);
                const CustomerRecord c = customer_for_scenario(full, kScenarios[si]);
                const Schedule& sch = rr.schedule;
                for (const WindowStat& w : rr.windows) {
                    ++windows;
                    if (w.status != MilpStatus::Optimal) {
                        return {false, "non-optimal window day " + std::to_string(w.first_day)};
                    }
                }
                if (c.battery) {
                    double e = c.battery->soc_initial_kwh;
                    for (int d = 1; d <= 7; ++d) {
                        for (int s = 1; s <= kSlotsPerDay; ++s) {
                            e = step_battery_soc(e, sch.batt_charge_kw.at(d, s),
                                                 sch.batt_discharge_kw.at(d, s), *c.battery);
                            worst_soc = std::max(worst_soc, std::abs(e - sch.soc_kwh.at(d, s)));
                        }
                    }
                }
                const SlotGrid& draws = fs.fx.traces.at(full.id).hw_draw_l;
                double tc = c.ewh.t_initial_c;
                for (int d = 1; d <= 7; ++d) {
                    for (int s = 1; s <= kSlotsPerDay; ++s) {
                        tc = step_ewh_temp(tc, sch.ewh_kw.at(d, s), draws.at(d, s), c.ewh);
                        worst_temp = std::max(worst_temp, std::abs(tc - sch.ewh_temp_c.at(d, s)));
                        worst_comp = std::max(
                            worst_comp, sch.grid_import_kw.at(d, s) * sch.grid_export_kw.at(d, s));
                        worst_comp = std::max(
                            worst_comp, sch.batt_charge_kw.at(d, s) * sch.batt_discharge_kw.at(d, s));
                    }
                }
            }
        }
    }
    const double dt = now_s() - t0;
    const bool pass = worst_soc <= 1e-6 && worst_temp <= 1e-6 && worst_comp <= 1e-6 && dt < budget_s;
    return {pass, std::to_string(windows) + " optimal windows; max |soc err| " + fmt(worst_soc) +
                      ", |temp err| " + fmt(worst_temp) + ", complementarity " + fmt(worst_comp) +
                      ", " + fmt(dt) + " s"};
}

Outcome crit_peak_clipping(const FixtureSchedules& fs) {
    if (!fs.ready) return {false, "fixture schedules unavailable"};
    double worst_violation = -1e9;  // max of peak(demand variant) - peak(energy variant)
    double best_reduction = 0.0;
    for (std::size_t si = 0; si < kScenarios.size(); ++si) {
        for (const CustomerRecord& full : fs.fx.customers) {
            const double p_flat = span_max_import(fs.runs.at("Flat")[si].at(full.id).schedule);
            const double p_flatd = span_max_import(fs.runs.at("FlatD")[si].at(full.id).schedule);
            const double p_tou = span_max_import(fs.runs.at("ToU")[si].at(full.id).schedule);
            const double p_toud = span_max_import(fs.runs.at("ToUD")[si].at(full.id).schedule);
            worst_violation = std::max({worst_violation, p_flatd - p_flat, p_toud - p_tou});
            if (kScenarios[si] == Scenario::III) {  // battery present
                if (p_flat > 0.0) best_reduction = std::max(best_reduction, (p_flat - p_flatd) / p_flat);
                if (p_tou > 0.0) best_reduction = std::max(best_reduction, (p_tou - p_toud) / p_tou);
            }
        }
    }
    const bool pass = worst_violation <= 1e-6 && best_reduction >= 0.10;
    return {pass, "worst (demand - energy) peak gap " + fmt(worst_violation) +
                      " kW; best battery reduction " + fmt(100.0 * best_reduction) + "%"};
}

Outcome crit_scenario_direction(const FixtureSchedules& fs) {
    if (!fs.ready) return {false, "fixture schedules unavailable"};
    std::vector<double> peaks_i, peaks_iii;
    for (const CustomerRecord& full : fs.fx.customers) {
        peaks_i.push_back(span_max_import(fs.runs.at("FlatD")[0].at(full.id).schedule));
        peaks_iii.push_back(span_max_import(fs.runs.at("FlatD")[2].at(full.id).schedule));
    }
    const double med_i = median_of(peaks_i);
    const double med_iii = median_of(peaks_iii);

    double worst_gap = -1e9;  // max of cost(more DER) - cost(less DER)
    for (const std::string& name : kTariffNames) {
        for (const CustomerRecord& full : fs.fx.customers) {
            std::array<double, 3> cost{};
            for (std::size_t si = 0; si < kScenarios.size(); ++si) {
                const Schedule& sch = fs.runs.at(name)[si].at(full.id).schedule;
                cost[si] =
                    annual_cost(tariff_preset(name), sch.grid_import_kw, sch.grid_export_kw).total;
            }
            worst_gap = std::max({worst_gap, cost[2] - cost[1], cost[1] - cost[0]});
        }
    }
    // allow window-level MILP gap noise on what must be a weak ordering
    const bool pass = med_iii < med_i && worst_gap <= 1e-6;
    return {pass, "median FlatD peak Scen.III " + fmt(med_iii) + " vs Scen.I " + fmt(med_i) +
                      " kW; worst cost-ordering gap " + fmt(worst_gap) + " $"};
}

Outcome crit_bill_consistency(const FixtureSchedules& fs) {
    if (!fs.ready) return {false, "fixture schedules unavailable"};
    double worst_rel = 0.0, worst_peak = 0.0;
    for (const std::string& name : kTariffNames) {
        const TariffSchedule tariff = tariff_preset(name);
        for (std::size_t si = 0; si < kScenarios.size(); ++si) {
            for (const CustomerRecord& full : fs.fx.customers) {
                const RollingResult& rr = fs.runs.at(name)[si].at(full.id);
                const Schedule& sch = rr.schedule;
                if (!tariff.has_demand_charge()) {
                    const BillBreakdown bill =
                        annual_cost(tariff, sch.grid_import_kw, sch.grid_export_kw);
                    double windows_sum = 0.0;
                    for (const WindowStat& w : rr.windows) windows_sum += w.objective;
                    const double lhs = bill.total - bill.fixed;
                    worst_rel = std::max(
                        worst_rel, std::abs(lhs - windows_sum) / std::max(1.0, std::abs(windows_sum)));
                } else {
                    const std::map<int, double> realized =
                        monthly_peaks(sch.grid_import_kw, PeakVariant::MonthlyMax);
                    for (const auto& [month, peak] : sch.month_peak_kw) {
                        worst_peak = std::max(worst_peak, std::abs(peak - realized.at(month)));
                    }
                }
            }
        }
    }
    const bool pass = worst_rel <= 1e-5 && worst_peak <= 1e-6;
    return {pass, "worst bill/objective relative gap " + fmt(worst_rel) +
                      "; worst peak-variable mismatch " + fmt(worst_peak) + " kW"};
}

// ---------------------------------------------------------------- criterion 6

Outcome crit_powerflow() {
    // analytic two-bus case: one 2 kW load on phase a behind one segment
    Network two;
    two.num_nodes = 2;
    Network::Edge e;
    e.from = 0;
    e.to = 1;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            e.z_ohm[i][j] = i == j ? Complex(0.1, 0.05) : Complex(0.03, 0.02);
        }
    }
    two.edges.push_back(e);
    two.taps.push_back({"load", 1, 0});
    two.head_rating_a = 100.0;
    two.validate();
    const SnapshotResult snap = solve_snapshot(two, {{"load", 2.0}});
    if (!snap.converged) return {false, "two-bus case did not converge"};
    // |V1|^4 - (V0^2 - 2 R P)|V1|^2 + |Z|^2 P^2 = 0, larger root
    const double p_w = 2000.0, v0 = 230.0;
    const Complex z = e.z_ohm[0][0];
    const double b = v0 * v0 - 2.0 * z.real() * p_w;
    const double v1 = std::sqrt(0.5 * (b + std::sqrt(b * b - 4.0 * std::norm(z) * p_w * p_w)));
    const double v_err = std::abs(std::abs(snap.node_voltage_v[1][0]) - v1);
    if (v_err > 1e-6) return {false, "two-bus voltage error " + fmt(v_err) + " V"};

    // a year of snapshots on a 30-node feeder, every converged one balanced.
    // Loading is heavy enough that a handful of winter-peak snapshots are
    // allowed to collapse; the converged share must stay above 95% so the
    // mismatch check cannot pass vacuously.
    const Fixture fx = make_fixture(87, mix_seed(kSeed, 6), 1, 365, tariff_preset("Flat"));
    if (fx.network.num_nodes != 30) return {false, "fixture feeder has wrong size"};
    double worst_mismatch = 0.0;
    long non_converged = 0;
    const long total_slots = 365L * kSlotsPerDay;
    std::map<std::string, double> inj;
    for (int d = 1; d <= 365; ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            for (const CustomerRecord& c : fx.customers) {
                const CustomerTraces& tr = fx.traces.at(c.id);
                inj[c.id] = 0.35 * (tr.base_demand_kw.at(d, s) + 0.2 - 0.3 * tr.pv_kw.at(d, s));
            }
            const SnapshotResult sr = solve_snapshot(fx.network, inj);
            if (!sr.converged) {
                ++non_converged;
                continue;
            }
            worst_mismatch = std::max(worst_mismatch, power_mismatch_pu(fx.network, inj, sr));
        }
    }
    if (worst_mismatch > 1e-6) {
        return {false, "worst power mismatch " + fmt(worst_mismatch) + " pu over the year"};
    }
    if (non_converged > total_slots / 20) {
        return {false, std::to_string(non_converged) + " of " + std::to_string(total_slots) +
                           " snapshots did not converge"};
    }

    // balanced loading: every node carries the same load on all three phases
    for (const CustomerRecord& c : fx.customers) inj[c.id] = 0.5;
    const SnapshotResult bal = solve_snapshot(fx.network, inj);
    if (!bal.converged) return {false, "balanced case did not converge"};
    double worst_asym = 0.0;
    for (const auto& v : bal.node_voltage_v) {
        const double va = std::abs(v[0]), vb = std::abs(v[1]), vc = std::abs(v[2]);
        worst_asym = std::max({worst_asym, std::abs(va - vb), std::abs(vb - vc)});
    }
    worst_asym /= fx.network.nominal_voltage_v;
    const bool pass = worst_asym <= 1e-9;
    return {pass, "two-bus error " + fmt(v_err) + " V; year mismatch " + fmt(worst_mismatch) +
                      " pu (" + std::to_string(non_converged) + " non-converged); phase asymmetry " +
                      fmt(worst_asym) + " pu"};
}

// ---------------------------------------------------------------- criterion 7

Outcome crit_samplers(double budget_s) {
    const double t0 = now_s();
    const int n_days = 10000;

    // Poisson event counts through the day sampler. Near-constant magnitudes
    // let the event count be recovered exactly from the drawn volume.
    const std::array<double, 8> mus = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 0.8, 1.2};
    const double kappa = 10.0, sigma = 60.0;
    const double mean_mag = kappa * std::tgamma(1.0 + 1.0 / sigma);
    HotWaterModel model;
    const auto bounds = hotwater_interval_bounds();
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        model.intervals[i].start_slot = bounds[i].first;
        model.intervals[i].end_slot = bounds[i].second;
        model.intervals[i].mu = mus[i];
        model.intervals[i].magnitude = WeibullParams{kappa, sigma};
    }
    std::array<int, kSlotsPerDay> interval_of{};
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        for (int s : model.intervals[i].slots()) interval_of[s - 1] = static_cast<int>(i);
    }
    std::array<double, 8> event_sum{};
    int zero_days_mu2 = 0;
    for (int d = 0; d < n_days; ++d) {
        const std::vector<double> day = sample_hotwater_day(model, mix_seed(kSeed, 7, d));
        std::array<double, 8> volume{};
        for (int s = 0; s < kSlotsPerDay; ++s) volume[interval_of[s]] += day[s];
        for (int i = 0; i < 8; ++i) event_sum[i] += std::round(volume[i] / mean_mag);
        if (std::lround(volume[3] / mean_mag) == 0) ++zero_days_mu2;
    }
    double worst_z = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double mean = event_sum[i] / n_days;
        const double bound = 3.0 * std::sqrt(mus[i] / n_days);
        worst_z = std::max(worst_z, std::abs(mean - mus[i]) / bound);
        if (std::abs(mean - mus[i]) > bound) {
            return {false, "interval " + std::to_string(i) + " count mean " + fmt(mean) +
                               " vs mu " + fmt(mus[i])};
        }
    }

    // zero-draw probability at the mu = 2 interval against exp(-2), over the
    // same sampled days
    const double p0_err = std::abs(static_cast<double>(zero_days_mu2) / n_days - std::exp(-2.0));
    if (p0_err > 0.01) return {false, "P(0 draws | mu=2) off by " + fmt(p0_err)};

    // Weibull sample mean against kappa * Gamma(1 + 1/sigma)
    Rng rng(mix_seed(kSeed, 7, 7));
    const double wk = 8.0, ws = 1.5;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n_days; ++i) {
        const double v = rng.weibull(wk, ws);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n_days;
    const double sd = std::sqrt(sumsq / n_days - mean * mean);
    const double expect = wk * std::tgamma(1.0 + 1.0 / ws);
    const double w_err = std::abs(mean - expect);
    if (w_err > 3.0 * sd / std::sqrt(static_cast<double>(n_days))) {
        return {false, "weibull mean " + fmt(mean) + " vs " + fmt(expect)};
    }

    // Markov transition frequencies on a two-state chain, 0.02 L1 per row
    ClusterModel chain;
    chain.state_grid = {0.0, 1.0, 2.0};
    ClusterModel::Cluster cl;
    cl.centroid_kw.assign(kSlotsPerDay, 0.5);
    cl.count = 1;
    chain.clusters.push_back(cl);
    chain.transition.push_back({0.8, 0.2, 0.3, 0.7});
    const SlotGrid walk = sample_net_load_trace(chain, mix_seed(kSeed, 7, 9), n_days);
    std::array<std::array<double, 2>, 2> counts{};
    int prev = chain.state_of(walk.values[0]);
    for (std::size_t i = 1; i < walk.values.size(); ++i) {
        const int cur = chain.state_of(walk.values[i]);
        counts[prev][cur] += 1.0;
        prev = cur;
    }
    double worst_l1 = 0.0;
    for (int r = 0; r < 2; ++r) {
        const double total = counts[r][0] + counts[r][1];
        const double l1 = std::abs(counts[r][0] / total - chain.transition[0][r * 2]) +
                          std::abs(counts[r][1] / total - chain.transition[0][r * 2 + 1]);
        worst_l1 = std::max(worst_l1, l1);
    }
    const double dt = now_s() - t0;
    const bool pass = worst_l1 <= 0.02 && dt < budget_s;
    return {pass, "poisson worst z " + fmt(worst_z) + "; P0 err " + fmt(p0_err) + "; weibull err " +
                      fmt(w_err) + "; markov L1 " + fmt(worst_l1) + "; " + fmt(dt) + " s"};
}

// ------------------------------------------------------------ criteria 8 & 9

// Feeder study roster: a winter month with modest rooftops, so the trunk is
// import-dominated and batteries must buy most of their charge from the grid.
// Under ToU that charging herds into the off-peak window and lifts the head
// peak; under ToUD the demand charge spreads it out and the peak falls.
struct StudyFixture {
    Network network;
    ScheduleStore store_tou;
    ScheduleStore store_toud;
};

void build_study_fixture(StudyFixture& out) {
    const int n = 30, days = 30, first_day = 181;
    Network& net = out.network;
    net.num_nodes = n / 3 + 1;
    for (int k = 1; k < net.num_nodes; ++k) {
        Network::Edge e;
        e.from = k - 1;
        e.to = k;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                e.z_ohm[i][j] = i == j ? Complex(0.04, 0.025) : Complex(0.012, 0.008);
            }
        }
        net.edges.push_back(e);
    }
    for (int k = 1; k <= n; ++k) {
        net.taps.push_back({"c" + std::to_string(k), (k - 1) / 3 + 1, (k - 1) % 3});
    }
    net.head_rating_a = 150.0;
    net.validate();

    for (int k = 1; k <= n; ++k) {
        const double pv_kwp = 2.5 + 0.5 * (k % 3);
        const CustomerTraces traces = demo_traces(mix_seed(kSeed, 8, k), first_day, days, pv_kwp);
        CustomerRecord full;
        full.id = "c" + std::to_string(k);
        full.scenario = Scenario::III;
        full.pv_size_kwp = pv_kwp;
        full.battery = battery_for_pv(pv_kwp);
        full.ewh.t_initial_c = 70.0;
        for (const std::string& name : {std::string("ToU"), std::string("ToUD")}) {
            ScheduleStore& store = name == "ToU" ? out.store_tou : out.store_toud;
            for (Scenario sc : kScenarios) {
                CustomerRecord c = customer_for_scenario(full, sc);
                c.tariff = tariff_preset(name);
                const CustomerTraces tr = traces_for_scenario(traces, sc);
                HemsInstance inst;
                inst.customer = &c;
                inst.traces = &tr;
                inst.horizon = Horizon::Daily;
                inst.window_first_day = first_day;
                inst.window_num_days = days;
                if (c.battery) inst.soc_initial_kwh = c.battery->soc_initial_kwh;
                inst.temp_initial_c = c.ewh.t_initial_c;
                const RollingResult rr = run_rolling_horizon(inst, MilpLimits{});
                SlotGrid netg = SlotGrid::zeros(first_day, days);
                for (std::size_t i = 0; i < netg.values.size(); ++i) {
                    netg.values[i] = rr.schedule.grid_import_kw.values[i] -
                                     rr.schedule.grid_export_kw.values[i];
                }
                store.put(full.id, sc, std::move(netg));
            }
        }
    }
}

Outcome crit_montecarlo(StudyFixture& sf, StudyResults& tou_results, double budget_s) {
    const std::vector<Scenario> alloc = allocate_scenarios(100, 50.0, 40.0, mix_seed(kSeed, 88));
    std::array<int, 3> counts{};
    for (Scenario sc : alloc) counts[static_cast<int>(sc)] += 1;
    if (counts[0] != 50 || counts[1] != 30 || counts[2] != 20) {
        return {false, "allocate(100, 50, 40) gave " + std::to_string(counts[0]) + "/" +
                           std::to_string(counts[1]) + "/" + std::to_string(counts[2])};
    }

    const double prep0 = now_s();
    build_study_fixture(sf);
    const double prep_s = now_s() - prep0;

    StudyConfig cfg;
    cfg.pv_levels = {25, 50, 75, 100};
    cfg.batt_levels = {0, 40, 80};
    cfg.runs = 10;
    cfg.tariff_name = "ToU";
    cfg.master_seed = mix_seed(kSeed, 9);

    const double t0 = now_s();
    tou_results = run_study(cfg, sf.network, sf.store_tou);
    const double study_s = now_s() - t0;
    if (tou_results.rows.size() != 120) {
        return {false, "expected 120 study rows, got " + std::to_string(tou_results.rows.size())};
    }

    const StudyResults again = run_study(cfg, sf.network, sf.store_tou);
    const fs::path dir = fs::temp_directory_path() / "lvtariff_acceptance";
    fs::create_directories(dir);
    write_study_csv((dir / "study_a.csv").string(), tou_results);
    write_study_csv((dir / "study_b.csv").string(), again);
    if (file_fingerprint((dir / "study_a.csv").string()) !=
        file_fingerprint((dir / "study_b.csv").string())) {
        return {false, "identical seeds produced different study bytes"};
    }
    const bool pass = study_s < budget_s;
    return {pass, "50/30/20 split exact; reruns byte-identical; 12-combo 10-run study " +
                      fmt(study_s) + " s (+" + fmt(prep_s) + " s schedule prep)"};
}

Outcome crit_loading_direction(const StudyFixture& sf, const StudyResults& tou_results) {
    if (tou_results.rows.empty()) return {false, "study results unavailable"};
    auto median_at = [](const StudyResults& res, int p, int b) -> std::optional<double> {
        for (const ComboSummary& cs : res.summaries) {
            if (cs.p == p && cs.b == b) return cs.loading.median;
        }
        return std::nullopt;
    };
    const auto tou0 = median_at(tou_results, 75, 0);
    const auto tou80 = median_at(tou_results, 75, 80);
    if (!tou0 || !tou80) return {false, "ToU study lacks the p=75 combos"};

    StudyConfig cfg;
    cfg.pv_levels = {75};
    cfg.batt_levels = {0, 80};
    cfg.runs = 10;
    cfg.tariff_name = "ToUD";
    cfg.master_seed = mix_seed(kSeed, 9);  // same placements as the ToU study
    const StudyResults toud_results = run_study(cfg, sf.network, sf.store_toud);
    const auto toud0 = median_at(toud_results, 75, 0);
    const auto toud80 = median_at(toud_results, 75, 80);
    if (!toud0 || !toud80) return {false, "ToUD study lacks the p=75 combos"};

    const bool pass = *tou80 >= *tou0 - 1e-9 && *toud80 <= *toud0 + 1e-9;
    return {pass, "ToU median loading b=80 " + fmt(*tou80) + "% vs b=0 " + fmt(*tou0) +
                      "%; ToUD b=80 " + fmt(*toud80) + "% vs b=0 " + fmt(*toud0) + "%"};
}

}  // namespace

int main() {
    struct Row {
        int num;
        const char* label;
        Outcome out;
        double seconds;
    };
    std::vector<Row> rows;
    FixtureSchedules fs;
    StudyFixture sf;
    StudyResults tou_results;

    const auto run = [&rows](int num, const char* label, auto&& fn) {
        const double t0 = now_s();
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        rows.push_back({num, label, out, now_s() - t0});
        const Row& r = rows.back();
        std::cout << "[" << r.num << "] " << (r.out.pass ? "PASS" : "FAIL") << "  " << r.label
                  << ": " << r.out.detail << " (" << fmt(r.seconds) << " s)\n"
                  << std::flush;
    };

    run(1, "solver matches brute force on 200 random MILPs (rel err <= 1e-6, < 60 s)",
        [] { return crit_solver_oracle(60.0); });
    run(2, "fixture schedules re-simulate exactly (1e-6, < 10 min)",
        [&] { return crit_hems_physics(fs, 600.0); });
    run(3, "demand tariffs clip peaks; some battery clips >= 10%",
        [&] { return crit_peak_clipping(fs); });
    run(4, "DER lowers peaks and bills scenario by scenario",
        [&] { return crit_scenario_direction(fs); });
    run(5, "bills reconcile with window objectives and peak variables",
        [&] { return crit_bill_consistency(fs); });
    run(6, "power flow: analytic two-bus, year-long balance, phase symmetry",
        [] { return crit_powerflow(); });
    run(7, "samplers hit their distributions (poisson, weibull, markov, < 2 min)",
        [] { return crit_samplers(120.0); });
    run(8, "monte carlo arithmetic, determinism and 12-combo study (< 15 min)",
        [&] { return crit_montecarlo(sf, tou_results, 900.0); });
    run(9, "battery penetration raises ToU head loading, lowers ToUD",
        [&] { return crit_loading_direction(sf, tou_results); });

    int failed = 0;
    for (const Row& r : rows) failed += r.out.pass ? 0 : 1;
    std::cout << "ACCEPTANCE: " << (rows.size() - failed) << "/" << rows.size() << " criteria passed\n";
    return failed;
}
