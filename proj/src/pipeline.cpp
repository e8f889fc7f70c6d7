#include "lvtariff/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <utility>

#include "lvtariff/billing.hpp"
#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"
#include "lvtariff/fixtures.hpp"
#include "lvtariff/hems.hpp"
#include "lvtariff/rng.hpp"
#include "lvtariff/synthesis.hpp"

namespace fs = std::filesystem;

namespace lvtariff {

namespace {

const std::vector<std::string> kStageOrder = {"synth",     "optimize", "bill",
                                              "powerflow", "study",    "report"};

// stage seed salts
constexpr std::uint64_t kSaltBase = 0x62617365;
constexpr std::uint64_t kSaltSun = 0x73756e20;
constexpr std::uint64_t kSaltWater = 0x77617465;
constexpr std::uint64_t kSaltStudy = 0x53545559;

}  // namespace

MilpLimits SolverConfig::limits() const {
    MilpLimits lim;
    lim.node_cap = node_cap;
    lim.time_cap_s = time_cap_s;
    lim.rel_gap = rel_gap;
    return lim;
}

void PipelineConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("pipeline: out_dir must not be empty");
    if (stages.empty()) throw ConfigError("pipeline: nothing to run");
    for (const std::string& s : stages) {
        if (std::find(kStageOrder.begin(), kStageOrder.end(), s) == kStageOrder.end()) {
            throw ConfigError("pipeline: unknown stage '" + s + "'");
        }
    }
    if (customers < 1) throw ConfigError("pipeline: need at least one customer");
    if (history_days < 30) throw ConfigError("pipeline: history_days must be at least 30");
    if (days < 1) throw ConfigError("pipeline: days must be positive");
    if (first_day < 1 || first_day + days - 1 > kDaysPerYear) {
        throw ConfigError("pipeline: horizon leaves the calendar year");
    }
    if (horizon != "daily" && horizon != "monthly") {
        throw ConfigError("pipeline: horizon must be 'daily' or 'monthly'");
    }
    if (tariffs.empty()) throw ConfigError("pipeline: need at least one tariff");
    for (const std::string& t : tariffs) {
        try {
            tariff_preset(t);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("pipeline: ") + e.what());
        }
    }
    if (std::find(tariffs.begin(), tariffs.end(), study.tariff) == tariffs.end()) {
        throw ConfigError("pipeline: study tariff must be one of the billed tariffs");
    }
    if (concentration <= 0.0) throw ConfigError("pipeline: concentration must be positive");
    if (solver.rel_gap < 0.0 || solver.node_cap < 1) throw ConfigError("pipeline: bad solver limits");
    if (threads < 1) throw ConfigError("pipeline: threads must be at least 1");
    StudyConfig sc;
    sc.pv_levels = study.pv_levels;
    sc.batt_levels = study.batt_levels;
    sc.runs = study.runs;
    sc.validate();
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    if (j.value("kind", "pipeline") != "pipeline") throw ConfigError("pipeline config: wrong kind");
    if (j.value("version", 1) != 1) throw ConfigError("pipeline config: unsupported version");
    PipelineConfig cfg;
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("stages")) cfg.stages = j.at("stages").get<std::vector<std::string>>();
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.customers = j.value("customers", cfg.customers);
    cfg.history_days = j.value("history_days", cfg.history_days);
    cfg.first_day = j.value("first_day", cfg.first_day);
    cfg.days = j.value("days", cfg.days);
    cfg.horizon = j.value("horizon", cfg.horizon);
    if (j.contains("tariffs")) cfg.tariffs = j.at("tariffs").get<std::vector<std::string>>();
    if (j.contains("history_csv")) cfg.history_csv = j.at("history_csv").get<std::string>();
    if (j.contains("network_file")) cfg.network_file = j.at("network_file").get<std::string>();
    cfg.concentration = j.value("concentration", cfg.concentration);
    if (j.contains("solver")) {
        const auto& js = j.at("solver");
        cfg.solver.node_cap = js.value("node_cap", cfg.solver.node_cap);
        cfg.solver.time_cap_s = js.value("time_cap_s", cfg.solver.time_cap_s);
        cfg.solver.rel_gap = js.value("rel_gap", cfg.solver.rel_gap);
    }
    if (j.contains("study")) {
        const auto& js = j.at("study");
        if (js.contains("pv_levels")) cfg.study.pv_levels = js.at("pv_levels").get<std::vector<int>>();
        if (js.contains("batt_levels")) {
            cfg.study.batt_levels = js.at("batt_levels").get<std::vector<int>>();
        }
        cfg.study.runs = js.value("runs", cfg.study.runs);
        cfg.study.tariff = js.value("tariff", cfg.study.tariff);
    }
    cfg.threads = j.value("threads", cfg.threads);
    cfg.validate();
    return cfg;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["kind"] = "pipeline";
    j["version"] = 1;
    j["out_dir"] = cfg.out_dir;
    j["stages"] = cfg.stages;
    j["master_seed"] = cfg.master_seed;
    j["customers"] = cfg.customers;
    j["history_days"] = cfg.history_days;
    j["first_day"] = cfg.first_day;
    j["days"] = cfg.days;
    j["horizon"] = cfg.horizon;
    j["tariffs"] = cfg.tariffs;
    if (cfg.history_csv) j["history_csv"] = *cfg.history_csv;
    if (cfg.network_file) j["network_file"] = *cfg.network_file;
    j["concentration"] = cfg.concentration;
    j["solver"] = {{"node_cap", cfg.solver.node_cap},
                   {"time_cap_s", cfg.solver.time_cap_s},
                   {"rel_gap", cfg.solver.rel_gap}};
    j["study"] = {{"pv_levels", cfg.study.pv_levels},
                  {"batt_levels", cfg.study.batt_levels},
                  {"runs", cfg.study.runs},
                  {"tariff", cfg.study.tariff}};
    j["threads"] = cfg.threads;
    return j;
}

PipelineConfig read_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pipeline config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("pipeline config " + path + ": " + e.what());
    }
    return pipeline_config_from_json(j);
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot fingerprint missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

namespace {

Fixture build_roster(const PipelineConfig& cfg) {
    return make_fixture(cfg.customers, cfg.master_seed, cfg.first_day, cfg.history_days,
                        tariff_preset(cfg.tariffs.front()));
}

std::pair<SlotGrid, SlotGrid> split_net(const SlotGrid& net) {
    SlotGrid imp = SlotGrid::zeros(net.first_day, net.num_days);
    SlotGrid exp = SlotGrid::zeros(net.first_day, net.num_days);
    for (std::size_t i = 0; i < net.values.size(); ++i) {
        imp.values[i] = std::max(net.values[i], 0.0);
        exp.values[i] = std::max(-net.values[i], 0.0);
    }
    return {imp, exp};
}

struct Manifest {
    fs::path path;
    nlohmann::json j;

    static Manifest open(const fs::path& out, const PipelineConfig& cfg) {
        Manifest m;
        m.path = out / "manifest.json";
        std::ifstream in(m.path);
        if (in) {
            try {
                in >> m.j;
            } catch (const nlohmann::json::exception&) {
                m.j = nlohmann::json::object();
            }
        }
        m.j["kind"] = "pipeline_manifest";
        m.j["version"] = 1;
        m.j["config"] = pipeline_config_to_json(cfg);
        if (!m.j.contains("stages")) m.j["stages"] = nlohmann::json::object();
        if (cfg.history_csv) m.j["inputs"]["history_csv"] = file_fingerprint(*cfg.history_csv);
        if (cfg.network_file) m.j["inputs"]["network_file"] = file_fingerprint(*cfg.network_file);
        return m;
    }

    void write() const {
        std::ofstream out(path);
        out << j.dump(2) << "\n";
    }

    void begin(const std::string& stage) {
        j["stages"][stage] = {{"status", "incomplete"}};
        write();
    }

    void fail(const std::string& stage, const std::string& why) {
        j["stages"][stage] = {{"status", "failed"}, {"error", why}};
        write();
    }

    void complete(const std::string& stage, const std::vector<fs::path>& artifacts) {
        nlohmann::json a = nlohmann::json::object();
        for (const fs::path& p : artifacts) a[p.filename().string()] = file_fingerprint(p.string());
        j["stages"][stage] = {{"status", "complete"}, {"artifacts", a}};
        write();
    }
};

void require_artifact(const fs::path& p, const std::string& needed_by) {
    if (!fs::exists(p)) {
        throw DataError(needed_by + " needs " + p.filename().string() +
                        "; run the producing stage first");
    }
}

// Runs fn(i) for i in [0, n) across cfg.threads workers; any exception wins.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> futs;
    const int workers = std::min(threads, n);
    for (int w = 0; w < workers; ++w) {
        futs.push_back(std::async(std::launch::async, [&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        }));
    }
    for (auto& f : futs) f.get();  // rethrows worker exceptions
}

std::vector<fs::path> stage_synth(const PipelineConfig& cfg, const fs::path& out) {
    Fixture fx = build_roster(cfg);

    std::map<std::string, CustomerTraces> histories;
    if (cfg.history_csv) {
        histories = read_history_csv(*cfg.history_csv);
        for (const CustomerRecord& c : fx.customers) {
            if (!histories.count(c.id)) {
                throw DataError("history corpus is missing roster customer " + c.id);
            }
        }
    } else {
        histories = fx.traces;
    }

    std::vector<fs::path> artifacts;
    const fs::path history_path = out / "history.csv";
    write_history_csv(history_path.string(), histories);
    artifacts.push_back(history_path);

    // demand model over the pooled day profiles
    std::vector<DailyProfile> demand_pool;
    for (const CustomerRecord& c : fx.customers) {
        for (DailyProfile& p : extract_daily_profiles(histories.at(c.id).base_demand_kw)) {
            demand_pool.push_back(std::move(p));
        }
    }
    const ClusterModel demand_model = fit_cluster_model(demand_pool, cfg.concentration);
    const fs::path demand_path = out / "demand_model.json";
    std::ofstream(demand_path) << cluster_model_to_json(demand_model).dump(2) << "\n";
    artifacts.push_back(demand_path);

    // PV model over per-kWp-normalized profiles, plus the daylight mask
    std::vector<DailyProfile> pv_pool;
    std::array<double, kSlotsPerDay> pv_slot_max{};
    for (const CustomerRecord& c : fx.customers) {
        if (!c.pv_size_kwp) continue;
        for (DailyProfile p : extract_daily_profiles(histories.at(c.id).pv_kw)) {
            for (int s = 0; s < kSlotsPerDay; ++s) {
                p[s] /= c.pv_size_kwp.value();
                pv_slot_max[s] = std::max(pv_slot_max[s], p[s]);
            }
            pv_pool.push_back(std::move(p));
        }
    }
    std::optional<ClusterModel> pv_model;
    if (!pv_pool.empty()) {
        pv_model = fit_cluster_model(pv_pool, cfg.concentration / 6.0);
        const fs::path pv_path = out / "pv_model.json";
        std::ofstream(pv_path) << cluster_model_to_json(*pv_model).dump(2) << "\n";
        artifacts.push_back(pv_path);
    }

    // hot-water model over the concatenated draw history
    int pooled_days = 0;
    for (const CustomerRecord& c : fx.customers) pooled_days += histories.at(c.id).hw_draw_l.num_days;
    SlotGrid pooled = SlotGrid::zeros(1, pooled_days);
    int at_day = 1;
    for (const CustomerRecord& c : fx.customers) {
        const SlotGrid& hw = histories.at(c.id).hw_draw_l;
        for (int d = hw.first_day; d <= hw.last_day(); ++d) {
            for (int s = 1; s <= kSlotsPerDay; ++s) pooled.at(at_day, s) = hw.at(d, s);
            ++at_day;
        }
    }
    const HotWaterModel hw_model = fit_hotwater_model(pooled);
    const fs::path hw_path = out / "hotwater_model.json";
    std::ofstream(hw_path) << hotwater_model_to_json(hw_model).dump(2) << "\n";
    artifacts.push_back(hw_path);

    // synthetic horizon per customer
    std::map<std::string, CustomerTraces> synthetic;
    for (std::size_t k = 0; k < fx.customers.size(); ++k) {
        const CustomerRecord& c = fx.customers[k];
        CustomerTraces tr;
        tr.base_demand_kw =
            sample_net_load_trace(demand_model, mix_seed(cfg.master_seed, kSaltBase, k), cfg.days);
        tr.base_demand_kw.first_day = cfg.first_day;
        tr.pv_kw = SlotGrid::zeros(cfg.first_day, cfg.days);
        if (c.pv_size_kwp && pv_model) {
            SlotGrid norm =
                sample_net_load_trace(*pv_model, mix_seed(cfg.master_seed, kSaltSun, k), cfg.days);
            norm.first_day = cfg.first_day;
            for (int d = cfg.first_day; d <= norm.last_day(); ++d) {
                for (int s = 1; s <= kSlotsPerDay; ++s) {
                    const double v = pv_slot_max[s - 1] == 0.0
                                         ? 0.0
                                         : std::max(0.0, norm.at(d, s)) * c.pv_size_kwp.value();
                    tr.pv_kw.at(d, s) = v;
                }
            }
        }
        tr.hw_draw_l = SlotGrid::zeros(cfg.first_day, cfg.days);
        for (int d = 0; d < cfg.days; ++d) {
            const std::vector<double> draws =
                sample_hotwater_day(hw_model, mix_seed(cfg.master_seed, kSaltWater, k, d));
            for (int s = 1; s <= kSlotsPerDay; ++s) {
                tr.hw_draw_l.at(cfg.first_day + d, s) = draws[s - 1];
            }
        }
        tr.validate(c.pv_size_kwp.has_value());
        synthetic.emplace(c.id, std::move(tr));
    }
    const fs::path traces_path = out / "traces.csv";
    write_history_csv(traces_path.string(), synthetic);
    artifacts.push_back(traces_path);

    const Network net = cfg.network_file ? read_network(*cfg.network_file) : fx.network;
    const fs::path net_path = out / "network.json";
    write_network(net_path.string(), net);
    artifacts.push_back(net_path);
    return artifacts;
}

std::vector<fs::path> stage_optimize(const PipelineConfig& cfg, const fs::path& out) {
    require_artifact(out / "traces.csv", "optimize");
    const std::map<std::string, CustomerTraces> synthetic =
        read_history_csv((out / "traces.csv").string());
    const Fixture fx = build_roster(cfg);
    const Horizon horizon = cfg.horizon == "daily" ? Horizon::Daily : Horizon::Monthly;
    const std::array<Scenario, 3> scenarios{Scenario::I, Scenario::II, Scenario::III};

    std::vector<fs::path> artifacts;
    for (const std::string& tariff_name : cfg.tariffs) {
        const TariffSchedule tariff = tariff_preset(tariff_name);
        const int n_jobs = static_cast<int>(fx.customers.size() * scenarios.size());
        std::vector<RollingResult> results(n_jobs);
        std::vector<CustomerTraces> job_traces(n_jobs);

        parallel_for(n_jobs, cfg.threads, [&](int job) {
            const CustomerRecord& full = fx.customers[job / 3];
            const Scenario sc = scenarios[job % 3];
            CustomerRecord c = customer_for_scenario(full, sc);
            c.tariff = tariff;
            job_traces[job] = traces_for_scenario(synthetic.at(full.id), sc);
            HemsInstance inst;
            inst.customer = &c;
            inst.traces = &job_traces[job];
            inst.horizon = horizon;
            inst.window_first_day = cfg.first_day;
            inst.window_num_days = cfg.days;
            if (c.battery) inst.soc_initial_kwh = c.battery->soc_initial_kwh;
            inst.temp_initial_c = c.ewh.t_initial_c;
            results[job] = run_rolling_horizon(inst, cfg.solver.limits());
        });

        ScheduleStore store;
        nlohmann::json windows = nlohmann::json::object();
        std::map<Scenario, std::map<std::string, Schedule>> schedules;
        for (int job = 0; job < n_jobs; ++job) {
            const CustomerRecord& full = fx.customers[job / 3];
            const Scenario sc = scenarios[job % 3];
            const Schedule& sch = results[job].schedule;
            SlotGrid net = SlotGrid::zeros(sch.grid_import_kw.first_day, sch.grid_import_kw.num_days);
            for (std::size_t i = 0; i < net.values.size(); ++i) {
                net.values[i] = sch.grid_import_kw.values[i] - sch.grid_export_kw.values[i];
            }
            store.put(full.id, sc, std::move(net));
            schedules[sc][full.id] = sch;
            windows[full.id][to_string(sc)] = window_stats_to_json(results[job].windows);
        }

        const fs::path store_path = out / ("store_" + tariff_name + ".csv");
        store.save(store_path.string());
        artifacts.push_back(store_path);
        for (Scenario sc : scenarios) {
            const fs::path sched_path =
                out / ("schedules_" + tariff_name + "_" + to_string(sc) + ".csv");
            write_schedule_csv(sched_path.string(), schedules[sc]);
            artifacts.push_back(sched_path);
        }
        const fs::path win_path = out / ("windows_" + tariff_name + ".json");
        std::ofstream(win_path) << windows.dump(2) << "\n";
        artifacts.push_back(win_path);
        std::cout << "  optimized " << fx.customers.size() << " customers under " << tariff_name
                  << "\n";
    }
    return artifacts;
}

std::vector<fs::path> stage_bill(const PipelineConfig& cfg, const fs::path& out) {
    std::vector<fs::path> artifacts;
    const fs::path annual_path = out / "annual_costs.csv";
    CsvWriter annual(annual_path.string(),
                     "customer_id,tariff,scenario,fixed,energy,export_credit,demand,total");
    for (const std::string& tariff_name : cfg.tariffs) {
        const fs::path store_path = out / ("store_" + tariff_name + ".csv");
        require_artifact(store_path, "bill");
        const ScheduleStore store = ScheduleStore::load(store_path.string());
        const TariffSchedule tariff = tariff_preset(tariff_name);
        for (Scenario sc : {Scenario::I, Scenario::II, Scenario::III}) {
            std::vector<CustomerBill> bills;
            for (const std::string& id : store.customer_ids()) {
                if (!store.has(id, sc)) continue;
                auto [imp, exp] = split_net(store.get(id, sc));
                CustomerBill cb;
                cb.customer_id = id;
                cb.tariff_name = tariff_name;
                cb.bill = annual_cost(tariff, imp, exp);
                bills.push_back(std::move(cb));
            }
            if (bills.empty()) continue;
            const fs::path bill_path =
                out / ("bills_" + tariff_name + "_" + to_string(sc) + ".csv");
            write_bill_csv(bill_path.string(), bills);
            artifacts.push_back(bill_path);
            for (const CustomerBill& cb : bills) {
                annual.field(cb.customer_id);
                annual.field(tariff_name);
                annual.field(to_string(sc));
                annual.field(cb.bill.fixed);
                annual.field(cb.bill.energy);
                annual.field(cb.bill.export_credit);
                annual.field(cb.bill.demand);
                annual.field(cb.bill.total);
                annual.end_row();
            }
        }
    }
    annual.close();
    artifacts.push_back(annual_path);
    return artifacts;
}

std::vector<fs::path> stage_powerflow(const PipelineConfig& cfg, const fs::path& out) {
    require_artifact(out / "network.json", "powerflow");
    const fs::path store_path = out / ("store_" + cfg.study.tariff + ".csv");
    require_artifact(store_path, "powerflow");
    const Network net = read_network((out / "network.json").string());
    const ScheduleStore store = ScheduleStore::load(store_path.string());

    try {
        std::map<std::string, SlotGrid> injections;
        for (const Network::Tap& t : net.taps) {
            injections[t.customer_id] = store.get(t.customer_id, Scenario::I);
        }
        const TimeseriesResult ts = run_timeseries(net, injections);
        const fs::path ts_path = out / "powerflow_baseline.csv";
        write_timeseries_csv(ts_path.string(), ts);

        const VoltageReport vrep = detect_voltage_problems(ts);
        const ThermalReport trep = detect_thermal_overload(ts.head_current_a, net.head_rating_a);
        nlohmann::json rep;
        rep["kind"] = "powerflow_report";
        rep["version"] = 1;
        rep["tariff"] = cfg.study.tariff;
        rep["non_converged_slots"] = ts.non_converged.size();
        rep["thermal"] = {{"overloaded", trep.overloaded},
                          {"worst_a", trep.worst_a},
                          {"slots_over", trep.slots_over},
                          {"rating_a", net.head_rating_a}};
        nlohmann::json flags = nlohmann::json::object();
        for (std::size_t c = 0; c < vrep.customer_ids.size(); ++c) {
            flags[vrep.customer_ids[c]] = {{"violating_days", vrep.violating_days[c]},
                                           {"flagged", static_cast<bool>(vrep.flagged[c])}};
        }
        rep["voltage"] = {{"covered_days", vrep.covered_days},
                          {"flagged_customers", vrep.flagged_count()},
                          {"per_customer", flags}};
        const fs::path rep_path = out / "powerflow_report.json";
        std::ofstream(rep_path) << rep.dump(2) << "\n";
        return {ts_path, rep_path};
    } catch (const std::invalid_argument& e) {
        throw PowerFlowError(e.what());
    }
}

std::vector<fs::path> stage_study(const PipelineConfig& cfg, const fs::path& out) {
    require_artifact(out / "network.json", "study");
    const fs::path store_path = out / ("store_" + cfg.study.tariff + ".csv");
    require_artifact(store_path, "study");
    const Network net = read_network((out / "network.json").string());
    const ScheduleStore store = ScheduleStore::load(store_path.string());

    StudyConfig sc;
    sc.pv_levels = cfg.study.pv_levels;
    sc.batt_levels = cfg.study.batt_levels;
    sc.runs = cfg.study.runs;
    sc.tariff_name = cfg.study.tariff;
    sc.master_seed = mix_seed(cfg.master_seed, kSaltStudy);

    StudyResults res;
    try {
        res = run_study(sc, net, store);
    } catch (const std::invalid_argument& e) {
        throw PowerFlowError(e.what());
    }
    const fs::path rows_path = out / ("study_rows_" + cfg.study.tariff + ".csv");
    write_study_csv(rows_path.string(), res);
    const fs::path json_path = out / ("study_summary_" + cfg.study.tariff + ".json");
    std::ofstream(json_path) << study_summary_json(res).dump(2) << "\n";
    const fs::path sum_path = out / ("study_summary_" + cfg.study.tariff + ".csv");
    write_study_summary_csv(sum_path.string(), res);
    return {rows_path, json_path, sum_path};
}

std::vector<fs::path> stage_report(const PipelineConfig& cfg, const fs::path& out) {
    require_artifact(out / "traces.csv", "report");
    require_artifact(out / "annual_costs.csv", "report");
    const std::map<std::string, CustomerTraces> synthetic =
        read_history_csv((out / "traces.csv").string());
    const Fixture fx = build_roster(cfg);
    std::vector<fs::path> artifacts;

    // annual cost pivot: one row per tariff and customer across scenarios
    {
        CsvReader r((out / "annual_costs.csv").string(),
                    "customer_id,tariff,scenario,fixed,energy,export_credit,demand,total");
        std::map<std::pair<std::string, std::string>, std::map<std::string, double>> pivot;
        std::vector<std::string> f;
        while (r.next(f)) {
            pivot[{f[1], f[0]}][f[2]] = parse_double(f[7], r.where());
        }
        const fs::path path = out / "report_annual_costs.csv";
        CsvWriter w(path.string(), "tariff,customer_id,total_I,total_II,total_III");
        for (const auto& [key, by_sc] : pivot) {
            w.field(key.first);
            w.field(key.second);
            for (const char* sc : {"I", "II", "III"}) {
                w.field(by_sc.count(sc) ? by_sc.at(sc) : 0.0);
            }
            w.end_row();
        }
        w.close();
        artifacts.push_back(path);
    }

    // daily and monthly peak tables from the stored net series
    const fs::path daily_path = out / "report_daily_peaks.csv";
    const fs::path monthly_path = out / "report_monthly_peaks.csv";
    CsvWriter daily(daily_path.string(),
                    "tariff,scenario,customer_id,day,unmanaged_peak_kw,scheduled_peak_kw");
    CsvWriter monthly(monthly_path.string(), "tariff,scenario,customer_id,month,peak_kw");
    for (const std::string& tariff_name : cfg.tariffs) {
        const fs::path store_path = out / ("store_" + tariff_name + ".csv");
        require_artifact(store_path, "report");
        const ScheduleStore store = ScheduleStore::load(store_path.string());
        for (Scenario sc : {Scenario::I, Scenario::II, Scenario::III}) {
            for (const CustomerRecord& full : fx.customers) {
                if (!store.has(full.id, sc)) continue;
                const CustomerRecord c = customer_for_scenario(full, sc);
                const CustomerTraces tr = traces_for_scenario(synthetic.at(full.id), sc);
                const SlotGrid unmanaged = unmanaged_import_kw(c, tr);
                auto [imp, exp] = split_net(store.get(full.id, sc));
                for (int d = imp.first_day; d <= imp.last_day(); ++d) {
                    double u = 0.0, s_peak = 0.0;
                    for (int s = 1; s <= kSlotsPerDay; ++s) {
                        u = std::max(u, unmanaged.at(d, s));
                        s_peak = std::max(s_peak, imp.at(d, s));
                    }
                    daily.field(tariff_name);
                    daily.field(to_string(sc));
                    daily.field(full.id);
                    daily.field(d);
                    daily.field(u);
                    daily.field(s_peak);
                    daily.end_row();
                }
                for (const auto& [month, peak] : monthly_peaks(imp, PeakVariant::MonthlyMax)) {
                    monthly.field(tariff_name);
                    monthly.field(to_string(sc));
                    monthly.field(full.id);
                    monthly.field(month);
                    monthly.field(peak);
                    monthly.end_row();
                }
            }
        }
    }
    daily.close();
    monthly.close();
    artifacts.push_back(daily_path);
    artifacts.push_back(monthly_path);

    // study distributions, already plot-ready; collate under the report name
    const fs::path study_src = out / ("study_summary_" + cfg.study.tariff + ".csv");
    if (fs::exists(study_src)) {
        const fs::path dst = out / "report_study.csv";
        fs::copy_file(study_src, dst, fs::copy_options::overwrite_existing);
        artifacts.push_back(dst);
    }
    return artifacts;
}

}  // namespace

void run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    const fs::path out = cfg.out_dir;
    fs::create_directories(out);
    Manifest manifest = Manifest::open(out, cfg);

    using StageFn = std::vector<fs::path> (*)(const PipelineConfig&, const fs::path&);
    const std::map<std::string, StageFn> stage_fns = {
        {"synth", stage_synth},   {"optimize", stage_optimize}, {"bill", stage_bill},
        {"powerflow", stage_powerflow}, {"study", stage_study}, {"report", stage_report}};

    for (const std::string& stage : kStageOrder) {
        if (std::find(cfg.stages.begin(), cfg.stages.end(), stage) == cfg.stages.end()) continue;
        std::cout << "[" << stage << "] running\n";
        manifest.begin(stage);
        try {
            const std::vector<fs::path> artifacts = stage_fns.at(stage)(cfg, out);
            manifest.complete(stage, artifacts);
        } catch (const std::exception& e) {
            manifest.fail(stage, e.what());
            throw;
        }
        std::cout << "[" << stage << "] done\n";
    }
}

}  // namespace lvtariff
