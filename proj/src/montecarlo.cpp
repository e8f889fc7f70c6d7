#include "lvtariff/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"
#include "lvtariff/rng.hpp"

namespace lvtariff {

std::vector<int> largest_remainder_split(const std::vector<double>& quotas) {
    double total = 0.0;
    for (double q : quotas) {
        if (q < 0.0 || !std::isfinite(q)) throw std::invalid_argument("quota must be finite and nonnegative");
        total += q;
    }
    const long want = std::lround(total);
    if (std::abs(total - want) > 1e-9) throw std::invalid_argument("quotas must sum to an integer");

    std::vector<int> counts(quotas.size());
    std::vector<std::pair<double, std::size_t>> rema(quotas.size());
    long given = 0;
    for (std::size_t i = 0; i < quotas.size(); ++i) {
        counts[i] = static_cast<int>(std::floor(quotas[i] + 1e-9));
        given += counts[i];
        rema[i] = {quotas[i] - counts[i], i};
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long k = 0; k < want - given; ++k) counts[rema[k].second] += 1;
    return counts;
}

std::vector<Scenario> allocate_scenarios(int n_customers, double p_pct, double b_pct,
                                         std::uint64_t seed) {
    if (n_customers <= 0) throw std::invalid_argument("allocate_scenarios: need at least one customer");
    if (p_pct < 0.0 || p_pct > 100.0 || b_pct < 0.0 || b_pct > 100.0) {
        throw std::invalid_argument("allocate_scenarios: percentages must lie in [0, 100]");
    }
    const std::vector<int> base =
        largest_remainder_split({n_customers * (100.0 - p_pct) / 100.0, n_customers * p_pct / 100.0});
    const int n_pv = base[1];
    const std::vector<int> pv_split =
        largest_remainder_split({n_pv * b_pct / 100.0, n_pv * (100.0 - b_pct) / 100.0});

    std::vector<int> order(n_customers);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<Scenario> out(n_customers, Scenario::I);
    int at = base[0];
    for (int k = 0; k < pv_split[0]; ++k) out[order[at++]] = Scenario::III;
    for (int k = 0; k < pv_split[1]; ++k) out[order[at++]] = Scenario::II;
    return out;
}

void ScheduleStore::put(const std::string& customer_id, Scenario sc, SlotGrid net_kw) {
    if (net_kw.empty()) throw std::invalid_argument("schedule store: empty series for " + customer_id);
    series_[customer_id][sc] = std::move(net_kw);
}

bool ScheduleStore::has(const std::string& customer_id, Scenario sc) const {
    auto it = series_.find(customer_id);
    return it != series_.end() && it->second.count(sc) > 0;
}

const SlotGrid& ScheduleStore::get(const std::string& customer_id, Scenario sc) const {
    auto it = series_.find(customer_id);
    if (it == series_.end() || it->second.count(sc) == 0) {
        throw DataError("schedule store: no " + std::string(to_string(sc)) + " series for " + customer_id);
    }
    return it->second.at(sc);
}

std::vector<std::string> ScheduleStore::customer_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, m] : series_) out.push_back(id);
    return out;
}

void ScheduleStore::save(const std::string& path) const {
    CsvWriter w(path, "customer_id,scenario,day,slot,net_kw");
    for (const auto& [id, by_sc] : series_) {
        for (const auto& [sc, grid] : by_sc) {
            for (int d = grid.first_day; d <= grid.last_day(); ++d) {
                for (int s = 1; s <= kSlotsPerDay; ++s) {
                    w.field(id);
                    w.field(to_string(sc));
                    w.field(d);
                    w.field(s);
                    w.field(grid.at(d, s));
                    w.end_row();
                }
            }
        }
    }
    w.close();
}

ScheduleStore ScheduleStore::load(const std::string& path) {
    CsvReader r(path, "customer_id,scenario,day,slot,net_kw");
    // (customer, scenario) -> day -> per-slot values
    std::map<std::pair<std::string, Scenario>, std::map<int, std::vector<double>>> acc;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 5) throw DataError("schedule store csv: wrong field count at " + r.where());
        const Scenario sc = scenario_from_string(f[1]);
        const int day = static_cast<int>(parse_long(f[2], r.where()));
        const int slot = static_cast<int>(parse_long(f[3], r.where()));
        if (slot < 1 || slot > kSlotsPerDay) throw DataError("schedule store csv: bad slot at " + r.where());
        auto& by_day = acc[{f[0], sc}];
        auto& slots = by_day[day];
        if (slots.empty()) slots.assign(kSlotsPerDay, 0.0);
        slots[slot - 1] = parse_double(f[4], r.where());
    }
    ScheduleStore store;
    for (auto& [key, by_day] : acc) {
        const int first = by_day.begin()->first;
        const int last = by_day.rbegin()->first;
        if (static_cast<int>(by_day.size()) != last - first + 1) {
            throw DataError("schedule store csv: gap in days for " + key.first);
        }
        SlotGrid g = SlotGrid::zeros(first, last - first + 1);
        for (auto& [day, slots] : by_day) {
            for (int s = 1; s <= kSlotsPerDay; ++s) g.at(day, s) = slots[s - 1];
        }
        store.put(key.first, key.second, std::move(g));
    }
    return store;
}

void StudyConfig::validate() const {
    if (runs < 1) throw ConfigError("study: runs must be at least 1");
    if (pv_levels.empty()) throw ConfigError("study: need at least one PV level");
    if (batt_levels.empty()) throw ConfigError("study: need at least one battery level");
    for (int p : pv_levels) {
        if (p < 0 || p > 100) throw ConfigError("study: PV level out of [0, 100]");
    }
    for (int b : batt_levels) {
        if (b < 0 || b > 100) throw ConfigError("study: battery level out of [0, 100]");
    }
}

Quartiles quartiles(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("quartiles: empty sample");
    std::sort(sample.begin(), sample.end());
    auto at = [&](double f) {
        const double pos = f * (sample.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sample.size() - 1);
        const double frac = pos - lo;
        return sample[lo] * (1.0 - frac) + sample[hi] * frac;
    };
    Quartiles q;
    q.min = sample.front();
    q.q1 = at(0.25);
    q.median = at(0.5);
    q.q3 = at(0.75);
    q.max = sample.back();
    return q;
}

StudyResults run_study(const StudyConfig& cfg, const Network& net, const ScheduleStore& store) {
    cfg.validate();
    net.validate();

    std::vector<std::string> ids;
    for (const Network::Tap& t : net.taps) ids.push_back(t.customer_id);
    const int n = static_cast<int>(ids.size());
    if (n == 0) throw ConfigError("study: network has no customers");

    // every needed scenario series must exist before the first run
    bool any_pv = false;
    for (int p : cfg.pv_levels) any_pv = any_pv || p > 0;
    for (const std::string& id : ids) {
        if (!store.has(id, Scenario::I)) throw DataError("study: missing Scenario I series for " + id);
        if (any_pv) {
            for (Scenario sc : {Scenario::II, Scenario::III}) {
                if (!store.has(id, sc)) {
                    throw DataError("study: missing " + std::string(to_string(sc)) + " series for " + id);
                }
            }
        }
    }

    std::vector<std::pair<int, int>> combos;
    for (int p : cfg.pv_levels) {
        if (p == 0) {
            combos.push_back({0, 0});
        } else {
            for (int b : cfg.batt_levels) combos.push_back({p, b});
        }
    }

    StudyResults out;
    out.tariff_name = cfg.tariff_name;
    for (auto [p, b] : combos) {
        std::vector<double> loading, voltage;
        for (int run = 0; run < cfg.runs; ++run) {
            const std::uint64_t seed = mix_seed(cfg.master_seed, static_cast<std::uint64_t>(p),
                                                static_cast<std::uint64_t>(b),
                                                static_cast<std::uint64_t>(run));
            const std::vector<Scenario> alloc = allocate_scenarios(n, p, b, mix_seed(seed, 1));

            std::vector<int> placement(n);
            std::iota(placement.begin(), placement.end(), 0);
            Rng rng(mix_seed(seed, 2));
            rng.shuffle(placement);

            std::map<std::string, SlotGrid> injections;
            for (int k = 0; k < n; ++k) {
                const int cust = placement[k];
                injections[ids[k]] = store.get(ids[cust], alloc[cust]);
            }
            const TimeseriesResult ts = run_timeseries(net, injections);
            const VoltageReport rep = detect_voltage_problems(ts);

            RunRow row;
            row.p = p;
            row.b = b;
            row.run = run;
            double worst = 0.0;
            for (double a : ts.head_current_a) worst = std::max(worst, a);
            row.max_head_loading_pct = 100.0 * worst / net.head_rating_a;
            row.voltage_problem_pct = 100.0 * rep.flagged_count() / n;
            row.non_converged_slots = static_cast<int>(ts.non_converged.size());
            out.rows.push_back(row);
            loading.push_back(row.max_head_loading_pct);
            voltage.push_back(row.voltage_problem_pct);
        }
        ComboSummary cs;
        cs.p = p;
        cs.b = b;
        cs.loading = quartiles(loading);
        cs.voltage = quartiles(voltage);
        out.summaries.push_back(cs);
    }
    return out;
}

void write_study_csv(const std::string& path, const StudyResults& results) {
    CsvWriter w(path, kStudyCsvHeader);
    for (const RunRow& r : results.rows) {
        w.field(r.p);
        w.field(r.b);
        w.field(r.run);
        w.field(r.max_head_loading_pct);
        w.field(r.voltage_problem_pct);
        w.end_row();
    }
    w.close();
}

std::vector<RunRow> read_study_csv(const std::string& path) {
    CsvReader r(path, kStudyCsvHeader);
    std::vector<RunRow> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 5) throw DataError("study csv: wrong field count at " + r.where());
        RunRow row;
        row.p = static_cast<int>(parse_long(f[0], r.where()));
        row.b = static_cast<int>(parse_long(f[1], r.where()));
        row.run = static_cast<int>(parse_long(f[2], r.where()));
        row.max_head_loading_pct = parse_double(f[3], r.where());
        row.voltage_problem_pct = parse_double(f[4], r.where());
        out.push_back(row);
    }
    return out;
}

namespace {

nlohmann::json quartiles_json(const Quartiles& q) {
    return {{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}};
}

}  // namespace

nlohmann::json study_summary_json(const StudyResults& results) {
    nlohmann::json j;
    j["kind"] = "study_summary";
    j["version"] = 1;
    j["tariff"] = results.tariff_name;
    j["combos"] = nlohmann::json::array();
    for (const ComboSummary& cs : results.summaries) {
        j["combos"].push_back({{"p", cs.p},
                               {"b", cs.b},
                               {"max_head_loading_pct", quartiles_json(cs.loading)},
                               {"customers_with_voltage_problems_pct", quartiles_json(cs.voltage)}});
    }
    return j;
}

void write_study_summary_csv(const std::string& path, const StudyResults& results) {
    CsvWriter w(path,
                "p,b,loading_min,loading_q1,loading_median,loading_q3,loading_max,"
                "voltage_min,voltage_q1,voltage_median,voltage_q3,voltage_max");
    for (const ComboSummary& cs : results.summaries) {
        w.field(cs.p);
        w.field(cs.b);
        for (const Quartiles* q : {&cs.loading, &cs.voltage}) {
            w.field(q->min);
            w.field(q->q1);
            w.field(q->median);
            w.field(q->q3);
            w.field(q->max);
        }
        w.end_row();
    }
    w.close();
}

}  // namespace lvtariff
