#include "lvtariff/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"
#include "lvtariff/rng.hpp"

namespace lvtariff {

int ClusterModel::state_of(double value_kw) const {
    const int n = n_states();
    const double lo = state_grid.front();
    const double hi = state_grid.back();
    if (value_kw <= lo) return 0;
    if (value_kw >= hi) return n - 1;
    // Equal-width bins make this a constant-time lookup; guard with the
    // edge array anyway in case a loaded model has uneven edges.
    int s = static_cast<int>((value_kw - lo) / (hi - lo) * n);
    s = std::clamp(s, 0, n - 1);
    while (s > 0 && value_kw < state_grid[s]) --s;
    while (s < n - 1 && value_kw >= state_grid[s + 1]) ++s;
    return s;
}

void ClusterModel::validate() const {
    if (clusters.empty()) throw std::invalid_argument("cluster model: no clusters");
    if (state_grid.size() < 3) throw std::invalid_argument("cluster model: need at least 2 state bins");
    for (std::size_t i = 1; i < state_grid.size(); ++i) {
        if (!(state_grid[i] > state_grid[i - 1]))
            throw std::invalid_argument("cluster model: bin edges must increase strictly");
    }
    if (transition.size() != clusters.size())
        throw std::invalid_argument("cluster model: transition count != cluster count");
    const int n = n_states();
    const std::size_t expect = static_cast<std::size_t>(n) * n;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        if (clusters[k].count < 1) throw std::invalid_argument("cluster model: count must be >= 1");
        if (clusters[k].centroid_kw.size() != kSlotsPerDay)
            throw std::invalid_argument("cluster model: centroid must hold one value per slot");
        if (transition[k].size() != expect)
            throw std::invalid_argument("cluster model: transition matrix shape mismatch");
        for (int r = 0; r < n; ++r) {
            double sum = 0.0;
            for (int c = 0; c < n; ++c) {
                const double v = transition[k][static_cast<std::size_t>(r) * n + c];
                if (v < 0.0 || !std::isfinite(v))
                    throw std::invalid_argument("cluster model: negative transition probability");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("cluster model: transition row " + std::to_string(r) +
                                            " sums to " + format_double(sum));
        }
    }
}

std::vector<DailyProfile> extract_daily_profiles(const SlotGrid& grid) {
    std::vector<DailyProfile> out;
    out.reserve(grid.num_days);
    for (int d = grid.first_day; d <= grid.last_day(); ++d) {
        DailyProfile p(kSlotsPerDay);
        for (int s = 1; s <= kSlotsPerDay; ++s) p[s - 1] = grid.at(d, s);
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

double sq_dist(const DailyProfile& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

}  // namespace

ClusterModel fit_cluster_model(const std::vector<DailyProfile>& histories, double concentration,
                               int n_states) {
    if (histories.empty()) throw std::invalid_argument("fit_cluster_model: no daily profiles");
    if (!(concentration > 0.0)) throw std::invalid_argument("fit_cluster_model: concentration must be positive");
    if (n_states < 2) throw std::invalid_argument("fit_cluster_model: need at least 2 states");
    for (const DailyProfile& p : histories) {
        if (p.size() != kSlotsPerDay)
            throw std::invalid_argument("fit_cluster_model: profile must hold one value per slot");
        for (double v : p) {
            if (!std::isfinite(v)) throw std::invalid_argument("fit_cluster_model: non-finite profile value");
        }
    }

    const int np = static_cast<int>(histories.size());
    std::vector<std::vector<double>> centroids;
    {
        std::vector<double> mean(kSlotsPerDay, 0.0);
        for (const DailyProfile& p : histories) {
            for (int s = 0; s < kSlotsPerDay; ++s) mean[s] += p[s];
        }
        for (double& v : mean) v /= np;
        centroids.push_back(std::move(mean));
    }
    std::vector<int> assign(np, 0);

    constexpr int kIterCap = 200;
    bool converged = false;
    for (int iter = 0; iter < kIterCap && !converged; ++iter) {
        converged = true;
        for (int i = 0; i < np; ++i) {
            int best = 0;
            double best_d = sq_dist(histories[i], centroids[0]);
            for (std::size_t k = 1; k < centroids.size(); ++k) {
                const double d = sq_dist(histories[i], centroids[k]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(k);
                }
            }
            if (best_d > concentration) {
                // Opening a cluster at this profile costs less than the
                // penalty; nonparametric growth step.
                best = static_cast<int>(centroids.size());
                centroids.push_back(std::vector<double>(histories[i].begin(), histories[i].end()));
            }
            if (assign[i] != best) {
                assign[i] = best;
                converged = false;
            }
        }
        // Recompute centroids, dropping clusters that lost all members.
        std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(kSlotsPerDay, 0.0));
        std::vector<long> counts(centroids.size(), 0);
        for (int i = 0; i < np; ++i) {
            ++counts[assign[i]];
            for (int s = 0; s < kSlotsPerDay; ++s) sums[assign[i]][s] += histories[i][s];
        }
        std::vector<int> remap(centroids.size(), -1);
        std::vector<std::vector<double>> kept;
        for (std::size_t k = 0; k < centroids.size(); ++k) {
            if (counts[k] == 0) continue;
            remap[k] = static_cast<int>(kept.size());
            for (int s = 0; s < kSlotsPerDay; ++s) sums[k][s] /= counts[k];
            kept.push_back(std::move(sums[k]));
        }
        for (int i = 0; i < np; ++i) assign[i] = remap[assign[i]];
        centroids = std::move(kept);
    }
    if (!converged) throw DataError("fit_cluster_model: assignments did not stabilize");

    // State grid over the observed range; widen degenerate ranges so the
    // edges stay strictly increasing.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const DailyProfile& p : histories) {
        for (double v : p) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1e-6, std::abs(lo) * 1e-6);
    ClusterModel model;
    model.state_grid.resize(n_states + 1);
    for (int e = 0; e <= n_states; ++e) model.state_grid[e] = lo + span * e / n_states;

    model.clusters.resize(centroids.size());
    model.transition.assign(centroids.size(),
                            std::vector<double>(static_cast<std::size_t>(n_states) * n_states, 1.0));
    std::vector<long> counts(centroids.size(), 0);
    for (int i = 0; i < np; ++i) ++counts[assign[i]];
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        model.clusters[k].centroid_kw = centroids[k];
        model.clusters[k].count = counts[k];
    }
    // Laplace prior already in place (every cell starts at 1); add the
    // member-day transition counts, then normalize each row.
    for (int i = 0; i < np; ++i) {
        std::vector<double>& t = model.transition[assign[i]];
        int prev = model.state_of(histories[i][0]);
        for (int s = 1; s < kSlotsPerDay; ++s) {
            const int cur = model.state_of(histories[i][s]);
            t[static_cast<std::size_t>(prev) * n_states + cur] += 1.0;
            prev = cur;
        }
    }
    for (std::vector<double>& t : model.transition) {
        for (int r = 0; r < n_states; ++r) {
            double sum = 0.0;
            for (int c = 0; c < n_states; ++c) sum += t[static_cast<std::size_t>(r) * n_states + c];
            for (int c = 0; c < n_states; ++c) t[static_cast<std::size_t>(r) * n_states + c] /= sum;
        }
    }
    model.validate();
    return model;
}

SlotGrid sample_net_load_trace(const ClusterModel& model, std::uint64_t rng_seed, int days) {
    model.validate();
    if (days <= 0) throw std::invalid_argument("sample_net_load_trace: days must be positive");
    Rng rng(rng_seed);

    std::vector<double> alpha(model.clusters.size());
    for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] = static_cast<double>(model.clusters[k].count);
    const std::vector<double> weights = rng.dirichlet(alpha);
    double pick = rng.uniform();
    std::size_t cluster = 0;
    for (; cluster + 1 < weights.size(); ++cluster) {
        if (pick < weights[cluster]) break;
        pick -= weights[cluster];
    }

    const int n = model.n_states();
    const std::vector<double>& t = model.transition[cluster];
    int state = model.state_of(model.clusters[cluster].centroid_kw[0]);

    SlotGrid out = SlotGrid::zeros(1, days);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = rng.uniform(model.state_grid[state], model.state_grid[state + 1]);
        double u = rng.uniform();
        int next = n - 1;
        for (int c = 0; c < n; ++c) {
            const double p = t[static_cast<std::size_t>(state) * n + c];
            if (u < p) {
                next = c;
                break;
            }
            u -= p;
        }
        state = next;
    }
    return out;
}

std::vector<int> HotWaterModel::Interval::slots() const {
    std::vector<int> out;
    int s = start_slot;
    while (true) {
        out.push_back(s);
        if (s == end_slot) break;
        s = s % kSlotsPerDay + 1;
    }
    return out;
}

std::array<std::pair<int, int>, 8> hotwater_interval_bounds() {
    // Three-hour blocks anchored at 23:00; the first wraps past midnight.
    return {{{47, 4}, {5, 10}, {11, 16}, {17, 22}, {23, 28}, {29, 34}, {35, 40}, {41, 46}}};
}

void HotWaterModel::validate() const {
    const auto bounds = hotwater_interval_bounds();
    std::set<int> covered;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const Interval& iv = intervals[i];
        if (iv.start_slot != bounds[i].first || iv.end_slot != bounds[i].second)
            throw std::invalid_argument("hot-water model: interval " + std::to_string(i) +
                                        " does not match the fixed schedule");
        for (int s : iv.slots()) {
            if (!covered.insert(s).second)
                throw std::invalid_argument("hot-water model: slot covered twice");
        }
        if (iv.mu < 0.0 || !std::isfinite(iv.mu))
            throw std::invalid_argument("hot-water model: mu must be >= 0");
        if (iv.magnitude) {
            if (!(iv.magnitude->kappa_l > 0.0) || !(iv.magnitude->sigma > 0.0))
                throw std::invalid_argument("hot-water model: Weibull parameters must be positive");
        } else if (iv.mu > 0.0) {
            throw std::invalid_argument("hot-water model: positive mu needs a magnitude distribution");
        }
    }
    if (covered.size() != kSlotsPerDay) throw std::invalid_argument("hot-water model: slots not tiled");
}

namespace {

// Maximum-likelihood Weibull shape: solves
//   sum(x^s ln x)/sum(x^s) - 1/s - mean(ln x) = 0
// by Newton. Equal-magnitude samples push s to infinity; the cap keeps the
// fitted mean within a fraction of a percent of the common value.
WeibullParams fit_weibull_mle(const std::vector<double>& x) {
    constexpr double kShapeCap = 100.0;
    const std::size_t n = x.size();
    double mean_ln = 0.0;
    for (double v : x) mean_ln += std::log(v);
    mean_ln /= static_cast<double>(n);

    double s = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        double sum_p = 0.0, sum_pl = 0.0, sum_pll = 0.0;
        for (double v : x) {
            const double p = std::pow(v, s);
            const double l = std::log(v);
            sum_p += p;
            sum_pl += p * l;
            sum_pll += p * l * l;
        }
        const double f = sum_pl / sum_p - 1.0 / s - mean_ln;
        const double fp = (sum_pll * sum_p - sum_pl * sum_pl) / (sum_p * sum_p) + 1.0 / (s * s);
        double step = f / fp;
        double next = s - step;
        if (next <= 0.0) next = s / 2.0;
        if (next > kShapeCap) next = kShapeCap;
        const bool done = std::abs(next - s) < 1e-8;
        s = next;
        if (done) break;
    }

    double sum_p = 0.0;
    for (double v : x) sum_p += std::pow(v, s);
    WeibullParams out;
    out.sigma = s;
    out.kappa_l = std::pow(sum_p / static_cast<double>(n), 1.0 / s);
    return out;
}

}  // namespace

HotWaterModel fit_hotwater_model(const SlotGrid& draw_history_l) {
    if (draw_history_l.num_days < 30)
        throw std::invalid_argument("fit_hotwater_model: need at least 30 days of draws");
    for (double v : draw_history_l.values) {
        if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("fit_hotwater_model: negative draw");
    }

    HotWaterModel model;
    const auto bounds = hotwater_interval_bounds();
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        HotWaterModel::Interval iv;
        iv.start_slot = bounds[i].first;
        iv.end_slot = bounds[i].second;

        long events = 0;
        std::vector<double> magnitudes;
        for (int d = draw_history_l.first_day; d <= draw_history_l.last_day(); ++d) {
            for (int s : iv.slots()) {
                const double v = draw_history_l.at(d, s);
                if (v > 0.0) {
                    ++events;
                    magnitudes.push_back(v);
                }
            }
        }
        iv.mu = static_cast<double>(events) / draw_history_l.num_days;
        if (!magnitudes.empty()) iv.magnitude = fit_weibull_mle(magnitudes);
        model.intervals[i] = std::move(iv);
    }
    model.validate();
    return model;
}

std::vector<double> sample_hotwater_day(const HotWaterModel& model, std::uint64_t rng_seed) {
    model.validate();
    Rng rng(rng_seed);
    std::vector<double> day(kSlotsPerDay, 0.0);
    for (const HotWaterModel::Interval& iv : model.intervals) {
        if (iv.mu <= 0.0) continue;
        const std::vector<int> slots = iv.slots();
        const int k = rng.poisson(iv.mu);
        for (int e = 0; e < k; ++e) {
            const int slot = slots[rng.uniform_u64(slots.size())];
            day[slot - 1] += rng.weibull(iv.magnitude->kappa_l, iv.magnitude->sigma);
        }
    }
    return day;
}

nlohmann::json cluster_model_to_json(const ClusterModel& m) {
    m.validate();
    nlohmann::json j;
    j["kind"] = "cluster_model";
    j["version"] = 1;
    j["state_grid"] = m.state_grid;
    j["clusters"] = nlohmann::json::array();
    for (std::size_t k = 0; k < m.clusters.size(); ++k) {
        nlohmann::json c;
        c["centroid_kw"] = m.clusters[k].centroid_kw;
        c["count"] = m.clusters[k].count;
        c["season_tag"] = m.clusters[k].season_tag;
        c["transition"] = m.transition[k];
        j["clusters"].push_back(std::move(c));
    }
    return j;
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "cluster_model") throw DataError("not a cluster model document");
    if (j.value("version", 0) != 1) throw DataError("unsupported cluster model version");
    ClusterModel m;
    m.state_grid = j.at("state_grid").get<std::vector<double>>();
    for (const nlohmann::json& c : j.at("clusters")) {
        ClusterModel::Cluster cl;
        cl.centroid_kw = c.at("centroid_kw").get<std::vector<double>>();
        cl.count = c.at("count").get<long>();
        cl.season_tag = c.value("season_tag", "");
        m.clusters.push_back(std::move(cl));
        m.transition.push_back(c.at("transition").get<std::vector<double>>());
    }
    m.validate();
    return m;
}

nlohmann::json hotwater_model_to_json(const HotWaterModel& m) {
    m.validate();
    nlohmann::json j;
    j["kind"] = "hotwater_model";
    j["version"] = 1;
    j["intervals"] = nlohmann::json::array();
    for (const HotWaterModel::Interval& iv : m.intervals) {
        nlohmann::json e;
        e["start_slot"] = iv.start_slot;
        e["end_slot"] = iv.end_slot;
        e["mu"] = iv.mu;
        if (iv.magnitude) {
            e["kappa_l"] = iv.magnitude->kappa_l;
            e["sigma"] = iv.magnitude->sigma;
        }
        j["intervals"].push_back(std::move(e));
    }
    return j;
}

HotWaterModel hotwater_model_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "hotwater_model") throw DataError("not a hot-water model document");
    if (j.value("version", 0) != 1) throw DataError("unsupported hot-water model version");
    const nlohmann::json& arr = j.at("intervals");
    if (arr.size() != 8) throw DataError("hot-water model must have 8 intervals");
    HotWaterModel m;
    for (std::size_t i = 0; i < 8; ++i) {
        HotWaterModel::Interval iv;
        iv.start_slot = arr[i].at("start_slot").get<int>();
        iv.end_slot = arr[i].at("end_slot").get<int>();
        iv.mu = arr[i].at("mu").get<double>();
        if (arr[i].contains("kappa_l")) {
            WeibullParams w;
            w.kappa_l = arr[i].at("kappa_l").get<double>();
            w.sigma = arr[i].at("sigma").get<double>();
            iv.magnitude = w;
        }
        m.intervals[i] = iv;
    }
    m.validate();
    return m;
}

const char* const kHistoryCsvHeader = "customer_id,day,slot,demand_kw,pv_kw,hw_draw_l";

std::map<std::string, CustomerTraces> read_history_csv(const std::string& path) {
    CsvReader reader(path, kHistoryCsvHeader);
    struct Cell {
        double demand, pv, hw;
    };
    std::map<std::string, std::map<std::pair<int, int>, Cell>> raw;
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 6) throw DataError(reader.where() + ": expected 6 fields");
        const int day = static_cast<int>(parse_long(f[1], reader.where() + " day"));
        const int slot = static_cast<int>(parse_long(f[2], reader.where() + " slot"));
        if (day < 1 || slot < 1 || slot > kSlotsPerDay)
            throw DataError(reader.where() + ": day/slot out of range");
        Cell cell{parse_double(f[3], reader.where() + " demand_kw"), parse_double(f[4], reader.where() + " pv_kw"),
                  parse_double(f[5], reader.where() + " hw_draw_l")};
        if (!raw[f[0]].insert({{day, slot}, cell}).second)
            throw DataError(reader.where() + ": duplicate (customer, day, slot)");
    }
    if (raw.empty()) throw DataError(path + ": no data rows");

    std::map<std::string, CustomerTraces> out;
    for (auto& [id, cells] : raw) {
        int lo = cells.begin()->first.first;
        int hi = lo;
        for (const auto& [key, cell] : cells) {
            lo = std::min(lo, key.first);
            hi = std::max(hi, key.first);
        }
        CustomerTraces tr;
        tr.base_demand_kw = SlotGrid::zeros(lo, hi - lo + 1);
        tr.pv_kw = SlotGrid::zeros(lo, hi - lo + 1);
        tr.hw_draw_l = SlotGrid::zeros(lo, hi - lo + 1);
        for (const auto& [key, cell] : cells) {
            tr.base_demand_kw.at(key.first, key.second) = cell.demand;
            tr.pv_kw.at(key.first, key.second) = cell.pv;
            tr.hw_draw_l.at(key.first, key.second) = cell.hw;
        }
        out.emplace(id, std::move(tr));
    }
    return out;
}

void write_history_csv(const std::string& path, const std::map<std::string, CustomerTraces>& pool) {
    CsvWriter w(path, kHistoryCsvHeader);
    for (const auto& [id, tr] : pool) {
        for (int d = tr.first_day(); d <= tr.base_demand_kw.last_day(); ++d) {
            for (int s = 1; s <= kSlotsPerDay; ++s) {
                w.field(id);
                w.field(static_cast<long>(d));
                w.field(static_cast<long>(s));
                w.field(tr.base_demand_kw.at(d, s));
                w.field(tr.pv_kw.at(d, s));
                w.field(tr.hw_draw_l.at(d, s));
                w.end_row();
            }
        }
    }
    w.close();
}

}  // namespace lvtariff
