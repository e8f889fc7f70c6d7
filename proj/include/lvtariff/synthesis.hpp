#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lvtariff/domain.hpp"

namespace lvtariff {

// Cluster-conditioned Markov model of daily net-load profiles. Each cluster
// keeps its member count as the Dirichlet hyperparameter used when sampling.
struct ClusterModel {
    struct Cluster {
        std::vector<double> centroid_kw;  // one value per slot
        long count = 0;
        std::string season_tag;
    };

    std::vector<Cluster> clusters;
    std::vector<double> state_grid;  // bin edges, strictly increasing
    // one row-major n_states x n_states row-stochastic matrix per cluster
    std::vector<std::vector<double>> transition;

    int n_states() const { return static_cast<int>(state_grid.size()) - 1; }
    int state_of(double value_kw) const;
    void validate() const;
};

using DailyProfile = std::vector<double>;  // 48 slot values

std::vector<DailyProfile> extract_daily_profiles(const SlotGrid& grid);

// Hard-assignment nonparametric clustering: a profile starts a new cluster
// when its squared distance to every centroid exceeds `concentration`.
// Transitions are counted within each member day, Laplace-smoothed (+1) and
// row-normalized over `n_states` equal-width bins spanning the data range.
ClusterModel fit_cluster_model(const std::vector<DailyProfile>& histories, double concentration,
                               int n_states = 20);

// Draws one cluster from Dirichlet(counts) -> categorical, then walks the
// chain for 48*days steps emitting uniformly within each state bin. The
// walk starts in the bin holding the cluster centroid's first slot.
SlotGrid sample_net_load_trace(const ClusterModel& model, std::uint64_t rng_seed, int days);

struct WeibullParams {
    double kappa_l = 0.0;  // scale, litres
    double sigma = 0.0;    // shape
};

// Event model of hot-water use: per daily interval, a Poisson count of draw
// events, slots uniform with replacement, magnitudes Weibull. An interval
// that never saw a draw carries mu = 0 and no magnitude distribution.
struct HotWaterModel {
    struct Interval {
        int start_slot = 0;  // inclusive; wraps past midnight when start > end
        int end_slot = 0;    // inclusive
        double mu = 0.0;     // draw events per day
        std::optional<WeibullParams> magnitude;

        std::vector<int> slots() const;
    };

    std::array<Interval, 8> intervals;

    void validate() const;
};

// The eight fixed 3-hour intervals (first one wraps 23:00 through 01:30),
// as (start_slot, end_slot) pairs.
std::array<std::pair<int, int>, 8> hotwater_interval_bounds();

// mu = mean nonzero-draw slot count per day and interval; Weibull (kappa,
// sigma) by Newton on the shape likelihood equation (start 1.0, tolerance
// 1e-8, shape capped at 100 for degenerate equal-magnitude data).
HotWaterModel fit_hotwater_model(const SlotGrid& draw_history_l);

std::vector<double> sample_hotwater_day(const HotWaterModel& model, std::uint64_t rng_seed);

nlohmann::json cluster_model_to_json(const ClusterModel& m);
ClusterModel cluster_model_from_json(const nlohmann::json& j);
nlohmann::json hotwater_model_to_json(const HotWaterModel& m);
HotWaterModel hotwater_model_from_json(const nlohmann::json& j);

// Half-hourly history exchange format, one row per (customer, day, slot).
extern const char* const kHistoryCsvHeader;  // customer_id,day,slot,demand_kw,pv_kw,hw_draw_l

std::map<std::string, CustomerTraces> read_history_csv(const std::string& path);
void write_history_csv(const std::string& path, const std::map<std::string, CustomerTraces>& pool);

}  // namespace lvtariff
