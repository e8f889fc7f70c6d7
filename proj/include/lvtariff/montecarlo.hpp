#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvtariff/domain.hpp"
#include "lvtariff/powerflow.hpp"

namespace lvtariff {

// Splits integer quotas by largest remainder; ties go to the lower index.
std::vector<int> largest_remainder_split(const std::vector<double>& quotas);

// Draws a uniform scenario partition: (100-p)% of customers stay at Scenario
// I, the PV share splits b% Scenario III / rest Scenario II. Counts are exact
// up to largest-remainder rounding; the assignment is a seeded shuffle.
std::vector<Scenario> allocate_scenarios(int n_customers, double p_pct, double b_pct,
                                         std::uint64_t seed);

// Net grid power series (import positive, export negative) per customer and
// scenario, the quantity the study stitches onto load points.
class ScheduleStore {
  public:
    void put(const std::string& customer_id, Scenario sc, SlotGrid net_kw);
    bool has(const std::string& customer_id, Scenario sc) const;
    const SlotGrid& get(const std::string& customer_id, Scenario sc) const;
    std::vector<std::string> customer_ids() const;

    void save(const std::string& path) const;
    static ScheduleStore load(const std::string& path);

  private:
    std::map<std::string, std::map<Scenario, SlotGrid>> series_;
};

struct StudyConfig {
    std::vector<int> pv_levels{0, 25, 50, 75};
    std::vector<int> batt_levels{0, 40, 80};
    int runs = 100;
    std::string tariff_name = "Flat";  // label recorded with the results
    std::uint64_t master_seed = 1;

    void validate() const;
};

struct Quartiles {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Linear-interpolation quantiles over a copy of the sample.
Quartiles quartiles(std::vector<double> sample);

struct RunRow {
    int p = 0;
    int b = 0;
    int run = 0;
    double max_head_loading_pct = 0.0;
    double voltage_problem_pct = 0.0;
    int non_converged_slots = 0;
};

struct ComboSummary {
    int p = 0;
    int b = 0;
    Quartiles loading;
    Quartiles voltage;
};

struct StudyResults {
    std::string tariff_name;
    std::vector<RunRow> rows;
    std::vector<ComboSummary> summaries;
};

// Sweeps (p, b) combos (b only varies when p > 0), allocating scenarios and
// load-point placement per run from hash(master, p, b, run), then runs the
// year of power flow and both problem detectors.
StudyResults run_study(const StudyConfig& cfg, const Network& net, const ScheduleStore& store);

inline constexpr const char* kStudyCsvHeader =
    "p,b,run,max_head_loading_pct,customers_with_voltage_problems_pct";

void write_study_csv(const std::string& path, const StudyResults& results);
std::vector<RunRow> read_study_csv(const std::string& path);
nlohmann::json study_summary_json(const StudyResults& results);
void write_study_summary_csv(const std::string& path, const StudyResults& results);

}  // namespace lvtariff
