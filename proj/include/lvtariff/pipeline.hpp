#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lvtariff/montecarlo.hpp"
#include "lvtariff/solver.hpp"

namespace lvtariff {

struct SolverConfig {
    long node_cap = 200000;
    double time_cap_s = kInfinity;
    double rel_gap = 1e-6;

    MilpLimits limits() const;
};

struct StudyStageConfig {
    std::vector<int> pv_levels{0, 25, 50, 75};
    std::vector<int> batt_levels{0, 40, 80};
    int runs = 100;
    std::string tariff = "ToU";
};

// Whole-pipeline description. The demo roster (customer gear, network and
// fitting histories) derives deterministically from the master seed, so any
// stage can be re-run alone against cached artifacts.
struct PipelineConfig {
    std::string out_dir = "out";
    std::vector<std::string> stages{"synth", "optimize", "bill", "powerflow", "study", "report"};
    std::uint64_t master_seed = 1;

    int customers = 10;
    int history_days = 112;  // corpus length behind the fitted models
    int first_day = 1;
    int days = 28;  // synthetic horizon that is optimized and studied
    std::string horizon = "daily";
    std::vector<std::string> tariffs{"Flat", "ToU", "FlatD", "ToUD"};

    std::optional<std::string> history_csv;   // fit from this corpus instead
    std::optional<std::string> network_file;  // run on this feeder instead
    double concentration = 25.0;              // cluster birth threshold
    SolverConfig solver;
    StudyStageConfig study;
    int threads = 1;

    void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig read_pipeline_config(const std::string& path);

// FNV-1a over the file bytes, hex-encoded; the manifest's artifact stamp.
std::string file_fingerprint(const std::string& path);

// Runs the selected stages in canonical order, writing artifacts and the
// manifest under out_dir. Throws the owning module's error on failure after
// marking the stage incomplete in the manifest.
void run_pipeline(const PipelineConfig& cfg);

}  // namespace lvtariff
