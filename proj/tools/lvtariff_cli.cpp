// Pipeline front door: loads a config, applies command-line overrides and
// runs the selected stages. Each subcommand is shorthand for one stage.
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lvtariff/errors.hpp"
#include "lvtariff/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Tariff impact toolkit: synthesize traces, schedule DER, bill and study a feeder"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> stages;
    std::string out_dir;
    int threads = 0;

    app.add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed (overrides the config)")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--stages", stages, "Comma-separated stage list (overrides the config)")
        ->delimiter(',');
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--threads", threads, "Worker threads for stage-internal parallelism")
        ->check(CLI::PositiveNumber);

    const std::vector<std::pair<std::string, std::string>> stage_cmds = {
        {"synth", "Fit models from history and synthesize the study traces"},
        {"optimize", "Schedule every customer's DER under each tariff"},
        {"bill", "Compute annual bills from the stored schedules"},
        {"powerflow", "Run the baseline feeder timeseries and reports"},
        {"study", "Monte Carlo penetration study on the feeder"},
        {"report", "Collate plot-ready result tables"}};
    for (const auto& [name, desc] : stage_cmds) app.add_subcommand(name, desc)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints the message or the help text
        return code == 0 ? 0 : 2;
    }

    try {
        lvtariff::PipelineConfig cfg;
        if (!config_path.empty()) cfg = lvtariff::read_pipeline_config(config_path);
        if (seed_set) cfg.master_seed = seed;
        if (!stages.empty()) cfg.stages = stages;
        for (const auto* sub : app.get_subcommands()) cfg.stages = {sub->get_name()};
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads > 0) cfg.threads = threads;
        cfg.validate();
        lvtariff::run_pipeline(cfg);
        return 0;
    } catch (const lvtariff::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lvtariff::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const lvtariff::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 4;
    } catch (const lvtariff::PowerFlowError& e) {
        std::cerr << "power-flow failure: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
