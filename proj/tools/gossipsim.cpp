#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gossip/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gossipsim - randomized gossiping simulator for the random phone call model"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint32_t jobs = 1;
    bool emit_plotdata = false;
    bool trace = false;

    CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("--jobs", jobs, "number of concurrent cells")->default_val(1);
    run->add_option("--out", out_dir, "output directory")->default_val("out");
    run->add_flag("--emit-plotdata", emit_plotdata, "write per-figure CSVs");
    run->add_flag("--trace", trace, "write per-run channel trace logs");

    CLI::App* validate = app.add_subcommand("validate", "parse a config and echo it fully resolved");
    validate->add_option("config", config_path, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            gossip::ExperimentConfig cfg = gossip::load_config(config_path);
            std::cout << gossip::echo_config(cfg);
            return 0;
        }
        gossip::ExperimentConfig cfg = gossip::load_config(config_path);
        if (trace) cfg.trace = true;
        gossip::ExperimentResult res = gossip::run_experiment(cfg, out_dir, jobs, emit_plotdata);
        std::size_t completed = 0;
        for (const auto& c : res.runs)
            if (c.metrics.completed) completed++;
        std::fprintf(stderr, "gossipsim: %zu runs, %zu completed, results in %s\n", res.runs.size(),
                     completed, out_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gossipsim: error: %s\n", e.what());
        return 1;
    }
}
