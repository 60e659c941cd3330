#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sg/cli_config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mean-field spin glass statics-to-dynamics toolkit"};
    app.set_version_flag("--version", std::string(sg::kVersion));

    std::string command, config_path, out_dir;
    long long seed = -1;
    int threads = -1;
    app.add_option("command", command,
                   "phase_scan | barrier | rate_curve | exact_gap | mcmc "
                   "(may also come from the config file)");
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--seed", seed, "override the RNG seed")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--threads", threads, "override the worker thread cap")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // option errors are config errors
    }

    std::string text = "{}";
    if (!config_path.empty()) {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) {
            std::fprintf(stderr, "specgap: cannot open config file %s\n", config_path.c_str());
            return 2;
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }

    sg::RunConfig cfg;
    try {
        cfg = sg::parse_run_config(text);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "specgap: config error: %s\n", e.what());
        return 2;
    }
    if (!command.empty()) cfg.command = command;
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads >= 0) cfg.threads = threads;
    if (cfg.command.empty()) {
        std::fprintf(stderr, "specgap: no command given; see --help\n");
        return 2;
    }
    return sg::run_command(cfg);
}
