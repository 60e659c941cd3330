#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "sg/mixture.hpp"

namespace sg {

inline constexpr const char* kVersion = "specgap 0.3.0";

// Resolved run configuration. The JSON layout groups the model under
// "model", the shared options at top level, and per-command options under a
// block named after the command:
//
//   { "command": "rate_curve",
//     "model": { "xi0": [[2, 1.0]], "beta": 2.0, "h": 0.0, "spherical": false },
//     "k": 2, "seed": 1, "out": "runs/sk2", "threads": 0,
//     "rate_curve": { "q_grid": [0.0, 0.1], "pde_n": 128, "quad": 32 } }
//
// Unknown keys anywhere are rejected. Zero-valued numeric knobs mean "module
// default".
struct RunConfig {
    std::string command;  // phase_scan | barrier | rate_curve | exact_gap | mcmc

    // model
    std::vector<MixtureTerm> xi0 = {{2, 1.0}};
    double beta = 1.0;
    double h = 0.0;
    bool spherical = false;

    // shared
    int k = 2;
    uint64_t seed = 1;
    int threads = 0;  // 0 = hardware
    std::string out_dir = ".";

    // phase_scan
    std::vector<double> beta_grid;
    bool with_gfeb = false;  // also certify the rate-curve barrier per row
    int opt_starts = 0;
    int opt_max_eval = 0;
    int opt_search_n = 0;
    int opt_polish_n = 0;
    int opt_final_n = 0;

    // barrier / rate_curve
    int pde_n = 0;
    int pde_quad = 0;
    double lambda_cap = 1.0;
    int lambda_grid = 0;
    int refine_rounds = 0;
    double gfeb_tol = 1e-6;
    std::vector<double> q_grid;
    std::vector<double> mu_atoms;  // optional explicit measure (skips the optimizer)
    std::vector<double> mu_weights;
    double q_star = -1.0;  // barrier origin; -1 = top support atom

    // exact_gap
    int n_spins = 8;
    int n_seeds = 16;
    double epsilon = 0.0;  // difficulty window; 0 = 2.2 * (2/N)
    bool replicated = false;
    bool export_kernel = false;

    // mcmc
    long n_sweeps = 100000;
    long burnin = -1;
    int n_temps = 8;
    double gamma_min = 0.25;
    std::vector<double> ladder;
    int mcmc_seeds = 1;
    std::vector<double> mcmc_q_grid;
    double half_width = 0.0;  // 0 = 1/N

    MixtureSpec mixture() const { return MixtureSpec::from_xi0(xi0, beta, h); }
    MixtureSpec mixture_at(double b) const { return MixtureSpec::from_xi0(xi0, b, h); }
};

// Parses and validates the JSON text; throws std::invalid_argument with the
// offending key or value in the message.
RunConfig parse_run_config(const std::string& json_text);

// Full resolved-config echo plus the code version, stable key order.
std::string manifest_json(const RunConfig& cfg);

// Dispatch: creates out_dir, writes manifest.json, runs the command.
// Returns 0 on success, 2 on config errors, 3 on numerical non-convergence
// (or a flagged non-mixing run), 4 on a violated inequality.
int run_command(const RunConfig& cfg);

// individual drivers (used by run_command and the tests)
int cmd_phase_scan(const RunConfig& cfg);
int cmd_barrier(const RunConfig& cfg);
int cmd_rate_curve(const RunConfig& cfg);
int cmd_exact_gap(const RunConfig& cfg);
int cmd_mcmc(const RunConfig& cfg);

}  // namespace sg
