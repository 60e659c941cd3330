#include "sg/cli_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sg/dynamics.hpp"
#include "sg/gt2d.hpp"
#include "sg/hamiltonian.hpp"
#include "sg/ising_statics.hpp"
#include "sg/mcmc.hpp"
#include "sg/parallel.hpp"
#include "sg/rng.hpp"
#include "sg/spherical.hpp"

namespace sg {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad_config(const std::string& msg) { throw std::invalid_argument(msg); }

const Json* find_key(const Json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void check_keys(const Json& obj, const char* where, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) known = true;
        if (!known) bad_config(std::string("unknown key \"") + it.key() + "\" in " + where);
    }
}

template <class T>
void load(const Json& obj, const char* key, T& out, const char* where) {
    if (const Json* v = find_key(obj, key)) {
        try {
            v->get_to(out);
        } catch (const Json::exception&) {
            bad_config(std::string(where) + "." + key + ": wrong type");
        }
    }
}

void load_seed(const Json& obj, const char* key, uint64_t& out, const char* where) {
    if (const Json* v = find_key(obj, key)) {
        long long s = 0;
        try {
            v->get_to(s);
        } catch (const Json::exception&) {
            bad_config(std::string(where) + "." + key + ": wrong type");
        }
        if (s < 0) bad_config(std::string(where) + "." + key + ": must be >= 0");
        out = static_cast<uint64_t>(s);
    }
}

void load_xi0(const Json& model, std::vector<MixtureTerm>& out) {
    const Json* v = find_key(model, "xi0");
    if (!v) return;
    if (!v->is_array() || v->empty()) bad_config("model.xi0: need a nonempty array of [p, c] pairs");
    out.clear();
    for (const Json& t : *v) {
        if (!t.is_array() || t.size() != 2) bad_config("model.xi0: terms must be [p, c] pairs");
        MixtureTerm term;
        try {
            t[0].get_to(term.p);
            t[1].get_to(term.c);
        } catch (const Json::exception&) {
            bad_config("model.xi0: terms must be [int, number] pairs");
        }
        out.push_back(term);
    }
}

const char* kCommands[] = {"phase_scan", "barrier", "rate_curve", "exact_gap", "mcmc"};

bool known_command(const std::string& c) {
    for (const char* k : kCommands)
        if (c == k) return true;
    return false;
}

// ---- output helpers ---------------------------------------------------------

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

// ---- spherical rate curve from the closed-form two-replica functional -------

double sph_min_over_lambda(const MixtureSpec& spec, const SphericalOptReport& rep, double q,
                           double cap, int grid_n, double* lambda_best) {
    if (grid_n < 5) grid_n = 5;
    if (grid_n % 2 == 0) ++grid_n;  // keep lambda = 0 on the grid
    int best = -1;
    double fbest = kInf;
    std::vector<double> ls(static_cast<size_t>(grid_n)), fv(static_cast<size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i) {
        ls[i] = -cap + 2.0 * cap * i / (grid_n - 1);
        fv[i] = gt_value_sph(spec, rep, ls[i], q);
        if (fv[i] < fbest) fbest = fv[i], best = i;
    }
    double lo = ls[std::max(0, best - 1)], hi = ls[std::min(grid_n - 1, best + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = gt_value_sph(spec, rep, x1, q), f2 = gt_value_sph(spec, rep, x2, q);
    for (int it = 0; it < 60; ++it) {
        if (f1 <= f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - gr * (b - a);
            f1 = gt_value_sph(spec, rep, x1, q);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + gr * (b - a);
            f2 = gt_value_sph(spec, rep, x2, q);
        }
    }
    double lam = f1 <= f2 ? x1 : x2;
    double val = std::min(f1, f2);
    if (fbest < val) val = fbest, lam = ls[best];
    if (lambda_best) *lambda_best = lam;
    return val;
}

struct SphRatePt {
    double q = 0.0, i_lb = 0.0, lambda_best = 0.0;
    bool is_zero = false, certified = true;
};

struct SphRateOut {
    std::vector<SphRatePt> pts;
    double two_ps = 0.0;
    double h_cal = 0.0, q1 = 0.0, q2 = 0.0, q3 = 0.0;
    double zero_residual = 0.0;
    bool gfeb = false;
    double gfeb_tol = 0.0;
};

// Mirrors the Ising rate curve: I_lb(q) = max(0, 2 P_S - min_lambda P(lambda, q)),
// atoms of nu joined to the scan as certified zeros, negative q by reflection
// when the mixture is even with h = 0.
// atoms carrying at least the optimizer's support tolerance; vestigial
// near-zero masses do not mark zeros of the rate function
std::vector<double> support_atoms(const AtomicMeasure& nu, double w_tol = 1e-3) {
    std::vector<double> qs;
    for (int i = 0; i < nu.k(); ++i)
        if (nu.w[static_cast<size_t>(i)] >= w_tol) qs.push_back(nu.q[static_cast<size_t>(i)]);
    return qs;
}

SphRateOut sph_rate_curve(const MixtureSpec& spec, const SphericalOptReport& rep,
                          std::vector<double> q_grid, double lambda_cap, int lambda_grid,
                          double gfeb_tol, double zero_tol) {
    const std::vector<double> atoms = support_atoms(rep.minimizer.nu);
    const bool reflective = spec.even() && spec.h == 0.0;
    for (double a : atoms) q_grid.push_back(a);
    std::sort(q_grid.begin(), q_grid.end());
    q_grid.erase(std::unique(q_grid.begin(), q_grid.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 q_grid.end());

    SphRateOut out;
    out.two_ps = 2.0 * rep.ps_value;
    out.gfeb_tol = gfeb_tol;
    double cap = std::min(lambda_cap, 0.9 * rep.margin_psi);
    if (cap <= 0) bad_config("rate_curve: lambda window is empty (b too close to psi(0))");
    for (double q : q_grid) {
        SphRatePt pt;
        pt.q = q;
        double qa = std::abs(q);
        if (q < 0.0 && !reflective) {
            pt.i_lb = 0.0;
            pt.certified = false;
            out.pts.push_back(pt);
            continue;
        }
        if (qa >= 1.0) bad_config("rate_curve: q grid entries must lie in (-1, 1)");
        double lam = 0.0;
        double gap = out.two_ps - sph_min_over_lambda(spec, rep, qa, cap, lambda_grid, &lam);
        pt.lambda_best = lam;
        pt.i_lb = std::max(0.0, gap);
        for (double a : atoms)
            if (std::abs(qa - a) <= zero_tol) pt.is_zero = true;
        if (pt.is_zero) out.zero_residual = std::max(out.zero_residual, std::abs(gap));
        out.pts.push_back(pt);
    }
    // barrier height: best middle elevation between two certified zeros
    int m = static_cast<int>(out.pts.size());
    for (int i = 0; i < m; ++i) {
        if (!out.pts[i].is_zero) continue;
        for (int j = i + 1; j < m; ++j) {
            if (!out.pts[j].is_zero) continue;
            for (int k = i + 1; k < j; ++k) {
                double cand = out.pts[k].i_lb - out.pts[i].i_lb - out.pts[j].i_lb;
                if (cand > out.h_cal) {
                    out.h_cal = cand;
                    out.q1 = out.pts[i].q;
                    out.q2 = out.pts[k].q;
                    out.q3 = out.pts[j].q;
                }
            }
        }
    }
    out.gfeb = out.h_cal > gfeb_tol;
    return out;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

std::vector<double> default_q_grid(const MixtureSpec& spec) {
    if (spec.even() && spec.h == 0.0) return linspace(-0.95, 0.95, 39);
    return linspace(0.0, 0.95, 20);
}

KrsbOptions krsb_options(const RunConfig& cfg) {
    KrsbOptions o;
    o.seed = cfg.seed;
    if (cfg.opt_starts > 0) o.n_starts = cfg.opt_starts;
    if (cfg.opt_max_eval > 0) o.max_eval = cfg.opt_max_eval;
    if (cfg.opt_search_n > 0) o.search_n = cfg.opt_search_n;
    if (cfg.opt_polish_n > 0) o.polish_n = cfg.opt_polish_n;
    if (cfg.opt_final_n > 0) o.final_n = cfg.opt_final_n;
    return o;
}

RateOptions rate_options(const RunConfig& cfg, bool coarse) {
    RateOptions ro;
    ro.lambda_cap = cfg.lambda_cap;
    ro.gfeb_tol = cfg.gfeb_tol;
    if (cfg.lambda_grid > 0) ro.lambda_grid = cfg.lambda_grid;
    if (cfg.refine_rounds > 0) ro.refine_rounds = cfg.refine_rounds;
    if (cfg.pde_n > 0) ro.pde.n = cfg.pde_n;
    if (cfg.pde_quad > 0) ro.pde.quad = cfg.pde_quad;
    if (coarse) {
        ro.pde.n = cfg.pde_n > 0 ? cfg.pde_n : 96;
        ro.pde.quad = cfg.pde_quad > 0 ? cfg.pde_quad : 24;
        if (cfg.lambda_grid <= 0) ro.lambda_grid = 11;
        if (cfg.refine_rounds <= 0) ro.refine_rounds = 4;
    }
    return ro;
}

AtomicMeasure config_measure(const RunConfig& cfg) { return {cfg.mu_atoms, cfg.mu_weights}; }

}  // namespace

// ---- parsing ----------------------------------------------------------------

RunConfig parse_run_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::exception& e) {
        bad_config(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) bad_config("config root must be a JSON object");
    check_keys(root, "config",
               {"command", "model", "k", "seed", "out", "threads", "phase_scan", "barrier",
                "rate_curve", "exact_gap", "mcmc"});

    RunConfig cfg;
    load(root, "command", cfg.command, "config");
    if (!cfg.command.empty() && !known_command(cfg.command))
        bad_config("unknown command \"" + cfg.command +
                   "\" (expected phase_scan, barrier, rate_curve, exact_gap or mcmc)");
    load(root, "k", cfg.k, "config");
    if (cfg.k < 1) bad_config("config.k: must be >= 1");
    load_seed(root, "seed", cfg.seed, "config");
    load(root, "out", cfg.out_dir, "config");
    load(root, "threads", cfg.threads, "config");
    if (cfg.threads < 0) bad_config("config.threads: must be >= 0");

    if (const Json* model = find_key(root, "model")) {
        if (!model->is_object()) bad_config("model must be an object");
        check_keys(*model, "model", {"xi0", "beta", "h", "spherical"});
        load_xi0(*model, cfg.xi0);
        load(*model, "beta", cfg.beta, "model");
        load(*model, "h", cfg.h, "model");
        load(*model, "spherical", cfg.spherical, "model");
        if (!(cfg.beta >= 0.0)) bad_config("model.beta: must be >= 0");
    }
    try {
        cfg.mixture().validate();
    } catch (const std::exception& e) {
        bad_config(std::string("bad model: ") + e.what());
    }

    if (const Json* ps = find_key(root, "phase_scan")) {
        if (!ps->is_object()) bad_config("phase_scan must be an object");
        check_keys(*ps, "phase_scan",
                   {"beta_grid", "with_gfeb", "n_starts", "max_eval", "search_n", "polish_n",
                    "final_n"});
        load(*ps, "beta_grid", cfg.beta_grid, "phase_scan");
        load(*ps, "with_gfeb", cfg.with_gfeb, "phase_scan");
        load(*ps, "n_starts", cfg.opt_starts, "phase_scan");
        load(*ps, "max_eval", cfg.opt_max_eval, "phase_scan");
        load(*ps, "search_n", cfg.opt_search_n, "phase_scan");
        load(*ps, "polish_n", cfg.opt_polish_n, "phase_scan");
        load(*ps, "final_n", cfg.opt_final_n, "phase_scan");
        for (size_t i = 0; i + 1 < cfg.beta_grid.size(); ++i)
            if (!(cfg.beta_grid[i] < cfg.beta_grid[i + 1]))
                bad_config("phase_scan.beta_grid: must be strictly ascending");
        for (double b : cfg.beta_grid)
            if (!(b >= 0.0)) bad_config("phase_scan.beta_grid: entries must be >= 0");
    }

    if (const Json* bl = find_key(root, "barrier")) {
        if (!bl->is_object()) bad_config("barrier must be an object");
        check_keys(*bl, "barrier",
                   {"pde_n", "quad", "lambda_cap", "mu_atoms", "mu_weights", "q_star"});
        load(*bl, "pde_n", cfg.pde_n, "barrier");
        load(*bl, "quad", cfg.pde_quad, "barrier");
        load(*bl, "lambda_cap", cfg.lambda_cap, "barrier");
        load(*bl, "mu_atoms", cfg.mu_atoms, "barrier");
        load(*bl, "mu_weights", cfg.mu_weights, "barrier");
        load(*bl, "q_star", cfg.q_star, "barrier");
    }

    if (const Json* rc = find_key(root, "rate_curve")) {
        if (!rc->is_object()) bad_config("rate_curve must be an object");
        check_keys(*rc, "rate_curve",
                   {"q_grid", "pde_n", "quad", "lambda_cap", "lambda_grid", "refine_rounds",
                    "gfeb_tol", "mu_atoms", "mu_weights"});
        load(*rc, "q_grid", cfg.q_grid, "rate_curve");
        load(*rc, "pde_n", cfg.pde_n, "rate_curve");
        load(*rc, "quad", cfg.pde_quad, "rate_curve");
        load(*rc, "lambda_cap", cfg.lambda_cap, "rate_curve");
        load(*rc, "lambda_grid", cfg.lambda_grid, "rate_curve");
        load(*rc, "refine_rounds", cfg.refine_rounds, "rate_curve");
        load(*rc, "gfeb_tol", cfg.gfeb_tol, "rate_curve");
        load(*rc, "mu_atoms", cfg.mu_atoms, "rate_curve");
        load(*rc, "mu_weights", cfg.mu_weights, "rate_curve");
    }
    if (!(cfg.lambda_cap > 0.0)) bad_config("lambda_cap must be > 0");
    if (cfg.mu_atoms.size() != cfg.mu_weights.size())
        bad_config("mu_atoms and mu_weights must have equal length");

    if (const Json* eg = find_key(root, "exact_gap")) {
        if (!eg->is_object()) bad_config("exact_gap must be an object");
        check_keys(*eg, "exact_gap", {"n", "seeds", "epsilon", "replicated", "export_kernel"});
        load(*eg, "n", cfg.n_spins, "exact_gap");
        load(*eg, "seeds", cfg.n_seeds, "exact_gap");
        load(*eg, "epsilon", cfg.epsilon, "exact_gap");
        load(*eg, "replicated", cfg.replicated, "exact_gap");
        load(*eg, "export_kernel", cfg.export_kernel, "exact_gap");
        if (cfg.n_seeds < 1) bad_config("exact_gap.seeds: must be >= 1");
        if (cfg.epsilon < 0.0) bad_config("exact_gap.epsilon: must be >= 0");
    }

    if (const Json* mc = find_key(root, "mcmc")) {
        if (!mc->is_object()) bad_config("mcmc must be an object");
        check_keys(*mc, "mcmc",
                   {"n", "sweeps", "burnin", "temps", "gamma_min", "ladder", "seeds", "q_grid",
                    "half_width"});
        load(*mc, "n", cfg.n_spins, "mcmc");
        load(*mc, "sweeps", cfg.n_sweeps, "mcmc");
        load(*mc, "burnin", cfg.burnin, "mcmc");
        load(*mc, "temps", cfg.n_temps, "mcmc");
        load(*mc, "gamma_min", cfg.gamma_min, "mcmc");
        load(*mc, "ladder", cfg.ladder, "mcmc");
        load(*mc, "seeds", cfg.mcmc_seeds, "mcmc");
        load(*mc, "q_grid", cfg.mcmc_q_grid, "mcmc");
        load(*mc, "half_width", cfg.half_width, "mcmc");
        if (cfg.mcmc_seeds < 1) bad_config("mcmc.seeds: must be >= 1");
        if (cfg.half_width < 0.0) bad_config("mcmc.half_width: must be >= 0");
    }

    if (cfg.command == "exact_gap") {
        if (cfg.n_spins < 1 || cfg.n_spins > 20)
            bad_config("exact_gap.n: exact diagonalization needs 1 <= n <= 20");
        if (cfg.replicated && cfg.n_spins > 10)
            bad_config("exact_gap.replicated: the pair chain needs n <= 10");
        if (cfg.spherical) bad_config("exact_gap runs on the Ising chain; model.spherical=false");
    }
    if (cfg.command == "mcmc") {
        if (cfg.n_spins < 1 || cfg.n_spins > 200) bad_config("mcmc.n: need 1 <= n <= 200");
        if (cfg.spherical) bad_config("mcmc runs on the Ising chain; model.spherical=false");
    }
    return cfg;
}

std::string manifest_json(const RunConfig& cfg) {
    OJson m;
    m["version"] = kVersion;
    m["command"] = cfg.command;
    OJson model;
    OJson xi0 = OJson::array();
    for (const MixtureTerm& t : cfg.xi0) xi0.push_back(OJson::array({t.p, t.c}));
    model["xi0"] = xi0;
    model["beta"] = cfg.beta;
    model["h"] = cfg.h;
    model["spherical"] = cfg.spherical;
    m["model"] = model;
    m["k"] = cfg.k;
    m["seed"] = cfg.seed;
    m["out"] = cfg.out_dir;
    m["threads"] = cfg.threads;
    m["phase_scan"] = OJson{{"beta_grid", cfg.beta_grid},
                            {"with_gfeb", cfg.with_gfeb},
                            {"n_starts", cfg.opt_starts},
                            {"max_eval", cfg.opt_max_eval},
                            {"search_n", cfg.opt_search_n},
                            {"polish_n", cfg.opt_polish_n},
                            {"final_n", cfg.opt_final_n}};
    m["barrier"] = OJson{{"pde_n", cfg.pde_n},
                         {"quad", cfg.pde_quad},
                         {"lambda_cap", cfg.lambda_cap},
                         {"mu_atoms", cfg.mu_atoms},
                         {"mu_weights", cfg.mu_weights},
                         {"q_star", cfg.q_star}};
    m["rate_curve"] = OJson{{"q_grid", cfg.q_grid},
                            {"pde_n", cfg.pde_n},
                            {"quad", cfg.pde_quad},
                            {"lambda_cap", cfg.lambda_cap},
                            {"lambda_grid", cfg.lambda_grid},
                            {"refine_rounds", cfg.refine_rounds},
                            {"gfeb_tol", cfg.gfeb_tol}};
    m["exact_gap"] = OJson{{"n", cfg.n_spins},
                           {"seeds", cfg.n_seeds},
                           {"epsilon", cfg.epsilon},
                           {"replicated", cfg.replicated},
                           {"export_kernel", cfg.export_kernel}};
    m["mcmc"] = OJson{{"n", cfg.n_spins},         {"sweeps", cfg.n_sweeps},
                      {"burnin", cfg.burnin},     {"temps", cfg.n_temps},
                      {"gamma_min", cfg.gamma_min}, {"ladder", cfg.ladder},
                      {"seeds", cfg.mcmc_seeds},  {"q_grid", cfg.mcmc_q_grid},
                      {"half_width", cfg.half_width}};
    return m.dump(2) + "\n";
}

// ---- phase scan ---------------------------------------------------------------

int cmd_phase_scan(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    struct Row {
        double f = kNan, spread = kNan, h_cal = kNan;
        int k_eff = 0, gfeb = -1;
        bool is_atom = false, grsb = false, gprev = false, converged = false;
        std::string status = "ok";
    };
    const std::vector<double>& grid = cfg.beta_grid;
    std::vector<Row> rows(grid.size());

    parallel_for(static_cast<int>(grid.size()), [&](int i) {
        Row& r = rows[static_cast<size_t>(i)];
        try {
            MixtureSpec sb = cfg.mixture_at(grid[static_cast<size_t>(i)]);
            if (cfg.spherical) {
                SphOptOptions so;
                so.seed = cfg.seed;
                if (cfg.opt_starts > 0) so.n_starts = cfg.opt_starts;
                if (cfg.opt_max_eval > 0) so.max_eval = cfg.opt_max_eval;
                SphericalOptReport rep = minimize_spherical(sb, cfg.k, so);
                r.f = rep.ps_value;
                r.k_eff = static_cast<int>(support_atoms(rep.minimizer.nu).size());
                r.is_atom = r.k_eff <= 1;
                r.grsb = r.k_eff >= 2;
                for (int a = 0; a < rep.minimizer.nu.k() &&
                                a < static_cast<int>(rep.replicon.size());
                     ++a)
                    if (rep.minimizer.nu.w[static_cast<size_t>(a)] >= 1e-3 &&
                        rep.replicon[static_cast<size_t>(a)] > 1e-3)
                        r.gprev = true;
                r.converged = rep.converged;
                r.spread = rep.multistart_spread;
                if (cfg.with_gfeb) {
                    SphRateOut sr = sph_rate_curve(sb, rep, linspace(0.0, 0.95, 39),
                                                   cfg.lambda_cap,
                                                   cfg.lambda_grid > 0 ? cfg.lambda_grid : 41,
                                                   cfg.gfeb_tol, 1e-7);
                    r.gfeb = sr.gfeb ? 1 : 0;
                    r.h_cal = sr.h_cal;
                }
            } else {
                PhaseReport rep = minimize_krsb(sb, cfg.k, krsb_options(cfg));
                r.f = rep.free_energy;
                r.k_eff = static_cast<int>(rep.atoms.size());
                r.is_atom = rep.is_atom;
                r.grsb = rep.grsb;
                r.gprev = rep.gprev;
                r.converged = rep.converged;
                r.spread = rep.multistart_spread;
                if (cfg.with_gfeb) {
                    RateCurve rc =
                        rate_curve(sb, rep.minimizer, default_q_grid(sb), rate_options(cfg, true));
                    r.gfeb = rc.gfeb ? 1 : 0;
                    r.h_cal = rc.h_cal;
                }
            }
        } catch (const std::exception& e) {
            r.status = std::string("error: ") + e.what();
            r.converged = false;
        }
    });

    std::string csv =
        "beta,free_energy,k_eff,is_atom,grsb,gprev,converged,multistart_spread,gfeb,h_cal,status\n";
    for (size_t i = 0; i < grid.size(); ++i) {
        const Row& r = rows[i];
        csv += fmt(grid[i]) + "," + fmt(r.f) + "," + std::to_string(r.k_eff) + "," +
               std::to_string(r.is_atom ? 1 : 0) + "," + std::to_string(r.grsb ? 1 : 0) + "," +
               std::to_string(r.gprev ? 1 : 0) + "," + std::to_string(r.converged ? 1 : 0) + "," +
               fmt(r.spread) + "," + std::to_string(r.gfeb) + "," + fmt(r.h_cal) + "," +
               csv_safe(r.status) + "\n";
    }
    write_file(fs::path(cfg.out_dir) / "phase_scan.csv", csv);

    // bracket summary: last single-atom beta, first multi-atom beta, first
    // certified-barrier beta; the barrier onset may not precede the atom phase
    OJson summary;
    OJson last_single = nullptr, first_multi = nullptr, first_gfeb = nullptr;
    bool reentrant = false;
    bool seen_multi = false;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (rows[i].status != "ok") continue;
        if (rows[i].is_atom) {
            last_single = grid[i];
            if (seen_multi) reentrant = true;
        } else {
            if (first_multi.is_null()) first_multi = grid[i];
            seen_multi = true;
        }
        if (rows[i].gfeb == 1 && first_gfeb.is_null()) first_gfeb = grid[i];
    }
    bool invariant_ok = true;
    if (!first_gfeb.is_null() && !last_single.is_null() && seen_multi) {
        // a certified barrier strictly inside the single-atom phase violates
        // beta_GFEB >= beta_s at grid resolution
        double fg = first_gfeb.get<double>();
        if (!first_multi.is_null() && fg < first_multi.get<double>() - 1e-12) invariant_ok = false;
    }
    summary["beta_last_single_atom"] = last_single;
    summary["beta_first_multi_atom"] = first_multi;
    summary["beta_first_gfeb"] = first_gfeb;
    summary["reentrant"] = reentrant;
    summary["gfeb_onset_consistent"] = invariant_ok;
    write_file(fs::path(cfg.out_dir) / "phase_scan_summary.json", summary.dump(2) + "\n");

    int code = 0;
    for (const Row& r : rows)
        if (r.status != "ok" || !r.converged) code = 3;
    if (reentrant) code = std::max(code, 3);
    if (!invariant_ok) code = 4;
    return code;
}

// ---- barrier certification ------------------------------------------------------

int cmd_barrier(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    MixtureSpec spec = cfg.mixture();
    OJson out;
    out["route"] = cfg.spherical ? "spherical" : "ising";
    int code = 0;
    if (cfg.spherical) {
        SphOptOptions so;
        so.seed = cfg.seed;
        SphericalOptReport rep = minimize_spherical(spec, cfg.k, so);
        if (!rep.converged) code = 3;
        std::vector<double> atoms = support_atoms(rep.minimizer.nu);
        double q_star = cfg.q_star >= 0.0 ? cfg.q_star : atoms.back();
        SphBarrierOptions bo;
        if (cfg.lambda_grid > 0) bo.lambda_grid = cfg.lambda_grid;
        std::optional<SphBarrier> b = barrier_search_sph(spec, rep, q_star, bo);
        out["q_star"] = q_star;
        out["two_p"] = 2.0 * rep.ps_value;
        out["found"] = b.has_value();
        if (b) {
            out["q"] = b->q;
            out["lambda"] = b->lambda;
            out["gap"] = b->gap;
            out["rate"] = b->rate_c;
            out["hess_a"] = b->hess_a;
            out["hess_b"] = b->hess_b;
            out["hess_neg_eig"] = b->hess_neg;
        }
    } else {
        AtomicMeasure mu = AtomicMeasure::dirac(0.0);
        double two_p_hint = kNan;
        if (!cfg.mu_atoms.empty()) {
            mu = config_measure(cfg);
        } else {
            PhaseReport rep = minimize_krsb(spec, cfg.k, krsb_options(cfg));
            if (!rep.converged) code = 3;
            mu = rep.minimizer;
            two_p_hint = 2.0 * rep.free_energy;
        }
        double q_star = cfg.q_star >= 0.0 ? cfg.q_star : mu.max_atom();
        GtBarrierOptions go;
        go.lambda_cap = cfg.lambda_cap;
        if (cfg.pde_n > 0) go.pde.n = cfg.pde_n;
        if (cfg.pde_quad > 0) go.pde.quad = cfg.pde_quad;
        GtBarrier b = barrier_search(spec, mu, q_star, go);
        out["q_star"] = q_star;
        out["mu_atoms"] = mu.q;
        out["mu_weights"] = mu.w;
        out["two_p"] = b.two_p_i;
        if (std::isfinite(two_p_hint)) out["two_p_optimizer"] = two_p_hint;
        out["found"] = b.found;
        out["replicon_at_q_star"] = b.replicon;
        out["n_pde_solves"] = b.n_solves;
        out["scanned_q"] = b.scanned_q;
        if (b.found) {
            out["q"] = b.q;
            out["lambda"] = b.lambda;
            out["value"] = b.value;
            out["gap"] = b.gap;
            out["hess_a"] = b.hess_a;
            out["hess_b"] = b.hess_b;
            out["hess_neg_eig"] = b.neg_eig;
        }
    }
    write_file(fs::path(cfg.out_dir) / "barrier.json", out.dump(2) + "\n");
    return code;
}

// ---- rate curve ---------------------------------------------------------------

int cmd_rate_curve(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    MixtureSpec spec = cfg.mixture();
    if (!spec.convex_on_unit_ball())
        bad_config(
            "rate_curve: xi must be convex on [-1,1] for the coupled two-replica upper bound; "
            "this mixture is not");
    std::vector<double> qg = cfg.q_grid.empty() ? default_q_grid(spec) : cfg.q_grid;
    std::string csv = "q,i_lb,is_zero,certified,lambda_best\n";
    OJson summary;
    int code = 0;
    if (cfg.spherical) {
        SphOptOptions so;
        so.seed = cfg.seed;
        SphericalOptReport rep = minimize_spherical(spec, cfg.k, so);
        if (!rep.converged) code = 3;
        SphRateOut sr = sph_rate_curve(spec, rep, qg, cfg.lambda_cap,
                                       cfg.lambda_grid > 0 ? cfg.lambda_grid : 41, cfg.gfeb_tol,
                                       1e-7);
        for (const SphRatePt& p : sr.pts)
            csv += fmt(p.q) + "," + fmt(p.i_lb) + "," + std::to_string(p.is_zero ? 1 : 0) + "," +
                   std::to_string(p.certified ? 1 : 0) + "," + fmt(p.lambda_best) + "\n";
        summary["route"] = "spherical";
        summary["two_p"] = sr.two_ps;
        summary["h_cal"] = sr.h_cal;
        summary["q1"] = sr.q1;
        summary["q2"] = sr.q2;
        summary["q3"] = sr.q3;
        summary["zero_residual"] = sr.zero_residual;
        summary["gfeb"] = sr.gfeb;
        summary["gfeb_tol"] = sr.gfeb_tol;
        summary["log_gap_decay_rate"] = sr.gfeb ? -sr.h_cal : 0.0;
        OJson cert;
        cert["q1"] = sr.q1;
        cert["q2"] = sr.q2;
        cert["q3"] = sr.q3;
        cert["height"] = sr.h_cal;
        write_file(fs::path(cfg.out_dir) / "certificate.json", cert.dump(2) + "\n");
    } else {
        AtomicMeasure mu = AtomicMeasure::dirac(0.0);
        if (!cfg.mu_atoms.empty()) {
            mu = config_measure(cfg);
        } else {
            PhaseReport rep = minimize_krsb(spec, cfg.k, krsb_options(cfg));
            if (!rep.converged) code = 3;
            mu = rep.minimizer;
        }
        RateCurve rc = rate_curve(spec, mu, qg, rate_options(cfg, false));
        for (const RatePoint& p : rc.pts)
            csv += fmt(p.q) + "," + fmt(p.i_lb) + "," + std::to_string(p.is_zero ? 1 : 0) + "," +
                   std::to_string(p.certified ? 1 : 0) + "," + fmt(p.lambda_best) + "\n";
        summary["route"] = "ising";
        summary["two_p"] = rc.two_p_i;
        summary["h_cal"] = rc.h_cal;
        summary["q1"] = rc.q1;
        summary["q2"] = rc.q2;
        summary["q3"] = rc.q3;
        summary["zero_residual"] = rc.zero_residual;
        summary["gfeb"] = rc.gfeb;
        summary["gfeb_tol"] = rc.gfeb_tol;
        summary["n_pde_solves"] = rc.n_solves;
        summary["log_gap_decay_rate"] = rc.gfeb ? -rc.h_cal : 0.0;
        write_file(fs::path(cfg.out_dir) / "certificate.json", rc.certificate_json() + "\n");
    }
    write_file(fs::path(cfg.out_dir) / "rate_curve.csv", csv);
    write_file(fs::path(cfg.out_dir) / "rate_summary.json", summary.dump(2) + "\n");
    return code;
}

// ---- exact finite-N gap ---------------------------------------------------------

int cmd_exact_gap(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    if (cfg.spherical) bad_config("exact_gap runs on the Ising chain; model.spherical=false");
    if (cfg.n_spins < 1 || cfg.n_spins > 20)
        bad_config("exact_gap.n: exact diagonalization needs 1 <= n <= 20");
    if (cfg.replicated && cfg.n_spins > 10)
        bad_config("exact_gap.replicated: the pair chain needs n <= 10");
    MixtureSpec spec = cfg.mixture();
    const int n = cfg.n_spins;
    const double eps = cfg.epsilon > 0.0 ? cfg.epsilon : 2.2 * (2.0 / n);

    struct Row {
        double lambda1 = kNan, residual = kNan, coercive = kNan;
        double mag_difficulty = kNan, mag_diff_bound = kNan, mag_testfn_bound = kNan;
        double rep_lambda1 = kNan, identity_dev = kNan;
        double ov_difficulty = kNan, ov_diff_bound = kNan, ov_testfn_bound = kNan;
        int iterations = 0;
        bool converged = false;
        std::string method, status = "ok";
        std::string kernel_text;
    };
    std::vector<Row> rows(static_cast<size_t>(cfg.n_seeds));

    parallel_for(cfg.n_seeds, [&](int i) {
        Row& r = rows[static_cast<size_t>(i)];
        try {
            HamiltonianTable table =
                HamiltonianTable::sample(spec, n, splitmix64(cfg.seed) + static_cast<uint64_t>(i));
            ChainKernel kernel = build_metropolis(table);
            SpectralResult sr = spectral_gap(kernel);
            r.lambda1 = sr.lambda1;
            r.residual = sr.residual;
            r.iterations = sr.iterations;
            r.converged = sr.converged;
            r.method = sr.method;
            r.coercive = coercive_lower_bound(table, kernel);
            if (r.coercive > r.lambda1 * (1.0 + 1e-9) + 1e-12)
                r.status = "violation: coercive lower bound exceeds the exact gap";

            OverlapHistogram mag = magnetization_distribution(table);
            DifficultyReport md = difficulty(mag, eps);
            r.mag_difficulty = md.difficulty;
            CheegerBounds mb = cheeger_bound_check(mag, md);
            if (mb.difficulty_form.applicable) {
                r.mag_diff_bound = mb.difficulty_form.value;
                if (r.mag_diff_bound < r.lambda1 - 1e-12)
                    r.status = "violation: magnetization difficulty bound below the exact gap";
            }
            if (mb.testfn_form.applicable) {
                r.mag_testfn_bound = mb.testfn_form.value;
                if (r.mag_testfn_bound < r.lambda1 - 1e-12)
                    r.status = "violation: magnetization test-function bound below the exact gap";
            }

            if (cfg.replicated) {
                SpectralResult rg = replicated_gap(kernel);
                r.rep_lambda1 = rg.lambda1;
                r.identity_dev = std::abs(rg.lambda1 - 0.5 * r.lambda1);
                if (!rg.converged) r.converged = false;
                if (r.identity_dev > 1e-8)
                    r.status = "violation: replicated gap differs from half the single gap";
                if (n <= 14) {
                    OverlapHistogram ov = overlap_distribution(table);
                    DifficultyReport od = difficulty(ov, eps);
                    r.ov_difficulty = od.difficulty;
                    CheegerBounds ob = cheeger_bound_check(ov, od);
                    if (ob.difficulty_form.applicable) {
                        r.ov_diff_bound = ob.difficulty_form.value;
                        if (r.ov_diff_bound < r.rep_lambda1 - 1e-12)
                            r.status = "violation: overlap difficulty bound below the pair gap";
                    }
                    if (ob.testfn_form.applicable) {
                        r.ov_testfn_bound = ob.testfn_form.value;
                        if (r.ov_testfn_bound < r.rep_lambda1 - 1e-12)
                            r.status = "violation: overlap test-function bound below the pair gap";
                    }
                }
            }
            if (cfg.export_kernel) r.kernel_text = kernel.triplet_text();
        } catch (const std::exception& e) {
            r.status = std::string("error: ") + e.what();
        }
    });

    std::string csv =
        "seed,lambda1,residual,iterations,method,converged,coercive_lb,mag_difficulty,"
        "mag_diff_bound,mag_testfn_bound,rep_lambda1,identity_dev,ov_difficulty,ov_diff_bound,"
        "ov_testfn_bound,status\n";
    for (int i = 0; i < cfg.n_seeds; ++i) {
        const Row& r = rows[static_cast<size_t>(i)];
        csv += std::to_string(i) + "," + fmt(r.lambda1) + "," + fmt(r.residual) + "," +
               std::to_string(r.iterations) + "," + r.method + "," +
               std::to_string(r.converged ? 1 : 0) + "," + fmt(r.coercive) + "," +
               fmt(r.mag_difficulty) + "," + fmt(r.mag_diff_bound) + "," +
               fmt(r.mag_testfn_bound) + "," + fmt(r.rep_lambda1) + "," + fmt(r.identity_dev) +
               "," + fmt(r.ov_difficulty) + "," + fmt(r.ov_diff_bound) + "," +
               fmt(r.ov_testfn_bound) + "," + csv_safe(r.status) + "\n";
        if (cfg.export_kernel && !r.kernel_text.empty())
            write_file(fs::path(cfg.out_dir) / ("kernel_seed" + std::to_string(i) + ".txt"),
                       r.kernel_text);
    }
    write_file(fs::path(cfg.out_dir) / "exact_gap.csv", csv);

    double mean = 0.0, var = 0.0;
    int good = 0;
    for (const Row& r : rows)
        if (std::isfinite(r.lambda1) && r.lambda1 > 0) {
            mean += std::log(r.lambda1) / n;
            ++good;
        }
    if (good > 0) mean /= good;
    for (const Row& r : rows)
        if (std::isfinite(r.lambda1) && r.lambda1 > 0) {
            double d = std::log(r.lambda1) / n - mean;
            var += d * d;
        }
    double se = good > 1 ? std::sqrt(var / (static_cast<double>(good) * (good - 1))) : 0.0;

    OJson summary;
    summary["n"] = n;
    summary["seeds"] = cfg.n_seeds;
    summary["epsilon"] = eps;
    summary["mean_log_gap_over_n"] = good > 0 ? OJson(mean) : OJson(nullptr);
    summary["se_log_gap_over_n"] = se;
    summary["srw_reference_log_gap_over_n"] = std::log(2.0 / n) / n;
    OJson issues = OJson::array();
    for (int i = 0; i < cfg.n_seeds; ++i)
        if (rows[static_cast<size_t>(i)].status != "ok")
            issues.push_back(OJson{{"seed", i}, {"status", rows[static_cast<size_t>(i)].status}});
    summary["issues"] = issues;
    write_file(fs::path(cfg.out_dir) / "exact_gap_summary.json", summary.dump(2) + "\n");

    int code = 0;
    for (const Row& r : rows) {
        if (!r.converged || r.status.rfind("error:", 0) == 0) code = std::max(code, 3);
        if (r.status.rfind("violation:", 0) == 0) code = 4;
    }
    return code;
}

// ---- parallel-tempering overlap sampler ----------------------------------------

int cmd_mcmc(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    if (cfg.spherical) bad_config("mcmc runs on the Ising chain; model.spherical=false");
    MixtureSpec spec = cfg.mixture();
    McmcOptions mo;
    mo.ladder = cfg.ladder;
    mo.n_temps = cfg.n_temps;
    mo.gamma_min = cfg.gamma_min;
    mo.n_sweeps = cfg.n_sweeps;
    mo.burnin = cfg.burnin;
    mo.seed = cfg.seed;
    mo.disorder_seed = cfg.seed;
    std::vector<McmcResult> runs = mcmc_overlap_many(spec, cfg.n_spins, cfg.mcmc_seeds, mo);

    const size_t nl = runs[0].hist.r.size();
    std::string csv = "r,p,se\n";
    for (size_t l = 0; l < nl; ++l) {
        double mean = 0.0;
        for (const McmcResult& m : runs) mean += m.hist.p[l];
        mean /= static_cast<double>(runs.size());
        double se;
        if (runs.size() > 1) {
            double var = 0.0;
            for (const McmcResult& m : runs) var += (m.hist.p[l] - mean) * (m.hist.p[l] - mean);
            se = std::sqrt(var / (static_cast<double>(runs.size()) * (runs.size() - 1)));
        } else {
            se = runs[0].hist.se[l];
        }
        csv += fmt(runs[0].hist.r[l]) + "," + fmt(mean) + "," + fmt(se) + "\n";
    }
    write_file(fs::path(cfg.out_dir) / "mcmc_histogram.csv", csv);

    std::vector<double> qg = cfg.mcmc_q_grid;
    if (qg.empty()) qg = linspace(0.0, 0.9, 10);
    double hw = cfg.half_width > 0.0 ? cfg.half_width : 1.0 / cfg.n_spins;
    std::vector<OverlapHistogram> hists;
    hists.reserve(runs.size());
    for (const McmcResult& m : runs) hists.push_back(m.hist);
    std::string rate_csv = "q,zeta,sigma_zeta,rate,sigma_rate\n";
    for (const RatePointEstimate& p : empirical_rate(hists, qg, hw))
        rate_csv += fmt(p.q) + "," + fmt(p.zeta) + "," + fmt(p.sigma_zeta) + "," + fmt(p.rate) +
                    "," + fmt(p.sigma_rate) + "\n";
    write_file(fs::path(cfg.out_dir) / "mcmc_rate.csv", rate_csv);

    double swap_mean = 0.0;
    bool poor = false;
    for (const McmcResult& m : runs) {
        swap_mean += m.swap_acceptance;
        poor = poor || m.poor_mixing;
    }
    swap_mean /= static_cast<double>(runs.size());
    OJson summary;
    summary["n"] = cfg.n_spins;
    summary["seeds"] = cfg.mcmc_seeds;
    summary["sweeps"] = runs[0].n_sweeps;
    summary["temps"] = runs[0].n_temps;
    summary["half_width"] = hw;
    summary["swap_acceptance_mean"] = swap_mean;
    summary["poor_mixing"] = poor;
    write_file(fs::path(cfg.out_dir) / "mcmc_summary.json", summary.dump(2) + "\n");
    return poor ? 3 : 0;
}

// ---- dispatch -------------------------------------------------------------------

int run_command(const RunConfig& cfg) {
    try {
        if (cfg.command.empty())
            bad_config("no command given (phase_scan, barrier, rate_curve, exact_gap or mcmc)");
        if (!known_command(cfg.command)) bad_config("unknown command \"" + cfg.command + "\"");
        if (cfg.threads > 0) set_max_threads(cfg.threads);
        fs::create_directories(cfg.out_dir);
        write_file(fs::path(cfg.out_dir) / "manifest.json", manifest_json(cfg));
        if (cfg.command == "phase_scan") return cmd_phase_scan(cfg);
        if (cfg.command == "barrier") return cmd_barrier(cfg);
        if (cfg.command == "rate_curve") return cmd_rate_curve(cfg);
        if (cfg.command == "exact_gap") return cmd_exact_gap(cfg);
        return cmd_mcmc(cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "specgap: config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "specgap: %s\n", e.what());
        return 3;
    }
}

}  // namespace sg
