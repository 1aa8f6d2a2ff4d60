#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <omp.h>
#include <sstream>

#include "epsim/config_io.hpp"
#include "epsim/errors.hpp"
#include "epsim/runner.hpp"

using namespace epsim;

namespace {

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = std::stod(item, &used);
        if (used != item.size() || !(v >= 0)) throw ConfigError("invalid eps value '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty eps list");
    return out;
}

int report(const VerifyOutcome& r) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.summary << "\n";
    return r.pass ? 0 : 1;
}

void apply_threads() {
    if (const char* s = std::getenv("EP_SIM_THREADS")) {
        int n = std::atoi(s);
        if (n >= 1) omp_set_num_threads(n);
    }
}

}  // namespace

int main(int argc, char** argv) {
    apply_threads();
    CLI::App app{"Spectral Galerkin simulator for pressureless Euler-Poisson and Euler-alignment systems"};
    app.require_subcommand(1);

    std::string config, out, eps, ref, mv, sweep;
    double time = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    YMOptions ym;

    auto* sim = app.add_subcommand("simulate", "run one simulation into --out");
    sim->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "run directory")->required();
    sim->add_option("--seed", seed, "override run.seed")->each([&](const std::string&) { seed_set = true; });

    auto* sw = app.add_subcommand("sweep", "run one simulation per eps into --out/eps_NN");
    sw->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    sw->add_option("--eps", eps, "comma-separated eps list")->required();
    sw->add_option("--out", out, "sweep directory")->required();
    sw->add_option("--seed", seed, "override run.seed")->each([&](const std::string&) { seed_set = true; });

    auto* ver = app.add_subcommand("verify", "relative energy and identification checks");
    ver->require_subcommand(1);
    auto* vre = ver->add_subcommand("relative-energy", "relative energy of --mv against --ref");
    vre->add_option("--ref", ref, "reference run directory")->required()->check(CLI::ExistingDirectory);
    vre->add_option("--mv", mv, "run directory")->required()->check(CLI::ExistingDirectory);
    vre->add_option("--out", out, "output directory (default: <mv>/verify)");
    auto* vid = ver->add_subcommand("identifications", "identification residuals of a sweep");
    vid->add_option("--sweep", sweep, "sweep directory")->required()->check(CLI::ExistingDirectory);
    vid->add_option("--ref", ref, "reference run (default: the eps = 0 member)")->check(CLI::ExistingDirectory);
    vid->add_option("--time", time, "output time (default: final)");
    vid->add_option("--out", out, "output directory (default: <sweep>/identifications)");

    auto* ymc = app.add_subcommand("ym", "empirical Young measures of a sweep");
    ymc->require_subcommand(1);
    std::vector<CLI::App*> ym_subs = {ymc->add_subcommand("build", "histograms of the finest member"),
                                      ymc->add_subcommand("defect", "concentration defects"),
                                      ymc->add_subcommand("check", "domination relations and inequality suite")};
    for (CLI::App* s : ym_subs) {
        s->add_option("--sweep", sweep, "sweep directory")->required()->check(CLI::ExistingDirectory);
        s->add_option("--time", time, "output time (default: final)");
        s->add_option("--out", out, "output directory (default: <sweep>/ym)");
        s->add_option("--cells", ym.cells, "spatial cells per axis")->check(CLI::PositiveNumber);
        s->add_option("--bins", ym.bins, "bins per state coordinate")->check(CLI::PositiveNumber);
        s->add_option("--radius", ym.radius, "truncation radius (default: 10 x coarsest sample max)");
    }
    ym_subs[2]->add_option("--seed", seed, "inequality suite seed");

    auto* self = app.add_subcommand("selftest", "quick invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        if (code == 0) return 0;
        std::cerr << app.help();
        return 2;
    }

    try {
        if (sim->parsed() || sw->parsed()) {
            SimConfig cfg = load_config(config);
            if (seed_set) cfg.seed = seed;
            if (sim->parsed()) {
                RunManifest m = run_simulation(cfg, out);
                std::cout << m.status << (m.error.empty() ? "" : ": " + m.error) << "\n";
                return m.ok() ? 0 : 1;
            }
            RunManifest m = run_sweep(cfg, parse_eps_list(eps), out);
            std::cout << m.status << "\n";
            return m.ok() ? 0 : 1;
        }
        if (vre->parsed()) return report(verify_relative_energy(ref, mv, out.empty() ? fs::path(mv) / "verify" : fs::path(out)));
        if (vid->parsed())
            return report(verify_identifications(sweep, out.empty() ? fs::path(sweep) / "identifications" : fs::path(out),
                                                 time, ref));
        fs::path ym_out = out.empty() ? fs::path(sweep) / "ym" : fs::path(out);
        if (ym_subs[0]->parsed()) return report(ym_build(sweep, ym_out, time, ym));
        if (ym_subs[1]->parsed()) return report(ym_defect(sweep, ym_out, time, ym));
        if (ym_subs[2]->parsed()) return report(ym_check(sweep, ym_out, time, seed, ym));
        if (self->parsed()) {
            std::vector<std::string> log;
            bool ok = selftest(log);
            for (const auto& l : log) std::cout << l << "\n";
            return ok ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
