// Command-line driver for the kinetic-fluid perturbation laboratory.
//
//   kfplab <experiment> --config <path> [--out <dir>] [--seed <u64>]
//          [--threads <n>]
//
// Experiments: mode-decay, linear-decay, torus-sim, picard-check,
// diagnostics.  `validate` parses and checks a config without running;
// `report` re-fits the CSV tables of a finished run without recomputation.
//
// Exit codes: 0 all checks pass, 1 validation error, 2 runtime error,
// 3 one or more acceptance checks failed.

#include <CLI11.hpp>

#include <iostream>

#include "kfp/experiments.hpp"

namespace {

int run(const std::string& experiment, kfp::ExperimentConfig cfg) {
    cfg.experiment = experiment;
    try {
        cfg.validate();
    } catch (const kfp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
    try {
        kfp::RunManifest man = kfp::run_experiment(cfg);
        for (const auto& [name, c] : man.checks.items())
            std::cout << (c.at("pass").get<bool>() ? "PASS " : "FAIL ")
                      << name << " = " << c.at("value").dump() << "  ("
                      << c.at("requirement").get<std::string>() << ")\n";
        std::cout << "outputs in " << cfg.output_dir << " ("
                  << man.wall_time_s << " s)\n";
        return man.all_pass() ? 0 : 3;
    } catch (const kfp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

std::vector<double> column(const kfp::CsvTable& t, const std::string& name) {
    auto it = std::find(t.columns.begin(), t.columns.end(), name);
    if (it == t.columns.end())
        throw std::runtime_error("missing column " + name);
    std::size_t idx = it - t.columns.begin();
    std::vector<double> out;
    for (const auto& r : t.rows) out.push_back(r.at(idx));
    return out;
}

int report(const kfp::ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    try {
        nlohmann::json rep;
        fs::path dir(cfg.output_dir);
        if (cfg.experiment == "linear-decay") {
            kfp::CsvTable t = kfp::read_csv(dir / "decay.csv");
            std::vector<double> ts = column(t, "t");
            for (int m = 0; m < 3; ++m) {
                std::string name = "norm_m" + std::to_string(m);
                kfp::PowerLawFit fit =
                    kfp::fit_power_law(ts, column(t, name));
                rep[name + "_exponent"] = fit.exponent;
                rep[name + "_residual"] = fit.residual;
            }
        } else if (cfg.experiment == "torus-sim" ||
                   cfg.experiment == "diagnostics") {
            fs::path file = cfg.experiment == "torus-sim"
                                ? dir / "torus.csv"
                                : dir / "diagnostics.csv";
            kfp::CsvTable t = kfp::read_csv(file);
            std::vector<double> ts = column(t, "t");
            std::string ecol =
                cfg.experiment == "torus-sim" ? "E" : "ENERGY_E";
            std::vector<double> fit_t, fit_e;
            std::vector<double> es = column(t, ecol);
            for (std::size_t i = 0; i < ts.size(); ++i)
                if (ts[i] >= cfg.sim.fit_t_start &&
                    ts[i] <= cfg.sim.fit_t_end) {
                    fit_t.push_back(ts[i]);
                    fit_e.push_back(es[i]);
                }
            kfp::ExponentialFit fit = kfp::fit_exponential(fit_t, fit_e);
            rep["zeta"] = fit.rate;
            rep["zeta_residual"] = fit.residual;
        } else if (cfg.experiment == "mode-decay") {
            kfp::CsvTable t = kfp::read_csv(dir / "modes.csv");
            std::vector<double> c = column(t, "c_fit");
            double cmin = *std::min_element(c.begin(), c.end());
            double cmax = *std::max_element(c.begin(), c.end());
            rep["c_min"] = cmin;
            rep["c_max"] = cmax;
            rep["spread"] = cmax / cmin;
        } else if (cfg.experiment == "picard-check") {
            kfp::CsvTable t = kfp::read_csv(dir / "picard.csv");
            std::vector<double> d = column(t, "diff_h1");
            double worst = 0.0;
            for (std::size_t i = 1; i < d.size(); ++i)
                worst = std::max(worst, d[i] / d[i - 1]);
            rep["worst_ratio"] = worst;
        }
        std::cout << rep.dump(2) << "\n";
        kfp::write_file_atomic(dir / "report.json", rep.dump(2) + "\n");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinetic-fluid perturbation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int threads_override = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")
            ->required();
        sub->add_option("--out", out_override, "output directory override");
        sub->add_option("--seed", seed_override, "seed override")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads_override, "worker thread count");
    };

    std::vector<std::string> experiments = {"mode-decay", "linear-decay",
                                            "torus-sim", "picard-check",
                                            "diagnostics"};
    for (const std::string& e : experiments)
        add_common(app.add_subcommand(e, "run the " + e + " experiment"));
    add_common(app.add_subcommand("validate", "parse and check a config"));
    add_common(app.add_subcommand(
        "report", "re-fit the CSV tables of an existing run"));

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    kfp::ExperimentConfig cfg;
    try {
        cfg = kfp::load_config(config_path);
    } catch (const kfp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (seed_set) cfg.seed = seed_override;
    if (threads_override >= 0) cfg.threads = threads_override;

    const std::string name = sub->get_name();
    if (name == "validate") {
        try {
            cfg.validate();
        } catch (const kfp::ValidationError& e) {
            std::cerr << "validation error: " << e.what() << "\n";
            return 1;
        }
        std::cout << "config ok: experiment=" << cfg.experiment
                  << " seed=" << cfg.seed << "\n";
        return 0;
    }
    if (name == "report") return report(cfg);
    return run(name, cfg);
}
