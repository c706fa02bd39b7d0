#pragma once

#include <json.hpp>

#include <fstream>
#include <set>
#include <string>

#include "kfp/hermite_basis.hpp"
#include "kfp/imex.hpp"
#include "kfp/kquad.hpp"
#include "kfp/linear_mode.hpp"
#include "kfp/params.hpp"

namespace kfp {

/// Thrown for configuration problems; the harness maps it to exit code 1
/// and guarantees no output files were written.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SimBlock {
    double dt = 2e-3;
    double t_final = 20.0;
    double amplitude = 1e-2;
    std::string scheme = "imex2";
    bool dealias = true;
    double cfl_safety = 0.5;
    double observe_interval = 0.1;
    double fit_t_start = 2.0;
    double fit_t_end = 20.0;

    StepperConfig stepper() const {
        StepperConfig c;
        c.dt = dt;
        c.dealias = dealias;
        c.cfl_safety = cfl_safety;
        if (scheme == "imex1")
            c.scheme = StepperConfig::Scheme::kImex1;
        else if (scheme == "imex2")
            c.scheme = StepperConfig::Scheme::kImex2;
        else
            throw ValidationError("unknown scheme: " + scheme);
        return c;
    }
};

struct ModesBlock {
    std::vector<double> magnitudes = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
    int directions = 6;
    double t_max_factor = 6.0;
    int samples = 12;
};

struct FitWindowBlock {
    double t_start = 10.0;
    double t_end = 1000.0;
    int samples = 20;

    std::vector<double> log_times() const {
        std::vector<double> ts;
        for (int i = 0; i < samples; ++i)
            ts.push_back(t_start * std::pow(t_end / t_start,
                                            i / double(samples - 1)));
        return ts;
    }
};

struct PicardBlock {
    double dt = 1e-2;
    int iterations = 5;
    double amplitude = 1e-2;
};

struct WeightsBlock {
    LyapunovWeights lyapunov;
    double tau = 0.01;
    double high_cutoff = 2.0;
};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    std::string output_dir = "run";
    int threads = 0;  // 0 = hardware concurrency

    SpatialGrid grid{1, 64, 1.0};
    HermiteBasisSpec basis{8, 12};
    PhysicalParams params;
    WeightsBlock weights;
    KQuadratureSpec quadrature;
    FitWindowBlock fit_window;
    SimBlock sim;
    ModesBlock modes;
    PicardBlock picard;

    void validate() const {
        static const std::set<std::string> kKnown = {
            "mode-decay", "linear-decay", "torus-sim", "picard-check",
            "diagnostics"};
        if (!kKnown.count(experiment))
            throw ValidationError("unknown experiment: " + experiment);
        try {
            grid.validate();
            basis.validate();
            params.validate();
            weights.lyapunov.validate();
            sim.stepper().validate();
        } catch (const std::exception& e) {
            throw ValidationError(e.what());
        }
        if (weights.tau < 0 || weights.tau > 0.1)
            throw ValidationError("weights.tau must lie in [0, 0.1]");
        if (!(weights.high_cutoff > 0))
            throw ValidationError("weights.high_cutoff must be positive");
        if (quadrature.k_min <= 0 || quadrature.k_max <= quadrature.k_min)
            throw ValidationError("quadrature needs 0 < k_min < k_max");
        if (quadrature.angular_points != 6 && quadrature.angular_points != 26)
            throw ValidationError("quadrature.angular_points must be 6 or 26");
        if (fit_window.samples < 8 ||
            !(fit_window.t_end > fit_window.t_start) ||
            !(fit_window.t_start > 0))
            throw ValidationError("fit_window needs t_end > t_start > 0 and "
                                  ">= 8 samples");
        if (experiment == "mode-decay") {
            if (modes.magnitudes.empty())
                throw ValidationError("mode-decay needs a non-empty k list");
            for (double m : modes.magnitudes)
                if (!(m > 0))
                    throw ValidationError("mode magnitudes must be positive");
            if (modes.samples < 8)
                throw ValidationError("mode-decay needs >= 8 fit samples");
        }
        if (picard.iterations < 1 || !(picard.dt > 0))
            throw ValidationError("picard block invalid");
        if (!(sim.fit_t_end > sim.fit_t_start))
            throw ValidationError("sim fit window empty");
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
    if (!j.is_object())
        throw ValidationError("config block '" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("unknown key '" + it.key() + "' in '" +
                                  where + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("bad value for '") + key +
                                  "': " + e.what());
        }
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::read;
    using detail::require_keys;
    ExperimentConfig c;
    require_keys(j, "top level",
                 {"experiment", "seed", "output_dir", "threads", "grid",
                  "basis", "params", "weights", "quadrature", "fit_window",
                  "sim", "modes", "picard"});
    if (!j.contains("experiment"))
        throw ValidationError("config is missing 'experiment'");
    read(j, "experiment", c.experiment);
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);
    read(j, "threads", c.threads);

    if (j.contains("grid")) {
        const auto& b = j.at("grid");
        require_keys(b, "grid", {"dim", "points", "box_scale"});
        read(b, "dim", c.grid.dim);
        read(b, "points", c.grid.n);
        read(b, "box_scale", c.grid.box_scale);
    }
    if (j.contains("basis")) {
        const auto& b = j.at("basis");
        require_keys(b, "basis", {"truncation", "quadrature_order"});
        read(b, "truncation", c.basis.truncation);
        read(b, "quadrature_order", c.basis.quadrature_order);
    }
    if (j.contains("params")) {
        const auto& b = j.at("params");
        require_keys(b, "params", {"mu1", "mu2", "kappa"});
        read(b, "mu1", c.params.mu1);
        read(b, "mu2", c.params.mu2);
        read(b, "kappa", c.params.kappa);
    }
    if (j.contains("weights")) {
        const auto& b = j.at("weights");
        require_keys(b, "weights",
                     {"kappa1", "kappa2", "kappa3", "tau", "high_cutoff"});
        read(b, "kappa1", c.weights.lyapunov.kappa1);
        read(b, "kappa2", c.weights.lyapunov.kappa2);
        read(b, "kappa3", c.weights.lyapunov.kappa3);
        read(b, "tau", c.weights.tau);
        read(b, "high_cutoff", c.weights.high_cutoff);
    }
    if (j.contains("quadrature")) {
        const auto& b = j.at("quadrature");
        require_keys(b, "quadrature",
                     {"k_min", "k_max", "radial_points", "angular_points"});
        read(b, "k_min", c.quadrature.k_min);
        read(b, "k_max", c.quadrature.k_max);
        read(b, "radial_points", c.quadrature.radial_points);
        read(b, "angular_points", c.quadrature.angular_points);
    }
    if (j.contains("fit_window")) {
        const auto& b = j.at("fit_window");
        require_keys(b, "fit_window", {"t_start", "t_end", "samples"});
        read(b, "t_start", c.fit_window.t_start);
        read(b, "t_end", c.fit_window.t_end);
        read(b, "samples", c.fit_window.samples);
    }
    if (j.contains("sim")) {
        const auto& b = j.at("sim");
        require_keys(b, "sim",
                     {"dt", "t_final", "amplitude", "scheme", "dealias",
                      "cfl_safety", "observe_interval", "fit_t_start",
                      "fit_t_end"});
        read(b, "dt", c.sim.dt);
        read(b, "t_final", c.sim.t_final);
        read(b, "amplitude", c.sim.amplitude);
        read(b, "scheme", c.sim.scheme);
        read(b, "dealias", c.sim.dealias);
        read(b, "cfl_safety", c.sim.cfl_safety);
        read(b, "observe_interval", c.sim.observe_interval);
        read(b, "fit_t_start", c.sim.fit_t_start);
        read(b, "fit_t_end", c.sim.fit_t_end);
    }
    if (j.contains("modes")) {
        const auto& b = j.at("modes");
        require_keys(b, "modes",
                     {"magnitudes", "directions", "t_max_factor", "samples"});
        read(b, "magnitudes", c.modes.magnitudes);
        read(b, "directions", c.modes.directions);
        read(b, "t_max_factor", c.modes.t_max_factor);
        read(b, "samples", c.modes.samples);
    }
    if (j.contains("picard")) {
        const auto& b = j.at("picard");
        require_keys(b, "picard", {"dt", "iterations", "amplitude"});
        read(b, "dt", c.picard.dt);
        read(b, "iterations", c.picard.iterations);
        read(b, "amplitude", c.picard.amplitude);
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    j["grid"] = {{"dim", c.grid.dim},
                 {"points", c.grid.n},
                 {"box_scale", c.grid.box_scale}};
    j["basis"] = {{"truncation", c.basis.truncation},
                  {"quadrature_order", c.basis.quadrature_order}};
    j["params"] = {{"mu1", c.params.mu1},
                   {"mu2", c.params.mu2},
                   {"kappa", c.params.kappa}};
    j["weights"] = {{"kappa1", c.weights.lyapunov.kappa1},
                    {"kappa2", c.weights.lyapunov.kappa2},
                    {"kappa3", c.weights.lyapunov.kappa3},
                    {"tau", c.weights.tau},
                    {"high_cutoff", c.weights.high_cutoff}};
    j["quadrature"] = {{"k_min", c.quadrature.k_min},
                       {"k_max", c.quadrature.k_max},
                       {"radial_points", c.quadrature.radial_points},
                       {"angular_points", c.quadrature.angular_points}};
    j["fit_window"] = {{"t_start", c.fit_window.t_start},
                       {"t_end", c.fit_window.t_end},
                       {"samples", c.fit_window.samples}};
    j["sim"] = {{"dt", c.sim.dt},
                {"t_final", c.sim.t_final},
                {"amplitude", c.sim.amplitude},
                {"scheme", c.sim.scheme},
                {"dealias", c.sim.dealias},
                {"cfl_safety", c.sim.cfl_safety},
                {"observe_interval", c.sim.observe_interval},
                {"fit_t_start", c.sim.fit_t_start},
                {"fit_t_end", c.sim.fit_t_end}};
    j["modes"] = {{"magnitudes", c.modes.magnitudes},
                  {"directions", c.modes.directions},
                  {"t_max_factor", c.modes.t_max_factor},
                  {"samples", c.modes.samples}};
    j["picard"] = {{"dt", c.picard.dt},
                   {"iterations", c.picard.iterations},
                   {"amplitude", c.picard.amplitude}};
    return j;
}

}  // namespace kfp
