// Copyright 2026 The spem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Experiment orchestration: configuration, the train -> execute -> mitigate
// -> post-select pipeline, noise/depth sweeps, and CSV/SVG artifacts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spem/circuit.hpp"
#include "spem/errors.hpp"
#include "spem/mitigate.hpp"
#include "spem/noisesim.hpp"
#include "spem/nonherm.hpp"
#include "spem/rng.hpp"
#include "spem/varopt.hpp"

namespace spem {

enum class MitigationMode { none, readout, full };

struct ExperimentConfig {
    TfiParams tfi;
    TimeGrid grid;
    unsigned layers = 2;
    NoiseModel noise{0.012, 0.01, std::nullopt};
    uint64_t shots = 32000;
    uint64_t seed = 0;
    Backend backend = Backend::density;
    std::vector<MitigationMode> modes = {MitigationMode::none, MitigationMode::readout, MitigationMode::full};
    IdentityMode identity_mode = IdentityMode::analytic;
    MitigationPolicy policy = MitigationPolicy::simplex;
    TrainConfig train;
    std::vector<double> sweep_p = {0.003, 0.006, 0.009, 0.012, 0.015};
    std::vector<unsigned> sweep_layers = {2, 3, 4, 5};

    AnsatzSpec ansatz() const { return AnsatzSpec::chain(tfi.sites + 1, layers); }

    bool has_mode(MitigationMode m) const { return std::find(modes.begin(), modes.end(), m) != modes.end(); }

    void validate() const {
        tfi.validate();
        grid.validate();
        noise.validate();
        train.validate();
        ansatz().validate();
        if (modes.empty()) {
            throw ConfigError("config: at least one mitigation mode is required");
        }
        if (backend == Backend::trajectory && shots < 1) {
            throw ConfigError("config: shots must be >= 1");
        }
        for (double p : sweep_p) {
            if (!(p >= 0 && p <= 0.05)) {
                throw ConfigError("config: sweep error rates must lie in [0, 0.05]");
            }
        }
        for (unsigned n : sweep_layers) {
            if (n < 1) {
                throw ConfigError("config: sweep layer counts must be >= 1");
            }
        }
    }
};

/// Mean CX error rates of the three built-in device profiles.
struct DevicePreset {
    const char *name;
    double cx_error;
};
inline constexpr DevicePreset kDevicePresets[] = {{"oslo", 0.012}, {"hanoi", 0.012}, {"guadalupe", 0.015}};

inline std::optional<double> device_cx_error(const std::string &name) {
    for (const auto &d : kDevicePresets) {
        if (name == d.name) {
            return d.cx_error;
        }
    }
    return std::nullopt;
}

// --- config parsing -------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline double parse_double(const std::string &key, const std::string &v) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::exception &) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

inline uint64_t parse_uint(const std::string &key, const std::string &v) {
    try {
        size_t used = 0;
        if (!v.empty() && v[0] == '-') {
            throw std::invalid_argument(v);
        }
        const unsigned long long u = std::stoull(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return u;
    } catch (const std::exception &) {
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
}

inline MitigationMode parse_mode(const std::string &s) {
    if (s == "none") {
        return MitigationMode::none;
    }
    if (s == "readout") {
        return MitigationMode::readout;
    }
    if (s == "full") {
        return MitigationMode::full;
    }
    throw ConfigError("config: unknown mitigation mode '" + s + "'");
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(ExperimentConfig &cfg, const std::string &key, const std::string &value) {
    using detail::parse_double;
    using detail::parse_uint;
    if (key == "sites") {
        cfg.tfi.sites = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "coupling") {
        cfg.tfi.coupling = parse_double(key, value);
    } else if (key == "field_x") {
        cfg.tfi.field_x = parse_double(key, value);
    } else if (key == "gamma") {
        cfg.tfi.gamma = parse_double(key, value);
    } else if (key == "boundary") {
        if (value != "open") {
            throw ConfigError("config: only open boundary conditions are supported");
        }
    } else if (key == "dt") {
        cfg.grid.dt = parse_double(key, value);
    } else if (key == "steps") {
        cfg.grid.steps = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "layers") {
        cfg.layers = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "cx_depol") {
        cfg.noise.cx_depol = parse_double(key, value);
    } else if (key == "readout_flip") {
        cfg.noise.readout_flip = parse_double(key, value);
    } else if (key == "readout_flip_down") {
        cfg.noise.readout_flip_down = parse_double(key, value);
    } else if (key == "device") {
        const auto p = device_cx_error(value);
        if (!p) {
            throw ConfigError("config: unknown device preset '" + value + "'");
        }
        cfg.noise.cx_depol = *p;
    } else if (key == "shots") {
        cfg.shots = parse_uint(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_uint(key, value);
    } else if (key == "backend") {
        cfg.backend = parse_backend(value);
    } else if (key == "mitigation") {
        cfg.modes.clear();
        for (const auto &m : detail::split_list(value)) {
            const auto mode = detail::parse_mode(m);
            if (!cfg.has_mode(mode)) {
                cfg.modes.push_back(mode);
            }
        }
    } else if (key == "identity_mode") {
        if (value == "analytic") {
            cfg.identity_mode = IdentityMode::analytic;
        } else if (value == "variational") {
            cfg.identity_mode = IdentityMode::variational;
        } else {
            throw ConfigError("config: identity_mode must be analytic or variational");
        }
    } else if (key == "policy") {
        cfg.policy = parse_policy(value);
    } else if (key == "restarts") {
        cfg.train.restarts = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "max_iterations") {
        cfg.train.max_iterations = parse_uint(key, value);
    } else if (key == "fd_step") {
        cfg.train.fd_step = parse_double(key, value);
    } else if (key == "train_tolerance") {
        cfg.train.tolerance = parse_double(key, value);
    } else if (key == "sweep_p") {
        cfg.sweep_p.clear();
        for (const auto &v : detail::split_list(value)) {
            cfg.sweep_p.push_back(parse_double(key, v));
        }
    } else if (key == "sweep_layers") {
        cfg.sweep_layers.clear();
        for (const auto &v : detail::split_list(value)) {
            cfg.sweep_layers.push_back(static_cast<unsigned>(parse_uint(key, v)));
        }
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

/// Built-in configurations: default, fig3 (noise x depth sweep), fig4
/// (shot-sampled mitigation comparison), and one per device profile.
inline std::optional<ExperimentConfig> preset_config(const std::string &name) {
    ExperimentConfig cfg;
    if (name == "default") {
        return cfg;
    }
    if (name == "fig3") {
        cfg.noise = {0.012, 0.01, std::nullopt};
        cfg.modes = {MitigationMode::none, MitigationMode::full};
        return cfg;
    }
    if (name == "fig4") {
        cfg.layers = 4;
        cfg.backend = Backend::trajectory;
        cfg.shots = 32000;
        cfg.sweep_layers = {2, 3, 4, 5};
        cfg.sweep_p = {0.012};
        return cfg;
    }
    if (const auto p = device_cx_error(name)) {
        cfg.noise.cx_depol = *p;
        cfg.sweep_p = {*p};
        return cfg;
    }
    return std::nullopt;
}

/// Parses `key = value` lines; `#` starts a comment. A `base = <preset>` line
/// must come first if present.
inline ExperimentConfig parse_config(std::istream &in, const std::string &origin = "config") {
    ExperimentConfig cfg;
    std::string line;
    size_t lineno = 0;
    bool any_setting = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "base") {
                if (any_setting) {
                    throw ConfigError("config: 'base' must precede other settings");
                }
                const auto base = preset_config(value);
                if (!base) {
                    throw ConfigError("config: unknown base preset '" + value + "'");
                }
                cfg = *base;
            } else {
                apply_setting(cfg, key, value);
            }
        } catch (const ConfigError &e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
        any_setting = true;
    }
    cfg.validate();
    return cfg;
}

/// Loads a config file, or a built-in preset when no such file exists.
inline ExperimentConfig load_config(const std::string &name_or_path) {
    if (std::filesystem::is_regular_file(name_or_path)) {
        std::ifstream in(name_or_path);
        if (!in) {
            throw ConfigError("cannot open config file '" + name_or_path + "'");
        }
        return parse_config(in, name_or_path);
    }
    if (auto preset = preset_config(name_or_path)) {
        preset->validate();
        return *preset;
    }
    throw ConfigError("'" + name_or_path + "' is neither a config file nor a built-in preset");
}

// --- training cache ----------------------------------------------------------------

inline std::string training_key(const AnsatzSpec &spec, const TfiParams &tfi, const TimeGrid &grid,
                                const TrainConfig &train) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "q%u_n%u_N%u_J%.17g_h%.17g_g%.17g_dt%.17g_T%u_r%u_it%zu_fd%.17g_tol%.17g_pert%.17g_s%llu",
                  spec.num_qubits, spec.layers, tfi.sites, tfi.coupling, tfi.field_x, tfi.gamma, grid.dt, grid.steps,
                  train.restarts, train.max_iterations, train.fd_step, train.tolerance, train.perturbation,
                  static_cast<unsigned long long>(train.seed));
    std::string s(buf);
    for (const auto &[a, b] : spec.pairs) {
        s += "_" + std::to_string(a) + std::to_string(b);
    }
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(mix64(h)));
    return hex;
}

inline nlohmann::json training_to_json(const std::vector<TrainResult> &results) {
    return nlohmann::json(results);
}

inline std::vector<TrainResult> training_from_json(const nlohmann::json &j) {
    return j.get<std::vector<TrainResult>>();
}

/// Trains, or reuses `<cache_dir>/train_<key>.json` when present.
inline std::vector<TrainResult> train_cached(const AnsatzSpec &spec, const TfiParams &tfi, const TimeGrid &grid,
                                             const TrainConfig &train,
                                             const std::optional<std::filesystem::path> &cache_dir) {
    std::filesystem::path file;
    if (cache_dir) {
        file = *cache_dir / ("train_" + training_key(spec, tfi, grid, train) + ".json");
        if (std::filesystem::is_regular_file(file)) {
            std::ifstream in(file);
            auto results = training_from_json(nlohmann::json::parse(in));
            if (results.size() == grid.steps &&
                std::all_of(results.begin(), results.end(),
                            [&](const TrainResult &r) { return r.params.size() == spec.param_count(); })) {
                return results;
            }
        }
    }
    auto results = train_evolution(spec, tfi, grid, train);
    if (cache_dir) {
        std::filesystem::create_directories(*cache_dir);
        std::ofstream out(file);
        out << training_to_json(results).dump() << '\n';
    }
    return results;
}

// --- pipeline -----------------------------------------------------------------------

struct RunRecord {
    double t = 0;
    double z_exact = 0;
    double z_raw = std::numeric_limits<double>::quiet_NaN();
    double z_readout = std::numeric_limits<double>::quiet_NaN();
    double z_full = std::numeric_limits<double>::quiet_NaN();
    double success_prob = 0;
    double train_cost = 0;
};

// Seed streams for the shot-sampled parts of one experiment.
inline constexpr uint64_t kStreamReadoutCal = 1;
inline constexpr uint64_t kStreamFullCal = 2;
inline constexpr uint64_t kStreamExecution = 3;

struct Calibrations {
    std::optional<CalibrationMatrix> readout;
    std::optional<CalibrationMatrix> full;
};

inline Calibrations build_calibrations(const ExperimentConfig &cfg) {
    const auto spec = cfg.ansatz();
    Calibrations cals;
    auto plan_for = [&](uint64_t stream) -> std::optional<ShotPlan> {
        if (cfg.backend == Backend::density) {
            return std::nullopt;
        }
        return ShotPlan{cfg.shots, derive_seed(cfg.seed, stream)};
    };
    if (cfg.has_mode(MitigationMode::readout)) {
        cals.readout = build_readout_calibration(spec.num_qubits, cfg.noise, cfg.backend, plan_for(kStreamReadoutCal));
    }
    if (cfg.has_mode(MitigationMode::full)) {
        TrainConfig id_cfg = cfg.train;
        id_cfg.seed = cfg.seed;
        const auto identity = train_identity(spec, id_cfg, cfg.identity_mode);
        cals.full = build_full_calibration(spec, identity.params, cfg.noise, cfg.backend, plan_for(kStreamFullCal));
    }
    return cals;
}

/// Noisy execution of trained circuits at every grid time, followed by each
/// configured mitigation mode and ancilla post-selection.
inline std::vector<RunRecord> evaluate_trained(const ExperimentConfig &cfg, const std::vector<TrainResult> &trained,
                                               const Calibrations &cals) {
    const auto spec = cfg.ansatz();
    const auto exact = exact_reference(cfg.tfi, cfg.grid);
    const size_t psi0 = default_psi0(cfg.tfi);
    if (trained.size() != cfg.grid.steps) {
        throw ConfigError("trained parameter list does not match the time grid");
    }
    std::vector<RunRecord> records;
    for (unsigned k = 0; k < cfg.grid.steps; ++k) {
        RunRecord rec;
        rec.t = cfg.grid.time(k);
        rec.z_exact = exact[k];
        rec.train_cost = trained[k].final_cost;
        const auto &params = trained[k].params;
        const OutcomeDistribution raw =
            cfg.backend == Backend::density
                ? run_density_noisy(spec, params, psi0, cfg.noise)
                : run_trajectories(spec, params, psi0, cfg.noise,
                                   ShotPlan{cfg.shots, derive_seed(cfg.seed, kStreamExecution, k)});
        auto observe = [&](const char *mode, const OutcomeDistribution &dist) {
            try {
                return post_select(dist);
            } catch (const NumericError &e) {
                throw NumericError("t=" + std::to_string(rec.t) + " mode=" + mode + ": " + e.what());
            }
        };
        auto corrected = [&](const char *mode, const CalibrationMatrix &cal) {
            try {
                return mitigate(raw, cal, cfg.policy);
            } catch (const NumericError &e) {
                throw NumericError("t=" + std::to_string(rec.t) + " mode=" + mode + ": " + e.what());
            }
        };
        const auto raw_sel = observe("none", raw);
        rec.success_prob = raw_sel.success_prob;
        if (cfg.has_mode(MitigationMode::none)) {
            rec.z_raw = z_magnetization(raw_sel.dist);
        }
        if (cals.readout) {
            rec.z_readout = z_magnetization(observe("readout", corrected("readout", *cals.readout)).dist);
        }
        if (cals.full) {
            rec.z_full = z_magnetization(observe("full", corrected("full", *cals.full)).dist);
        }
        records.push_back(rec);
    }
    return records;
}

inline TrainConfig effective_train_config(const ExperimentConfig &cfg) {
    TrainConfig t = cfg.train;
    t.seed = cfg.seed;
    return t;
}

inline std::vector<RunRecord> run_experiment(const ExperimentConfig &cfg,
                                             const std::optional<std::filesystem::path> &cache_dir = std::nullopt) {
    cfg.validate();
    const auto trained = train_cached(cfg.ansatz(), cfg.tfi, cfg.grid, effective_train_config(cfg), cache_dir);
    return evaluate_trained(cfg, trained, build_calibrations(cfg));
}

// --- sweeps -----------------------------------------------------------------------------

struct SweepRow {
    double p = 0;
    unsigned layers = 0;
    double dev_raw = std::numeric_limits<double>::quiet_NaN();
    double dev_readout = std::numeric_limits<double>::quiet_NaN();
    double dev_full = std::numeric_limits<double>::quiet_NaN();
};

inline double mean_deviation(const std::vector<RunRecord> &records, double RunRecord::*field) {
    std::vector<double> exact, sim;
    for (const auto &r : records) {
        exact.push_back(r.z_exact);
        sim.push_back(r.*field);
    }
    return avg_deviation(exact, sim);
}

/// Average deviations for every (p, layers) cell. Training runs once per
/// layer count; noise never enters training.
inline std::vector<SweepRow> sweep(const ExperimentConfig &base, const std::vector<double> &p_values,
                                   const std::vector<unsigned> &n_values,
                                   const std::optional<std::filesystem::path> &cache_dir = std::nullopt) {
    base.validate();
    for (double p : p_values) {
        if (!(p >= 0 && p <= 0.05)) {
            throw ConfigError("sweep: error rates must lie in [0, 0.05]");
        }
    }
    std::vector<SweepRow> rows;
    for (unsigned n : n_values) {
        if (n < 1) {
            throw ConfigError("sweep: layer counts must be >= 1");
        }
        ExperimentConfig cfg = base;
        cfg.layers = n;
        const auto trained = train_cached(cfg.ansatz(), cfg.tfi, cfg.grid, effective_train_config(cfg), cache_dir);
        for (double p : p_values) {
            cfg.noise.cx_depol = p;
            const auto records = evaluate_trained(cfg, trained, build_calibrations(cfg));
            SweepRow row;
            row.p = p;
            row.layers = n;
            if (cfg.has_mode(MitigationMode::none)) {
                row.dev_raw = mean_deviation(records, &RunRecord::z_raw);
            }
            if (cfg.has_mode(MitigationMode::readout)) {
                row.dev_readout = mean_deviation(records, &RunRecord::z_readout);
            }
            if (cfg.has_mode(MitigationMode::full)) {
                row.dev_full = mean_deviation(records, &RunRecord::z_full);
            }
            rows.push_back(row);
        }
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow &a, const SweepRow &b) {
        return a.p != b.p ? a.p < b.p : a.layers < b.layers;
    });
    return rows;
}

// --- artifacts ------------------------------------------------------------------------

inline constexpr const char *kRunCsvHeader = "t,z_exact,z_raw,z_readout,z_full,success_prob,train_cost";
inline constexpr const char *kSweepCsvHeader = "p,n,dev_raw,dev_readout,dev_full";
inline constexpr const char *kOracleCsvHeader = "t,z_exact";

inline std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_csv(std::ostream &os, const std::vector<RunRecord> &records) {
    os << kRunCsvHeader << '\n';
    for (const auto &r : records) {
        os << format_number(r.t) << ',' << format_number(r.z_exact) << ',' << format_number(r.z_raw) << ','
           << format_number(r.z_readout) << ',' << format_number(r.z_full) << ',' << format_number(r.success_prob)
           << ',' << format_number(r.train_cost) << '\n';
    }
}

inline void write_csv(std::ostream &os, const std::vector<SweepRow> &rows) {
    os << kSweepCsvHeader << '\n';
    for (const auto &r : rows) {
        os << format_number(r.p) << ',' << r.layers << ',' << format_number(r.dev_raw) << ','
           << format_number(r.dev_readout) << ',' << format_number(r.dev_full) << '\n';
    }
}

template <typename Rows>
void emit_csv(const Rows &rows, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    write_csv(out, rows);
    if (!out) {
        throw std::runtime_error("write to '" + path.string() + "' failed");
    }
}

// --- SVG ------------------------------------------------------------------------------------

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

inline std::string xml_escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Self-contained SVG line chart; NaN points are skipped.
inline void write_svg(std::ostream &os, const Chart &chart) {
    static const char *colors[] = {"#2ca02c", "#1f77b4", "#ff7f0e", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double width = 720, height = 440;
    const double left = 70, right = 170, top = 40, bottom = 60;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto &s : chart.series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.y[i]) || std::isnan(s.x[i])) {
                continue;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    }
    if (xmax == xmin) {
        xmax = xmin + 1;
    }
    if (ymax == ymin) {
        ymax = ymin + 1;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">"
       << xml_escape(chart.title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        os << "<line x1=\"" << format_number(px(xv)) << "\" y1=\"" << top + ph << "\" x2=\"" << format_number(px(xv))
           << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << format_number(px(xv)) << "\" y=\"" << top + ph + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << format_number(xv)
           << "</text>\n";
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << format_number(py(yv)) << "\" x2=\"" << left << "\" y2=\""
           << format_number(py(yv)) << "\" stroke=\"black\"/>\n";
        char ybuf[32];
        std::snprintf(ybuf, sizeof ybuf, "%.3g", yv);
        os << "<text x=\"" << left - 8 << "\" y=\"" << format_number(py(yv) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << ybuf << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(chart.x_label)
       << "</text>\n";
    os << "<text transform=\"translate(18," << top + ph / 2
       << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << xml_escape(chart.y_label) << "</text>\n";
    for (size_t si = 0; si < chart.series.size(); ++si) {
        const auto &s = chart.series[si];
        const char *color = colors[si % std::size(colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        bool first = true;
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.y[i])) {
                continue;
            }
            os << (first ? "" : " ") << format_number(px(s.x[i])) << ',' << format_number(py(s.y[i]));
            first = false;
        }
        os << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(si);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
}

inline Chart chart_of(const std::vector<RunRecord> &records) {
    Chart c{"Average Z magnetization", "t", "<Z(t)>", {}};
    const std::pair<const char *, double RunRecord::*> fields[] = {{"exact", &RunRecord::z_exact},
                                                                   {"raw", &RunRecord::z_raw},
                                                                   {"readout", &RunRecord::z_readout},
                                                                   {"full", &RunRecord::z_full}};
    for (const auto &[label, field] : fields) {
        Series s{label, {}, {}};
        bool any = false;
        for (const auto &r : records) {
            s.x.push_back(r.t);
            s.y.push_back(r.*field);
            any = any || !std::isnan(r.*field);
        }
        if (any) {
            c.series.push_back(std::move(s));
        }
    }
    return c;
}

inline Chart chart_of(const std::vector<SweepRow> &rows) {
    Chart c{"Time-averaged deviation", "p", "mean |dZ|", {}};
    std::vector<unsigned> layers;
    for (const auto &r : rows) {
        if (std::find(layers.begin(), layers.end(), r.layers) == layers.end()) {
            layers.push_back(r.layers);
        }
    }
    std::sort(layers.begin(), layers.end());
    const std::pair<const char *, double SweepRow::*> fields[] = {
        {"raw", &SweepRow::dev_raw}, {"readout", &SweepRow::dev_readout}, {"full", &SweepRow::dev_full}};
    for (const auto &[label, field] : fields) {
        for (unsigned n : layers) {
            Series s{std::string(label) + " n=" + std::to_string(n), {}, {}};
            bool any = false;
            for (const auto &r : rows) {
                if (r.layers == n) {
                    s.x.push_back(r.p);
                    s.y.push_back(r.*field);
                    any = any || !std::isnan(r.*field);
                }
            }
            if (any) {
                c.series.push_back(std::move(s));
            }
        }
    }
    return c;
}

template <typename Rows>
void emit_svg(const Rows &rows, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    write_svg(out, chart_of(rows));
    if (!out) {
        throw std::runtime_error("write to '" + path.string() + "' failed");
    }
}

// --- CSV reading (for the plot command) -------------------------------------------------------

inline double parse_csv_number(const std::string &s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return detail::parse_double("csv", s);
}

inline std::vector<std::vector<std::string>> read_csv_rows(std::istream &in, std::string &header) {
    std::vector<std::vector<std::string>> rows;
    if (!std::getline(in, header)) {
        throw ConfigError("CSV file is empty");
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

/// Reads a run or sweep CSV (detected from the header) and charts it.
inline Chart chart_from_csv(std::istream &in) {
    std::string header;
    const auto rows = read_csv_rows(in, header);
    if (header == kRunCsvHeader) {
        std::vector<RunRecord> recs;
        for (const auto &c : rows) {
            if (c.size() != 7) {
                throw ConfigError("run CSV row has " + std::to_string(c.size()) + " fields");
            }
            recs.push_back({parse_csv_number(c[0]), parse_csv_number(c[1]), parse_csv_number(c[2]),
                            parse_csv_number(c[3]), parse_csv_number(c[4]), parse_csv_number(c[5]),
                            parse_csv_number(c[6])});
        }
        return chart_of(recs);
    }
    if (header == kSweepCsvHeader) {
        std::vector<SweepRow> sw;
        for (const auto &c : rows) {
            if (c.size() != 5) {
                throw ConfigError("sweep CSV row has " + std::to_string(c.size()) + " fields");
            }
            sw.push_back({parse_csv_number(c[0]), static_cast<unsigned>(detail::parse_uint("n", c[1])),
                          parse_csv_number(c[2]), parse_csv_number(c[3]), parse_csv_number(c[4])});
        }
        return chart_of(sw);
    }
    if (header == kOracleCsvHeader) {
        Chart c{"Exact Z magnetization", "t", "<Z(t)>", {{"exact", {}, {}}}};
        for (const auto &r : rows) {
            if (r.size() != 2) {
                throw ConfigError("oracle CSV row has " + std::to_string(r.size()) + " fields");
            }
            c.series[0].x.push_back(parse_csv_number(r[0]));
            c.series[0].y.push_back(parse_csv_number(r[1]));
        }
        return c;
    }
    throw ConfigError("unrecognized CSV header '" + header + "'");
}

}  // namespace spem
