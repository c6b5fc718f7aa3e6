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


#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spem/bench.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config = "default";
    std::optional<uint64_t> seed;
    std::string out = ".";
    std::optional<unsigned> layers;
    bool no_cache = false;
};

void add_common(CLI::App *cmd, Common &c, bool with_layers) {
    cmd->add_option("--config", c.config, "config file or preset (default, fig3, fig4, oslo, hanoi, guadalupe)");
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--out", c.out, "output directory");
    if (with_layers) {
        cmd->add_option("--layers", c.layers, "ansatz layer count")->check(CLI::PositiveNumber);
        cmd->add_flag("--no-cache", c.no_cache, "ignore and do not write the training cache");
    }
}

spem::ExperimentConfig resolve(const Common &c) {
    auto cfg = spem::load_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.layers) {
        cfg.layers = *c.layers;
    }
    cfg.validate();
    return cfg;
}

fs::path out_dir(const Common &c) {
    fs::path dir(c.out);
    fs::create_directories(dir);
    return dir;
}

std::optional<fs::path> cache_dir(const Common &c) {
    if (c.no_cache) {
        return std::nullopt;
    }
    return fs::path(c.out) / "cache";
}

void write_json(const fs::path &path, const nlohmann::json &j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("write to '" + path.string() + "' failed");
    }
}

int cmd_oracle(const Common &c) {
    const auto cfg = resolve(c);
    const auto z = spem::exact_reference(cfg.tfi, cfg.grid);
    const auto path = out_dir(c) / "oracle.csv";
    std::ofstream out(path, std::ios::binary);
    out << spem::kOracleCsvHeader << '\n';
    for (unsigned k = 0; k < cfg.grid.steps; ++k) {
        out << spem::format_number(cfg.grid.time(k)) << ',' << spem::format_number(z[k]) << '\n';
    }
    std::cout << path.string() << '\n';
    return 0;
}

int cmd_train(const Common &c) {
    const auto cfg = resolve(c);
    const auto results =
        spem::train_cached(cfg.ansatz(), cfg.tfi, cfg.grid, spem::effective_train_config(cfg), cache_dir(c));
    const auto path = out_dir(c) / ("train_n" + std::to_string(cfg.layers) + ".json");
    write_json(path, spem::training_to_json(results));
    for (const auto &r : results) {
        std::printf("t=%-5g cost=%.3e restart=%u iterations=%zu\n", r.t, r.final_cost, r.restart_index,
                    r.iterations);
    }
    std::cout << path.string() << '\n';
    return 0;
}

int cmd_calibrate(const Common &c) {
    auto cfg = resolve(c);
    cfg.modes = {spem::MitigationMode::readout, spem::MitigationMode::full};
    const auto cals = spem::build_calibrations(cfg);
    const auto dir = out_dir(c);
    for (const auto &[name, cal] : {std::pair{"readout", &cals.readout}, std::pair{"full", &cals.full}}) {
        const auto stem = dir / (std::string("calibration_") + name);
        write_json(stem.string() + ".json", **cal);
        std::ofstream csv(stem.string() + ".csv", std::ios::binary);
        spem::write_calibration_csv(csv, **cal);
        std::printf("%s: dim=%zu cond=%.6g -> %s.{json,csv}\n", name, (*cal)->dim(), (*cal)->condition,
                    stem.string().c_str());
    }
    return 0;
}

int cmd_run(const Common &c) {
    const auto cfg = resolve(c);
    const auto records = spem::run_experiment(cfg, cache_dir(c));
    const auto dir = out_dir(c);
    spem::emit_csv(records, dir / "run.csv");
    spem::emit_svg(records, dir / "run.svg");
    std::cout << (dir / "run.csv").string() << '\n' << (dir / "run.svg").string() << '\n';
    return 0;
}

int cmd_sweep(const Common &c, const std::vector<double> &p, const std::vector<unsigned> &n) {
    auto cfg = resolve(c);
    if (!p.empty()) {
        cfg.sweep_p = p;
    }
    if (!n.empty()) {
        cfg.sweep_layers = n;
    }
    const auto rows = spem::sweep(cfg, cfg.sweep_p, cfg.sweep_layers, cache_dir(c));
    const auto dir = out_dir(c);
    spem::emit_csv(rows, dir / "sweep.csv");
    spem::emit_svg(rows, dir / "sweep.svg");
    std::cout << (dir / "sweep.csv").string() << '\n' << (dir / "sweep.svg").string() << '\n';
    return 0;
}

int cmd_plot(const std::string &csv, const std::string &svg) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) {
        throw spem::ConfigError("cannot open '" + csv + "'");
    }
    const auto chart = spem::chart_from_csv(in);
    const fs::path target = svg.empty() ? fs::path(csv).replace_extension(".svg") : fs::path(svg);
    std::ofstream out(target, std::ios::binary);
    spem::write_svg(out, chart);
    if (!out) {
        throw std::runtime_error("write to '" + target.string() + "' failed");
    }
    std::cout << target.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Variational simulation of a non-Hermitian spin chain with noise-aware error mitigation"};
    app.require_subcommand(1);

    Common c;
    auto *train = app.add_subcommand("train", "train ansatz parameters for every time step");
    add_common(train, c, true);
    auto *calibrate = app.add_subcommand("calibrate", "build readout and full calibration matrices");
    add_common(calibrate, c, true);
    auto *run = app.add_subcommand("run", "train, execute under noise, mitigate and post-select");
    add_common(run, c, true);
    auto *sweep = app.add_subcommand("sweep", "average deviation over a noise x depth grid");
    add_common(sweep, c, false);
    sweep->add_flag("--no-cache", c.no_cache, "ignore and do not write the training cache");
    std::vector<double> sweep_p;
    std::vector<unsigned> sweep_n;
    sweep->add_option("--p", sweep_p, "CX error rates")->delimiter(',');
    sweep->add_option("--layers", sweep_n, "layer counts")->delimiter(',');
    auto *oracle = app.add_subcommand("oracle", "exact magnetization curve");
    add_common(oracle, c, false);
    auto *plot = app.add_subcommand("plot", "render a run, sweep or oracle CSV as SVG");
    std::string plot_csv, plot_svg;
    plot->add_option("csv", plot_csv, "input CSV")->required();
    plot->add_option("--out", plot_svg, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) return cmd_train(c);
        if (*calibrate) return cmd_calibrate(c);
        if (*run) return cmd_run(c);
        if (*sweep) return cmd_sweep(c, sweep_p, sweep_n);
        if (*oracle) return cmd_oracle(c);
        if (*plot) return cmd_plot(plot_csv, plot_svg);
    } catch (const spem::ConfigError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const spem::NumericError &e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
