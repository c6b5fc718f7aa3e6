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


#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "spem/bench.hpp"

namespace spem {
namespace {

namespace fs = std::filesystem;

ExperimentConfig parse(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string &name) {
    const auto dir = fs::temp_directory_path() / ("spem_bench_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(Config, ParsesKeysAndComments) {
    const auto cfg = parse(R"(
# benchmark settings
layers = 3          # depth
cx_depol = 0.006
readout_flip = 0.02
backend = trajectory
shots = 1000
seed = 42
mitigation = none, full
identity_mode = variational
policy = raw_quasi
boundary = open
sweep_p = 0.003, 0.015
sweep_layers = 2,5
)");
    EXPECT_EQ(cfg.layers, 3u);
    EXPECT_EQ(cfg.noise.cx_depol, 0.006);
    EXPECT_EQ(cfg.noise.readout_flip, 0.02);
    EXPECT_EQ(cfg.backend, Backend::trajectory);
    EXPECT_EQ(cfg.shots, 1000u);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.modes, (std::vector<MitigationMode>{MitigationMode::none, MitigationMode::full}));
    EXPECT_EQ(cfg.identity_mode, IdentityMode::variational);
    EXPECT_EQ(cfg.policy, MitigationPolicy::raw_quasi);
    EXPECT_EQ(cfg.sweep_p, (std::vector<double>{0.003, 0.015}));
    EXPECT_EQ(cfg.sweep_layers, (std::vector<unsigned>{2, 5}));
}

TEST(Config, RejectsInvalidInput) {
    EXPECT_THROW(parse("boundary = periodic\n"), ConfigError);
    EXPECT_THROW(parse("colour = blue\n"), ConfigError);
    EXPECT_THROW(parse("layers = two\n"), ConfigError);
    EXPECT_THROW(parse("layers = -1\n"), ConfigError);
    EXPECT_THROW(parse("layers 3\n"), ConfigError);
    EXPECT_THROW(parse("cx_depol = 1.5\n"), ConfigError);
    EXPECT_THROW(parse("mitigation = \n"), ConfigError);
    EXPECT_THROW(parse("mitigation = zne\n"), ConfigError);
    EXPECT_THROW(parse("sweep_p = 0.2\n"), ConfigError);
    EXPECT_THROW(parse("layers = 3\nbase = fig3\n"), ConfigError);
    EXPECT_THROW(parse("device = nowhere\n"), ConfigError);
    try {
        parse("layers = 2\n\nshots = x\n");
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(Config, PresetsAndDevices) {
    for (const char *name : {"default", "fig3", "fig4", "oslo", "hanoi", "guadalupe"}) {
        ASSERT_TRUE(preset_config(name)) << name;
        EXPECT_NO_THROW(preset_config(name)->validate());
    }
    EXPECT_FALSE(preset_config("nope"));
    EXPECT_EQ(preset_config("oslo")->noise.cx_depol, 0.012);
    EXPECT_EQ(preset_config("hanoi")->noise.cx_depol, 0.012);
    EXPECT_EQ(preset_config("guadalupe")->noise.cx_depol, 0.015);
    // A device preset changes only the noise model.
    auto dev = parse("device = guadalupe\n");
    ExperimentConfig base;
    EXPECT_EQ(dev.noise.cx_depol, 0.015);
    dev.noise = base.noise;
    EXPECT_EQ(dev.tfi, base.tfi);
    EXPECT_EQ(dev.grid, base.grid);
    EXPECT_EQ(dev.layers, base.layers);
    EXPECT_EQ(dev.seed, base.seed);
    const auto inherited = parse("base = fig4\nseed = 9\n");
    EXPECT_EQ(inherited.backend, Backend::trajectory);
    EXPECT_EQ(inherited.seed, 9u);
    EXPECT_THROW(load_config("definitely-not-a-preset"), ConfigError);
}

TEST(Run, RecordShapeAndExactColumn) {
    ExperimentConfig cfg;
    const auto recs = run_experiment(cfg);
    ASSERT_EQ(recs.size(), 11u);
    EXPECT_EQ(recs[0].t, 0.0);
    EXPECT_EQ(recs[0].z_exact, -1.0);
    for (const auto &r : recs) {
        for (double z : {r.z_raw, r.z_readout, r.z_full}) {
            EXPECT_GE(z, -1.0);
            EXPECT_LE(z, 1.0);
        }
        EXPECT_GT(r.success_prob, 0.0);
    }
    ExperimentConfig other = cfg;
    other.noise = {0.003, 0.0, std::nullopt};
    other.seed = 5;
    other.modes = {MitigationMode::full};
    const auto recs2 = run_experiment(other);
    for (size_t k = 0; k < recs.size(); ++k) {
        EXPECT_EQ(recs[k].z_exact, recs2[k].z_exact);
        EXPECT_TRUE(std::isnan(recs2[k].z_raw));
        EXPECT_TRUE(std::isnan(recs2[k].z_readout));
    }
}

TEST(Run, NoiselessTwoLayersTracksExact) {
    ExperimentConfig cfg;
    cfg.noise = NoiseModel{};
    cfg.modes = {MitigationMode::none};
    const auto recs = run_experiment(cfg);
    for (const auto &r : recs) {
        EXPECT_LE(std::abs(r.z_raw - r.z_exact), 0.02) << "t=" << r.t;
    }
}

TEST(Run, FullMitigationBeatsRawAtFourLayers) {
    ExperimentConfig cfg;
    cfg.layers = 4;
    const auto recs = run_experiment(cfg);
    const double raw = mean_deviation(recs, &RunRecord::z_raw);
    const double full = mean_deviation(recs, &RunRecord::z_full);
    EXPECT_LT(full, raw);
    EXPECT_GE(full, 0.0);
}

TEST(Run, ErrorsNameTimeAndMode) {
    ExperimentConfig cfg;
    cfg.grid.steps = 2;
    cfg.noise = {0.0, 0.5, std::nullopt};  // readout confusion becomes singular
    cfg.modes = {MitigationMode::readout};
    try {
        run_experiment(cfg);
        FAIL() << "expected a numeric error";
    } catch (const NumericError &e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("t=0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("mode=readout"), std::string::npos) << msg;
    }
}

TEST(Sweep, TableShape) {
    ExperimentConfig cfg;
    cfg.grid.steps = 3;
    const std::vector<double> ps{0.003, 0.006, 0.009, 0.012, 0.015};
    const std::vector<unsigned> ns{2, 3, 4, 5};
    const auto rows = sweep(cfg, ps, ns);
    ASSERT_EQ(rows.size(), 20u);
    for (const auto &r : rows) {
        EXPECT_GE(r.dev_raw, 0.0);
        EXPECT_GE(r.dev_readout, 0.0);
        EXPECT_GE(r.dev_full, 0.0);
    }
    EXPECT_EQ(rows.front().p, 0.003);
    EXPECT_EQ(rows.front().layers, 2u);
    EXPECT_EQ(rows.back().p, 0.015);
    EXPECT_EQ(rows.back().layers, 5u);
    std::ostringstream os;
    write_csv(os, rows);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), kSweepCsvHeader);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 21);
    EXPECT_THROW(sweep(cfg, {0.06}, {2}), ConfigError);
    EXPECT_THROW(sweep(cfg, {0.01}, {0}), ConfigError);
}

TEST(Csv, FormatAndDeterminism) {
    std::ostringstream empty;
    write_csv(empty, std::vector<RunRecord>{});
    EXPECT_EQ(empty.str(), std::string(kRunCsvHeader) + "\n");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(format_number(-1.0), "-1");
    EXPECT_EQ(format_number(std::nan("")), "nan");

    ExperimentConfig cfg = *preset_config("fig4");
    cfg.seed = 7;
    cfg.layers = 2;
    cfg.shots = 4000;
    cfg.grid.steps = 4;
    const auto dir = scratch_dir("csv");
    emit_csv(run_experiment(cfg), dir / "a.csv");
    emit_csv(run_experiment(cfg), dir / "b.csv");
    const auto a = slurp(dir / "a.csv");
    EXPECT_EQ(a, slurp(dir / "b.csv"));
    EXPECT_EQ(a.find('\r'), std::string::npos);
    cfg.seed = 8;
    emit_csv(run_experiment(cfg), dir / "c.csv");
    EXPECT_NE(a, slurp(dir / "c.csv"));
    EXPECT_THROW(emit_csv(std::vector<RunRecord>{}, dir / "missing" / "x.csv"), std::runtime_error);
}

TEST(Svg, SelfContainedCharts) {
    std::vector<RunRecord> recs = {{0, -1, -0.9, -0.95, -1, 0.9, 0}, {2, -0.6, -0.5, -0.52, -0.58, 0.4, 1e-3}};
    std::ostringstream os;
    write_svg(os, chart_of(recs));
    const std::string svg = os.str();
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 0, true);
    size_t polylines = 0;
    for (size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
        ++polylines;
    }
    EXPECT_EQ(polylines, 4u);
    EXPECT_NE(svg.find(">t</text>"), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos);

    std::vector<SweepRow> rows = {{0.003, 2, 0.02, 0.019, 0.01}, {0.015, 2, 0.05, 0.048, 0.02}};
    std::ostringstream sw;
    write_svg(sw, chart_of(rows));
    EXPECT_NE(sw.str().find(">p</text>"), std::string::npos);
    EXPECT_NE(sw.str().find("full n=2"), std::string::npos);
}

TEST(Plot, ReadsEmittedCsv) {
    std::vector<SweepRow> rows = {{0.003, 2, 0.02, std::nan(""), 0.01}};
    std::ostringstream os;
    write_csv(os, rows);
    std::istringstream in(os.str());
    const auto chart = chart_from_csv(in);
    EXPECT_EQ(chart.x_label, "p");
    EXPECT_EQ(chart.series.size(), 2u);  // readout column is all nan
    std::istringstream bad("a,b\n1,2\n");
    EXPECT_THROW(chart_from_csv(bad), ConfigError);
}

TEST(Cache, ReusesTrainingPass) {
    const auto dir = scratch_dir("cache");
    const AnsatzSpec spec;
    const TfiParams tfi;
    const TimeGrid grid{2.0, 3};
    const TrainConfig train;
    const auto first = train_cached(spec, tfi, grid, train, dir);
    const auto file = dir / ("train_" + training_key(spec, tfi, grid, train) + ".json");
    ASSERT_TRUE(fs::exists(file));
    const auto second = train_cached(spec, tfi, grid, train, dir);
    for (size_t k = 0; k < first.size(); ++k) {
        EXPECT_EQ(first[k].params, second[k].params);
    }
    TrainConfig other = train;
    other.seed = 1;
    EXPECT_NE(training_key(spec, tfi, grid, train), training_key(spec, tfi, grid, other));
    TfiParams g2 = tfi;
    g2.gamma = -0.4;
    EXPECT_NE(training_key(spec, tfi, grid, train), training_key(spec, g2, grid, train));
}

}  // namespace
}  // namespace spem
