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


// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "spem/bench.hpp"

namespace {

using namespace spem;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const std::string &id, bool pass, const std::string &detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char *f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <typename... Args>
std::string fmt(const char *f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_dilation() {
    const auto start = Clock::now();
    const TfiParams tfi;
    const TimeGrid grid;
    double worst_unitary = 0, worst_block = 0;
    for (unsigned k = 0; k < grid.steps; ++k) {
        const auto uh = evolution_operator(tfi, grid.time(k));
        const auto e = embed(uh, grid.time(k));
        worst_unitary = std::max(worst_unitary, unitarity_defect(e.unitary));
        worst_block = std::max(worst_block, frobenius_norm(e.unitary.block(0, 0, 16, 16) - uh * cplx(e.norm_factor)));
    }
    const double secs = seconds_since(start);
    report("1 dilation", worst_unitary <= 1e-9 && worst_block <= 1e-8 && secs < 5,
           fmt("max |U^H U - I|_F = %.2e (<= 1e-9), max block residual = %.2e (<= 1e-8), %.2f s (< 5 s)",
               worst_unitary, worst_block, secs));
}

void criterion_oracle() {
    const auto start = Clock::now();
    const TfiParams tfi;
    const TimeGrid grid;
    const size_t psi_p = all_down_index(tfi.sites);
    double worst_tv = 0, worst_success = 0;
    for (unsigned k = 0; k < grid.steps; ++k) {
        const double t = grid.time(k);
        const auto uh = evolution_operator(tfi, t);
        const auto e = embed(uh, t);
        // density execution of the dilation on |psi_p> (x) |up>
        ComplexMatrix rho(32, 32);
        rho(psi_p, psi_p) = 1;
        rho = e.unitary * rho * e.unitary.adjoint();
        OutcomeDistribution dist;
        for (size_t i = 0; i < 32; ++i) {
            dist.weights.push_back(rho(i, i).real());
        }
        const auto sel = post_select(dist);
        const auto brute = evolved_distribution(tfi, t, psi_p);
        double tv = 0, norm2 = 0;
        for (size_t i = 0; i < 16; ++i) {
            tv += std::abs(sel.dist.weights[i] - brute.weights[i]) / 2;
            norm2 += std::norm(uh(i, psi_p));
        }
        worst_tv = std::max(worst_tv, tv);
        worst_success =
            std::max(worst_success, std::abs(sel.success_prob - e.norm_factor * e.norm_factor * norm2));
    }
    const double secs = seconds_since(start);
    report("2 oracle equivalence", worst_tv <= 1e-9 && worst_success <= 1e-9 && secs < 10,
           fmt("max TV = %.2e (<= 1e-9), max success-probability error = %.2e (<= 1e-9), %.2f s (< 10 s)", worst_tv,
               worst_success, secs));
}

struct Trained {
    unsigned layers;
    std::vector<TrainResult> results;
};

void criterion_training() {
    const auto start = Clock::now();
    const TfiParams tfi;
    const TimeGrid grid;
    const auto exact = exact_reference(tfi, grid);
    std::vector<Trained> trained;
    for (unsigned n : {2u, 8u}) {
        trained.push_back({n, train_evolution(AnsatzSpec::chain(5, n), tfi, grid, TrainConfig{})});
    }
    double worst_cost[2] = {0, 0};
    double worst_z[2] = {0, 0};
    double worst_z_t[2] = {0, 0};
    for (size_t i = 0; i < 2; ++i) {
        const auto spec = AnsatzSpec::chain(5, trained[i].layers);
        for (unsigned k = 0; k < grid.steps; ++k) {
            const auto &r = trained[i].results[k];
            worst_cost[i] = std::max(worst_cost[i], r.final_cost);
            const auto sampled = run_trajectories(spec, r.params, default_psi0(tfi), NoiseModel{},
                                                  ShotPlan{32000, derive_seed(2024, trained[i].layers, k)});
            const double dz = std::abs(z_magnetization(post_select(sampled).dist) - exact[k]);
            if (dz > worst_z[i]) {
                worst_z[i] = dz;
                worst_z_t[i] = grid.time(k);
            }
        }
    }
    const double secs = seconds_since(start);
    report("3a training n=2", worst_cost[0] <= 0.02, fmt("max cost over 11 steps = %.3e (<= 0.02)", worst_cost[0]));
    report("3b training n=8", worst_cost[1] <= 1e-3 && secs < 600,
           fmt("max cost over 11 steps = %.3e (<= 1e-3), training + sampling %.1f s (< 600 s)", worst_cost[1], secs));
    report("3c noiseless <Z> at 32000 shots", worst_z[0] <= 0.05 && worst_z[1] <= 0.05,
           fmt("max |dZ| n=2: %.4f at t=%g, n=8: %.4f at t=%g (<= 0.05)", worst_z[0], worst_z_t[0], worst_z[1],
               worst_z_t[1]));
}

ExperimentConfig density_config() {
    ExperimentConfig cfg;
    cfg.backend = Backend::density;
    cfg.noise = NoiseModel{0.012, 0.01, std::nullopt};
    cfg.modes = {MitigationMode::none, MitigationMode::readout, MitigationMode::full};
    return cfg;
}

void criterion_sweep() {
    const auto start = Clock::now();
    const std::vector<double> ps{0.003, 0.006, 0.009, 0.012, 0.015};
    const std::vector<unsigned> ns{2, 3, 4, 5};
    const auto rows = sweep(density_config(), ps, ns);
    const double secs = seconds_since(start);

    std::printf("    p      n  dev_raw   dev_readout dev_full\n");
    for (const auto &r : rows) {
        std::printf("    %.3f  %u  %.5f   %.5f     %.5f\n", r.p, r.layers, r.dev_raw, r.dev_readout, r.dev_full);
    }
    auto cell = [&](double p, unsigned n) -> const SweepRow & {
        for (const auto &r : rows) {
            if (r.p == p && r.layers == n) {
                return r;
            }
        }
        throw std::logic_error("missing sweep cell");
    };
    const double lo = cell(0.003, 2).dev_raw, hi = cell(0.015, 5).dev_raw;
    report("4a raw deviation grows", hi > lo && hi >= 2 * lo && secs < 900,
           fmt("raw(0.003,n=2) = %.4f, raw(0.015,n=5) = %.4f, ratio %.2f (>= 2), sweep %.1f s (< 900 s)", lo, hi,
               hi / lo, secs));

    std::string over;
    double worst_full = 0;
    for (const auto &r : rows) {
        worst_full = std::max(worst_full, r.dev_full);
        if (r.dev_full > 0.05) {
            over += fmt(" (p=%.3f,n=%u)=%.4f", r.p, r.layers, r.dev_full);
        }
    }
    report("4b full mitigation <= 0.05 everywhere", over.empty(),
           fmt("max full deviation %.4f;", worst_full) + (over.empty() ? std::string(" all 20 cells within bound")
                                                                        : " cells above bound:" + over));

    std::string weak;
    double worst_ratio = 0;
    for (const auto &r : rows) {
        if (r.p < 0.009 - 1e-12) {
            continue;
        }
        const double ratio = r.dev_full / r.dev_raw;
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 0.5) {
            weak += fmt(" (p=%.3f,n=%u) full/raw=%.4f/%.4f", r.p, r.layers, r.dev_full, r.dev_raw);
        }
    }
    report("4c full <= 0.5 x raw for p >= 0.009", weak.empty(),
           fmt("worst full/raw ratio %.3f;", worst_ratio) + (weak.empty() ? std::string(" all 12 cells within bound")
                                                                          : " cells above bound:" + weak));
}

void criterion_readout_comparison() {
    const auto start = Clock::now();
    const auto rows = sweep(density_config(), {0.012}, {3, 4, 5});
    const double secs = seconds_since(start);
    bool pass = secs < 300;
    std::string detail;
    for (const auto &r : rows) {
        const double recovered = (r.dev_raw - r.dev_readout) / (r.dev_raw - r.dev_full);
        pass = pass && r.dev_readout >= r.dev_full && recovered < 0.3;
        detail += fmt("n=%u raw %.4f ro %.4f full %.4f recovered %.3f; ", r.layers, r.dev_raw, r.dev_readout,
                      r.dev_full, recovered);
    }
    report("5 readout-only vs full at p=0.012", pass, detail + fmt("%.1f s (< 300 s)", secs));
}

void criterion_calibration_identity() {
    const AnsatzSpec spec;
    const auto id = identity_params(spec);
    const auto dens = build_full_calibration(spec, id, NoiseModel{}, Backend::density);
    const auto traj = build_full_calibration(spec, id, NoiseModel{}, Backend::trajectory, ShotPlan{32000, 6});
    double worst_d = 0;
    size_t outside = 0;
    for (size_t r = 0; r < 32; ++r) {
        for (size_t c = 0; c < 32; ++c) {
            const double ideal = r == c ? 1.0 : 0.0;
            worst_d = std::max(worst_d, std::abs(dens.matrix(r, c) - ideal));
            const double sigma = std::sqrt(ideal * (1 - ideal) / 32000.0);
            outside += std::abs(traj.matrix(r, c) - ideal) > 3 * sigma;
        }
    }
    report("6 zero-noise calibration is identity", worst_d <= 1e-12 && outside == 0,
           fmt("density max |M - I| = %.2e (<= 1e-12), trajectory entries outside 3 sigma: %zu of 1024", worst_d,
               outside));
}

void criterion_forward_backward() {
    const AnsatzSpec spec;
    const auto cal =
        build_full_calibration(spec, identity_params(spec), NoiseModel{0.012, 0.01, std::nullopt}, Backend::density);
    Rng rng(777);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(32);
        double s = 0;
        for (auto &x : v) {
            x = -std::log(1.0 - rng.uniform());
            s += x;
        }
        for (auto &x : v) {
            x /= s;
        }
        OutcomeDistribution d;
        d.weights = cal.matrix * v;
        const auto back = mitigate(d, cal);
        for (size_t i = 0; i < 32; ++i) {
            worst = std::max(worst, std::abs(back.weights[i] - v[i]));
        }
    }
    report("7 forward-backward consistency", worst <= 1e-8,
           fmt("max |mitigate(M v, M) - v| over 100 vectors = %.2e (<= 1e-8)", worst));
}

void criterion_determinism() {
    const auto dir = fs::temp_directory_path() / "spem_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    ExperimentConfig run_cfg = *preset_config("fig4");
    run_cfg.seed = 7;
    for (const char *name : {"run_a.csv", "run_b.csv"}) {
        emit_csv(run_experiment(run_cfg, dir / "cache"), dir / name);
    }
    ExperimentConfig sweep_cfg = *preset_config("fig3");
    sweep_cfg.backend = Backend::trajectory;
    sweep_cfg.shots = 8000;
    sweep_cfg.seed = 7;
    for (const char *name : {"sweep_a.csv", "sweep_b.csv"}) {
        emit_csv(sweep(sweep_cfg, {0.006, 0.012}, {2, 3}, dir / "cache"), dir / name);
    }
    const bool run_same = slurp(dir / "run_a.csv") == slurp(dir / "run_b.csv");
    const bool sweep_same = slurp(dir / "sweep_a.csv") == slurp(dir / "sweep_b.csv");
    report("8 determinism", run_same && sweep_same,
           fmt("run CSV byte-identical: %s, sweep CSV byte-identical: %s (trajectory backend, seed 7)",
               run_same ? "yes" : "no", sweep_same ? "yes" : "no"));
}

void criterion_numerics() {
    Rng rng(99);
    double worst_expm = 0;
    for (double norm : {0.1, 1.0, 10.0, 50.0}) {
        for (size_t n : {4, 16, 32}) {
            ComplexMatrix a(n, n);
            for (auto &v : a.data()) {
                v = cplx(rng.normal(), rng.normal());
            }
            a = a * cplx(norm / frobenius_norm(a));
            Eigen::MatrixXcd ea(n, n);
            for (size_t r = 0; r < n; ++r) {
                for (size_t c = 0; c < n; ++c) {
                    ea(r, c) = a(r, c);
                }
            }
            const Eigen::MatrixXcd oracle = ea.exp();
            const auto mine = expm(a);
            double diff = 0;
            for (size_t r = 0; r < n; ++r) {
                for (size_t c = 0; c < n; ++c) {
                    diff += std::norm(mine(r, c) - oracle(r, c));
                }
            }
            worst_expm = std::max(worst_expm, std::sqrt(diff) / oracle.norm());
        }
    }
    double worst_sqrt = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 32;
        ComplexMatrix a(n, n);
        for (auto &v : a.data()) {
            v = cplx(rng.normal(), rng.normal());
        }
        const auto s = a.adjoint() * a;
        const auto root = psd_sqrt(s);
        worst_sqrt = std::max(worst_sqrt, frobenius_norm(root * root - s) / frobenius_norm(s));
    }
    const AnsatzSpec spec;
    const auto target = dilated_target(TfiParams{}, 10.0);
    ParamVector p(std::vector<double>(spec.param_count()));
    for (auto &x : p.angles) {
        x = rng.uniform(-3, 3);
    }
    const auto g = gradient(spec, p, target, 15, 1e-6);
    double worst_grad = 0;
    auto central = [&](size_t j, double h) {
        ParamVector a = p, b = p;
        a.angles[j] += h;
        b.angles[j] -= h;
        return (cost(spec, a, target, 15) - cost(spec, b, target, 15)) / (2 * h);
    };
    for (size_t j = 0; j < p.size(); ++j) {
        const double extrapolated = (4 * central(j, 5e-4) - central(j, 1e-3)) / 3;
        worst_grad = std::max(worst_grad, std::abs(g[j] - extrapolated));
    }
    report("9 numerics", worst_expm <= 1e-9 && worst_sqrt <= 1e-7 && worst_grad <= 1e-5,
           fmt("expm rel err %.2e (<= 1e-9), psd_sqrt round trip %.2e (<= 1e-7), gradient vs extrapolation %.2e "
               "(<= 1e-5)",
               worst_expm, worst_sqrt, worst_grad));
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> criteria = {
        criterion_dilation,           criterion_oracle,           criterion_training,
        criterion_sweep,              criterion_readout_comparison, criterion_calibration_identity,
        criterion_forward_backward,   criterion_determinism,      criterion_numerics};
    for (const auto &c : criteria) {
        try {
            c();
        } catch (const std::exception &e) {
            report("criterion aborted", false, e.what());
        }
    }
    std::printf("%d criterion line(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
