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

// Variational compilation of the ansatz: fidelity cost against a target
// state (or against the identity operator), central finite-difference
// gradients, and multi-restart bounded quasi-Newton training.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spem/circuit.hpp"
#include "spem/errors.hpp"
#include "spem/lbfgsb.hpp"
#include "spem/nonherm.hpp"
#include "spem/numkit.hpp"
#include "spem/rng.hpp"

namespace spem {

struct TrainConfig {
    unsigned restarts = 8;
    size_t max_iterations = 500;
    double fd_step = 1e-6;
    double lower = -std::numbers::pi;
    double upper = std::numbers::pi;
    double tolerance = 1e-8;  // projected-gradient stop
    double perturbation = std::numbers::pi / 4;
    uint64_t seed = 0;

    void validate() const {
        if (restarts < 1) {
            throw ConfigError("train: restarts must be >= 1");
        }
        if (!(fd_step > 0)) {
            throw ConfigError("train: finite-difference step must be positive");
        }
        if (!(lower < upper)) {
            throw ConfigError("train: angle bounds are empty");
        }
        if (max_iterations < 1) {
            throw ConfigError("train: max_iterations must be >= 1");
        }
    }
};

struct TrainResult {
    double t = 0;
    ParamVector params;
    double final_cost = 1.0;
    size_t iterations = 0;
    unsigned restart_index = 0;
};

enum class IdentityMode { analytic, variational };

/// Fidelity-type objective 1 - |sum_c <target_c| V |input_c>| / norm over a
/// set of columns. One column gives the state cost; all basis columns with
/// identity targets give the operator cost 1 - |tr V| / d.
class OverlapObjective {
public:
    OverlapObjective(const AnsatzSpec &spec, std::vector<ComplexVector> inputs, std::vector<ComplexVector> targets,
                     double norm)
        : spec_(spec), gates_(gate_sequence(spec)), inputs_(std::move(inputs)), targets_(std::move(targets)),
          norm_(norm) {
        if (inputs_.size() != targets_.size() || inputs_.empty()) {
            throw NumericError("overlap objective needs matching, non-empty input and target sets");
        }
        for (size_t c = 0; c < inputs_.size(); ++c) {
            if (inputs_[c].size() != spec.dim() || targets_[c].size() != spec.dim()) {
                throw NumericError("overlap objective: vector dimension does not match the ansatz");
            }
        }
    }

    /// Single-state cost against target unitary U on basis input psi0.
    static OverlapObjective for_state(const AnsatzSpec &spec, const ComplexMatrix &u, size_t psi0_index) {
        if (u.rows() != spec.dim() || u.cols() != spec.dim()) {
            throw NumericError("target unitary dimension does not match the ansatz");
        }
        if (psi0_index >= spec.dim()) {
            throw ConfigError("initial state index out of range");
        }
        ComplexVector in(spec.dim(), cplx(0));
        in[psi0_index] = 1;
        return OverlapObjective(spec, {in}, {u.column(psi0_index)}, 1.0);
    }

    /// Operator-level identity cost 1 - |tr V| / d.
    static OverlapObjective for_identity(const AnsatzSpec &spec) {
        std::vector<ComplexVector> basis;
        for (size_t i = 0; i < spec.dim(); ++i) {
            ComplexVector e(spec.dim(), cplx(0));
            e[i] = 1;
            basis.push_back(e);
        }
        return OverlapObjective(spec, basis, basis, static_cast<double>(spec.dim()));
    }

    const AnsatzSpec &spec() const { return spec_; }

    cplx overlap(const ParamVector &params) const {
        check_params(spec_, params);
        cplx f(0);
        ComplexVector psi;
        for (size_t c = 0; c < inputs_.size(); ++c) {
            psi = inputs_[c];
            for (const auto &g : gates_) {
                apply_gate(psi, g, params);
            }
            for (size_t i = 0; i < psi.size(); ++i) {
                f += std::conj(targets_[c][i]) * psi[i];
            }
        }
        return f;
    }

    double cost(const ParamVector &params) const { return to_cost(overlap(params)); }

    /// Central differences of the cost, one parameter at a time. Every
    /// perturbed circuit is evaluated exactly: the overlap is linear in the
    /// perturbed 2x2 gate, so it is contracted against the cached state
    /// before and the back-propagated target after that gate.
    std::vector<double> gradient(const ParamVector &params, double h) const {
        check_params(spec_, params);
        if (!(h > 0)) {
            throw NumericError("finite-difference step must be positive");
        }
        const size_t d = spec_.dim();
        const size_t cols = inputs_.size();
        const size_t ng = gates_.size();
        // forward states before each gate
        std::vector<ComplexVector> before(ng * cols);
        for (size_t c = 0; c < cols; ++c) {
            ComplexVector psi = inputs_[c];
            for (size_t k = 0; k < ng; ++k) {
                before[k * cols + c] = psi;
                apply_gate(psi, gates_[k], params);
            }
        }
        std::vector<ComplexVector> back = targets_;
        std::vector<double> grad(params.size(), 0.0);
        for (size_t k = ng; k-- > 0;) {
            const Gate &g = gates_[k];
            if (g.kind == GateKind::u3) {
                // m[a][b] = sum_c sum_i conj(w[i with bit a]) s[i with bit b]
                cplx m[2][2] = {{0, 0}, {0, 0}};
                const size_t bit = size_t{1} << g.q0;
                for (size_t c = 0; c < cols; ++c) {
                    const auto &w = back[c];
                    const auto &s = before[k * cols + c];
                    for (size_t i = 0; i < d; ++i) {
                        if (i & bit) {
                            continue;
                        }
                        const cplx w0 = std::conj(w[i]);
                        const cplx w1 = std::conj(w[i | bit]);
                        m[0][0] += w0 * s[i];
                        m[0][1] += w0 * s[i | bit];
                        m[1][0] += w1 * s[i];
                        m[1][1] += w1 * s[i | bit];
                    }
                }
                const U3Params base = params.u3_at(g.param_offset);
                for (size_t j = 0; j < 3; ++j) {
                    double plus[3] = {base.theta, base.phi, base.lambda};
                    double minus[3] = {base.theta, base.phi, base.lambda};
                    plus[j] += h;
                    minus[j] -= h;
                    const Gate2 gp = u3_gate(plus[0], plus[1], plus[2]);
                    const Gate2 gm = u3_gate(minus[0], minus[1], minus[2]);
                    const cplx fp = gp[0] * m[0][0] + gp[1] * m[0][1] + gp[2] * m[1][0] + gp[3] * m[1][1];
                    const cplx fm = gm[0] * m[0][0] + gm[1] * m[0][1] + gm[2] * m[1][0] + gm[3] * m[1][1];
                    grad[g.param_offset + j] = (to_cost(fp) - to_cost(fm)) / (2 * h);
                }
            }
            // propagate targets backwards through gate k: w <- G^H w
            for (auto &w : back) {
                if (g.kind == GateKind::cx) {
                    apply_cx(w, g.q0, g.q1);
                } else {
                    const Gate2 u = u3_gate(params.u3_at(g.param_offset));
                    apply_1q(w, Gate2{std::conj(u[0]), std::conj(u[2]), std::conj(u[1]), std::conj(u[3])}, g.q0);
                }
            }
        }
        return grad;
    }

private:
    double to_cost(cplx f) const { return 1.0 - std::abs(f) / norm_; }

    AnsatzSpec spec_;
    std::vector<Gate> gates_;
    std::vector<ComplexVector> inputs_;
    std::vector<ComplexVector> targets_;
    double norm_;
};

/// 1 - |<psi0| V^H U |psi0>| for the ansatz V(params).
inline double cost(const AnsatzSpec &spec, const ParamVector &params, const ComplexMatrix &target,
                   size_t psi0_index) {
    return OverlapObjective::for_state(spec, target, psi0_index).cost(params);
}

inline std::vector<double> gradient(const AnsatzSpec &spec, const ParamVector &params, const ComplexMatrix &target,
                                    size_t psi0_index, double h) {
    return OverlapObjective::for_state(spec, target, psi0_index).gradient(params, h);
}

/// 1 - |tr V| / d.
inline double operator_cost(const AnsatzSpec &spec, const ParamVector &params) {
    return OverlapObjective::for_identity(spec).cost(params);
}

/// One bounded quasi-Newton run from `start`.
inline TrainResult optimize_from(const OverlapObjective &obj, ParamVector start, const TrainConfig &cfg) {
    LbfgsbOptions opt;
    opt.max_iterations = cfg.max_iterations;
    opt.pgtol = cfg.tolerance;
    const size_t n = start.size();
    const Objective fg = [&](std::span<const double> x, std::span<double> g) {
        const ParamVector p(std::vector<double>(x.begin(), x.end()));
        const auto grad = obj.gradient(p, cfg.fd_step);
        std::copy(grad.begin(), grad.end(), g.begin());
        return obj.cost(p);
    };
    const auto res = minimize_bounded(fg, std::move(start.angles), Bounds::uniform(n, cfg.lower, cfg.upper), opt);
    TrainResult out;
    out.params = ParamVector(res.x);
    out.final_cost = std::clamp(obj.cost(out.params), 0.0, 1.0);
    out.iterations = res.iterations;
    return out;
}

/// Zero angles plus a seeded uniform perturbation in [-scale, scale].
inline ParamVector perturbed_start(const AnsatzSpec &spec, double scale, uint64_t seed) {
    Rng rng(seed);
    ParamVector p = identity_params(spec);
    for (double &a : p.angles) {
        a = rng.uniform(-scale, scale);
    }
    return p;
}

/// Best of `cfg.restarts` runs. Restart 0 starts from `warm`; the others
/// from seeded perturbations of the zero vector keyed by (seed, task, restart).
inline TrainResult train_multistart(const OverlapObjective &obj, const ParamVector &warm, const TrainConfig &cfg,
                                    uint64_t task) {
    TrainResult best;
    bool have = false;
    for (unsigned r = 0; r < cfg.restarts; ++r) {
        ParamVector start =
            r == 0 ? warm : perturbed_start(obj.spec(), cfg.perturbation, derive_seed(cfg.seed, task, r));
        for (double &a : start.angles) {
            a = std::clamp(a, cfg.lower, cfg.upper);
        }
        TrainResult res = optimize_from(obj, std::move(start), cfg);
        res.restart_index = r;
        if (!have || res.final_cost < best.final_cost) {
            best = std::move(res);
            have = true;
        }
        if (best.final_cost <= 1e-12) {
            break;
        }
    }
    return best;
}

/// Dilated target unitary for time t.
inline ComplexMatrix dilated_target(const TfiParams &tfi, double t) {
    return embed(evolution_operator(tfi, t), t).unitary;
}

/// Initial state |down...down> (x) |up>: system bits set, ancilla bit clear.
inline size_t default_psi0(const TfiParams &tfi) {
    return all_down_index(tfi.sites);
}

/// Trains one parameter vector per grid time. Step k > 0 warm-starts
/// restart 0 from the step k-1 solution.
inline std::vector<TrainResult> train_evolution(const AnsatzSpec &spec, const TfiParams &tfi, const TimeGrid &grid,
                                                const TrainConfig &cfg) {
    spec.validate();
    tfi.validate();
    grid.validate();
    cfg.validate();
    if (spec.num_qubits != tfi.sites + 1) {
        throw ConfigError("ansatz must have one qubit more than the chain (ancilla)");
    }
    std::vector<TrainResult> out;
    ParamVector warm = identity_params(spec);
    for (unsigned k = 0; k < grid.steps; ++k) {
        const double t = grid.time(k);
        const auto obj = OverlapObjective::for_state(spec, dilated_target(tfi, t), default_psi0(tfi));
        TrainResult best = train_multistart(obj, warm, cfg, k);
        best.t = t;
        if (best.final_cost >= 0.2) {
            throw TrainingError("training failed at t=" + std::to_string(t) + ": best cost " +
                                std::to_string(best.final_cost));
        }
        warm = best.params;
        out.push_back(std::move(best));
    }
    return out;
}

/// Calibration circuit realizing the identity with the ansatz structure.
inline TrainResult train_identity(const AnsatzSpec &spec, const TrainConfig &cfg, IdentityMode mode) {
    spec.validate();
    cfg.validate();
    if (mode == IdentityMode::analytic) {
        TrainResult out;
        out.params = identity_params(spec);
        out.final_cost = std::clamp(operator_cost(spec, out.params), 0.0, 1.0);
        return out;
    }
    const auto obj = OverlapObjective::for_identity(spec);
    const ParamVector start = perturbed_start(spec, cfg.perturbation, derive_seed(cfg.seed, 0x1d, 0));
    TrainConfig tight = cfg;
    tight.max_iterations = std::max<size_t>(cfg.max_iterations, 2000);
    tight.tolerance = std::min(cfg.tolerance, 1e-10);
    TrainResult best = train_multistart(obj, start, tight, 0x1d);
    if (best.final_cost > 1e-3) {
        throw TrainingError("variational identity training did not converge: cost " +
                            std::to_string(best.final_cost));
    }
    return best;
}

// --- serialization ----------------------------------------------------------------

inline void to_json(nlohmann::json &j, const TrainResult &r) {
    j = nlohmann::json{{"t", r.t},
                       {"cost", r.final_cost},
                       {"params", r.params},
                       {"iterations", r.iterations},
                       {"restart", r.restart_index}};
}

inline void from_json(const nlohmann::json &j, TrainResult &r) {
    r.t = j.at("t").get<double>();
    r.final_cost = j.at("cost").get<double>();
    r.params = j.at("params").get<ParamVector>();
    r.iterations = j.value("iterations", size_t{0});
    r.restart_index = j.value("restart", 0u);
}

}  // namespace spem
