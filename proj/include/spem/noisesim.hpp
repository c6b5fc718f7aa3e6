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

// Three execution backends for the ansatz: exact statevector, exact density
// matrix with CX depolarizing noise and readout flips, and seeded shot
// sampling over Pauli-error trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spem/circuit.hpp"
#include "spem/errors.hpp"
#include "spem/numkit.hpp"
#include "spem/rng.hpp"

namespace spem {

/// Gate-parameter-independent noise: a two-qubit depolarizing channel with
/// probability `cx_depol` after every CX, and a classical bit flip of every
/// measured qubit. Single-qubit gates are noiseless.
struct NoiseModel {
    double cx_depol = 0.0;
    double readout_flip = 0.0;
    /// Probability of reading 0 when the qubit is 1. Unset means symmetric.
    std::optional<double> readout_flip_down;

    double flip_up() const { return readout_flip; }
    double flip_down() const { return readout_flip_down.value_or(readout_flip); }

    void validate() const {
        auto in_range = [](double v) { return std::isfinite(v) && v >= 0.0 && v < 1.0; };
        if (!in_range(cx_depol)) {
            throw ConfigError("noise: cx_depol must be in [0, 1)");
        }
        if (!in_range(readout_flip) || !in_range(flip_down())) {
            throw ConfigError("noise: readout flip probability must be in [0, 1)");
        }
    }

    bool operator==(const NoiseModel &) const = default;
};

enum class DistKind { probability, quasi };

struct OutcomeDistribution {
    DistKind kind = DistKind::probability;
    std::vector<double> weights;

    size_t dim() const { return weights.size(); }

    double total() const {
        double s = 0;
        for (double w : weights) {
            s += w;
        }
        return s;
    }

    void validate(double tol = 1e-9) const {
        if (weights.empty()) {
            throw NumericError("outcome distribution is empty");
        }
        for (double w : weights) {
            if (!std::isfinite(w)) {
                throw NumericError("outcome distribution has non-finite weight");
            }
            if (kind == DistKind::probability && w < -tol) {
                throw NumericError("probability distribution has negative weight " + std::to_string(w));
            }
        }
        if (std::abs(total() - 1.0) > tol) {
            throw NumericError("outcome distribution sums to " + std::to_string(total()));
        }
    }
};

inline const char *to_string(DistKind k) {
    return k == DistKind::probability ? "probability" : "quasi";
}

inline void to_json(nlohmann::json &j, const OutcomeDistribution &d) {
    j = nlohmann::json{{"kind", to_string(d.kind)}, {"weights", d.weights}};
}

inline void from_json(const nlohmann::json &j, OutcomeDistribution &d) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "probability") {
        d.kind = DistKind::probability;
    } else if (kind == "quasi") {
        d.kind = DistKind::quasi;
    } else {
        throw ConfigError("unknown distribution kind '" + kind + "'");
    }
    d.weights = j.at("weights").get<std::vector<double>>();
}

struct ShotPlan {
    uint64_t shots = 32000;
    uint64_t seed = 0;
};

// --- readout ---------------------------------------------------------------------

/// Applies independent per-qubit readout confusion to a distribution over
/// 2^num_qubits outcomes.
inline std::vector<double> apply_readout(std::span<const double> probs, unsigned num_qubits, const NoiseModel &noise) {
    std::vector<double> cur(probs.begin(), probs.end());
    const double up = noise.flip_up();
    const double down = noise.flip_down();
    if (up == 0.0 && down == 0.0) {
        return cur;
    }
    std::vector<double> next(cur.size());
    for (unsigned q = 0; q < num_qubits; ++q) {
        const size_t bit = size_t{1} << q;
        for (size_t i = 0; i < cur.size(); ++i) {
            if (i & bit) {
                continue;
            }
            const double p0 = cur[i];
            const double p1 = cur[i | bit];
            next[i] = (1 - up) * p0 + down * p1;
            next[i | bit] = up * p0 + (1 - down) * p1;
        }
        cur.swap(next);
    }
    return cur;
}

/// Column-stochastic readout map: the num_qubits-fold tensor power of the
/// single-qubit confusion matrix [[1-q01, q10], [q01, 1-q10]].
inline RealMatrix readout_confusion_matrix(unsigned num_qubits, const NoiseModel &noise) {
    const RealMatrix single{{1 - noise.flip_up(), noise.flip_down()}, {noise.flip_up(), 1 - noise.flip_down()}};
    RealMatrix out(1, 1, {1.0});
    for (unsigned q = 0; q < num_qubits; ++q) {
        out = kron(single, out);
    }
    return out;
}

// --- ideal backend ------------------------------------------------------------------

inline OutcomeDistribution run_ideal(const AnsatzSpec &spec, const ParamVector &params, size_t input_index) {
    const auto psi = apply_ansatz(spec, params, input_index);
    OutcomeDistribution out;
    out.weights.resize(psi.size());
    for (size_t i = 0; i < psi.size(); ++i) {
        out.weights[i] = std::norm(psi[i]);
    }
    return out;
}

// --- density backend ------------------------------------------------------------------

namespace density {

inline void apply_1q(ComplexMatrix &rho, const Gate2 &g, unsigned qubit) {
    const size_t d = rho.rows();
    const size_t bit = size_t{1} << qubit;
    for (size_t i = 0; i < d; ++i) {
        if (i & bit) {
            continue;
        }
        auto r0 = rho.row(i);
        auto r1 = rho.row(i | bit);
        for (size_t c = 0; c < d; ++c) {
            const cplx a0 = r0[c];
            const cplx a1 = r1[c];
            r0[c] = g[0] * a0 + g[1] * a1;
            r1[c] = g[2] * a0 + g[3] * a1;
        }
    }
    const cplx h00 = std::conj(g[0]), h01 = std::conj(g[1]), h10 = std::conj(g[2]), h11 = std::conj(g[3]);
    for (size_t r = 0; r < d; ++r) {
        auto row = rho.row(r);
        for (size_t j = 0; j < d; ++j) {
            if (j & bit) {
                continue;
            }
            const cplx a0 = row[j];
            const cplx a1 = row[j | bit];
            row[j] = a0 * h00 + a1 * h01;
            row[j | bit] = a0 * h10 + a1 * h11;
        }
    }
}

inline void apply_cx(ComplexMatrix &rho, unsigned control, unsigned target) {
    const size_t d = rho.rows();
    const size_t cbit = size_t{1} << control;
    const size_t tbit = size_t{1} << target;
    for (size_t i = 0; i < d; ++i) {
        if ((i & cbit) && !(i & tbit)) {
            auto r0 = rho.row(i);
            auto r1 = rho.row(i | tbit);
            std::swap_ranges(r0.begin(), r0.end(), r1.begin());
        }
    }
    for (size_t r = 0; r < d; ++r) {
        auto row = rho.row(r);
        for (size_t j = 0; j < d; ++j) {
            if ((j & cbit) && !(j & tbit)) {
                std::swap(row[j], row[j | tbit]);
            }
        }
    }
}

/// rho -> (1 - p) rho + p Tr_ab(rho) (x) I/4 on qubits a, b.
inline void depolarize_pair(ComplexMatrix &rho, unsigned a, unsigned b, double p) {
    if (p == 0.0) {
        return;
    }
    const size_t d = rho.rows();
    const size_t ba = size_t{1} << a;
    const size_t bb = size_t{1} << b;
    const size_t mask = ba | bb;
    const size_t patterns[4] = {0, ba, bb, ba | bb};
    const double keep = 1.0 - p;
    for (size_t i = 0; i < d; ++i) {
        if (i & mask) {
            continue;
        }
        for (size_t j = 0; j < d; ++j) {
            if (j & mask) {
                continue;
            }
            cplx tr(0);
            for (size_t s : patterns) {
                tr += rho(i | s, j | s);
            }
            for (size_t s : patterns) {
                for (size_t s2 : patterns) {
                    rho(i | s, j | s2) *= keep;
                }
            }
            const cplx add = (p / 4.0) * tr;
            for (size_t s : patterns) {
                rho(i | s, j | s) += add;
            }
        }
    }
}

/// Evolves rho through the gate list with noise after every CX.
inline void evolve(ComplexMatrix &rho, const std::vector<Gate> &gates, const ParamVector &params, double cx_depol) {
    for (const auto &g : gates) {
        if (g.kind == GateKind::cx) {
            apply_cx(rho, g.q0, g.q1);
            depolarize_pair(rho, g.q0, g.q1, cx_depol);
        } else {
            apply_1q(rho, u3_gate(params.u3_at(g.param_offset)), g.q0);
        }
    }
}

}  // namespace density

/// Exact noisy execution on a basis-state input, including readout flips.
inline OutcomeDistribution run_density_noisy(const AnsatzSpec &spec, const ParamVector &params, size_t input_index,
                                             const NoiseModel &noise) {
    spec.validate();
    check_params(spec, params);
    noise.validate();
    const size_t d = spec.dim();
    if (input_index >= d) {
        throw ConfigError("input index " + std::to_string(input_index) + " out of range");
    }
    ComplexMatrix rho(d, d);
    rho(input_index, input_index) = 1;
    density::evolve(rho, gate_sequence(spec), params, noise.cx_depol);
    std::vector<double> diag(d);
    for (size_t i = 0; i < d; ++i) {
        diag[i] = rho(i, i).real();
    }
    OutcomeDistribution out;
    out.weights = apply_readout(diag, spec.num_qubits, noise);
    return out;
}

// --- trajectory backend ------------------------------------------------------------

namespace detail {

inline size_t sample_index(std::span<const double> cumulative, double u) {
    const double target = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) {
        --it;
    }
    return static_cast<size_t>(it - cumulative.begin());
}

inline std::vector<double> cumulative_of(std::span<const cplx> psi) {
    std::vector<double> cum(psi.size());
    double acc = 0;
    for (size_t i = 0; i < psi.size(); ++i) {
        acc += std::norm(psi[i]);
        cum[i] = acc;
    }
    return cum;
}

}  // namespace detail

inline constexpr uint64_t kShotsPerShard = 1024;

/// Monte Carlo unraveling of the density backend. After each CX, with
/// probability p one of the 16 two-qubit Paulis (identity included) is
/// applied to the pair. Shots are grouped into fixed-size shards, each seeded
/// from (plan.seed, shard index).
inline OutcomeDistribution run_trajectories(const AnsatzSpec &spec, const ParamVector &params, size_t input_index,
                                            const NoiseModel &noise, const ShotPlan &plan) {
    spec.validate();
    check_params(spec, params);
    noise.validate();
    if (plan.shots < 1) {
        throw ConfigError("shot plan needs at least one shot");
    }
    const size_t d = spec.dim();
    if (input_index >= d) {
        throw ConfigError("input index " + std::to_string(input_index) + " out of range");
    }
    const auto gates = gate_sequence(spec);
    ComplexVector ideal(d, cplx(0));
    ideal[input_index] = 1;
    for (const auto &g : gates) {
        apply_gate(ideal, g, params);
    }
    const auto ideal_cum = detail::cumulative_of(ideal);

    std::vector<uint64_t> counts(d, 0);
    std::vector<uint32_t> errors;  // (gate index << 4) | pauli pair
    ComplexVector psi(d);
    const uint64_t shards = (plan.shots + kShotsPerShard - 1) / kShotsPerShard;
    for (uint64_t shard = 0; shard < shards; ++shard) {
        Rng rng(derive_seed(plan.seed, shard));
        const uint64_t begin = shard * kShotsPerShard;
        const uint64_t end = std::min(plan.shots, begin + kShotsPerShard);
        for (uint64_t shot = begin; shot < end; ++shot) {
            errors.clear();
            if (noise.cx_depol > 0) {
                for (uint32_t gi = 0; gi < gates.size(); ++gi) {
                    if (gates[gi].kind == GateKind::cx && rng.uniform() < noise.cx_depol) {
                        errors.push_back((gi << 4) | static_cast<uint32_t>(rng.below(16)));
                    }
                }
            }
            size_t outcome;
            if (errors.empty()) {
                outcome = detail::sample_index(ideal_cum, rng.uniform());
            } else {
                std::fill(psi.begin(), psi.end(), cplx(0));
                psi[input_index] = 1;
                size_t next_err = 0;
                for (uint32_t gi = 0; gi < gates.size(); ++gi) {
                    apply_gate(psi, gates[gi], params);
                    while (next_err < errors.size() && (errors[next_err] >> 4) == gi) {
                        const uint32_t pauli = errors[next_err] & 15u;
                        apply_pauli(psi, pauli >> 2, gates[gi].q0);
                        apply_pauli(psi, pauli & 3u, gates[gi].q1);
                        ++next_err;
                    }
                }
                outcome = detail::sample_index(detail::cumulative_of(psi), rng.uniform());
            }
            for (unsigned q = 0; q < spec.num_qubits; ++q) {
                const size_t bit = size_t{1} << q;
                const double flip = (outcome & bit) ? noise.flip_down() : noise.flip_up();
                if (flip > 0 && rng.uniform() < flip) {
                    outcome ^= bit;
                }
            }
            ++counts[outcome];
        }
    }
    OutcomeDistribution out;
    out.weights.resize(d);
    for (size_t i = 0; i < d; ++i) {
        out.weights[i] = static_cast<double>(counts[i]) / static_cast<double>(plan.shots);
    }
    return out;
}

// --- superoperators ---------------------------------------------------------------------

/// Superoperator of rho -> V rho V^H on row-major vectorized density matrices.
inline ComplexMatrix unitary_channel(const ComplexMatrix &v) {
    ComplexMatrix vc(v.rows(), v.cols());
    for (size_t i = 0; i < v.data().size(); ++i) {
        vc.data()[i] = std::conj(v.data()[i]);
    }
    return kron(v, vc);
}

/// Gate-level noisy channel of the whole circuit (readout excluded) as a
/// d^2 x d^2 matrix on row-major vectorized density matrices.
inline ComplexMatrix effective_channel(const AnsatzSpec &spec, const ParamVector &params, const NoiseModel &noise) {
    spec.validate();
    check_params(spec, params);
    noise.validate();
    if (spec.num_qubits > 5) {
        throw ConfigError("effective_channel supports at most 5 qubits");
    }
    const size_t d = spec.dim();
    const auto gates = gate_sequence(spec);
    ComplexMatrix out(d * d, d * d);
    for (size_t k = 0; k < d; ++k) {
        for (size_t l = 0; l < d; ++l) {
            ComplexMatrix rho(d, d);
            rho(k, l) = 1;
            density::evolve(rho, gates, params, noise.cx_depol);
            const size_t col = k * d + l;
            for (size_t i = 0; i < d; ++i) {
                for (size_t j = 0; j < d; ++j) {
                    out(i * d + j, col) = rho(i, j);
                }
            }
        }
    }
    return out;
}

}  // namespace spem
