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

// Layered U3/CX ansatz. Bit order used throughout the library: qubit k is bit
// k of a basis index (qubit 0 least significant); bit value 0 is spin up
// (Z = +1) and bit value 1 is spin down (Z = -1).

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spem/errors.hpp"
#include "spem/numkit.hpp"

namespace spem {

struct U3Params {
    double theta = 0;
    double phi = 0;
    double lambda = 0;
};

using QubitPair = std::pair<unsigned, unsigned>;

/// Fixed circuit structure: `layers` repetitions of CX (U3 x U3) CX blocks,
/// one block per entry of `pairs`, applied in list order.
struct AnsatzSpec {
    unsigned num_qubits = 5;
    unsigned layers = 2;
    std::vector<QubitPair> pairs = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};

    static AnsatzSpec chain(unsigned num_qubits, unsigned layers) {
        AnsatzSpec spec;
        spec.num_qubits = num_qubits;
        spec.layers = layers;
        spec.pairs.clear();
        for (unsigned q = 0; q + 1 < num_qubits; ++q) {
            spec.pairs.emplace_back(q, q + 1);
        }
        return spec;
    }

    size_t dim() const { return size_t{1} << num_qubits; }
    size_t param_count() const { return 6 * pairs.size() * layers; }
    size_t cx_per_layer() const { return 2 * pairs.size(); }

    void validate() const {
        if (num_qubits < 1 || num_qubits > 20) {
            throw ConfigError("ansatz: num_qubits must be in [1, 20]");
        }
        if (layers < 1) {
            throw ConfigError("ansatz: layers must be >= 1");
        }
        if (pairs.empty()) {
            throw ConfigError("ansatz: at least one qubit pair is required");
        }
        for (const auto &[a, b] : pairs) {
            if (b != a + 1 || b >= num_qubits) {
                throw ConfigError("ansatz: pair (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") is not an adjacent in-range pair");
            }
        }
    }

    bool operator==(const AnsatzSpec &) const = default;
};

/// Trainable angles in (layer, pair, qubit-in-pair, [theta, phi, lambda]) order.
struct ParamVector {
    std::vector<double> angles;

    ParamVector() = default;
    explicit ParamVector(std::vector<double> a) : angles(std::move(a)) {}

    size_t size() const { return angles.size(); }

    static size_t offset(const AnsatzSpec &spec, size_t layer, size_t pair, size_t slot) {
        return ((layer * spec.pairs.size() + pair) * 2 + slot) * 3;
    }

    U3Params u3_at(size_t off) const { return {angles.at(off), angles.at(off + 1), angles.at(off + 2)}; }

    bool operator==(const ParamVector &) const = default;
};

inline void check_params(const AnsatzSpec &spec, const ParamVector &params) {
    if (params.size() != spec.param_count()) {
        throw ConfigError("parameter vector has length " + std::to_string(params.size()) + ", ansatz expects " +
                          std::to_string(spec.param_count()));
    }
}

inline ParamVector identity_params(const AnsatzSpec &spec) {
    return ParamVector(std::vector<double>(spec.param_count(), 0.0));
}

// 2x2 gate stored row-major.
using Gate2 = std::array<cplx, 4>;

inline Gate2 u3_gate(double theta, double phi, double lambda) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    return {cplx(c), -std::polar(s, lambda), std::polar(s, phi), std::polar(c, phi + lambda)};
}

inline Gate2 u3_gate(const U3Params &p) {
    return u3_gate(p.theta, p.phi, p.lambda);
}

inline ComplexMatrix u3_matrix(const U3Params &p) {
    const Gate2 g = u3_gate(p);
    return ComplexMatrix(2, 2, {g[0], g[1], g[2], g[3]});
}

// --- statevector kernels --------------------------------------------------

inline void apply_1q(std::span<cplx> psi, const Gate2 &g, unsigned qubit) {
    const size_t bit = size_t{1} << qubit;
    for (size_t i = 0; i < psi.size(); ++i) {
        if (i & bit) {
            continue;
        }
        const cplx a0 = psi[i];
        const cplx a1 = psi[i | bit];
        psi[i] = g[0] * a0 + g[1] * a1;
        psi[i | bit] = g[2] * a0 + g[3] * a1;
    }
}

inline void apply_cx(std::span<cplx> psi, unsigned control, unsigned target) {
    const size_t cbit = size_t{1} << control;
    const size_t tbit = size_t{1} << target;
    for (size_t i = 0; i < psi.size(); ++i) {
        if ((i & cbit) && !(i & tbit)) {
            std::swap(psi[i], psi[i | tbit]);
        }
    }
}

/// Applies Pauli `code` (0..3 = I, X, Y, Z) to one qubit.
inline void apply_pauli(std::span<cplx> psi, unsigned code, unsigned qubit) {
    static const Gate2 paulis[4] = {
        Gate2{1, 0, 0, 1},
        Gate2{0, 1, 1, 0},
        Gate2{0, cplx(0, -1), cplx(0, 1), 0},
        Gate2{1, 0, 0, -1},
    };
    if (code != 0) {
        apply_1q(psi, paulis[code], qubit);
    }
}

// --- gate sequence ----------------------------------------------------------

enum class GateKind { cx, u3 };

struct Gate {
    GateKind kind;
    unsigned q0;           // control for CX, acted-on qubit for U3
    unsigned q1;           // target for CX
    size_t param_offset;   // U3 only
};

/// Flattened gate list in application order.
inline std::vector<Gate> gate_sequence(const AnsatzSpec &spec) {
    spec.validate();
    std::vector<Gate> gates;
    gates.reserve(spec.layers * spec.pairs.size() * 4);
    for (size_t layer = 0; layer < spec.layers; ++layer) {
        for (size_t p = 0; p < spec.pairs.size(); ++p) {
            const auto [a, b] = spec.pairs[p];
            gates.push_back({GateKind::cx, a, b, 0});
            gates.push_back({GateKind::u3, a, 0, ParamVector::offset(spec, layer, p, 0)});
            gates.push_back({GateKind::u3, b, 0, ParamVector::offset(spec, layer, p, 1)});
            gates.push_back({GateKind::cx, a, b, 0});
        }
    }
    return gates;
}

inline void apply_gate(std::span<cplx> psi, const Gate &g, const ParamVector &params) {
    if (g.kind == GateKind::cx) {
        apply_cx(psi, g.q0, g.q1);
    } else {
        apply_1q(psi, u3_gate(params.u3_at(g.param_offset)), g.q0);
    }
}

/// Final statevector of the ansatz acting on a basis state.
inline ComplexVector apply_ansatz(const AnsatzSpec &spec, const ParamVector &params, size_t input_index) {
    check_params(spec, params);
    if (input_index >= spec.dim()) {
        throw ConfigError("input index " + std::to_string(input_index) + " out of range");
    }
    ComplexVector psi(spec.dim(), cplx(0));
    psi[input_index] = 1;
    for (const auto &g : gate_sequence(spec)) {
        apply_gate(psi, g, params);
    }
    return psi;
}

// --- full matrices -----------------------------------------------------------

/// `g` acting on `qubit` of an n-qubit register, identity elsewhere.
inline ComplexMatrix embed_1q(const ComplexMatrix &g, unsigned qubit, unsigned total_qubits) {
    ComplexMatrix out(1, 1, {cplx(1)});
    const auto id = ComplexMatrix::identity(2);
    for (unsigned q = total_qubits; q-- > 0;) {
        out = kron(out, q == qubit ? g : id);
    }
    return out;
}

inline ComplexMatrix cx_matrix(unsigned control, unsigned target, unsigned total_qubits) {
    const size_t dim = size_t{1} << total_qubits;
    ComplexMatrix out(dim, dim);
    for (size_t i = 0; i < dim; ++i) {
        const size_t j = (i >> control) & 1 ? i ^ (size_t{1} << target) : i;
        out(j, i) = 1;
    }
    return out;
}

/// CX (U3_a on qubit i, U3_b on qubit i+1) CX with control i and target i+1.
inline ComplexMatrix block_unitary(QubitPair pair, const U3Params &pa, const U3Params &pb, unsigned total_qubits) {
    if (pair.second != pair.first + 1 || pair.second >= total_qubits) {
        throw ConfigError("block_unitary: pair is not adjacent and in range");
    }
    const auto cx = cx_matrix(pair.first, pair.second, total_qubits);
    const auto local = embed_1q(u3_matrix(pa), pair.first, total_qubits) *
                       embed_1q(u3_matrix(pb), pair.second, total_qubits);
    return cx * local * cx;
}

inline ComplexMatrix ansatz_unitary(const AnsatzSpec &spec, const ParamVector &params) {
    spec.validate();
    check_params(spec, params);
    ComplexMatrix v = ComplexMatrix::identity(spec.dim());
    for (size_t layer = 0; layer < spec.layers; ++layer) {
        for (size_t p = 0; p < spec.pairs.size(); ++p) {
            const auto pa = params.u3_at(ParamVector::offset(spec, layer, p, 0));
            const auto pb = params.u3_at(ParamVector::offset(spec, layer, p, 1));
            v = block_unitary(spec.pairs[p], pa, pb, spec.num_qubits) * v;
        }
    }
    return v;
}

// --- serialization -------------------------------------------------------------

inline void to_json(nlohmann::json &j, const ParamVector &p) {
    j = p.angles;
}

inline void from_json(const nlohmann::json &j, ParamVector &p) {
    if (!j.is_array()) {
        throw ConfigError("parameter vector must be a JSON array of numbers");
    }
    p.angles.clear();
    for (const auto &v : j) {
        if (!v.is_number()) {
            throw ConfigError("parameter vector must be a JSON array of numbers");
        }
        p.angles.push_back(v.get<double>());
    }
}

}  // namespace spem
