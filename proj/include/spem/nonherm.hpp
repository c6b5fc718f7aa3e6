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

// Non-Hermitian transverse-field Ising chain, its unitary dilation with one
// ancilla, and the post-selected magnetization observables.

#include <cmath>
#include <string>
#include <vector>

#include "spem/errors.hpp"
#include "spem/noisesim.hpp"
#include "spem/numkit.hpp"
#include "spem/rng.hpp"

namespace spem {

/// H = h_x sum X_j + J sum Z_j Z_{j+1} + i gamma sum Z_j on an open chain.
struct TfiParams {
    unsigned sites = 4;
    double coupling = 1.0;
    double field_x = 1.5;
    double gamma = -0.5;

    void validate() const {
        if (sites < 1 || sites > 10) {
            throw ConfigError("tfi: sites must be in [1, 10]");
        }
        if (!std::isfinite(coupling) || !std::isfinite(field_x) || !std::isfinite(gamma)) {
            throw ConfigError("tfi: parameters must be finite");
        }
    }

    bool operator==(const TfiParams &) const = default;
};

struct TimeGrid {
    double dt = 2.0;
    unsigned steps = 11;

    double time(unsigned k) const { return dt * k; }

    void validate() const {
        if (!(dt > 0) || !std::isfinite(dt)) {
            throw ConfigError("time grid: dt must be positive");
        }
        if (steps < 1) {
            throw ConfigError("time grid: at least one step is required");
        }
    }

    bool operator==(const TimeGrid &) const = default;
};

/// Unitary on system + ancilla whose top-left block (ancilla up) is u * U_H.
struct EmbeddedUnitary {
    ComplexMatrix unitary;
    double norm_factor = 1.0;  // u
    double t = 0.0;
};

inline ComplexMatrix pauli_x() {
    return ComplexMatrix{{0, 1}, {1, 0}};
}
inline ComplexMatrix pauli_z() {
    return ComplexMatrix{{1, 0}, {0, -1}};
}

inline ComplexMatrix build_hamiltonian(const TfiParams &p) {
    p.validate();
    const unsigned n = p.sites;
    const size_t dim = size_t{1} << n;
    ComplexMatrix h(dim, dim);
    for (unsigned j = 0; j < n; ++j) {
        h += embed_1q(pauli_x(), j, n) * cplx(p.field_x);
        h += embed_1q(pauli_z(), j, n) * cplx(0, p.gamma);
    }
    for (unsigned j = 0; j + 1 < n; ++j) {
        h += embed_1q(pauli_z(), j, n) * embed_1q(pauli_z(), j + 1, n) * cplx(p.coupling);
    }
    return h;
}

/// exp(-i t H); nonunitary whenever gamma != 0.
inline ComplexMatrix evolution_operator(const TfiParams &p, double t) {
    if (!(t >= 0) || !std::isfinite(t)) {
        throw ConfigError("evolution time must be finite and non-negative");
    }
    return expm(build_hamiltonian(p) * cplx(0, -t));
}

/// Dilates U_H into U = [[u U_H, B], [C, D]] with u^-2 = lambda_max(U_H^H U_H)
/// and C = sqrt(I - u^2 U_H^H U_H). B and D come from the QR factorization of
/// [[u U_H, I], [C, I]]; the positive-diagonal convention keeps the first
/// block column unchanged.
inline EmbeddedUnitary embed(const ComplexMatrix &uh, double t = 0.0) {
    if (!uh.square()) {
        throw NumericError("embed needs a square operator");
    }
    if (!uh.all_finite()) {
        throw NumericError("embed: operator has non-finite entries");
    }
    const size_t n = uh.rows();
    const auto gram = uh.adjoint() * uh;
    const double lambda_max = herm_eig(gram).values.back();
    if (!(lambda_max > 0)) {
        throw NumericError("embed: operator is zero");
    }
    const double u = 1.0 / std::sqrt(lambda_max);
    const ComplexMatrix top = uh * cplx(u);
    ComplexMatrix defect = ComplexMatrix::identity(n) - top.adjoint() * top;
    // symmetrize rounding before the square root
    defect = (defect + defect.adjoint()) * cplx(0.5);
    const ComplexMatrix c = psd_sqrt(defect);

    ComplexMatrix second(2 * n, n);
    second.set_block(0, 0, ComplexMatrix::identity(n));
    second.set_block(n, 0, ComplexMatrix::identity(n));

    for (int attempt = 0; attempt < 4; ++attempt) {
        ComplexMatrix a(2 * n, 2 * n);
        a.set_block(0, 0, top);
        a.set_block(n, 0, c);
        a.set_block(0, n, second);
        auto qr = qr_positive(a);
        if (!qr.rank_deficient_at) {
            return EmbeddedUnitary{std::move(qr.q), u, t};
        }
        // identity columns were dependent on the first block; retry with a
        // seeded random second block column
        Rng rng(derive_seed(0x5eed, static_cast<uint64_t>(attempt)));
        for (auto &v : second.data()) {
            v = cplx(rng.normal(), rng.normal());
        }
    }
    throw NumericError("embed: QR of the dilation ansatz stayed rank deficient");
}

struct PostSelected {
    OutcomeDistribution dist;
    double success_prob = 0.0;
};

/// Keeps outcomes whose ancilla (most significant bit) reads up and
/// renormalizes by the kept mass.
inline PostSelected post_select(const OutcomeDistribution &dist) {
    const size_t d = dist.dim();
    if (d < 2 || (d & (d - 1)) != 0) {
        throw NumericError("post_select: distribution size must be a power of two >= 2");
    }
    const size_t half = d / 2;
    double kept = 0;
    for (size_t i = 0; i < half; ++i) {
        kept += dist.weights[i];
    }
    const bool failed = dist.kind == DistKind::probability ? kept <= 1e-9 : std::abs(kept) <= 1e-6;
    if (failed) {
        throw PostSelectionError("post-selection failed: ancilla-up mass is " + std::to_string(kept));
    }
    PostSelected out;
    out.success_prob = kept;
    out.dist.kind = dist.kind;
    out.dist.weights.assign(dist.weights.begin(), dist.weights.begin() + static_cast<std::ptrdiff_t>(half));
    for (double &w : out.dist.weights) {
        w /= kept;
    }
    return out;
}

/// Average Z over the register qubits: sum_m w(m) (1/N) sum_k s_k(m).
inline double z_magnetization(const OutcomeDistribution &dist) {
    const size_t d = dist.dim();
    if (d < 2 || (d & (d - 1)) != 0) {
        throw NumericError("z_magnetization: distribution size must be a power of two >= 2");
    }
    unsigned n = 0;
    while ((size_t{1} << n) < d) {
        ++n;
    }
    double acc = 0;
    for (size_t m = 0; m < d; ++m) {
        int spins = 0;
        for (unsigned k = 0; k < n; ++k) {
            spins += ((m >> k) & 1) ? -1 : 1;
        }
        acc += dist.weights[m] * spins;
    }
    return acc / n;
}

/// Index of the all-down product state of `sites` qubits.
inline size_t all_down_index(unsigned sites) {
    return (size_t{1} << sites) - 1;
}

/// Normalized |exp(-i t H) psi|^2 for a basis-state psi.
inline OutcomeDistribution evolved_distribution(const TfiParams &p, double t, size_t input_index) {
    const auto uh = evolution_operator(p, t);
    OutcomeDistribution out;
    out.weights.resize(uh.rows());
    double total = 0;
    for (size_t i = 0; i < uh.rows(); ++i) {
        out.weights[i] = std::norm(uh(i, input_index));
        total += out.weights[i];
    }
    for (double &w : out.weights) {
        w /= total;
    }
    return out;
}

/// Exact <Z(t_k)> from the all-down initial state by dense evolution.
inline std::vector<double> exact_reference(const TfiParams &p, const TimeGrid &grid) {
    p.validate();
    grid.validate();
    std::vector<double> out;
    out.reserve(grid.steps);
    for (unsigned k = 0; k < grid.steps; ++k) {
        out.push_back(z_magnetization(evolved_distribution(p, grid.time(k), all_down_index(p.sites))));
    }
    return out;
}

inline double deviation(double z_exact, double z_sim) {
    return std::abs(z_exact - z_sim);
}

/// Mean absolute deviation over the grid samples.
inline double avg_deviation(std::span<const double> z_exact, std::span<const double> z_sim) {
    if (z_exact.size() != z_sim.size() || z_exact.empty()) {
        throw NumericError("avg_deviation: curves must be non-empty and of equal length");
    }
    double acc = 0;
    for (size_t k = 0; k < z_exact.size(); ++k) {
        acc += deviation(z_exact[k], z_sim[k]);
    }
    return acc / static_cast<double>(z_exact.size());
}

inline double avg_deviation(std::span<const double> deviations) {
    if (deviations.empty()) {
        throw NumericError("avg_deviation: empty list");
    }
    double acc = 0;
    for (double d : deviations) {
        acc += d;
    }
    return acc / static_cast<double>(deviations.size());
}

}  // namespace spem
