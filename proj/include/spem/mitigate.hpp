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

// Calibration matrices built from the identity-equivalent circuit (same gate
// layout as the simulation circuit), the prepare-and-measure readout baseline,
// and inversion-based correction of measured distributions.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spem/circuit.hpp"
#include "spem/errors.hpp"
#include "spem/noisesim.hpp"
#include "spem/numkit.hpp"
#include "spem/rng.hpp"
#include "spem/varopt.hpp"

namespace spem {

enum class Backend { density, trajectory };

inline const char *to_string(Backend b) {
    return b == Backend::density ? "density" : "trajectory";
}

inline Backend parse_backend(const std::string &s) {
    if (s == "density") {
        return Backend::density;
    }
    if (s == "trajectory") {
        return Backend::trajectory;
    }
    throw ConfigError("unknown backend '" + s + "' (expected density or trajectory)");
}

/// Column j is the noisy outcome distribution for ideal basis input j.
struct CalibrationMatrix {
    RealMatrix matrix;
    Backend backend = Backend::density;
    uint64_t shots = 0;  // per column; 0 for the density backend
    NoiseModel noise;
    double condition = 1.0;

    size_t dim() const { return matrix.rows(); }
};

enum class MitigationPolicy { raw_quasi, simplex };

inline MitigationPolicy parse_policy(const std::string &s) {
    if (s == "simplex") {
        return MitigationPolicy::simplex;
    }
    if (s == "raw_quasi") {
        return MitigationPolicy::raw_quasi;
    }
    throw ConfigError("unknown mitigation policy '" + s + "' (expected simplex or raw_quasi)");
}

inline const char *to_string(MitigationPolicy p) {
    return p == MitigationPolicy::simplex ? "simplex" : "raw_quasi";
}

namespace detail {

inline void check_plan(Backend backend, const std::optional<ShotPlan> &plan) {
    if (backend == Backend::trajectory && !plan) {
        throw ConfigError("trajectory calibration needs a shot plan");
    }
    if (backend == Backend::density && plan) {
        throw ConfigError("density calibration is exact and takes no shot plan");
    }
}

inline CalibrationMatrix assemble(const std::vector<std::vector<double>> &columns, Backend backend,
                                  const std::optional<ShotPlan> &plan, const NoiseModel &noise) {
    const size_t d = columns.size();
    CalibrationMatrix cal;
    cal.matrix = RealMatrix(d, d);
    for (size_t j = 0; j < d; ++j) {
        double total = 0;
        for (size_t i = 0; i < d; ++i) {
            const double v = columns[j][i];
            if (!(v >= 0) || !std::isfinite(v)) {
                throw NumericError("calibration column " + std::to_string(j) + " has an invalid entry");
            }
            cal.matrix(i, j) = v;
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw NumericError("calibration column " + std::to_string(j) + " sums to " + std::to_string(total));
        }
    }
    cal.backend = backend;
    cal.shots = plan ? plan->shots : 0;
    cal.noise = noise;
    cal.condition = condition_number(cal.matrix);
    return cal;
}

}  // namespace detail

/// Runs the identity-equivalent circuit on every basis input under noise.
/// With the trajectory backend column j is sampled with seed (plan.seed, j).
inline CalibrationMatrix build_full_calibration(const AnsatzSpec &spec, const ParamVector &identity,
                                                const NoiseModel &noise, Backend backend,
                                                const std::optional<ShotPlan> &plan = std::nullopt) {
    spec.validate();
    check_params(spec, identity);
    noise.validate();
    detail::check_plan(backend, plan);
    const double infidelity = operator_cost(spec, identity);
    if (infidelity > 1e-6) {
        throw NumericError("calibration circuit is not the identity (operator cost " + std::to_string(infidelity) +
                           ")");
    }
    const size_t d = spec.dim();
    std::vector<std::vector<double>> columns(d);
    for (size_t j = 0; j < d; ++j) {
        if (backend == Backend::density) {
            columns[j] = run_density_noisy(spec, identity, j, noise).weights;
        } else {
            const ShotPlan col_plan{plan->shots, derive_seed(plan->seed, j)};
            columns[j] = run_trajectories(spec, identity, j, noise, col_plan).weights;
        }
    }
    return detail::assemble(columns, backend, plan, noise);
}

/// Prepare basis state j and measure immediately; only readout noise acts.
inline CalibrationMatrix build_readout_calibration(unsigned num_qubits, const NoiseModel &noise, Backend backend,
                                                   const std::optional<ShotPlan> &plan = std::nullopt) {
    noise.validate();
    detail::check_plan(backend, plan);
    const size_t d = size_t{1} << num_qubits;
    std::vector<std::vector<double>> columns(d);
    for (size_t j = 0; j < d; ++j) {
        if (backend == Backend::density) {
            std::vector<double> e(d, 0.0);
            e[j] = 1.0;
            columns[j] = apply_readout(e, num_qubits, noise);
        } else {
            std::vector<uint64_t> counts(d, 0);
            Rng rng(derive_seed(plan->seed, j));
            for (uint64_t s = 0; s < plan->shots; ++s) {
                size_t outcome = j;
                for (unsigned q = 0; q < num_qubits; ++q) {
                    const size_t bit = size_t{1} << q;
                    const double flip = (j & bit) ? noise.flip_down() : noise.flip_up();
                    if (flip > 0 && rng.uniform() < flip) {
                        outcome ^= bit;
                    }
                }
                ++counts[outcome];
            }
            columns[j].resize(d);
            for (size_t i = 0; i < d; ++i) {
                columns[j][i] = static_cast<double>(counts[i]) / static_cast<double>(plan->shots);
            }
        }
    }
    return detail::assemble(columns, backend, plan, noise);
}

struct MitigationOutcome {
    OutcomeDistribution dist;
    double condition = 1.0;
    bool least_squares = false;
};

/// Solves M x = measured; `simplex` projects x onto the probability simplex,
/// `raw_quasi` returns the signed solution unchanged.
inline MitigationOutcome mitigate_detailed(const OutcomeDistribution &dist, const CalibrationMatrix &cal,
                                           MitigationPolicy policy = MitigationPolicy::simplex) {
    if (dist.dim() != cal.dim()) {
        throw NumericError("mitigate: distribution has " + std::to_string(dist.dim()) +
                           " outcomes, calibration matrix is " + std::to_string(cal.dim()) + "-dimensional");
    }
    const auto solved = solve(cal.matrix, dist.weights);
    MitigationOutcome out;
    out.condition = solved.condition;
    out.least_squares = solved.least_squares;
    if (policy == MitigationPolicy::simplex) {
        out.dist.kind = DistKind::probability;
        out.dist.weights = simplex_project(solved.x);
    } else {
        out.dist.kind = DistKind::quasi;
        out.dist.weights = solved.x;
    }
    return out;
}

inline OutcomeDistribution mitigate(const OutcomeDistribution &dist, const CalibrationMatrix &cal,
                                    MitigationPolicy policy = MitigationPolicy::simplex) {
    return mitigate_detailed(dist, cal, policy).dist;
}

// --- serialization -------------------------------------------------------------------

inline void to_json(nlohmann::json &j, const CalibrationMatrix &c) {
    std::vector<std::vector<double>> columns(c.dim());
    for (size_t col = 0; col < c.dim(); ++col) {
        columns[col] = c.matrix.column(col);
    }
    j = nlohmann::json{{"dim", c.dim()},
                       {"backend", to_string(c.backend)},
                       {"shots", c.shots},
                       {"noise", {{"p", c.noise.cx_depol}, {"q", c.noise.readout_flip}}},
                       {"cond", c.condition},
                       {"columns", columns}};
}

inline void from_json(const nlohmann::json &j, CalibrationMatrix &c) {
    const auto dim = j.at("dim").get<size_t>();
    const auto columns = j.at("columns").get<std::vector<std::vector<double>>>();
    if (columns.size() != dim) {
        throw ConfigError("calibration JSON: column count does not match dim");
    }
    c.matrix = RealMatrix(dim, dim);
    for (size_t col = 0; col < dim; ++col) {
        if (columns[col].size() != dim) {
            throw ConfigError("calibration JSON: column " + std::to_string(col) + " has the wrong length");
        }
        for (size_t r = 0; r < dim; ++r) {
            c.matrix(r, col) = columns[col][r];
        }
    }
    c.backend = parse_backend(j.at("backend").get<std::string>());
    c.shots = j.at("shots").get<uint64_t>();
    c.noise.cx_depol = j.at("noise").at("p").get<double>();
    c.noise.readout_flip = j.at("noise").at("q").get<double>();
    c.condition = j.at("cond").get<double>();
}

/// One calibration column per line, comma separated, 17 significant digits.
inline void write_calibration_csv(std::ostream &os, const CalibrationMatrix &c) {
    char buf[32];
    for (size_t col = 0; col < c.dim(); ++col) {
        for (size_t r = 0; r < c.dim(); ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", c.matrix(r, col));
            os << (r ? "," : "") << buf;
        }
        os << '\n';
    }
}

}  // namespace spem
