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

// Helpers shared by the test suites: random generators and Eigen conversions
// for oracle comparisons.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "spem/circuit.hpp"
#include "spem/numkit.hpp"
#include "spem/rng.hpp"

namespace spem::testing {

using EMat = Eigen::MatrixXcd;

inline EMat to_eigen(const ComplexMatrix &m) {
    EMat e(m.rows(), m.cols());
    for (size_t r = 0; r < m.rows(); ++r) {
        for (size_t c = 0; c < m.cols(); ++c) {
            e(r, c) = m(r, c);
        }
    }
    return e;
}

inline ComplexMatrix from_eigen(const EMat &e) {
    ComplexMatrix m(e.rows(), e.cols());
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
        for (Eigen::Index c = 0; c < e.cols(); ++c) {
            m(r, c) = e(r, c);
        }
    }
    return m;
}

inline ComplexMatrix random_matrix(size_t n, Rng &rng, double scale = 1.0) {
    ComplexMatrix m(n, n);
    for (size_t r = 0; r < n; ++r) {
        for (size_t c = 0; c < n; ++c) {
            m(r, c) = cplx(rng.normal(), rng.normal()) * scale;
        }
    }
    return m;
}

inline ComplexMatrix random_hermitian(size_t n, Rng &rng) {
    const auto a = random_matrix(n, rng);
    return (a + a.adjoint()) * cplx(0.5);
}

inline ComplexMatrix random_unitary(size_t n, Rng &rng) {
    Eigen::HouseholderQR<EMat> qr(to_eigen(random_matrix(n, rng)));
    return from_eigen(qr.householderQ() * EMat::Identity(n, n));
}

inline ParamVector random_params(const AnsatzSpec &spec, Rng &rng, double range = 3.14159) {
    ParamVector p;
    p.angles.resize(spec.param_count());
    for (auto &a : p.angles) {
        a = rng.uniform(-range, range);
    }
    return p;
}

inline std::vector<double> random_probability(size_t n, Rng &rng) {
    std::vector<double> v(n);
    double s = 0;
    for (auto &x : v) {
        x = -std::log(1.0 - rng.uniform());
        s += x;
    }
    for (auto &x : v) {
        x /= s;
    }
    return v;
}

inline double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
    double m = 0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

}  // namespace spem::testing
