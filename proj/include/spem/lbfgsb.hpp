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

// Bound-constrained limited-memory quasi-Newton minimizer.
//
// Each iteration fixes the variables that sit on a bound with the gradient
// pointing outward, builds the L-BFGS direction on the remaining free
// variables with the two-loop recursion, and backtracks along the projected
// path P(x + a d) until the Armijo condition holds. The curvature pairs are
// skipped when s.y is not safely positive.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spem/errors.hpp"

namespace spem {

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    static Bounds uniform(size_t n, double lo, double hi) {
        return {std::vector<double>(n, lo), std::vector<double>(n, hi)};
    }
};

struct LbfgsbOptions {
    size_t memory = 10;
    size_t max_iterations = 500;
    double pgtol = 1e-8;   // stop when the projected gradient inf-norm drops below
    double ftol = 1e-13;   // stop when the relative decrease drops below
    size_t max_backtracks = 40;
};

struct LbfgsbResult {
    std::vector<double> x;
    double f = 0;
    size_t iterations = 0;
    size_t evaluations = 0;
    bool converged = false;
    std::string reason;
};

/// Objective: returns f(x) and writes the gradient into g.
using Objective = std::function<double(std::span<const double> x, std::span<double> g)>;

inline LbfgsbResult minimize_bounded(const Objective &fg, std::vector<double> x0, const Bounds &bounds,
                                     const LbfgsbOptions &opt = {}) {
    const size_t n = x0.size();
    if (bounds.lower.size() != n || bounds.upper.size() != n) {
        throw NumericError("minimize_bounded: bounds do not match the variable count");
    }
    for (size_t i = 0; i < n; ++i) {
        if (!(bounds.lower[i] <= bounds.upper[i])) {
            throw NumericError("minimize_bounded: lower bound exceeds upper bound");
        }
    }
    auto project = [&](std::vector<double> &v) {
        for (size_t i = 0; i < n; ++i) {
            v[i] = std::clamp(v[i], bounds.lower[i], bounds.upper[i]);
        }
    };
    auto dot = [n](const std::vector<double> &a, const std::vector<double> &b) {
        double s = 0;
        for (size_t i = 0; i < n; ++i) {
            s += a[i] * b[i];
        }
        return s;
    };

    LbfgsbResult res;
    std::vector<double> x = std::move(x0);
    project(x);
    std::vector<double> g(n), g_new(n), x_new(n), d(n), pg(n), q(n);
    double f = fg(x, g);
    ++res.evaluations;

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> mem;
    std::vector<double> alpha;

    auto at_active_bound = [&](size_t i) {
        return (x[i] <= bounds.lower[i] && g[i] > 0) || (x[i] >= bounds.upper[i] && g[i] < 0);
    };

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        double pg_inf = 0;
        for (size_t i = 0; i < n; ++i) {
            pg[i] = at_active_bound(i) ? 0.0 : g[i];
            pg_inf = std::max(pg_inf, std::abs(pg[i]));
        }
        if (pg_inf <= opt.pgtol) {
            res.converged = true;
            res.reason = "projected gradient below tolerance";
            break;
        }

        // two-loop recursion on the free subspace
        q = pg;
        alpha.assign(mem.size(), 0.0);
        for (size_t k = mem.size(); k-- > 0;) {
            alpha[k] = mem[k].rho * dot(mem[k].s, q);
            for (size_t i = 0; i < n; ++i) {
                q[i] -= alpha[k] * mem[k].y[i];
            }
        }
        if (!mem.empty()) {
            const auto &last = mem.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double &v : q) {
                v *= gamma;
            }
        }
        for (size_t k = 0; k < mem.size(); ++k) {
            const double beta = mem[k].rho * dot(mem[k].y, q);
            for (size_t i = 0; i < n; ++i) {
                q[i] += (alpha[k] - beta) * mem[k].s[i];
            }
        }
        for (size_t i = 0; i < n; ++i) {
            d[i] = pg[i] == 0.0 ? 0.0 : -q[i];
        }
        double slope = dot(g, d);
        if (!(slope < 0)) {
            mem.clear();
            for (size_t i = 0; i < n; ++i) {
                d[i] = -pg[i];
            }
            slope = dot(g, d);
        }

        double step = 1.0;
        if (mem.empty()) {
            step = std::min(1.0, 1.0 / std::sqrt(dot(d, d)));
        }
        bool accepted = false;
        double f_new = f;
        for (size_t bt = 0; bt < opt.max_backtracks; ++bt) {
            for (size_t i = 0; i < n; ++i) {
                x_new[i] = x[i] + step * d[i];
            }
            project(x_new);
            double decrease = 0;
            for (size_t i = 0; i < n; ++i) {
                decrease += g[i] * (x_new[i] - x[i]);
            }
            f_new = fg(x_new, g_new);
            ++res.evaluations;
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!mem.empty()) {
                mem.clear();
                continue;
            }
            res.reason = "line search failed";
            break;
        }

        Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (size_t i = 0; i < n; ++i) {
            p.s[i] = x_new[i] - x[i];
            p.y[i] = g_new[i] - g[i];
        }
        const double sy = dot(p.s, p.y);
        const double yy = dot(p.y, p.y);
        if (sy > std::numeric_limits<double>::epsilon() * yy && sy > 0) {
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (mem.size() > opt.memory) {
                mem.pop_front();
            }
        }

        const double rel = (f - f_new) / std::max({std::abs(f), std::abs(f_new), 1.0});
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        if (rel <= opt.ftol) {
            res.converged = true;
            res.reason = "relative decrease below tolerance";
            ++res.iterations;
            break;
        }
    }
    if (res.reason.empty()) {
        res.reason = "iteration limit";
    }
    res.x = std::move(x);
    res.f = f;
    return res;
}

}  // namespace spem
