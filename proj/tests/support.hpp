#pragma once
// Random instance builders shared by the unit tests and the acceptance run.

#include "knnim/focal.hpp"
#include "knnim/graph.hpp"
#include "knnim/rng.hpp"
#include "knnim/stats.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using knnim::Measure;
using knnim::Rng;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense n x n measure matrix, +inf where unmeasured, diagonal +inf.
struct DenseMeasures {
    std::size_t n = 0;
    std::vector<double> d;
    double operator()(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

inline std::vector<Measure> to_measures(const DenseMeasures& m) {
    std::vector<Measure> out;
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = 0; j < m.n; ++j)
            if (std::isfinite(m(i, j))) out.push_back({i, j, m(i, j)});
    return out;
}

// Asymmetric measures, each ordered pair present with probability `density`.
// Values are drawn from a small integer grid when `ties` is set so that the
// tie-break actually matters.
inline DenseMeasures random_measures(std::size_t n, Rng& rng, double density = 1.0, bool ties = false) {
    DenseMeasures m{n, std::vector<double>(n * n, kInf)};
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<int> grid(0, 4);
    std::bernoulli_distribution keep(density);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && keep(rng)) m.d[i * n + j] = ties ? grid(rng) : u(rng);
    return m;
}

// Euclidean points in `dim` dimensions, all pairs measured.
inline DenseMeasures euclidean_measures(std::size_t n, Rng& rng, std::size_t dim = 2) {
    std::normal_distribution<double> z;
    std::vector<double> x(n * dim);
    for (auto& v : x) v = z(rng);
    DenseMeasures m{n, std::vector<double>(n * n, kInf)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) s += (x[i * dim + c] - x[j * dim + c]) * (x[i * dim + c] - x[j * dim + c]);
            m.d[i * n + j] = std::sqrt(s);
        }
    return m;
}

inline knnim::InteractionGraph build(const DenseMeasures& m, std::size_t k) {
    const auto ms = to_measures(m);
    return knnim::build_knn_graph(ms, m.n, k);
}

// Complete randomization with `treated` ones.
inline std::vector<unsigned char> random_assignment(std::size_t n, std::size_t treated, Rng& rng) {
    std::vector<unsigned char> w(n, 0);
    std::fill(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(treated), 1);
    std::shuffle(w.begin(), w.end(), rng);
    return w;
}

inline std::vector<double> random_outcomes(std::size_t n, Rng& rng) {
    std::normal_distribution<double> z;
    std::vector<double> y(n);
    for (auto& v : y) v = z(rng);
    return y;
}

// Outcomes with a built-in spillover from treated K-neighbours, so the
// statistics are not all centred at zero.
inline std::vector<double> spillover_outcomes(const knnim::InteractionGraph& g,
                                              std::span<const unsigned char> w, double beta, Rng& rng) {
    auto y = random_outcomes(g.n(), rng);
    for (std::size_t i = 0; i < g.n(); ++i)
        for (auto j : g.knn(i)) y[i] += beta * w[j];
    return y;
}

// Empty when the partition passes every 2-net check, else a description of
// the first failure: closed K-neighbourhoods pairwise disjoint, focal units at
// least radius+1 hops apart, and the trace replays the removal rule with
// every unit removed exactly once.
inline std::string two_net_violation(const knnim::InteractionGraph& g, const knnim::FocalPartition& part,
                                     const std::vector<knnim::TwoNetStep>& trace, unsigned radius = 2) {
    const std::size_t n = g.n();
    std::vector<int> owner(n, -1);
    for (auto i : part.focal) {
        std::vector<knnim::UnitId> closed{i};
        closed.insert(closed.end(), g.knn(i).begin(), g.knn(i).end());
        for (auto u : closed) {
            if (owner[u] >= 0 && owner[u] != static_cast<int>(i))
                return "unit " + std::to_string(u) + " shared by focal " + std::to_string(owner[u]) + " and " + std::to_string(i);
            owner[u] = static_cast<int>(i);
        }
        for (auto j : knnim::neighbors_within(g, i, radius))
            if (part.is_focal[j]) return "focal units " + std::to_string(i) + " and " + std::to_string(j) + " too close";
    }
    std::vector<unsigned char> in_pool(n, 1);
    std::size_t remaining = n;
    std::vector<knnim::UnitId> traced_focals;
    for (const auto& step : trace) {
        if (!in_pool[step.focal]) return "trace picks unit " + std::to_string(step.focal) + " after its removal";
        if (step.excluded != knnim::neighbors_within(g, step.focal, radius))
            return "exclusion set of " + std::to_string(step.focal) + " differs from its hop ball";
        traced_focals.push_back(step.focal);
        in_pool[step.focal] = 0;
        --remaining;
        for (auto u : step.excluded)
            if (in_pool[u]) {
                in_pool[u] = 0;
                --remaining;
            }
    }
    if (remaining != 0) return std::to_string(remaining) + " units never removed";
    std::sort(traced_focals.begin(), traced_focals.end());
    if (traced_focals != part.focal) return "trace focal set differs from partition";
    return {};
}

inline oracle::Instance to_oracle(const DenseMeasures& m, std::size_t k, const knnim::FocalPartition& part,
                                  std::vector<unsigned char> w, std::vector<double> y) {
    oracle::Instance x;
    x.n = m.n;
    x.k = k;
    x.d = m.d;
    x.F = part.is_focal;
    x.W = std::move(w);
    x.Y = std::move(y);
    return x;
}

}  // namespace testsupport
