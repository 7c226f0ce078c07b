#include "knnim/graph.hpp"

#include "knnim/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace knnim {

std::optional<double> InteractionGraph::measure(UnitId i, UnitId j) const {
    for (const auto& p : partners_.at(i)) {
        if (p.unit == j) return p.d;
    }
    return std::nullopt;
}

bool InteractionGraph::adjacent(UnitId i, UnitId j) const {
    const auto& row = knn_out_.at(i);
    return std::find(row.begin(), row.end(), j) != row.end();
}

bool InteractionGraph::linked(UnitId i, UnitId j) const {
    const auto& row = undirected_.at(i);
    return std::binary_search(row.begin(), row.end(), j);
}

std::vector<unsigned char> InteractionGraph::adjacency_matrix() const {
    const std::size_t size = n();
    std::vector<unsigned char> a(size * size, 0);
    for (UnitId i = 0; i < size; ++i) {
        for (UnitId j : knn_out_[i]) a[i * size + j] = 1;
    }
    return a;
}

std::size_t InteractionGraph::undirected_edge_count() const {
    std::size_t twice = 0;
    for (const auto& row : undirected_) twice += row.size();
    return twice / 2;
}

InteractionGraph build_knn_graph(std::span<const Measure> measures, std::size_t n, std::size_t k) {
    if (k == 0) throw PreconditionError("neighbourhood size k must be at least 1");
    if (k >= n) {
        throw PreconditionError("neighbourhood size k=" + std::to_string(k) +
                                " must be smaller than the number of units n=" + std::to_string(n));
    }

    InteractionGraph g;
    g.k_ = k;
    g.partners_.assign(n, {});
    for (const auto& m : measures) {
        if (m.from >= n || m.to >= n) {
            throw InputError("measure (" + std::to_string(m.from) + ", " + std::to_string(m.to) +
                             ") references a unit outside [0, " + std::to_string(n) + ")");
        }
        if (m.from == m.to) throw InputError("self-measure for unit " + std::to_string(m.from));
        if (!std::isfinite(m.d) || m.d < 0.0) {
            throw InputError("measure (" + std::to_string(m.from) + ", " + std::to_string(m.to) +
                             ") must be finite and nonnegative");
        }
        g.partners_[m.from].push_back({m.to, m.d});
    }

    g.knn_out_.assign(n, {});
    g.undirected_.assign(n, {});
    for (UnitId i = 0; i < n; ++i) {
        auto& row = g.partners_[i];
        std::sort(row.begin(), row.end(), [](const Partner& a, const Partner& b) {
            return a.d < b.d || (a.d == b.d && a.unit < b.unit);
        });
        const std::size_t take = std::min(k, row.size());
        auto& out = g.knn_out_[i];
        out.reserve(take);
        for (std::size_t r = 0; r < take; ++r) out.push_back(row[r].unit);
        if (take < k) g.under_connected_.push_back(i);
    }

    std::vector<unsigned char> seen(n, 0);
    for (UnitId i = 0; i < n; ++i) {
        for (const auto& p : g.partners_[i]) {
            if (seen[p.unit]) {
                throw InputError("duplicate measure for ordered pair (" + std::to_string(i) + ", " +
                                 std::to_string(p.unit) + ")");
            }
            seen[p.unit] = 1;
        }
        for (const auto& p : g.partners_[i]) seen[p.unit] = 0;
    }

    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j : g.knn_out_[i]) {
            g.undirected_[i].push_back(j);
            g.undirected_[j].push_back(i);
        }
    }
    for (auto& row : g.undirected_) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return g;
}

std::vector<UnitId> neighbors_within(const InteractionGraph& graph, UnitId i, unsigned hops) {
    if (i >= graph.n()) throw PreconditionError("invalid unit index " + std::to_string(i));
    if (hops < 1 || hops > 3) throw PreconditionError("hops must be in [1, 3]");

    std::vector<unsigned char> visited(graph.n(), 0);
    visited[i] = 1;
    std::vector<UnitId> frontier{i};
    std::vector<UnitId> reached;
    for (unsigned h = 0; h < hops && !frontier.empty(); ++h) {
        std::vector<UnitId> next;
        for (UnitId u : frontier) {
            for (UnitId v : graph.undirected(u)) {
                if (!visited[v]) {
                    visited[v] = 1;
                    next.push_back(v);
                    reached.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    std::sort(reached.begin(), reached.end());
    return reached;
}

UnitId knn_rank(const InteractionGraph& graph, UnitId i, std::size_t ell) {
    if (i >= graph.n()) throw PreconditionError("invalid unit index " + std::to_string(i));
    const auto row = graph.knn(i);
    if (ell < 1 || ell > graph.k() || ell > row.size()) {
        throw PreconditionError("neighbour rank " + std::to_string(ell) + " out of range for unit " +
                                std::to_string(i));
    }
    return row[ell - 1];
}

}  // namespace knnim
