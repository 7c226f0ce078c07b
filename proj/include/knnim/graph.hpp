#pragma once

// K-nearest-neighbour interaction structure.
//
// A unit i has a (possibly sparse, possibly asymmetric) set of measured
// interaction values d(i, j) >= 0, smaller meaning stronger. Its
// K-neighbourhood is the k partners with smallest d(i, .), ties broken by
// ascending unit index. The directed KNN graph has an edge i -> j iff j is in
// i's K-neighbourhood; the undirected graph joins i and j when either
// direction is present.
//
// Unit ids are 0-based throughout the library; the I/O layer handles 1-based
// files.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace knnim {

using UnitId = std::size_t;

struct Measure {
    UnitId from = 0;
    UnitId to = 0;
    double d = 0.0;
};

struct Partner {
    UnitId unit = 0;
    double d = 0.0;
};

class InteractionGraph {
public:
    std::size_t n() const { return partners_.size(); }
    std::size_t k() const { return k_; }

    // Every measured partner of i, ascending by (d, unit).
    std::span<const Partner> partners(UnitId i) const { return partners_.at(i); }
    // N_iK in rank order; shorter than k for under-connected units.
    std::span<const UnitId> knn(UnitId i) const { return knn_out_.at(i); }
    // Undirected neighbours of i, ascending by unit id.
    std::span<const UnitId> undirected(UnitId i) const { return undirected_.at(i); }

    std::optional<double> measure(UnitId i, UnitId j) const;
    bool adjacent(UnitId i, UnitId j) const;  // A[i][j]
    bool linked(UnitId i, UnitId j) const;    // {i, j} in E*

    // Units with fewer than k measured partners.
    const std::vector<UnitId>& under_connected() const { return under_connected_; }
    bool is_under_connected(UnitId i) const { return knn_out_.at(i).size() < k_; }

    // Dense row-major copy of A; n*n bytes.
    std::vector<unsigned char> adjacency_matrix() const;
    std::size_t undirected_edge_count() const;

private:
    friend InteractionGraph build_knn_graph(std::span<const Measure>, std::size_t, std::size_t);

    std::size_t k_ = 0;
    std::vector<std::vector<Partner>> partners_;
    std::vector<std::vector<UnitId>> knn_out_;
    std::vector<std::vector<UnitId>> undirected_;
    std::vector<UnitId> under_connected_;
};

// Throws PreconditionError for k == 0 or k >= n, InputError for self-measures,
// out-of-range ids, duplicate ordered pairs, negative or non-finite values.
InteractionGraph build_knn_graph(std::span<const Measure> measures, std::size_t n, std::size_t k);

// All j != i reachable from i by a path of at most `hops` undirected edges,
// ascending. hops must be in [1, 3].
std::vector<UnitId> neighbors_within(const InteractionGraph& graph, UnitId i, unsigned hops);

// The ell-th nearest neighbour of i, ell in [1, k].
UnitId knn_rank(const InteractionGraph& graph, UnitId i, std::size_t ell);

}  // namespace knnim
