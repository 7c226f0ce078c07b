#pragma once

#include "knnim/graph.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace knnim {

enum class FocalMethod { two_net, random_half };

std::string_view to_string(FocalMethod method);
FocalMethod parse_focal_method(std::string_view text);

struct FocalPartition {
    std::vector<unsigned char> is_focal;  // F_i
    std::vector<UnitId> focal;            // ascending
    std::vector<UnitId> variant;          // ascending
    FocalMethod method = FocalMethod::two_net;
    std::uint64_t seed = 0;

    std::size_t n() const { return is_focal.size(); }
};

// One pass of the 2-net loop: the unit chosen as focal and the exclusion set I
// removed from the candidate pool alongside it.
struct TwoNetStep {
    UnitId focal = 0;
    std::vector<UnitId> excluded;
};

// Builds a 2-net on the undirected KNN graph: repeatedly picks a uniformly
// random remaining unit i, makes it focal, and removes i together with its
// exclusion set I from the candidate pool until the pool is empty.
//
// With the default radius 2, I is every unit within two undirected hops of i
// (the direct neighbours plus their neighbours), so the result is a maximal
// independent set of the squared graph: focal units are pairwise at least
// three hops apart and their closed K-neighbourhoods are disjoint. Radius 3
// also removes the neighbours of every unit within two hops, which is more
// conservative and yields roughly 40% fewer focal units.
//
// If `trace` is non-null it receives one step per chosen focal unit.
inline constexpr unsigned kDefaultExclusionRadius = 2;
FocalPartition select_focals_two_net(const InteractionGraph& graph, std::uint64_t seed,
                                     std::vector<TwoNetStep>* trace = nullptr,
                                     unsigned radius = kDefaultExclusionRadius);

// Uniformly random floor(n/2) focal units. Requires n >= 2.
FocalPartition select_focals_random_half(std::size_t n, std::uint64_t seed);

FocalPartition make_partition(std::vector<unsigned char> is_focal, FocalMethod method,
                              std::uint64_t seed);

}  // namespace knnim
