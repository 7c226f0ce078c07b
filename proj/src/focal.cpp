#include "knnim/focal.hpp"

#include "knnim/error.hpp"
#include "knnim/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace knnim {

std::string_view to_string(FocalMethod method) {
    return method == FocalMethod::two_net ? "two_net" : "random_half";
}

FocalMethod parse_focal_method(std::string_view text) {
    if (text == "two_net") return FocalMethod::two_net;
    if (text == "random_half") return FocalMethod::random_half;
    throw InputError("unknown focal method '" + std::string(text) + "'");
}

FocalPartition make_partition(std::vector<unsigned char> is_focal, FocalMethod method,
                              std::uint64_t seed) {
    FocalPartition p;
    p.method = method;
    p.seed = seed;
    for (UnitId i = 0; i < is_focal.size(); ++i) {
        (is_focal[i] ? p.focal : p.variant).push_back(i);
    }
    p.is_focal = std::move(is_focal);
    return p;
}

FocalPartition select_focals_two_net(const InteractionGraph& graph, std::uint64_t seed,
                                     std::vector<TwoNetStep>* trace, unsigned radius) {
    const std::size_t n = graph.n();
    if (n == 0) throw PreconditionError("graph has no units");
    if (radius < 2 || radius > 3) throw PreconditionError("2-net exclusion radius must be 2 or 3");
    auto rng = make_rng(seed);

    // Candidate pool U with O(1) removal: pool holds the members, slot maps a
    // unit to its position (or npos once removed).
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<UnitId> pool(n);
    std::iota(pool.begin(), pool.end(), UnitId{0});
    std::vector<std::size_t> slot(n);
    std::iota(slot.begin(), slot.end(), std::size_t{0});
    auto remove = [&](UnitId u) {
        const std::size_t s = slot[u];
        if (s == npos) return;
        const UnitId last = pool.back();
        pool[s] = last;
        slot[last] = s;
        pool.pop_back();
        slot[u] = npos;
    };

    std::vector<unsigned char> is_focal(n, 0);
    std::vector<unsigned char> in_set(n, 0);
    while (!pool.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const UnitId i = pool[pick(rng)];
        is_focal[i] = 1;

        // Breadth-first sweep out to `radius` undirected hops from i.
        std::vector<UnitId> excluded;
        std::vector<UnitId> frontier{i};
        in_set[i] = 1;
        for (unsigned hop = 0; hop < radius && !frontier.empty(); ++hop) {
            std::vector<UnitId> next;
            for (UnitId u : frontier) {
                for (UnitId v : graph.undirected(u)) {
                    if (in_set[v]) continue;
                    in_set[v] = 1;
                    excluded.push_back(v);
                    next.push_back(v);
                }
            }
            frontier = std::move(next);
        }
        in_set[i] = 0;

        remove(i);
        for (UnitId u : excluded) {
            remove(u);
            in_set[u] = 0;
        }
        if (trace) {
            std::sort(excluded.begin(), excluded.end());
            trace->push_back({i, std::move(excluded)});
        }
    }
    return make_partition(std::move(is_focal), FocalMethod::two_net, seed);
}

FocalPartition select_focals_random_half(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw PreconditionError("random-half focal selection needs at least 2 units");
    auto rng = make_rng(seed);
    std::vector<UnitId> order(n);
    std::iota(order.begin(), order.end(), UnitId{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<unsigned char> is_focal(n, 0);
    for (std::size_t r = 0; r < n / 2; ++r) is_focal[order[r]] = 1;
    return make_partition(std::move(is_focal), FocalMethod::random_half, seed);
}

}  // namespace knnim
