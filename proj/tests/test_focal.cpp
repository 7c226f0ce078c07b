#include "catch_amalgamated.hpp"

#include "knnim/error.hpp"
#include "knnim/focal.hpp"
#include "support.hpp"

using namespace knnim;
using testsupport::build;

TEST_CASE("units without partners are all focal") {
    // Units 2..4 have no measures at all; 0 and 1 are mutual neighbours.
    std::vector<Measure> m = {{0, 1, 1.0}, {1, 0, 1.0}};
    const auto g = build_knn_graph(m, 5, 1);
    const auto p = select_focals_two_net(g, 1);
    for (UnitId u = 2; u < 5; ++u) CHECK(p.is_focal[u]);
    CHECK(p.is_focal[0] + p.is_focal[1] == 1);
}

TEST_CASE("complete graph gives exactly one focal unit") {
    Rng rng(2);
    const auto g = build(testsupport::random_measures(6, rng), 5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = select_focals_two_net(g, seed);
        CHECK(p.focal.size() == 1);
        CHECK(p.variant.size() == 5);
    }
}

TEST_CASE("two-net invariants on random graphs") {
    Rng rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const auto dm = testsupport::random_measures(30, rng);
        const auto g = build(dm, 2);
        std::vector<TwoNetStep> trace;
        const auto p = select_focals_two_net(g, rng(), &trace);
        INFO("rep " << rep);
        CHECK(testsupport::two_net_violation(g, p, trace) == "");
        CHECK(p.focal.size() + p.variant.size() == 30);
        CHECK(p.method == FocalMethod::two_net);
    }
}

TEST_CASE("radius 3 keeps focal units four hops apart") {
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const auto g = build(testsupport::euclidean_measures(60, rng), 2);
        std::vector<TwoNetStep> trace;
        const auto p = select_focals_two_net(g, rng(), &trace, 3);
        CHECK(testsupport::two_net_violation(g, p, trace, 3) == "");
    }
    // Wider exclusion means fewer focal units in aggregate (not per seed).
    std::size_t r2_total = 0, r3_total = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto g = build(testsupport::euclidean_measures(100, rng), 3);
        r2_total += select_focals_two_net(g, s).focal.size();
        r3_total += select_focals_two_net(g, s, nullptr, 3).focal.size();
    }
    CHECK(r3_total < r2_total);
    Rng r2(1);
    const auto g = build(testsupport::random_measures(5, r2), 1);
    CHECK_THROWS_AS(select_focals_two_net(g, 0, nullptr, 1), PreconditionError);
    CHECK_THROWS_AS(select_focals_two_net(g, 0, nullptr, 4), PreconditionError);
}

TEST_CASE("focal neighbourhoods share no treatment variable") {
    // Any unit feeding a focal outcome (the focal itself or one of its K
    // neighbours) feeds exactly one focal outcome.
    Rng rng(9);
    for (int rep = 0; rep < 30; ++rep) {
        const auto g = build(testsupport::euclidean_measures(120, rng, 3), 3);
        const auto p = select_focals_two_net(g, rng());
        std::vector<int> uses(g.n(), 0);
        for (auto i : p.focal) {
            ++uses[i];
            for (auto j : g.knn(i)) ++uses[j];
        }
        CHECK(*std::max_element(uses.begin(), uses.end()) <= 1);
    }
}

TEST_CASE("two-net selection is reproducible and seed-dependent") {
    Rng rng(10);
    const auto g = build(testsupport::euclidean_measures(100, rng), 3);
    const auto a = select_focals_two_net(g, 42);
    const auto b = select_focals_two_net(g, 42);
    CHECK(a.focal == b.focal);
    bool differs = false;
    for (std::uint64_t s = 0; s < 10 && !differs; ++s) differs = select_focals_two_net(g, s).focal != a.focal;
    CHECK(differs);
}

TEST_CASE("random half") {
    CHECK(select_focals_random_half(10, 1).focal.size() == 5);
    CHECK(select_focals_random_half(11, 1).focal.size() == 5);
    CHECK(select_focals_random_half(2, 1).focal.size() == 1);
    const auto a = select_focals_random_half(50, 3);
    const auto b = select_focals_random_half(50, 3);
    CHECK(a.is_focal == b.is_focal);
    CHECK(a.method == FocalMethod::random_half);
    CHECK_THROWS_AS(select_focals_random_half(1, 1), PreconditionError);
    CHECK_THROWS_AS(select_focals_random_half(0, 1), PreconditionError);
}

TEST_CASE("random half is roughly uniform over units") {
    std::vector<int> hits(8, 0);
    for (std::uint64_t s = 0; s < 4000; ++s)
        for (auto i : select_focals_random_half(8, s).focal) ++hits[i];
    // Each unit is focal with probability 1/2; 4000 draws give sd ~ 32.
    for (int h : hits) CHECK(std::abs(h - 2000) < 160);
}

TEST_CASE("focal method names round-trip") {
    CHECK(parse_focal_method("two_net") == FocalMethod::two_net);
    CHECK(parse_focal_method(to_string(FocalMethod::random_half)) == FocalMethod::random_half);
    CHECK_THROWS_AS(parse_focal_method("ring"), InputError);
}
