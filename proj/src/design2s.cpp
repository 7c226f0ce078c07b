#include "knnim/design2s.hpp"

#include "knnim/error.hpp"
#include "knnim/parallel.hpp"
#include "knnim/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace knnim {

Clustering cluster_units(const InteractionGraph& graph, std::size_t size) {
    const std::size_t n = graph.n();
    if (size == 0) throw PreconditionError("cluster size must be positive");
    if (n < size) {
        throw PreconditionError("cannot form clusters of " + std::to_string(size) + " from " +
                                std::to_string(n) + " units");
    }

    constexpr std::size_t none = static_cast<std::size_t>(-1);
    Clustering c;
    c.target_size = size;
    c.cluster_of.assign(n, none);
    std::size_t remaining = n;
    UnitId cursor = 0;
    while (remaining > 0) {
        while (c.cluster_of[cursor] != none) ++cursor;
        const std::size_t id = c.clusters.size();
        std::vector<UnitId> members{cursor};
        c.cluster_of[cursor] = id;
        const std::size_t want = std::min(size, remaining);
        for (const auto& p : graph.partners(cursor)) {
            if (members.size() == want) break;
            if (c.cluster_of[p.unit] == none) {
                c.cluster_of[p.unit] = id;
                members.push_back(p.unit);
            }
        }
        for (UnitId u = cursor + 1; members.size() < want && u < n; ++u) {
            if (c.cluster_of[u] == none) {
                c.cluster_of[u] = id;
                members.push_back(u);
                ++c.filled_without_measure;
            }
        }
        remaining -= members.size();
        if (members.size() < size) c.has_remainder = true;
        std::sort(members.begin(), members.end());
        c.clusters.push_back(std::move(members));
    }
    return c;
}

TwoStageAssignment draw_two_stage_assignment(const Clustering& clustering, std::uint64_t seed) {
    const std::size_t n = clustering.cluster_of.size();
    const std::size_t n_clusters = clustering.clusters.size();
    auto rng = make_rng(seed);

    std::vector<std::size_t> order(n_clusters);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    TwoStageAssignment a;
    a.arm.assign(n, Arm::completely_randomized);
    a.treatment.assign(n, 0);
    // The first half of the shuffled order is the cluster arm; within it the
    // first half is treated.
    const std::size_t cbr_clusters = n_clusters / 2;
    const std::size_t treated_clusters = cbr_clusters / 2;
    for (std::size_t r = 0; r < cbr_clusters; ++r) {
        for (UnitId u : clustering.clusters[order[r]]) {
            a.arm[u] = Arm::cluster_randomized;
            a.treatment[u] = r < treated_clusters ? 1 : 0;
        }
    }

    std::vector<UnitId> cr_units;
    for (UnitId u = 0; u < n; ++u) {
        if (a.arm[u] == Arm::completely_randomized) cr_units.push_back(u);
    }
    std::shuffle(cr_units.begin(), cr_units.end(), rng);
    for (std::size_t r = 0; r < cr_units.size() / 2; ++r) a.treatment[cr_units[r]] = 1;
    return a;
}

double conservative_threshold(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must be in (0, 1)");
    return 1.0 / std::sqrt(alpha);
}

double asymptotic_threshold(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must be in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

namespace {

struct MeanVar {
    double mean = 0.0;
    double var_of_mean = 0.0;  // s^2 / m
};

MeanVar mean_and_variance(const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double y : v) ss += (y - m) * (y - m);
    const double count = static_cast<double>(v.size());
    return {m, ss / (count - 1.0) / count};
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TwoStageResult analyze_two_stage(std::span<const double> outcomes, const TwoStageAssignment& assignment,
                                 std::span<const std::size_t> cluster_of, double alpha) {
    const std::size_t n = outcomes.size();
    if (assignment.arm.size() != n || assignment.treatment.size() != n || cluster_of.size() != n) {
        throw InputError("outcomes, arms, treatment and clusters must cover the same units");
    }

    std::vector<double> cr[2], cbr_units[2];
    // Cluster-arm clusters: running sum, size and treatment.
    struct ClusterAcc {
        double sum = 0.0;
        std::size_t size = 0;
        unsigned char treated = 0;
    };
    std::vector<ClusterAcc> clusters;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char t = assignment.treatment[i];
        if (t > 1) throw InputError("treatment for unit " + std::to_string(i) + " is not 0 or 1");
        if (assignment.arm[i] == Arm::completely_randomized) {
            cr[t].push_back(outcomes[i]);
            continue;
        }
        cbr_units[t].push_back(outcomes[i]);
        const std::size_t c = cluster_of[i];
        if (c >= clusters.size()) clusters.resize(c + 1);
        auto& acc = clusters[c];
        if (acc.size > 0 && acc.treated != t) {
            throw InputError("cluster " + std::to_string(c) + " in the cluster arm has mixed treatment");
        }
        acc.sum += outcomes[i];
        ++acc.size;
        acc.treated = t;
    }
    std::vector<double> cluster_means[2];
    for (const auto& acc : clusters) {
        if (acc.size > 0) cluster_means[acc.treated].push_back(acc.sum / static_cast<double>(acc.size));
    }

    for (unsigned t = 0; t < 2; ++t) {
        const char* label = t ? "treated" : "control";
        if (cr[t].size() < 2) {
            throw PreconditionError(std::string("completely randomized arm needs at least 2 ") + label + " units");
        }
        if (cluster_means[t].size() < 2) {
            throw PreconditionError(std::string("cluster arm needs at least 2 ") + label + " clusters");
        }
    }

    const auto cr1 = mean_and_variance(cr[1]);
    const auto cr0 = mean_and_variance(cr[0]);
    const auto cbr1 = mean_and_variance(cluster_means[1]);
    const auto cbr0 = mean_and_variance(cluster_means[0]);

    TwoStageResult r;
    r.alpha = alpha;
    r.tau_cr = cr1.mean - cr0.mean;
    r.tau_cbr = mean_of(cbr_units[1]) - mean_of(cbr_units[0]);
    r.sigma_p = std::sqrt(cr1.var_of_mean + cr0.var_of_mean + cbr1.var_of_mean + cbr0.var_of_mean);
    const double gap = std::abs(r.tau_cr - r.tau_cbr);
    r.t_exp = r.sigma_p > 0.0 ? gap / r.sigma_p : 0.0;
    r.reject_conservative = r.t_exp >= conservative_threshold(alpha);
    r.reject_asymptotic = r.t_exp >= asymptotic_threshold(alpha);
    return r;
}

TwoStageResult run_two_stage(const OutcomeFunction& outcomes, const Clustering& clustering,
                             std::uint64_t seed, double alpha) {
    const auto a = draw_two_stage_assignment(clustering, seed);
    const auto y = outcomes(a.treatment);
    return analyze_two_stage(y, a, clustering.cluster_of, alpha);
}

TwoStageRates two_stage_rejection_rates(const OutcomeFunction& outcomes,
                                        const Clustering& clustering, std::size_t assignments,
                                        std::uint64_t seed, double alpha, unsigned workers) {
    if (assignments == 0) throw PreconditionError("need at least one two-stage assignment");
    std::vector<unsigned char> cons(assignments, 0), asym(assignments, 0);
    parallel_for(assignments, workers, [&](std::size_t b) {
        const auto r = run_two_stage(outcomes, clustering, derive_seed(seed, b), alpha);
        cons[b] = r.reject_conservative;
        asym[b] = r.reject_asymptotic;
    });
    TwoStageRates rates;
    rates.assignments = assignments;
    rates.conservative = static_cast<double>(std::count(cons.begin(), cons.end(), 1)) / static_cast<double>(assignments);
    rates.asymptotic = static_cast<double>(std::count(asym.begin(), asym.end(), 1)) / static_cast<double>(assignments);
    return rates;
}

}  // namespace knnim
