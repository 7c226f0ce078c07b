#pragma once

// Two-stage experimental design test for interference.
//
// Units are grouped into small clusters; half of the clusters form a
// cluster-randomized arm (whole clusters treated), the remaining units form a
// completely randomized arm. Under no interference both arms estimate the
// same direct effect, so a large standardized gap
//
//     t_exp = |tau_cr - tau_cbr| / sigma_p
//
// is evidence of interference. The completely randomized arm contributes the
// unit-level Neyman variance s2_t/n_t + s2_c/n_c. In the cluster arm units of
// one cluster share both treatment and (through the KNN structure) similar
// outcomes, so its variance is computed on cluster mean outcomes,
// s2_t,clusters/C_t + s2_c,clusters/C_c; sigma_p is the square root of the sum.

#include "knnim/graph.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace knnim {

struct Clustering {
    std::vector<std::size_t> cluster_of;             // per unit
    std::vector<std::vector<UnitId>> clusters;       // members, ascending
    std::size_t target_size = 4;
    bool has_remainder = false;                      // last cluster is smaller than target_size
    std::size_t filled_without_measure = 0;          // members added by index, not by distance
};

// Greedy agglomeration: take the unclustered unit with smallest index and
// attach its size-1 nearest unclustered partners by d(i, .) (index
// tie-break). If it has too few measured unclustered partners the cluster is
// topped up with the lowest-index unclustered units. Throws PreconditionError
// when n < size or size == 0.
Clustering cluster_units(const InteractionGraph& graph, std::size_t size);

enum class Arm : unsigned char { completely_randomized = 0, cluster_randomized = 1 };

struct TwoStageAssignment {
    std::vector<Arm> arm;
    std::vector<unsigned char> treatment;
};

// Half of the clusters (floor) go to the cluster arm and half of those
// (floor) are treated whole; floor(half) of the remaining units are treated
// completely at random.
TwoStageAssignment draw_two_stage_assignment(const Clustering& clustering, std::uint64_t seed);

double conservative_threshold(double alpha);  // alpha^(-1/2)
double asymptotic_threshold(double alpha);    // z_{1 - alpha/2}

struct TwoStageResult {
    double tau_cr = 0.0;
    double tau_cbr = 0.0;
    double sigma_p = 0.0;
    double t_exp = 0.0;
    double alpha = 0.05;
    bool reject_conservative = false;
    bool reject_asymptotic = false;
};

// Real-data mode: observed outcomes under a realized two-stage assignment.
// cluster_of is only consulted for cluster-arm units. Throws
// PreconditionError if the completely randomized arm has fewer than 2 units
// in either treatment group or the cluster arm fewer than 2 clusters, and
// InputError if a cluster-arm cluster mixes treatments.
TwoStageResult analyze_two_stage(std::span<const double> outcomes,
                                 const TwoStageAssignment& assignment,
                                 std::span<const std::size_t> cluster_of, double alpha);

// Potential-outcome evaluator: outcomes for every unit under a full assignment.
using OutcomeFunction = std::function<std::vector<double>(std::span<const unsigned char>)>;

// Simulation mode: draws one assignment from `seed` and evaluates it.
TwoStageResult run_two_stage(const OutcomeFunction& outcomes, const Clustering& clustering,
                             std::uint64_t seed, double alpha);

struct TwoStageRates {
    double conservative = 0.0;
    double asymptotic = 0.0;
    std::size_t assignments = 0;
};

// Repeats run_two_stage with per-assignment seeds derived from (seed, index).
TwoStageRates two_stage_rejection_rates(const OutcomeFunction& outcomes,
                                        const Clustering& clustering, std::size_t assignments,
                                        std::uint64_t seed, double alpha, unsigned workers = 1);

}  // namespace knnim
