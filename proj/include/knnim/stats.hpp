#pragma once

// Interference test statistics evaluated on the focal units.
//
// Every statistic is a pure function of (graph, focal partition, treatment,
// outcomes). Degenerate inputs (zero variance, empty contrast groups) produce
// defined == false and value == 0 instead of throwing, so randomization loops
// can keep going; structural preconditions such as "at least two focal units"
// throw PreconditionError.

#include "knnim/focal.hpp"
#include "knnim/graph.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace knnim {

enum class Statistic { pearson, elc, score, htn, knn };

inline constexpr std::array<Statistic, 5> kAllStatistics = {
    Statistic::pearson, Statistic::elc, Statistic::score, Statistic::htn, Statistic::knn};

std::string_view to_string(Statistic s);
Statistic parse_statistic(std::string_view text);

// Binary assignment W. Construction rejects entries other than 0 and 1.
class TreatmentVector {
public:
    TreatmentVector() = default;
    explicit TreatmentVector(std::vector<unsigned char> w);

    std::span<const unsigned char> values() const { return w_; }
    unsigned char operator[](std::size_t i) const { return w_[i]; }
    std::size_t n() const { return w_.size(); }
    std::size_t n_treated() const { return n_treated_; }
    std::size_t n_control() const { return w_.size() - n_treated_; }

private:
    std::vector<unsigned char> w_;
    std::size_t n_treated_ = 0;
};

struct StatisticInput {
    const InteractionGraph& graph;
    const FocalPartition& partition;
    TreatmentVector treatment;
    std::vector<double> outcomes;

    // Throws InputError unless all four pieces index the same units.
    void validate() const;
};

// A (own treatment, neighbour rank, neighbour treatment) cell of the KNN
// statistic with no focal units in it.
struct KnnCell {
    unsigned char own = 0;
    std::size_t rank = 0;  // 1-based
    unsigned char neighbor = 0;
    bool operator==(const KnnCell&) const = default;
};

struct StatisticValue {
    Statistic name = Statistic::pearson;
    double value = 0.0;
    bool defined = false;
    std::vector<double> per_rank;        // knn only: T_knn,l for l = 1..k
    std::vector<KnnCell> empty_cells;    // knn only
};

// Precomputes everything that does not depend on the treatment vector so the
// same (graph, partition, outcomes) can be evaluated under many assignments.
// Holds references; the graph and partition must outlive it.
class StatisticEvaluator {
public:
    StatisticEvaluator(const InteractionGraph& graph, const FocalPartition& partition,
                       std::vector<double> outcomes);

    StatisticValue evaluate(Statistic s, std::span<const unsigned char> w) const;

    // Correlation of focal outcomes with the distance to the nearest treated
    // unit among {the focal unit itself} and its measured variant partners.
    StatisticValue pearson(std::span<const unsigned char> w) const;
    StatisticValue elc(std::span<const unsigned char> w) const;
    StatisticValue score(std::span<const unsigned char> w) const;
    StatisticValue htn(std::span<const unsigned char> w) const;
    StatisticValue knn(std::span<const unsigned char> w) const;

    const FocalPartition& partition() const { return partition_; }
    const InteractionGraph& graph() const { return graph_; }

private:
    const InteractionGraph& graph_;
    const FocalPartition& partition_;
    std::vector<double> outcomes_;
    std::vector<double> focal_y_;
    // Per focal unit: its measured variant partners, nearest first.
    std::vector<std::vector<Partner>> variant_partners_;
};

StatisticValue stat_pearson(const StatisticInput& input);
StatisticValue stat_elc(const StatisticInput& input);
StatisticValue stat_score(const StatisticInput& input);
StatisticValue stat_htn(const StatisticInput& input);
StatisticValue stat_knn(const StatisticInput& input);
StatisticValue compute_statistic(Statistic s, const StatisticInput& input);

}  // namespace knnim
