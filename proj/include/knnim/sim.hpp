#pragma once

// Simulation study under the linear KNN interference model
//
//     y_i(W) = X_i1 + X_i2 + X_i3 + sum_l beta_l * W_{i(l)} + beta_d * W_i
//
// where X_i ~ N(0, I_3), W_{i(l)} is the treatment of i's l-th nearest
// neighbour, and the interaction measure is the Euclidean distance between
// covariate rows.

#include "knnim/focal.hpp"
#include "knnim/graph.hpp"
#include "knnim/stats.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace knnim {

struct SimulationModel {
    std::vector<double> neighbor_effects{0.0, 0.0, 0.0};  // beta_1 .. beta_L, L <= k
    double direct_effect = 0.0;                            // beta_d
    std::size_t n = 256;
    std::size_t k = 3;
    std::size_t covariate_dim = 3;
    std::optional<int> model_id;

    void validate() const;
};

inline constexpr int kCatalogSize = 16;

// Models 1..16 of the reference study: tiers of no, very weak, weak, moderate
// and strong interference crossed with growing direct effects.
SimulationModel catalog_model(int id, std::size_t n = 256, std::size_t k = 3);

struct EffectSummary {
    double tau_dir = 0.0;
    double tau_ind = 0.0;
    double tau_tot = 0.0;
};

class Realization {
public:
    const SimulationModel& model() const { return model_; }
    const InteractionGraph& graph() const { return graph_; }
    std::span<const double> covariates(UnitId i) const;
    std::span<const double> baseline() const { return baseline_; }

    std::vector<double> outcomes(std::span<const unsigned char> w) const;
    // y_i(own, s) where s holds the treatments of i's ranked neighbours.
    double potential_outcome(UnitId i, unsigned char own, std::span<const unsigned char> neighbors) const;

private:
    friend Realization generate_realization(const SimulationModel&, std::uint64_t);

    SimulationModel model_;
    std::vector<double> covariates_;  // n x covariate_dim, row-major
    std::vector<double> baseline_;
    InteractionGraph graph_;
};

Realization generate_realization(const SimulationModel& model, std::uint64_t seed);

// Analytic: tau_dir = beta_d, tau_ind = sum of beta_l.
EffectSummary true_effects(const SimulationModel& model);
// Averages the potential-outcome evaluator at the all-ones / all-zeros
// assignments.
EffectSummary true_effects(const Realization& realization);

// Complete randomization with floor(n/2) treated units.
std::vector<unsigned char> complete_assignment(std::size_t n, std::uint64_t seed);

struct PowerStudyConfig {
    std::vector<SimulationModel> models;
    std::size_t realizations = 200;
    std::size_t randomizations = 500;
    std::vector<Statistic> statistics{kAllStatistics.begin(), kAllStatistics.end()};
    std::uint64_t seed = 0;
    double alpha = 0.05;
    FocalMethod focal_method = FocalMethod::two_net;
    std::size_t two_stage_assignments = 1000;  // 0 skips the two-stage design
    std::size_t cluster_size = 4;
    unsigned workers = 1;
};

struct StatisticRate {
    Statistic statistic = Statistic::score;
    double rejection_rate = 0.0;        // share of defined p-values < alpha
    std::size_t n_realizations = 0;     // realizations with a defined observed statistic
    std::size_t n_undefined = 0;
    std::vector<double> p_values;       // one per defined realization, in realization order
};

struct ModelResult {
    SimulationModel model;
    std::vector<StatisticRate> rates;
    std::vector<double> conservative_rates;  // per realization
    std::vector<double> asymptotic_rates;
    double mean_focal_count = 0.0;

    const StatisticRate& rate(Statistic s) const;
    double conservative_median() const;
    double asymptotic_median() const;
};

struct PowerTable {
    PowerStudyConfig config;
    std::vector<ModelResult> models;
};

// Every realization r uses streams derived from (seed, r) alone, so models
// run with the same seed share covariates, assignments and focal sets.
PowerTable run_power_study(const PowerStudyConfig& config);

// Columns model,statistic,rejection_rate,n_realizations; two-stage medians
// appear as statistics "cons" and "asymp".
void write_power_csv(std::ostream& os, const PowerTable& table);

double median(std::vector<double> values);

// One-sample Kolmogorov-Smirnov test against Uniform(0, 1).
struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
KsResult ks_uniform(std::vector<double> sample);

}  // namespace knnim
