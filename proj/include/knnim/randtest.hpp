#pragma once

// Conditional randomization tests for interference.
//
// Focal treatments are held at their observed values; variant treatments are
// redrawn, the statistic is recomputed on the fixed observed outcomes, and the
// p-value is the share of reference draws at least as extreme as the observed
// statistic. The observed assignment counts as one reference draw, so
// p = (1 + #{extreme draws}) / (1 + #{defined draws}).

#include "knnim/focal.hpp"
#include "knnim/stats.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace knnim {

struct Scheme {
    enum class Kind { complete, bernoulli };
    Kind kind = Kind::complete;
    double p = 0.5;  // bernoulli only

    static Scheme complete() { return {}; }
    static Scheme bernoulli(double p);
    // "complete" or "bernoulli:<p>"
    static Scheme parse(std::string_view text);
    std::string to_string() const;
};

struct RandTestConfig {
    Statistic statistic = Statistic::score;
    std::size_t n_randomizations = 1000;
    Scheme scheme;
    std::uint64_t seed = 0;
    bool two_sided = true;
    unsigned workers = 1;
};

struct TestReport {
    Statistic statistic = Statistic::score;
    double observed = 0.0;
    double p_value = 1.0;
    std::size_t n_randomizations = 0;
    std::size_t n_undefined_draws = 0;
    std::uint64_t seed = 0;
    FocalMethod focal_method = FocalMethod::two_net;
    std::size_t n = 0;
    std::size_t k = 0;
    bool exact = false;  // produced by full enumeration
};

// True when `draw` counts as at least as extreme as `observed`. Uses a small
// relative tolerance so that draws reproducing the observed value up to
// rounding are counted.
bool at_least_as_extreme(double draw, double observed, bool two_sided);

// Draw `index` of the reference distribution: focal entries copied from
// `observed`, variant entries redrawn under `scheme` from a stream derived
// from (seed, index).
void draw_assignment(std::span<const unsigned char> observed, const FocalPartition& partition,
                     const Scheme& scheme, std::uint64_t seed, std::size_t index,
                     std::span<unsigned char> out);

// Throws PreconditionError if the observed statistic is undefined or every
// draw is undefined.
TestReport run_randomization_test(const StatisticInput& input, const RandTestConfig& config);

// Runs several statistics against one shared set of draws. Each report is
// identical to what run_randomization_test gives for that statistic with the
// same config; a statistic whose observed value is undefined gets an error
// message instead of a report.
struct StatisticOutcome {
    Statistic statistic = Statistic::score;
    std::optional<TestReport> report;
    std::string error;
};
std::vector<StatisticOutcome> run_randomization_tests(const StatisticInput& input,
                                                      std::span<const Statistic> statistics,
                                                      const RandTestConfig& config);

// Exact p-value over every variant assignment the scheme can produce
// (probability-weighted for bernoulli). The observed assignment is part of the
// enumeration, so no +1 correction applies. Throws PreconditionError if more
// than `budget` assignments would be enumerated.
inline constexpr std::size_t kDefaultEnumerationBudget = 1'000'000;
TestReport enumerate_exact_p(const StatisticInput& input, const RandTestConfig& config,
                             std::size_t budget = kDefaultEnumerationBudget);

// Number of variant assignments enumerate_exact_p would visit.
std::optional<std::size_t> enumeration_size(const StatisticInput& input, const Scheme& scheme,
                                            std::size_t budget = kDefaultEnumerationBudget);

}  // namespace knnim
