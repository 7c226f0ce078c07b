#include "knnim/randtest.hpp"

#include "knnim/error.hpp"
#include "knnim/parallel.hpp"
#include "knnim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace knnim {

Scheme Scheme::bernoulli(double p) {
    if (!(p > 0.0 && p < 1.0)) throw PreconditionError("bernoulli probability must be in (0, 1)");
    return {Kind::bernoulli, p};
}

Scheme Scheme::parse(std::string_view text) {
    if (text == "complete") return complete();
    constexpr std::string_view prefix = "bernoulli:";
    if (text.substr(0, prefix.size()) == prefix) {
        const std::string value(text.substr(prefix.size()));
        std::size_t used = 0;
        double p = 0.0;
        try {
            p = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size() || !(p > 0.0 && p < 1.0)) {
            throw InputError("bad bernoulli probability in scheme '" + std::string(text) + "'");
        }
        return bernoulli(p);
    }
    throw InputError("unknown scheme '" + std::string(text) + "', expected complete or bernoulli:<p>");
}

std::string Scheme::to_string() const {
    if (kind == Kind::complete) return "complete";
    std::ostringstream os;
    os << "bernoulli:" << p;
    return os.str();
}

bool at_least_as_extreme(double draw, double observed, bool two_sided) {
    if (two_sided) {
        draw = std::abs(draw);
        observed = std::abs(observed);
    }
    const double tol = 1e-10 * std::max(1.0, std::abs(observed));
    return draw >= observed - tol;
}

void draw_assignment(std::span<const unsigned char> observed, const FocalPartition& partition,
                     const Scheme& scheme, std::uint64_t seed, std::size_t index,
                     std::span<unsigned char> out) {
    std::copy(observed.begin(), observed.end(), out.begin());
    auto rng = make_rng(seed, {index});
    if (scheme.kind == Scheme::Kind::complete) {
        // Fisher-Yates over the variant positions permutes the observed
        // variant treatment multiset.
        const auto& v = partition.variant;
        for (std::size_t r = v.size(); r > 1; --r) {
            std::uniform_int_distribution<std::size_t> pick(0, r - 1);
            std::swap(out[v[r - 1]], out[v[pick(rng)]]);
        }
    } else {
        std::bernoulli_distribution coin(scheme.p);
        for (UnitId j : partition.variant) out[j] = coin(rng) ? 1 : 0;
    }
}

namespace {

struct DrawTable {
    // [statistic][draw]
    std::vector<std::vector<double>> value;
    std::vector<std::vector<unsigned char>> defined;
};

DrawTable evaluate_draws(const StatisticEvaluator& eval, std::span<const Statistic> statistics,
                         std::span<const unsigned char> observed, const RandTestConfig& config) {
    const std::size_t draws = config.n_randomizations;
    DrawTable table;
    table.value.assign(statistics.size(), std::vector<double>(draws, 0.0));
    table.defined.assign(statistics.size(), std::vector<unsigned char>(draws, 0));

    constexpr std::size_t block = 64;
    const std::size_t blocks = (draws + block - 1) / block;
    parallel_for(blocks, config.workers, [&](std::size_t b) {
        std::vector<unsigned char> w(observed.size());
        const std::size_t end = std::min(draws, (b + 1) * block);
        for (std::size_t d = b * block; d < end; ++d) {
            draw_assignment(observed, eval.partition(), config.scheme, config.seed, d, w);
            for (std::size_t s = 0; s < statistics.size(); ++s) {
                const auto v = eval.evaluate(statistics[s], w);
                table.value[s][d] = v.value;
                table.defined[s][d] = v.defined ? 1 : 0;
            }
        }
    });
    return table;
}

TestReport base_report(const StatisticInput& input, const RandTestConfig& config, Statistic s) {
    TestReport r;
    r.statistic = s;
    r.n_randomizations = config.n_randomizations;
    r.seed = config.seed;
    r.focal_method = input.partition.method;
    r.n = input.graph.n();
    r.k = input.graph.k();
    return r;
}

void check_config(const StatisticInput& input, const RandTestConfig& config) {
    input.validate();
    if (config.n_randomizations == 0) throw PreconditionError("n_randomizations must be at least 1");
}

}  // namespace

std::vector<StatisticOutcome> run_randomization_tests(const StatisticInput& input,
                                                      std::span<const Statistic> statistics,
                                                      const RandTestConfig& config) {
    check_config(input, config);
    StatisticEvaluator eval(input.graph, input.partition, input.outcomes);
    const auto observed_w = input.treatment.values();

    std::vector<StatisticOutcome> outcomes(statistics.size());
    std::vector<Statistic> active;
    std::vector<double> observed_value;
    for (std::size_t s = 0; s < statistics.size(); ++s) {
        outcomes[s].statistic = statistics[s];
        const auto v = eval.evaluate(statistics[s], observed_w);
        if (!v.defined) {
            outcomes[s].error = "observed " + std::string(to_string(statistics[s])) +
                                " statistic is undefined on the observed assignment";
            continue;
        }
        active.push_back(statistics[s]);
        observed_value.push_back(v.value);
    }
    if (active.empty()) return outcomes;

    const auto table = evaluate_draws(eval, active, observed_w, config);

    std::size_t a = 0;
    for (auto& out : outcomes) {
        if (!out.error.empty()) continue;
        TestReport r = base_report(input, config, out.statistic);
        r.observed = observed_value[a];
        std::size_t extreme = 0, defined_draws = 0;
        for (std::size_t d = 0; d < config.n_randomizations; ++d) {
            if (!table.defined[a][d]) continue;
            ++defined_draws;
            if (at_least_as_extreme(table.value[a][d], r.observed, config.two_sided)) ++extreme;
        }
        r.n_undefined_draws = config.n_randomizations - defined_draws;
        if (defined_draws == 0) {
            out.error = "every randomization draw left the " + std::string(to_string(out.statistic)) +
                        " statistic undefined";
        } else {
            r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + defined_draws);
            out.report = r;
        }
        ++a;
    }
    return outcomes;
}

TestReport run_randomization_test(const StatisticInput& input, const RandTestConfig& config) {
    const Statistic s[] = {config.statistic};
    auto outcomes = run_randomization_tests(input, s, config);
    if (!outcomes.front().report) throw PreconditionError(outcomes.front().error);
    return *outcomes.front().report;
}

std::optional<std::size_t> enumeration_size(const StatisticInput& input, const Scheme& scheme,
                                            std::size_t budget) {
    const std::size_t m = input.partition.variant.size();
    if (scheme.kind == Scheme::Kind::bernoulli) {
        if (m >= 63 || (std::size_t{1} << m) > budget) return std::nullopt;
        return std::size_t{1} << m;
    }
    std::size_t t = 0;
    for (UnitId j : input.partition.variant) t += input.treatment[j];
    t = std::min(t, m - t);
    // C(m, t) computed incrementally; stays exact since every prefix product
    // is itself a binomial coefficient.
    std::size_t c = 1;
    for (std::size_t r = 1; r <= t; ++r) {
        c = c * (m - t + r) / r;
        if (c > budget) return std::nullopt;
    }
    return c;
}

TestReport enumerate_exact_p(const StatisticInput& input, const RandTestConfig& config,
                             std::size_t budget) {
    input.validate();
    const auto count = enumeration_size(input, config.scheme, budget);
    if (!count) throw PreconditionError("exact enumeration exceeds the budget of " + std::to_string(budget) + " assignments");

    StatisticEvaluator eval(input.graph, input.partition, input.outcomes);
    const auto observed_w = input.treatment.values();
    const auto obs = eval.evaluate(config.statistic, observed_w);
    if (!obs.defined) {
        throw PreconditionError("observed " + std::string(to_string(config.statistic)) +
                                " statistic is undefined on the observed assignment");
    }

    const auto& variant = input.partition.variant;
    const std::size_t m = variant.size();
    std::vector<unsigned char> w(observed_w.begin(), observed_w.end());
    double mass_extreme = 0.0, mass_defined = 0.0;
    std::size_t undefined = 0;
    auto visit = [&](double weight) {
        const auto v = eval.evaluate(config.statistic, w);
        if (!v.defined) {
            ++undefined;
            return;
        }
        mass_defined += weight;
        if (at_least_as_extreme(v.value, obs.value, config.two_sided)) mass_extreme += weight;
    };

    if (config.scheme.kind == Scheme::Kind::complete) {
        std::size_t t = 0;
        for (UnitId j : variant) t += observed_w[j];
        std::vector<unsigned char> pattern(m, 0);
        std::fill(pattern.begin(), pattern.begin() + static_cast<std::ptrdiff_t>(t), 1);
        do {
            for (std::size_t r = 0; r < m; ++r) w[variant[r]] = pattern[r];
            visit(1.0);
        } while (std::prev_permutation(pattern.begin(), pattern.end()));
    } else {
        const double p = config.scheme.p;
        for (std::size_t mask = 0; mask < *count; ++mask) {
            std::size_t treated = 0;
            for (std::size_t r = 0; r < m; ++r) {
                w[variant[r]] = (mask >> r) & 1U;
                treated += w[variant[r]];
            }
            visit(std::pow(p, static_cast<double>(treated)) *
                  std::pow(1.0 - p, static_cast<double>(m - treated)));
        }
    }

    TestReport r = base_report(input, config, config.statistic);
    r.n_randomizations = *count;
    r.n_undefined_draws = undefined;
    r.observed = obs.value;
    r.exact = true;
    r.p_value = mass_extreme / mass_defined;
    return r;
}

}  // namespace knnim
