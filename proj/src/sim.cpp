#include "knnim/sim.hpp"

#include "knnim/design2s.hpp"
#include "knnim/error.hpp"
#include "knnim/parallel.hpp"
#include "knnim/randtest.hpp"
#include "knnim/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace knnim {

void SimulationModel::validate() const {
    if (k == 0) throw PreconditionError("simulation needs k >= 1");
    if (n < k + 1) throw PreconditionError("simulation needs n >= k + 1");
    if (neighbor_effects.size() > k) {
        throw PreconditionError("more neighbour coefficients than neighbourhood size k");
    }
    if (covariate_dim == 0) throw PreconditionError("covariate dimension must be positive");
}

SimulationModel catalog_model(int id, std::size_t n, std::size_t k) {
    // (beta_1, beta_2, beta_3, beta_d)
    static constexpr std::array<std::array<double, 4>, kCatalogSize> table = {{
        {0, 0, 0, 0},        {0, 0, 0, 1},         {0, 0, 0, 4},
        {0.5, 0.25, 0.1, 0}, {0.5, 0.25, 0.1, 0.3}, {0.5, 0.25, 0.1, 1},
        {2, 1, 0.5, 0},      {2, 1, 0.5, 1},       {2, 1, 0.5, 4},
        {3, 2, 1, 0},        {3, 2, 1, 1},         {3, 2, 1, 4},
        {30, 20, 10, 0},     {30, 20, 10, 10},     {30, 20, 10, 40},
        {30, 30, 30, 30},
    }};
    if (id < 1 || id > kCatalogSize) {
        throw PreconditionError("model id " + std::to_string(id) + " outside 1.." + std::to_string(kCatalogSize));
    }
    const auto& row = table[static_cast<std::size_t>(id - 1)];
    SimulationModel m;
    m.neighbor_effects = {row[0], row[1], row[2]};
    m.direct_effect = row[3];
    m.n = n;
    m.k = k;
    m.model_id = id;
    return m;
}

std::span<const double> Realization::covariates(UnitId i) const {
    const std::size_t dim = model_.covariate_dim;
    return std::span<const double>(covariates_).subspan(i * dim, dim);
}

double Realization::potential_outcome(UnitId i, unsigned char own,
                                      std::span<const unsigned char> neighbors) const {
    double y = baseline_[i] + model_.direct_effect * own;
    const std::size_t ranks = std::min(model_.neighbor_effects.size(), neighbors.size());
    for (std::size_t l = 0; l < ranks; ++l) y += model_.neighbor_effects[l] * neighbors[l];
    return y;
}

std::vector<double> Realization::outcomes(std::span<const unsigned char> w) const {
    const std::size_t n = model_.n;
    if (w.size() != n) throw InputError("assignment length does not match the realization");
    std::vector<double> y(n);
    const std::size_t ranks = model_.neighbor_effects.size();
    for (UnitId i = 0; i < n; ++i) {
        double v = baseline_[i] + model_.direct_effect * w[i];
        const auto row = graph_.knn(i);
        for (std::size_t l = 0; l < std::min(ranks, row.size()); ++l) {
            v += model_.neighbor_effects[l] * w[row[l]];
        }
        y[i] = v;
    }
    return y;
}

Realization generate_realization(const SimulationModel& model, std::uint64_t seed) {
    model.validate();
    const std::size_t n = model.n;
    const std::size_t dim = model.covariate_dim;

    Realization r;
    r.model_ = model;
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    r.covariates_.resize(n * dim);
    for (double& x : r.covariates_) x = normal(rng);

    r.baseline_.assign(n, 0.0);
    for (UnitId i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dim; ++c) r.baseline_[i] += r.covariates_[i * dim + c];
    }

    std::vector<Measure> measures;
    measures.reserve(n * (n - 1));
    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j = 0; j < n; ++j) {
            if (i == j) continue;
            double ss = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = r.covariates_[i * dim + c] - r.covariates_[j * dim + c];
                ss += diff * diff;
            }
            measures.push_back({i, j, std::sqrt(ss)});
        }
    }
    r.graph_ = build_knn_graph(measures, n, model.k);
    return r;
}

EffectSummary true_effects(const SimulationModel& model) {
    EffectSummary e;
    e.tau_dir = model.direct_effect;
    e.tau_ind = std::accumulate(model.neighbor_effects.begin(), model.neighbor_effects.end(), 0.0);
    e.tau_tot = e.tau_dir + e.tau_ind;
    return e;
}

EffectSummary true_effects(const Realization& realization) {
    const std::size_t n = realization.model().n;
    const std::vector<unsigned char> ones(n, 1), zeros(n, 0);
    // y_i(1, 1) and y_i(0, 0) come straight from the evaluator; y_i(0, 1)
    // needs unit i flipped with everyone else treated.
    const auto y11 = realization.outcomes(ones);
    const auto y00 = realization.outcomes(zeros);
    double dir = 0.0, ind = 0.0, tot = 0.0;
    std::vector<unsigned char> w = ones;
    for (UnitId i = 0; i < n; ++i) {
        w[i] = 0;
        const double y01 = realization.outcomes(w)[i];
        w[i] = 1;
        dir += y11[i] - y01;
        ind += y01 - y00[i];
        tot += y11[i] - y00[i];
    }
    const double dn = static_cast<double>(n);
    return {dir / dn, ind / dn, tot / dn};
}

std::vector<unsigned char> complete_assignment(std::size_t n, std::uint64_t seed) {
    std::vector<unsigned char> w(n, 0);
    std::fill(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
    auto rng = make_rng(seed);
    std::shuffle(w.begin(), w.end(), rng);
    return w;
}

const StatisticRate& ModelResult::rate(Statistic s) const {
    for (const auto& r : rates) {
        if (r.statistic == s) return r;
    }
    throw PreconditionError("statistic " + std::string(to_string(s)) + " was not part of the study");
}

double ModelResult::conservative_median() const { return median(conservative_rates); }
double ModelResult::asymptotic_median() const { return median(asymptotic_rates); }

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

KsResult ks_uniform(std::vector<double> sample) {
    KsResult r;
    if (sample.empty()) return r;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double u = std::clamp(sample[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    r.statistic = d;
    // Asymptotic Kolmogorov tail with Stephens' finite-sample correction.
    const double root = std::sqrt(n);
    const double lambda = (root + 0.12 + 0.11 / root) * d;
    double q = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        q += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-12) break;
    }
    r.p_value = lambda < 1e-3 ? 1.0 : std::clamp(q, 0.0, 1.0);
    return r;
}

namespace {

struct RealizationOutcome {
    std::vector<std::optional<double>> p_values;  // per statistic
    double conservative = 0.0;
    double asymptotic = 0.0;
    std::size_t focal_count = 0;
};

// Sub-stream tags under each realization's seed.
enum Stream : std::uint64_t { covariates = 0, treatment = 1, focal = 2, randomization = 3, two_stage = 4 };

RealizationOutcome run_realization(const SimulationModel& model, const PowerStudyConfig& config,
                                   std::size_t index) {
    const std::uint64_t base = derive_seed(config.seed, index);
    const auto realization = generate_realization(model, derive_seed(base, Stream::covariates));
    const auto& graph = realization.graph();

    const auto w = complete_assignment(model.n, derive_seed(base, Stream::treatment));
    const std::uint64_t focal_seed = derive_seed(base, Stream::focal);
    const auto partition = config.focal_method == FocalMethod::two_net
                               ? select_focals_two_net(graph, focal_seed)
                               : select_focals_random_half(model.n, focal_seed);

    RealizationOutcome out;
    out.focal_count = partition.focal.size();
    StatisticInput input{graph, partition, TreatmentVector(w), realization.outcomes(w)};
    RandTestConfig rc;
    rc.n_randomizations = config.randomizations;
    rc.seed = derive_seed(base, Stream::randomization);
    if (!config.statistics.empty()) {
        for (const auto& o : run_randomization_tests(input, config.statistics, rc)) {
            out.p_values.push_back(o.report ? std::optional<double>(o.report->p_value) : std::nullopt);
        }
    }

    if (config.two_stage_assignments > 0) {
        const auto clustering = cluster_units(graph, config.cluster_size);
        const OutcomeFunction fn = [&](std::span<const unsigned char> a) { return realization.outcomes(a); };
        const auto rates = two_stage_rejection_rates(fn, clustering, config.two_stage_assignments,
                                                     derive_seed(base, Stream::two_stage), config.alpha);
        out.conservative = rates.conservative;
        out.asymptotic = rates.asymptotic;
    }
    return out;
}

}  // namespace

PowerTable run_power_study(const PowerStudyConfig& config) {
    if (config.models.empty()) throw PreconditionError("power study needs at least one model");
    if (config.realizations == 0 || config.randomizations == 0) {
        throw PreconditionError("realizations and randomizations must be positive");
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw PreconditionError("alpha must be in (0, 1)");
    for (const auto& m : config.models) m.validate();

    PowerTable table;
    table.config = config;
    for (const auto& model : config.models) {
        std::vector<RealizationOutcome> outcomes(config.realizations);
        parallel_for(config.realizations, config.workers,
                     [&](std::size_t r) { outcomes[r] = run_realization(model, config, r); });

        ModelResult result;
        result.model = model;
        double focal_total = 0.0;
        for (const auto& o : outcomes) focal_total += static_cast<double>(o.focal_count);
        result.mean_focal_count = focal_total / static_cast<double>(config.realizations);
        for (std::size_t s = 0; s < config.statistics.size(); ++s) {
            StatisticRate rate;
            rate.statistic = config.statistics[s];
            std::size_t rejected = 0;
            for (const auto& o : outcomes) {
                if (!o.p_values[s]) {
                    ++rate.n_undefined;
                    continue;
                }
                rate.p_values.push_back(*o.p_values[s]);
                if (*o.p_values[s] < config.alpha) ++rejected;
            }
            rate.n_realizations = rate.p_values.size();
            rate.rejection_rate = rate.n_realizations == 0
                                      ? 0.0
                                      : static_cast<double>(rejected) / static_cast<double>(rate.n_realizations);
            result.rates.push_back(std::move(rate));
        }
        if (config.two_stage_assignments > 0) {
            for (const auto& o : outcomes) {
                result.conservative_rates.push_back(o.conservative);
                result.asymptotic_rates.push_back(o.asymptotic);
            }
        }
        table.models.push_back(std::move(result));
    }
    return table;
}

void write_power_csv(std::ostream& os, const PowerTable& table) {
    os << "model,statistic,rejection_rate,n_realizations\n";
    for (const auto& m : table.models) {
        const std::string id = m.model.model_id ? std::to_string(*m.model.model_id) : "custom";
        for (const auto& r : m.rates) {
            os << id << ',' << to_string(r.statistic) << ',' << r.rejection_rate << ','
               << r.n_realizations << '\n';
        }
        if (!m.conservative_rates.empty()) {
            os << id << ",cons," << m.conservative_median() << ',' << m.conservative_rates.size() << '\n';
            os << id << ",asymp," << m.asymptotic_median() << ',' << m.asymptotic_rates.size() << '\n';
        }
    }
}

}  // namespace knnim
