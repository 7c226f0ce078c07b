#include "knnim/stats.hpp"

#include "knnim/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace knnim {

namespace {

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample covariance, 1/(m-1) normalization.
double covariance(std::span<const double> a, std::span<const double> b) {
    const double ma = mean(a);
    const double mb = mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size() - 1);
}

StatisticValue undefined(Statistic s) {
    StatisticValue v;
    v.name = s;
    return v;
}

StatisticValue defined(Statistic s, double value) {
    StatisticValue v;
    v.name = s;
    v.value = value;
    v.defined = true;
    return v;
}

}  // namespace

std::string_view to_string(Statistic s) {
    switch (s) {
        case Statistic::pearson: return "pearson";
        case Statistic::elc: return "elc";
        case Statistic::score: return "score";
        case Statistic::htn: return "htn";
        case Statistic::knn: return "knn";
    }
    return "unknown";
}

Statistic parse_statistic(std::string_view text) {
    for (Statistic s : kAllStatistics) {
        if (to_string(s) == text) return s;
    }
    throw InputError("unknown statistic '" + std::string(text) + "'");
}

TreatmentVector::TreatmentVector(std::vector<unsigned char> w) : w_(std::move(w)) {
    for (std::size_t i = 0; i < w_.size(); ++i) {
        if (w_[i] > 1) {
            throw InputError("treatment for unit " + std::to_string(i) + " is " +
                             std::to_string(static_cast<int>(w_[i])) + ", expected 0 or 1");
        }
        n_treated_ += w_[i];
    }
}

void StatisticInput::validate() const {
    const std::size_t n = graph.n();
    if (partition.n() != n || treatment.n() != n || outcomes.size() != n) {
        throw InputError("graph, focal partition, treatment and outcomes must cover the same " +
                         std::to_string(n) + " units");
    }
}

StatisticEvaluator::StatisticEvaluator(const InteractionGraph& graph,
                                       const FocalPartition& partition,
                                       std::vector<double> outcomes)
    : graph_(graph), partition_(partition), outcomes_(std::move(outcomes)) {
    if (partition_.n() != graph_.n() || outcomes_.size() != graph_.n()) {
        throw InputError("graph, focal partition and outcomes must cover the same units");
    }
    focal_y_.reserve(partition_.focal.size());
    variant_partners_.reserve(partition_.focal.size());
    for (UnitId i : partition_.focal) {
        focal_y_.push_back(outcomes_[i]);
        std::vector<Partner> row;
        for (const auto& p : graph_.partners(i)) {
            if (!partition_.is_focal[p.unit]) row.push_back(p);
        }
        variant_partners_.push_back(std::move(row));
    }
}

StatisticValue StatisticEvaluator::evaluate(Statistic s, std::span<const unsigned char> w) const {
    switch (s) {
        case Statistic::pearson: return pearson(w);
        case Statistic::elc: return elc(w);
        case Statistic::score: return score(w);
        case Statistic::htn: return htn(w);
        case Statistic::knn: return knn(w);
    }
    throw PreconditionError("unknown statistic");
}

StatisticValue StatisticEvaluator::pearson(std::span<const unsigned char> w) const {
    const std::size_t m = focal_y_.size();
    if (m < 2) throw PreconditionError("pearson statistic needs at least 2 focal units");

    std::vector<double> nearest(m);
    for (std::size_t f = 0; f < m; ++f) {
        // A treated focal unit is its own nearest treated unit.
        if (w[partition_.focal[f]]) {
            nearest[f] = 0.0;
            continue;
        }
        const auto& row = variant_partners_[f];
        auto it = std::find_if(row.begin(), row.end(), [&](const Partner& p) { return w[p.unit] == 1; });
        if (it == row.end()) return undefined(Statistic::pearson);
        nearest[f] = it->d;
    }
    if (is_constant(focal_y_) || is_constant(nearest)) return undefined(Statistic::pearson);

    const double sy = std::sqrt(covariance(focal_y_, focal_y_));
    const double sd = std::sqrt(covariance(nearest, nearest));
    return defined(Statistic::pearson, covariance(focal_y_, nearest) / (sy * sd));
}

StatisticValue StatisticEvaluator::elc(std::span<const unsigned char> w) const {
    double sum_treated = 0.0, sum_control = 0.0;
    std::size_t edges_treated = 0, edges_control = 0;
    for (std::size_t f = 0; f < partition_.focal.size(); ++f) {
        for (UnitId j : graph_.knn(partition_.focal[f])) {
            if (partition_.is_focal[j]) continue;
            if (w[j]) {
                sum_treated += focal_y_[f];
                ++edges_treated;
            } else {
                sum_control += focal_y_[f];
                ++edges_control;
            }
        }
    }
    if (edges_treated == 0 || edges_control == 0) return undefined(Statistic::elc);
    return defined(Statistic::elc, sum_treated / static_cast<double>(edges_treated) -
                                       sum_control / static_cast<double>(edges_control));
}

StatisticValue StatisticEvaluator::score(std::span<const unsigned char> w) const {
    double sum1 = 0.0, sum0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t f = 0; f < partition_.focal.size(); ++f) {
        if (w[partition_.focal[f]]) {
            sum1 += focal_y_[f];
            ++n1;
        } else {
            sum0 += focal_y_[f];
            ++n0;
        }
    }
    if (n1 == 0 || n0 == 0) return undefined(Statistic::score);
    const double mean1 = sum1 / static_cast<double>(n1);
    const double mean0 = sum0 / static_cast<double>(n0);

    std::vector<double> residual, fraction;
    for (std::size_t f = 0; f < partition_.focal.size(); ++f) {
        const UnitId i = partition_.focal[f];
        const auto row = graph_.knn(i);
        if (row.empty()) continue;
        std::size_t treated = 0;
        for (UnitId j : row) treated += w[j];
        // Subtracting the own-arm mean directly keeps Y + c*W invariance exact
        // up to rounding in that mean.
        residual.push_back(focal_y_[f] - (w[i] ? mean1 : mean0));
        fraction.push_back(static_cast<double>(treated) / static_cast<double>(row.size()));
    }
    if (residual.size() < 2) return undefined(Statistic::score);
    return defined(Statistic::score, covariance(residual, fraction));
}

StatisticValue StatisticEvaluator::htn(std::span<const unsigned char> w) const {
    const std::size_t m = focal_y_.size();
    if (m < 2) throw PreconditionError("htn statistic needs at least 2 focal units");

    std::vector<double> exposed(m, 0.0);
    for (std::size_t f = 0; f < m; ++f) {
        for (UnitId j : graph_.knn(partition_.focal[f])) {
            if (!partition_.is_focal[j] && w[j]) {
                exposed[f] = 1.0;
                break;
            }
        }
    }
    if (is_constant(focal_y_) || is_constant(exposed)) return undefined(Statistic::htn);

    const double ybar = mean(focal_y_);
    double s = 0.0;
    for (std::size_t f = 0; f < m; ++f) s += (focal_y_[f] - ybar) * exposed[f];
    const double sy = std::sqrt(covariance(focal_y_, focal_y_));
    const double se = std::sqrt(covariance(exposed, exposed));
    return defined(Statistic::htn, s / static_cast<double>(m) / (sy * se));
}

StatisticValue StatisticEvaluator::knn(std::span<const unsigned char> w) const {
    const std::size_t m = focal_y_.size();
    if (m == 0) throw PreconditionError("knn statistic needs a nonempty focal set");

    std::size_t n_treated = 0;
    for (UnitId i : partition_.focal) n_treated += w[i];
    const double weight[2] = {static_cast<double>(m - n_treated) / static_cast<double>(m),
                              static_cast<double>(n_treated) / static_cast<double>(m)};

    StatisticValue out = defined(Statistic::knn, 0.0);
    out.per_rank.reserve(graph_.k());
    for (std::size_t ell = 1; ell <= graph_.k(); ++ell) {
        double sum[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [own][neighbour]
        std::size_t count[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t f = 0; f < m; ++f) {
            const auto row = graph_.knn(partition_.focal[f]);
            if (row.size() < ell) continue;
            const unsigned own = w[partition_.focal[f]];
            const unsigned nb = w[row[ell - 1]];
            sum[own][nb] += focal_y_[f];
            ++count[own][nb];
        }
        double t_ell = 0.0;
        for (unsigned own = 0; own < 2; ++own) {
            bool complete = true;
            for (unsigned nb = 0; nb < 2; ++nb) {
                if (count[own][nb] == 0) {
                    out.empty_cells.push_back({static_cast<unsigned char>(own), ell,
                                               static_cast<unsigned char>(nb)});
                    complete = false;
                }
            }
            if (!complete) continue;
            const double contrast = sum[own][1] / static_cast<double>(count[own][1]) -
                                    sum[own][0] / static_cast<double>(count[own][0]);
            t_ell += weight[own] * contrast;
        }
        out.per_rank.push_back(t_ell);
        out.value += t_ell;
    }
    return out;
}

namespace {

StatisticValue evaluate_input(Statistic s, const StatisticInput& input) {
    input.validate();
    StatisticEvaluator eval(input.graph, input.partition, input.outcomes);
    return eval.evaluate(s, input.treatment.values());
}

}  // namespace

StatisticValue stat_pearson(const StatisticInput& input) { return evaluate_input(Statistic::pearson, input); }
StatisticValue stat_elc(const StatisticInput& input) { return evaluate_input(Statistic::elc, input); }
StatisticValue stat_score(const StatisticInput& input) { return evaluate_input(Statistic::score, input); }
StatisticValue stat_htn(const StatisticInput& input) { return evaluate_input(Statistic::htn, input); }
StatisticValue stat_knn(const StatisticInput& input) { return evaluate_input(Statistic::knn, input); }

StatisticValue compute_statistic(Statistic s, const StatisticInput& input) {
    return evaluate_input(s, input);
}

}  // namespace knnim
