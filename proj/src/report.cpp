#include "knnim/report.hpp"

#include <ostream>

namespace knnim {

using nlohmann::json;

json to_json(const TestReport& r) {
    return {{"schema_version", kSchemaVersion},
            {"statistic", to_string(r.statistic)},
            {"observed", r.observed},
            {"p_value", r.p_value},
            {"n_randomizations", r.n_randomizations},
            {"n_undefined_draws", r.n_undefined_draws},
            {"exact", r.exact},
            {"seed", r.seed},
            {"focal_method", to_string(r.focal_method)},
            {"n", r.n},
            {"k", r.k}};
}

json to_json(const TwoStageResult& r) {
    return {{"schema_version", kSchemaVersion},
            {"tau_cr", r.tau_cr},
            {"tau_cbr", r.tau_cbr},
            {"sigma_p", r.sigma_p},
            {"t_exp", r.t_exp},
            {"alpha", r.alpha},
            {"conservative_threshold", conservative_threshold(r.alpha)},
            {"asymptotic_threshold", asymptotic_threshold(r.alpha)},
            {"reject_conservative", r.reject_conservative},
            {"reject_asymptotic", r.reject_asymptotic}};
}

namespace {

std::string neighbor_bits(std::size_t cell, std::size_t k) {
    std::string bits(k, '0');
    for (std::size_t l = 0; l < k; ++l) {
        if ((cell >> (k - 1 - l)) & 1U) bits[l] = '1';
    }
    return bits;
}

}  // namespace

json to_json(const ExposureTable& t) {
    json cells = json::array();
    for (std::size_t c = 0; c < t.counts.size(); ++c) {
        cells.push_back({{"own", (c >> t.k) & 1U}, {"neighbors", neighbor_bits(c, t.k)}, {"count", t.counts[c]}});
    }
    json j = {{"schema_version", kSchemaVersion},
              {"k", t.k},
              {"n_eligible", t.n_eligible},
              {"min_count", t.min_count()},
              {"cells", cells}};
    if (t.empty()) j["warning"] = "no unit has at least k measured partners";
    return j;
}

json to_json(const KRecommendation& rec, std::size_t threshold) {
    json candidates = json::array();
    for (const auto& c : rec.candidates) {
        candidates.push_back({{"k", c.k}, {"min_count", c.min_count}, {"n_eligible", c.n_eligible}, {"qualifies", c.qualifies}});
    }
    json j = {{"schema_version", kSchemaVersion}, {"threshold", threshold}, {"candidates", candidates}};
    j["recommended_k"] = rec.k ? json(*rec.k) : json(nullptr);
    if (!rec.k) j["diagnostic"] = "no candidate k gives every exposure cell at least the threshold count";
    return j;
}

json to_json(const PowerTable& table) {
    const auto& c = table.config;
    json models = json::array();
    for (const auto& m : table.models) {
        json stats = json::array();
        for (const auto& r : m.rates) {
            const auto ks = ks_uniform(r.p_values);
            stats.push_back({{"statistic", to_string(r.statistic)},
                             {"rejection_rate", r.rejection_rate},
                             {"n_realizations", r.n_realizations},
                             {"n_undefined", r.n_undefined},
                             {"ks_uniform_p", ks.p_value}});
        }
        json entry = {{"model", m.model.model_id ? json(*m.model.model_id) : json(nullptr)},
                      {"beta", m.model.neighbor_effects},
                      {"beta_direct", m.model.direct_effect},
                      {"mean_focal_count", m.mean_focal_count},
                      {"statistics", stats}};
        if (!m.conservative_rates.empty()) {
            entry["two_stage"] = {{"conservative_median", m.conservative_median()},
                                  {"asymptotic_median", m.asymptotic_median()},
                                  {"n_realizations", m.conservative_rates.size()}};
        }
        models.push_back(entry);
    }
    return {{"schema_version", kSchemaVersion},
            {"n", c.models.front().n},
            {"k", c.models.front().k},
            {"realizations", c.realizations},
            {"randomizations", c.randomizations},
            {"two_stage_assignments", c.two_stage_assignments},
            {"alpha", c.alpha},
            {"seed", c.seed},
            {"focal_method", to_string(c.focal_method)},
            {"models", models}};
}

json focal_summary(const FocalPartition& p, std::size_t k) {
    return {{"schema_version", kSchemaVersion},
            {"n", p.n()},
            {"k", k},
            {"method", to_string(p.method)},
            {"seed", p.seed},
            {"n_focal", p.focal.size()}};
}

void write_focals_csv(std::ostream& out, const FocalPartition& p, bool one_based) {
    const std::size_t base = one_based ? 1 : 0;
    out << "unit,is_focal\n";
    for (std::size_t i = 0; i < p.n(); ++i) out << i + base << ',' << static_cast<int>(p.is_focal[i]) << '\n';
}

void write_exposures_csv(std::ostream& out, const ExposureTable& t) {
    out << "own,neighbors,count\n";
    for (std::size_t c = 0; c < t.counts.size(); ++c) {
        out << ((c >> t.k) & 1U) << ',' << neighbor_bits(c, t.k) << ',' << t.counts[c] << '\n';
    }
}

}  // namespace knnim
