// knnim: command-line front end for interference detection under the
// K-nearest-neighbour interference model.

#include "knnim/design2s.hpp"
#include "knnim/error.hpp"
#include "knnim/focal.hpp"
#include "knnim/io.hpp"
#include "knnim/randtest.hpp"
#include "knnim/report.hpp"
#include "knnim/sim.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace knnim;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitPrecondition = 3;

std::ifstream open_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open '" + path + "'");
    return f;
}

// Writes to `path`, or stdout when path is empty.
template <typename Writer>
void emit(const std::string& path, Writer&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot write '" + path + "'");
    write(f);
}

void emit_json(const std::string& path, const nlohmann::json& j) {
    emit(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// Graph from an edge file alone: n is the largest referenced id unless given.
InteractionGraph load_graph(const std::string& path, std::size_t k, std::size_t n_hint, bool one_based) {
    auto f = open_input(path);
    const auto edges = read_edges_csv(f, one_based, path);
    const std::size_t n = std::max(n_hint, edges.measures.empty() ? std::size_t{0} : edges.max_unit + 1);
    return build_knn_graph(edges.measures, n, k);
}

FocalPartition choose_focals(const InteractionGraph& g, const std::string& method, std::uint64_t seed,
                             unsigned radius) {
    return parse_focal_method(method) == FocalMethod::two_net ? select_focals_two_net(g, seed, nullptr, radius)
                                                              : select_focals_random_half(g.n(), seed);
}

// "1-16", "1,2,9", "1-3,13"
std::vector<int> parse_model_list(const std::string& text) {
    std::vector<int> ids;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            const auto dash = part.find('-');
            if (dash == std::string::npos) {
                ids.push_back(std::stoi(part));
            } else {
                const int lo = std::stoi(part.substr(0, dash));
                const int hi = std::stoi(part.substr(dash + 1));
                for (int m = lo; m <= hi; ++m) ids.push_back(m);
            }
        } catch (const std::logic_error&) {
            throw InputError("bad model list '" + text + "'");
        }
    }
    if (ids.empty()) throw InputError("empty model list");
    return ids;
}

std::vector<Statistic> parse_stat_list(const std::string& text) {
    if (text == "all") return {kAllStatistics.begin(), kAllStatistics.end()};
    std::vector<Statistic> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(parse_statistic(part));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detect treatment interference under the K-nearest-neighbour interference model"};
    app.require_subcommand(1);

    bool zero_based = false;
    app.add_flag("--zero-based", zero_based, "Unit ids in input and output files start at 0");

    // focals
    auto* focals = app.add_subcommand("focals", "Select focal units");
    std::string f_graph, f_method = "two_net", f_out;
    std::size_t f_k = 0, f_n = 0;
    std::uint64_t f_seed = 0;
    unsigned f_radius = kDefaultExclusionRadius;
    focals->add_option("--graph", f_graph, "Edge-list CSV (i,j,d or i,j,rank)")->required();
    focals->add_option("--k", f_k, "Neighbourhood size")->required();
    focals->add_option("--seed", f_seed, "RNG seed")->required();
    focals->add_option("--method", f_method, "two_net or random_half");
    focals->add_option("--radius", f_radius, "2-net exclusion radius in hops (2 or 3)");
    focals->add_option("--n", f_n, "Number of units when the edge list does not mention all of them");
    focals->add_option("--out", f_out, "CSV output path (unit,is_focal); summary JSON goes to stdout");

    // test
    auto* test = app.add_subcommand("test", "Conditional randomization test");
    std::string t_graph, t_outcomes, t_treatment, t_stat = "score", t_method = "two_net", t_scheme = "complete", t_out;
    std::size_t t_k = 0, t_draws = 1000;
    std::uint64_t t_seed = 0;
    unsigned t_radius = kDefaultExclusionRadius, t_workers = 1;
    bool t_one_sided = false, t_exact = false;
    test->add_option("--graph", t_graph)->required();
    test->add_option("--outcomes", t_outcomes, "CSV unit,y")->required();
    test->add_option("--treatment", t_treatment, "CSV unit,w")->required();
    test->add_option("--k", t_k)->required();
    test->add_option("--seed", t_seed)->required();
    test->add_option("--stat", t_stat, "pearson, elc, score, htn, knn, a comma list, or all");
    test->add_option("--randomizations", t_draws);
    test->add_option("--focal-method", t_method);
    test->add_option("--radius", t_radius);
    test->add_option("--scheme", t_scheme, "complete or bernoulli:<p>");
    test->add_flag("--one-sided", t_one_sided, "Compare T' >= T instead of |T'| >= |T|");
    test->add_flag("--exact", t_exact, "Enumerate every variant assignment instead of sampling");
    test->add_option("--workers", t_workers);
    test->add_option("--out", t_out);

    // two-stage
    auto* two = app.add_subcommand("two-stage", "Two-stage design: generate a design or analyze its outcomes");
    std::string s_graph, s_outcomes, s_design, s_out;
    std::size_t s_k = 0, s_cluster = 4, s_n = 0;
    std::uint64_t s_seed = 0;
    double s_alpha = 0.05;
    auto* s_graph_opt = two->add_option("--graph", s_graph, "Edge list; with --seed writes a new design");
    two->add_option("--k", s_k, "Neighbourhood size used to read the graph");
    auto* s_seed_opt = two->add_option("--seed", s_seed);
    two->add_option("--n", s_n);
    two->add_option("--cluster-size", s_cluster);
    auto* s_outcomes_opt = two->add_option("--outcomes", s_outcomes, "Observed outcomes (analysis mode)");
    auto* s_design_opt = two->add_option("--design", s_design, "Design CSV unit,cluster,arm,w (analysis mode)");
    two->add_option("--alpha", s_alpha);
    two->add_option("--out", s_out);
    s_outcomes_opt->needs(s_design_opt);
    s_design_opt->needs(s_outcomes_opt);
    s_graph_opt->needs(s_seed_opt);
    s_graph_opt->excludes(s_outcomes_opt);

    // exposures
    auto* exposures = app.add_subcommand("exposures", "Tabulate units per treatment exposure");
    std::string e_graph, e_treatment, e_out, e_format = "json";
    std::size_t e_k = 0;
    exposures->add_option("--graph", e_graph)->required();
    exposures->add_option("--treatment", e_treatment)->required();
    exposures->add_option("--k", e_k)->required();
    exposures->add_option("--format", e_format)->check(CLI::IsMember({"json", "csv"}));
    exposures->add_option("--out", e_out);

    // recommend-k
    auto* reck = app.add_subcommand("recommend-k", "Largest k with enough units in every exposure");
    std::string r_graph, r_treatment, r_out;
    std::size_t r_kmax = 3, r_threshold = kDefaultExposureThreshold;
    reck->add_option("--graph", r_graph)->required();
    reck->add_option("--treatment", r_treatment)->required();
    reck->add_option("--k-max", r_kmax, "Candidates are 1..k-max");
    reck->add_option("--threshold", r_threshold, "Minimum units per exposure cell");
    reck->add_option("--out", r_out);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Power / Type I error study on the model catalog");
    std::string m_models = "1-16", m_stats = "all", m_out, m_format = "csv", m_method = "two_net";
    std::size_t m_n = 256, m_k = 3, m_real = 200, m_draws = 500, m_two = 1000, m_cluster = 4;
    std::uint64_t m_seed = 0;
    double m_alpha = 0.05;
    unsigned m_workers = 1;
    simulate->add_option("--models", m_models, "Catalog ids, e.g. 1-16 or 1,9,13");
    simulate->add_option("--n", m_n);
    simulate->add_option("--k", m_k);
    simulate->add_option("--realizations", m_real);
    simulate->add_option("--randomizations", m_draws);
    simulate->add_option("--two-stage-assignments", m_two, "0 disables the two-stage design");
    simulate->add_option("--cluster-size", m_cluster);
    simulate->add_option("--stats", m_stats);
    simulate->add_option("--alpha", m_alpha);
    simulate->add_option("--seed", m_seed)->required();
    simulate->add_option("--focal-method", m_method);
    simulate->add_option("--workers", m_workers, "0 = all hardware threads");
    simulate->add_option("--format", m_format)->check(CLI::IsMember({"json", "csv"}));
    simulate->add_option("--out", m_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }
    const bool one_based = !zero_based;

    try {
        if (*focals) {
            const auto g = load_graph(f_graph, f_k, f_n, one_based);
            const auto p = choose_focals(g, f_method, f_seed, f_radius);
            if (f_out.empty()) {
                write_focals_csv(std::cout, p, one_based);
                std::cerr << focal_summary(p, f_k).dump(2) << '\n';
            } else {
                emit(f_out, [&](std::ostream& os) { write_focals_csv(os, p, one_based); });
                std::cout << focal_summary(p, f_k).dump(2) << '\n';
            }
        } else if (*test) {
            const auto data = ingest(t_graph, t_outcomes, t_treatment, t_k, one_based);
            const auto p = choose_focals(data.graph, t_method, t_seed, t_radius);
            const StatisticInput input{data.graph, p, data.treatment, data.outcomes};
            RandTestConfig cfg;
            cfg.n_randomizations = t_draws;
            cfg.scheme = Scheme::parse(t_scheme);
            cfg.seed = t_seed;
            cfg.two_sided = !t_one_sided;
            cfg.workers = t_workers;
            const auto stats = parse_stat_list(t_stat);
            nlohmann::json reports = nlohmann::json::array();
            bool failed = false;
            if (t_exact) {
                for (Statistic s : stats) {
                    cfg.statistic = s;
                    reports.push_back(to_json(enumerate_exact_p(input, cfg)));
                }
            } else {
                for (const auto& o : run_randomization_tests(input, stats, cfg)) {
                    if (o.report) {
                        reports.push_back(to_json(*o.report));
                    } else {
                        failed = true;
                        reports.push_back({{"schema_version", kSchemaVersion},
                                           {"statistic", to_string(o.statistic)},
                                           {"error", o.error}});
                    }
                }
            }
            for (auto& r : reports) r["n_focal"] = p.focal.size();
            emit_json(t_out, reports.size() == 1 ? reports.front() : reports);
            if (failed && stats.size() == 1) return kExitPrecondition;
        } else if (*two) {
            if (!s_outcomes.empty()) {
                auto fo = open_input(s_outcomes);
                auto fd = open_input(s_design);
                const auto y = read_outcomes_csv(fo, one_based, s_outcomes);
                const auto design = read_two_stage_design_csv(fd, one_based, s_design);
                if (design.cluster_of.size() != y.size()) {
                    throw InputError("design and outcomes files list different numbers of units");
                }
                emit_json(s_out, to_json(analyze_two_stage(y, design.assignment, design.cluster_of, s_alpha)));
            } else if (!s_graph.empty()) {
                const auto g = load_graph(s_graph, std::max<std::size_t>(s_k, 1), s_n, one_based);
                const auto clustering = cluster_units(g, s_cluster);
                const TwoStageDesign design{draw_two_stage_assignment(clustering, s_seed), clustering.cluster_of};
                emit(s_out, [&](std::ostream& os) { write_two_stage_design_csv(os, design, one_based); });
                if (clustering.has_remainder) std::cerr << "warning: last cluster is smaller than the target size\n";
            } else {
                throw InputError("two-stage needs either --graph/--seed (design) or --outcomes/--design (analysis)");
            }
        } else if (*exposures) {
            auto ft = open_input(e_treatment);
            const auto w = read_treatment_csv(ft, one_based, e_treatment);
            const auto g = load_graph(e_graph, 1, w.n(), one_based);
            const auto table = tabulate_exposures(g, w, e_k);
            if (table.empty()) std::cerr << "warning: no unit has at least k measured partners\n";
            if (e_format == "csv") {
                emit(e_out, [&](std::ostream& os) { write_exposures_csv(os, table); });
            } else {
                emit_json(e_out, to_json(table));
            }
        } else if (*reck) {
            auto ft = open_input(r_treatment);
            const auto w = read_treatment_csv(ft, one_based, r_treatment);
            const auto g = load_graph(r_graph, 1, w.n(), one_based);
            std::vector<ExposureTable> tables;
            for (std::size_t k = 1; k <= r_kmax; ++k) tables.push_back(tabulate_exposures(g, w, k));
            const auto rec = recommend_k(tables, r_threshold);
            emit_json(r_out, to_json(rec, r_threshold));
            if (!rec.k) return kExitPrecondition;
        } else if (*simulate) {
            PowerStudyConfig cfg;
            for (int id : parse_model_list(m_models)) cfg.models.push_back(catalog_model(id, m_n, m_k));
            cfg.realizations = m_real;
            cfg.randomizations = m_draws;
            cfg.two_stage_assignments = m_two;
            cfg.cluster_size = m_cluster;
            cfg.statistics = parse_stat_list(m_stats);
            cfg.alpha = m_alpha;
            cfg.seed = m_seed;
            cfg.focal_method = parse_focal_method(m_method);
            cfg.workers = m_workers;
            const auto table = run_power_study(cfg);
            if (m_format == "csv") {
                emit(m_out, [&](std::ostream& os) { write_power_csv(os, table); });
            } else {
                emit_json(m_out, to_json(table));
            }
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition violated: " << e.what() << '\n';
        return kExitPrecondition;
    }
    return 0;
}
