#include "catch_amalgamated.hpp"

#include "knnim/error.hpp"
#include "knnim/io.hpp"
#include "knnim/report.hpp"
#include "support.hpp"

#include <sstream>

using namespace knnim;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// A graph whose subjects realise the given exposure counts. Cell c holds
// counts[c] subjects; subject exposure bits follow ExposureTable::cell_index
// (own treatment most significant, then ranks 1..k). Rank-l neighbours are
// helper units T_l / C_l with no measures of their own, so helpers are
// under-connected and stay out of the table.
struct ExposureWorld {
    InteractionGraph graph;
    TreatmentVector treatment;
    std::size_t subjects = 0;
};

ExposureWorld exposure_world(std::size_t k, const std::vector<std::size_t>& counts) {
    std::size_t subjects = 0;
    for (auto c : counts) subjects += c;
    const std::size_t helpers = 2 * k;  // T_1..T_k then C_1..C_k
    const std::size_t n = subjects + helpers;
    std::vector<unsigned char> w(n, 0);
    for (std::size_t l = 0; l < k; ++l) w[subjects + l] = 1;
    std::vector<Measure> m;
    UnitId u = 0;
    for (std::size_t cell = 0; cell < counts.size(); ++cell) {
        for (std::size_t r = 0; r < counts[cell]; ++r, ++u) {
            w[u] = static_cast<unsigned char>((cell >> k) & 1u);
            for (std::size_t l = 0; l < k; ++l) {
                const bool treated = (cell >> (k - 1 - l)) & 1u;
                m.push_back({u, subjects + l + (treated ? 0 : k), static_cast<double>(l + 1)});
            }
        }
    }
    return {build_knn_graph(m, n, k), TreatmentVector(std::move(w)), subjects};
}

}  // namespace

TEST_CASE("three-unit files ingest to the expected graph") {
    std::istringstream edges("i,j,d\n1,2,1.0\n1,3,2.0\n2,1,0.5\n2,3,3.0\n3,1,1.5\n3,2,0.2\n");
    std::istringstream y("unit,y\n1,0.5\n2,1.5\n3,-2\n");
    std::istringstream w("unit,w\n1,1\n2,0\n3,1\n");
    const auto data = ingest(edges, y, w, 1);
    CHECK(data.graph.n() == 3);
    CHECK(data.graph.knn(0)[0] == 1);
    CHECK(data.graph.knn(1)[0] == 0);
    CHECK(data.graph.knn(2)[0] == 1);
    CHECK(data.outcomes == std::vector<double>{0.5, 1.5, -2});
    CHECK(data.treatment.n_treated() == 2);
    CHECK(data.edge_format == EdgeFormat::measure);
}

TEST_CASE("rank format and zero-based ids") {
    std::istringstream edges("i,j,rank\n0,1,2\n0,2,1\n1,0,1\n2,1,1\n");
    std::istringstream y("unit,y\n0,1\n1,2\n2,3\n");
    std::istringstream w("unit,w\n0,0\n1,1\n2,0\n");
    const auto data = ingest(edges, y, w, 1, false);
    CHECK(data.edge_format == EdgeFormat::rank);
    CHECK(data.graph.knn(0)[0] == 2);
    std::istringstream bad("i,j,rank\n1,2,1.5\n");
    CHECK_THROWS_AS(read_edges_csv(bad), InputError);
}

TEST_CASE("ingest diagnostics name the row or unit") {
    std::istringstream dup("i,j,d\n1,2,1\n1,3,1\n1,2,4\n");
    const auto msg = message_of([&] { read_edges_csv(dup, true, "e.csv"); });
    CHECK_THAT(msg, ContainsSubstring("e.csv:4"));
    CHECK_THAT(msg, ContainsSubstring("line 2"));

    std::istringstream w("unit,w\n1,0\n2,2\n");
    const auto wmsg = message_of([&] { read_treatment_csv(w, true, "w.csv"); });
    CHECK_THAT(wmsg, ContainsSubstring("unit 2"));
    CHECK_THAT(wmsg, ContainsSubstring("w.csv:3"));

    std::istringstream short_row("i,j,d\n1,2\n");
    CHECK_THAT(message_of([&] { read_edges_csv(short_row); }), ContainsSubstring("edges:2"));
    std::istringstream word("unit,y\n1,abc\n");
    CHECK_THAT(message_of([&] { read_outcomes_csv(word); }), ContainsSubstring("outcomes:2"));
    std::istringstream neg("i,j,d\n1,2,-1\n");
    CHECK_THROWS_AS(read_edges_csv(neg), InputError);
    std::istringstream self("i,j,d\n2,2,1\n");
    CHECK_THROWS_AS(read_edges_csv(self), InputError);
    std::istringstream zero("unit,y\n0,1\n");
    CHECK_THROWS_AS(read_outcomes_csv(zero), InputError);
    std::istringstream header("a,b\n1,2\n");
    CHECK_THROWS_AS(read_outcomes_csv(header), InputError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_edges_csv(empty), InputError);

    // Unit 2 is missing from the outcomes.
    std::istringstream gap("unit,y\n1,0\n3,1\n");
    CHECK_THROWS_AS(read_outcomes_csv(gap), InputError);

    std::istringstream edges("i,j,d\n1,4,1\n");
    std::istringstream y("unit,y\n1,0\n2,0\n3,0\n");
    std::istringstream tw("unit,w\n1,0\n2,1\n3,0\n");
    CHECK_THROWS_AS(ingest(edges, y, tw, 1), InputError);
    std::istringstream edges2("i,j,d\n1,2,1\n");
    std::istringstream y2("unit,y\n1,0\n2,0\n3,0\n");
    std::istringstream tw2("unit,w\n1,0\n2,1\n");
    CHECK_THROWS_AS(ingest(edges2, y2, tw2, 1), InputError);
    CHECK_THROWS_AS(ingest("/nonexistent/e.csv", "/nonexistent/y.csv", "/nonexistent/w.csv", 1), InputError);
}

TEST_CASE("canonical CSV output is idempotent") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 5 + rng() % 20;
        auto measures = testsupport::to_measures(testsupport::random_measures(n, rng, 0.5));
        std::shuffle(measures.begin(), measures.end(), rng);
        const auto y = testsupport::random_outcomes(n, rng);
        const TreatmentVector w(testsupport::random_assignment(n, n / 2, rng));

        std::ostringstream e1, y1, w1;
        write_edges_csv(e1, measures);
        write_outcomes_csv(y1, y);
        write_treatment_csv(w1, w);

        std::istringstream ei(e1.str()), yi(y1.str()), wi(w1.str());
        const auto edges = read_edges_csv(ei);
        const auto y_back = read_outcomes_csv(yi);
        const auto w_back = read_treatment_csv(wi);
        CHECK(y_back == y);
        CHECK(std::equal(w_back.values().begin(), w_back.values().end(), w.values().begin()));

        std::ostringstream e2, y2, w2;
        write_edges_csv(e2, edges.measures);
        write_outcomes_csv(y2, y_back);
        write_treatment_csv(w2, w_back);
        CHECK(e1.str() == e2.str());
        CHECK(y1.str() == y2.str());
        CHECK(w1.str() == w2.str());
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(3.0) == "3");
}

TEST_CASE("two-stage design files round-trip") {
    Rng rng(2);
    const auto g = testsupport::build(testsupport::euclidean_measures(32, rng), 3);
    const auto c = cluster_units(g, 4);
    TwoStageDesign d{draw_two_stage_assignment(c, 4), c.cluster_of};
    std::ostringstream out;
    write_two_stage_design_csv(out, d);
    std::istringstream in(out.str());
    const auto back = read_two_stage_design_csv(in);
    CHECK(back.assignment.treatment == d.assignment.treatment);
    CHECK(back.assignment.arm == d.assignment.arm);
    CHECK(back.cluster_of == d.cluster_of);
    std::istringstream bad("unit,cluster,arm,w\n1,0,xx,1\n");
    CHECK_THROWS_AS(read_two_stage_design_csv(bad), InputError);
}

TEST_CASE("exposure table for two mutual neighbours") {
    std::vector<Measure> m = {{0, 1, 1.0}, {1, 0, 1.0}};
    const auto g = build_knn_graph(m, 2, 1);
    const auto t = tabulate_exposures(g, TreatmentVector({1, 0}), 1);
    const std::vector<unsigned char> zero{0}, one{1};
    CHECK(t.counts.size() == 4);
    CHECK(t.count(1, zero) == 1);
    CHECK(t.count(0, one) == 1);
    CHECK(t.count(0, zero) == 0);
    CHECK(t.count(1, one) == 0);
    CHECK(t.n_eligible == 2);
    const auto big = tabulate_exposures(g, TreatmentVector({1, 0}), 3);
    CHECK(big.empty());
    CHECK_THROWS_AS(tabulate_exposures(g, TreatmentVector({1, 0}), 0), PreconditionError);
}

TEST_CASE("exposure tables shaped like the classroom study") {
    const std::vector<std::size_t> k2 = {38, 42, 39, 34, 40, 59, 46, 50};
    const std::vector<std::size_t> k3 = {5, 6, 3, 6, 8, 7, 11, 1, 6, 8, 3, 4, 11, 4, 10, 7};
    const auto w2 = exposure_world(2, k2);
    const auto w3 = exposure_world(3, k3);
    const auto t2 = tabulate_exposures(w2.graph, w2.treatment, 2);
    const auto t3 = tabulate_exposures(w3.graph, w3.treatment, 3);
    CHECK(t2.counts == k2);
    CHECK(t3.counts == k3);
    CHECK(t2.n_eligible == 348);
    CHECK(t3.n_eligible == 100);
    CHECK(t2.min_count() == 34);
    CHECK(t3.min_count() == 1);

    std::vector<ExposureTable> tables = {t2, t3};
    const auto rec = recommend_k(tables, 30);
    REQUIRE(rec.k.has_value());
    CHECK(*rec.k == 2);
    REQUIRE(rec.candidates.size() == 2);
    CHECK(rec.candidates[0].qualifies);
    CHECK_FALSE(rec.candidates[1].qualifies);
    CHECK(rec.candidates[1].min_count == 1);

    CHECK(*recommend_k(tables, 0).k == 3);
    const auto none = recommend_k(tables, 35);
    CHECK_FALSE(none.k.has_value());
    CHECK(none.candidates.size() == 2);
    CHECK_THROWS_AS(recommend_k(std::span<const ExposureTable>{}, 30), PreconditionError);

    std::ostringstream csv;
    write_exposures_csv(csv, t2);
    CHECK_THAT(csv.str(), ContainsSubstring("own,neighbors,count\n"));
    CHECK_THAT(csv.str(), ContainsSubstring("1,01,59\n"));
}

TEST_CASE("recommend_k never grows with the threshold") {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const auto g = testsupport::build(testsupport::random_measures(200, rng, 0.05), 1);
        const TreatmentVector w(testsupport::random_assignment(200, 100, rng));
        std::vector<ExposureTable> tables;
        for (std::size_t k = 1; k <= 5; ++k) tables.push_back(tabulate_exposures(g, w, k));
        std::size_t previous = 99;
        for (std::size_t th = 0; th <= 60; th += 3) {
            const auto r = recommend_k(tables, th);
            const std::size_t got = r.k.value_or(0);
            CHECK(got <= previous);
            previous = got;
        }
        for (const auto& t : tables) {
            std::size_t sum = 0;
            for (auto c : t.counts) sum += c;
            CHECK(sum == t.n_eligible);
            CHECK(t.counts.size() == (std::size_t{1} << (t.k + 1)));
        }
    }
}

TEST_CASE("JSON reports carry a schema version") {
    TestReport r;
    r.statistic = Statistic::knn;
    r.observed = 1.5;
    r.p_value = 0.02;
    r.n_randomizations = 99;
    r.seed = 4;
    const auto j = to_json(r);
    CHECK(j.at("schema_version") == kSchemaVersion);
    CHECK(j.at("statistic") == "knn");
    CHECK(j.at("p_value") == 0.02);

    TwoStageResult t;
    t.t_exp = 2.5;
    t.reject_asymptotic = true;
    CHECK(to_json(t).at("schema_version") == kSchemaVersion);

    const auto p = select_focals_random_half(10, 2);
    const auto s = focal_summary(p, 3);
    CHECK(s.at("n_focal") == 5);
    CHECK(s.at("method") == "random_half");
    std::ostringstream csv;
    write_focals_csv(csv, p);
    CHECK(csv.str().rfind("unit,is_focal\n", 0) == 0);
}
