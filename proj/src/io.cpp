#include "knnim/io.hpp"

#include "knnim/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

namespace knnim {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

struct Row {
    std::size_t line = 0;
    std::vector<std::string_view> fields;
};

// Line-oriented CSV without quoting; blank lines are skipped.
class CsvReader {
public:
    CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(Row& row) {
        while (std::getline(in_, buffer_)) {
            ++line_;
            const auto text = trim(buffer_);
            if (text.empty()) continue;
            row.line = line_;
            row.fields.clear();
            std::string_view rest = text;
            for (;;) {
                const auto comma = rest.find(',');
                row.fields.push_back(trim(rest.substr(0, comma)));
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::size_t line, const std::string& message) const {
        throw InputError(source_ + ":" + std::to_string(line) + ": " + message);
    }

    std::vector<std::string> header(std::size_t expected_fields) {
        Row row;
        if (!next(row)) throw InputError(source_ + ": file is empty, expected a header row");
        if (row.fields.size() != expected_fields) {
            fail(row.line, "expected a header with " + std::to_string(expected_fields) + " columns");
        }
        std::vector<std::string> names;
        for (auto f : row.fields) names.push_back(lower(f));
        return names;
    }

    UnitId unit(const Row& row, std::size_t field, bool one_based) const {
        const auto text = row.fields[field];
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            fail(row.line, "'" + std::string(text) + "' is not a unit id");
        }
        if (one_based) {
            if (value == 0) fail(row.line, "unit id 0 in a 1-based file");
            --value;
        }
        return value;
    }

    double number(const Row& row, std::size_t field) const {
        const auto text = row.fields[field];
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
            fail(row.line, "'" + std::string(text) + "' is not a finite number");
        }
        return value;
    }

    void expect_fields(const Row& row, std::size_t count) const {
        if (row.fields.size() != count) {
            fail(row.line, "expected " + std::to_string(count) + " fields, found " +
                               std::to_string(row.fields.size()));
        }
    }

    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::string buffer_;
    std::size_t line_ = 0;
};

// Reads a `unit,<value>` file into a dense vector indexed by 0-based id.
template <typename Parse>
auto read_unit_column(std::istream& in, bool one_based, const std::string& source,
                      const char* value_name, Parse parse) {
    CsvReader csv(in, source);
    const auto names = csv.header(2);
    if (names[0] != "unit" || names[1] != value_name) {
        throw InputError(source + ": expected header 'unit," + value_name + "'");
    }
    using Value = decltype(parse(csv, Row{}));
    std::map<UnitId, std::pair<Value, std::size_t>> values;
    Row row;
    while (csv.next(row)) {
        csv.expect_fields(row, 2);
        const UnitId u = csv.unit(row, 0, one_based);
        const Value v = parse(csv, row);
        const auto [it, inserted] = values.emplace(u, std::make_pair(v, row.line));
        if (!inserted) {
            csv.fail(row.line, "unit " + std::to_string(u + (one_based ? 1 : 0)) +
                                   " already listed at line " + std::to_string(it->second.second));
        }
    }
    std::vector<Value> dense;
    dense.reserve(values.size());
    for (const auto& [u, entry] : values) {
        if (u != dense.size()) {
            throw InputError(source + ": unit " + std::to_string(dense.size() + (one_based ? 1 : 0)) +
                             " is missing (ids must be contiguous)");
        }
        dense.push_back(entry.first);
    }
    return dense;
}

}  // namespace

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

EdgeList read_edges_csv(std::istream& in, bool one_based, const std::string& source) {
    CsvReader csv(in, source);
    const auto names = csv.header(3);
    EdgeList edges;
    if (names[0] != "i" || names[1] != "j" || (names[2] != "d" && names[2] != "rank")) {
        throw InputError(source + ": expected header 'i,j,d' or 'i,j,rank'");
    }
    edges.format = names[2] == "rank" ? EdgeFormat::rank : EdgeFormat::measure;

    std::map<std::pair<UnitId, UnitId>, std::size_t> first_line;
    Row row;
    while (csv.next(row)) {
        csv.expect_fields(row, 3);
        const UnitId i = csv.unit(row, 0, one_based);
        const UnitId j = csv.unit(row, 1, one_based);
        if (i == j) csv.fail(row.line, "self-interaction for unit " + std::string(row.fields[0]));
        const double d = csv.number(row, 2);
        if (edges.format == EdgeFormat::rank) {
            if (d < 1.0 || d != std::floor(d)) csv.fail(row.line, "rank must be a positive integer");
        } else if (d < 0.0) {
            csv.fail(row.line, "interaction measure must be nonnegative");
        }
        const auto [it, inserted] = first_line.emplace(std::make_pair(i, j), row.line);
        if (!inserted) {
            csv.fail(row.line, "duplicate edge (" + std::string(row.fields[0]) + ", " +
                                   std::string(row.fields[1]) + "), first listed at line " +
                                   std::to_string(it->second));
        }
        edges.measures.push_back({i, j, d});
        edges.max_unit = std::max({edges.max_unit, i, j});
    }
    return edges;
}

std::vector<double> read_outcomes_csv(std::istream& in, bool one_based, const std::string& source) {
    return read_unit_column(in, one_based, source, "y",
                            [](const CsvReader& csv, const Row& row) { return csv.number(row, 1); });
}

TreatmentVector read_treatment_csv(std::istream& in, bool one_based, const std::string& source) {
    auto values = read_unit_column(in, one_based, source, "w", [&](const CsvReader& csv, const Row& row) {
        const auto text = row.fields[1];
        if (text != "0" && text != "1") {
            csv.fail(row.line, "treatment for unit " + std::string(row.fields[0]) + " is '" +
                                   std::string(text) + "', expected 0 or 1");
        }
        return static_cast<unsigned char>(text == "1" ? 1 : 0);
    });
    return TreatmentVector(std::move(values));
}

void write_edges_csv(std::ostream& out, std::span<const Measure> measures, EdgeFormat format,
                     bool one_based) {
    std::vector<Measure> sorted(measures.begin(), measures.end());
    std::sort(sorted.begin(), sorted.end(), [](const Measure& a, const Measure& b) {
        return a.from < b.from || (a.from == b.from && a.to < b.to);
    });
    const std::size_t base = one_based ? 1 : 0;
    out << "i,j," << (format == EdgeFormat::rank ? "rank" : "d") << '\n';
    for (const auto& m : sorted) out << m.from + base << ',' << m.to + base << ',' << format_number(m.d) << '\n';
}

void write_outcomes_csv(std::ostream& out, std::span<const double> outcomes, bool one_based) {
    const std::size_t base = one_based ? 1 : 0;
    out << "unit,y\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) out << i + base << ',' << format_number(outcomes[i]) << '\n';
}

void write_treatment_csv(std::ostream& out, const TreatmentVector& treatment, bool one_based) {
    const std::size_t base = one_based ? 1 : 0;
    out << "unit,w\n";
    for (std::size_t i = 0; i < treatment.n(); ++i) out << i + base << ',' << static_cast<int>(treatment[i]) << '\n';
}

TwoStageDesign read_two_stage_design_csv(std::istream& in, bool one_based, const std::string& source) {
    CsvReader csv(in, source);
    const auto names = csv.header(4);
    if (names != std::vector<std::string>{"unit", "cluster", "arm", "w"}) {
        throw InputError(source + ": expected header 'unit,cluster,arm,w'");
    }
    struct Entry {
        std::size_t cluster;
        Arm arm;
        unsigned char w;
    };
    std::map<UnitId, Entry> rows;
    Row row;
    while (csv.next(row)) {
        csv.expect_fields(row, 4);
        const UnitId u = csv.unit(row, 0, one_based);
        const UnitId cluster = csv.unit(row, 1, false);
        const auto arm_text = lower(row.fields[2]);
        if (arm_text != "cr" && arm_text != "cbr") csv.fail(row.line, "arm must be 'cr' or 'cbr'");
        const auto w_text = row.fields[3];
        if (w_text != "0" && w_text != "1") {
            csv.fail(row.line, "treatment for unit " + std::string(row.fields[0]) + " is '" +
                                   std::string(w_text) + "', expected 0 or 1");
        }
        const Entry e{cluster, arm_text == "cbr" ? Arm::cluster_randomized : Arm::completely_randomized,
                      static_cast<unsigned char>(w_text == "1")};
        if (!rows.emplace(u, e).second) csv.fail(row.line, "unit " + std::string(row.fields[0]) + " listed twice");
    }
    TwoStageDesign d;
    for (const auto& [u, e] : rows) {
        if (u != d.cluster_of.size()) {
            throw InputError(source + ": unit " + std::to_string(d.cluster_of.size() + (one_based ? 1 : 0)) +
                             " is missing (ids must be contiguous)");
        }
        d.cluster_of.push_back(e.cluster);
        d.assignment.arm.push_back(e.arm);
        d.assignment.treatment.push_back(e.w);
    }
    return d;
}

void write_two_stage_design_csv(std::ostream& out, const TwoStageDesign& d, bool one_based) {
    const std::size_t base = one_based ? 1 : 0;
    out << "unit,cluster,arm,w\n";
    for (std::size_t i = 0; i < d.cluster_of.size(); ++i) {
        out << i + base << ',' << d.cluster_of[i] << ','
            << (d.assignment.arm[i] == Arm::cluster_randomized ? "cbr" : "cr") << ','
            << static_cast<int>(d.assignment.treatment[i]) << '\n';
    }
}

AnalysisData ingest(std::istream& edges_in, std::istream& outcomes_in, std::istream& treatment_in,
                    std::size_t k, bool one_based) {
    auto edges = read_edges_csv(edges_in, one_based, "edges");
    auto outcomes = read_outcomes_csv(outcomes_in, one_based, "outcomes");
    auto treatment = read_treatment_csv(treatment_in, one_based, "treatment");
    const std::size_t n = outcomes.size();
    const std::size_t base = one_based ? 1 : 0;
    if (treatment.n() != n) {
        throw InputError("treatment file lists " + std::to_string(treatment.n()) +
                         " units but the outcomes file lists " + std::to_string(n));
    }
    for (const auto& m : edges.measures) {
        if (m.from >= n || m.to >= n) {
            throw InputError("edge (" + std::to_string(m.from + base) + ", " + std::to_string(m.to + base) +
                             ") references a unit missing from the outcomes file");
        }
    }
    AnalysisData data{build_knn_graph(edges.measures, n, k), std::move(treatment), std::move(outcomes),
                      edges.format};
    return data;
}

AnalysisData ingest(const std::string& edge_path, const std::string& outcome_path,
                    const std::string& treatment_path, std::size_t k, bool one_based) {
    auto open = [](const std::string& path) {
        std::ifstream f(path);
        if (!f) throw InputError("cannot open '" + path + "'");
        return f;
    };
    auto e = open(edge_path);
    auto o = open(outcome_path);
    auto t = open(treatment_path);
    return ingest(e, o, t, k, one_based);
}

std::size_t ExposureTable::cell_index(unsigned char own, std::span<const unsigned char> neighbors) {
    std::size_t index = own ? 1 : 0;
    for (unsigned char s : neighbors) index = (index << 1) | (s ? 1U : 0U);
    return index;
}

std::size_t ExposureTable::count(unsigned char own, std::span<const unsigned char> neighbors) const {
    if (neighbors.size() != k) throw PreconditionError("exposure cell needs exactly k neighbour statuses");
    return counts.at(cell_index(own, neighbors));
}

std::size_t ExposureTable::min_count() const {
    return counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
}

ExposureTable tabulate_exposures(const InteractionGraph& graph, const TreatmentVector& treatment,
                                 std::size_t k) {
    if (k == 0) throw PreconditionError("exposure tabulation needs k >= 1");
    if (k > kMaxExposureK) throw PreconditionError("exposure tabulation supports k <= " + std::to_string(kMaxExposureK));
    if (treatment.n() != graph.n()) throw InputError("treatment does not cover the graph's units");

    ExposureTable table;
    table.k = k;
    table.counts.assign(std::size_t{1} << (k + 1), 0);
    std::vector<unsigned char> status(k);
    for (UnitId i = 0; i < graph.n(); ++i) {
        const auto partners = graph.partners(i);
        if (partners.size() < k) continue;
        for (std::size_t l = 0; l < k; ++l) status[l] = treatment[partners[l].unit];
        ++table.counts[ExposureTable::cell_index(treatment[i], status)];
        ++table.n_eligible;
    }
    return table;
}

KRecommendation recommend_k(std::span<const ExposureTable> tables, std::size_t threshold) {
    if (tables.empty()) throw PreconditionError("recommend_k needs at least one candidate table");
    KRecommendation rec;
    for (const auto& t : tables) {
        KCandidate c;
        c.k = t.k;
        c.n_eligible = t.n_eligible;
        c.min_count = t.min_count();
        c.qualifies = !t.empty() && c.min_count >= threshold;
        if (c.qualifies && (!rec.k || c.k > *rec.k)) rec.k = c.k;
        rec.candidates.push_back(c);
    }
    return rec;
}

}  // namespace knnim
