#pragma once

// File ingestion and exposure tabulation for real-data analyses.
//
// Edge lists are CSV with header `i,j,d` (interaction measure) or `i,j,rank`
// (rank 1..10 used directly as the measure). Outcomes are `unit,y`, treatments
// `unit,w`. Unit ids are 1-based unless the caller asks for 0-based ids.
// Diagnostics carry the source name and 1-based line number.

#include "knnim/design2s.hpp"
#include "knnim/graph.hpp"
#include "knnim/stats.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace knnim {

enum class EdgeFormat { measure, rank };

struct EdgeList {
    std::vector<Measure> measures;  // 0-based ids, file order
    EdgeFormat format = EdgeFormat::measure;
    std::size_t max_unit = 0;        // largest 0-based id referenced
};

EdgeList read_edges_csv(std::istream& in, bool one_based = true, const std::string& source = "edges");
std::vector<double> read_outcomes_csv(std::istream& in, bool one_based = true,
                                      const std::string& source = "outcomes");
TreatmentVector read_treatment_csv(std::istream& in, bool one_based = true,
                                   const std::string& source = "treatment");

// Canonical output: rows sorted by (i, j), shortest round-trip number format.
void write_edges_csv(std::ostream& out, std::span<const Measure> measures,
                     EdgeFormat format = EdgeFormat::measure, bool one_based = true);
void write_outcomes_csv(std::ostream& out, std::span<const double> outcomes, bool one_based = true);
void write_treatment_csv(std::ostream& out, const TreatmentVector& treatment, bool one_based = true);

std::string format_number(double value);

// Two-stage design files: `unit,cluster,arm,w` with arm "cr" or "cbr" and
// 0-based cluster ids.
struct TwoStageDesign {
    TwoStageAssignment assignment;
    std::vector<std::size_t> cluster_of;
};
TwoStageDesign read_two_stage_design_csv(std::istream& in, bool one_based = true,
                                         const std::string& source = "design");
void write_two_stage_design_csv(std::ostream& out, const TwoStageDesign& design, bool one_based = true);

struct AnalysisData {
    InteractionGraph graph;
    TreatmentVector treatment;
    std::vector<double> outcomes;
    EdgeFormat edge_format = EdgeFormat::measure;
};

// Reads the three files and builds the KNN graph. The unit universe is the
// set of ids in the outcomes file, which must be contiguous from the base id;
// the treatment file must list exactly the same units and every edge must
// reference known units.
AnalysisData ingest(const std::string& edge_path, const std::string& outcome_path,
                    const std::string& treatment_path, std::size_t k, bool one_based = true);
AnalysisData ingest(std::istream& edges, std::istream& outcomes, std::istream& treatment,
                    std::size_t k, bool one_based = true);

// Counts of eligible units (>= k measured partners) in each exposure cell
// (W_i, W_i(1), ..., W_i(k)).
struct ExposureTable {
    std::size_t k = 0;
    std::vector<std::size_t> counts;  // 2^(k+1) cells, see cell_index
    std::size_t n_eligible = 0;

    // own treatment is the most significant bit, then rank 1 .. rank k.
    static std::size_t cell_index(unsigned char own, std::span<const unsigned char> neighbors);
    std::size_t count(unsigned char own, std::span<const unsigned char> neighbors) const;
    std::size_t min_count() const;
    bool empty() const { return n_eligible == 0; }
};

inline constexpr std::size_t kMaxExposureK = 16;

ExposureTable tabulate_exposures(const InteractionGraph& graph, const TreatmentVector& treatment,
                                 std::size_t k);

struct KCandidate {
    std::size_t k = 0;
    std::size_t min_count = 0;
    std::size_t n_eligible = 0;
    bool qualifies = false;
};

struct KRecommendation {
    std::optional<std::size_t> k;
    std::vector<KCandidate> candidates;
};

inline constexpr std::size_t kDefaultExposureThreshold = 30;

// Largest candidate k whose smallest exposure cell holds at least `threshold`
// units. Throws PreconditionError on an empty candidate list.
KRecommendation recommend_k(std::span<const ExposureTable> tables,
                            std::size_t threshold = kDefaultExposureThreshold);

}  // namespace knnim
