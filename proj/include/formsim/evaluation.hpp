#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "formsim/formation_similarity.hpp"
#include "formsim/segmentation.hpp"

namespace formsim {

enum class Clarity { EntirelyAmbiguous, Ambiguous, Clear, VeryClear };
enum class VfsRating { Bad, Neutral, Good };

std::string to_string(Clarity c);
std::string to_string(VfsRating r);
/// Accepts the snake_case spellings ("very_clear"). Throws SchemaError otherwise.
Clarity parse_clarity(std::string_view text);
VfsRating parse_vfs_rating(std::string_view text);

/// An annotated label: a numeric scheme, "other" or "undefined".
class AnnotationLabel {
public:
    AnnotationLabel() = default;
    static AnnotationLabel parse(std::string_view text);
    static AnnotationLabel of(const NumericScheme& s) { return AnnotationLabel(s.str()); }

    bool is_scheme() const { return value_ != "other" && value_ != "undefined"; }
    const std::string& str() const { return value_; }
    friend bool operator==(const AnnotationLabel&, const AnnotationLabel&) = default;

private:
    explicit AnnotationLabel(std::string v) : value_(std::move(v)) {}
    std::string value_ = "undefined";
};

struct AnnotationRecord {
    std::string segment_id;
    std::string annotator_id;
    AnnotationLabel label;
    Clarity clarity = Clarity::Ambiguous;
    std::optional<VfsRating> vfs_rating;
    /// Position in the append-only log; later revisions win per annotator.
    std::int64_t seq = 0;
};

// ---------------------------------------------------------------- baselines

struct KMeansResult {
    NumericScheme scheme;
    std::vector<double> centroids;
    /// Fewer than k non-empty clusters survived.
    bool degenerate = false;
};

/// 1-D k-means on the roles' y coordinates. Centroids start at the k
/// quantiles of the sorted values; Lloyd iterations run to convergence.
/// Clusters are reported from defense (low y) to attack.
KMeansResult kmeans_baseline(const std::vector<Vec2>& roles, std::size_t k = 3);

using Ranking = std::vector<std::string>;

struct TrivialBaselines {
    std::vector<Ranking> random_guess;  // full random permutation of the classes per item
    std::vector<Ranking> constant;      // single-entry ranking
};

TrivialBaselines trivial_baselines(std::size_t items, const std::vector<std::string>& classes, std::uint64_t seed,
                                   std::string_view constant_scheme = "4-4-2");

Ranking ranking_names(const ClassificationResult& result);

// ---------------------------------------------------------------- accuracy

enum class AverageMode { Micro, Macro };

struct ScoredItem {
    Ranking ranking;
    std::string reference;
};

/// Micro: fraction of items whose reference is in the top k. Macro: mean of
/// per-class accuracies over the classes present among the references.
double topk_accuracy(const std::vector<ScoredItem>& items, std::size_t k, AverageMode mode);

/// Picks the bank label with the higher FSIM to the VFS among several
/// annotations. Falls back to the first label when none is a bank scheme.
std::string select_reference(const ClassificationResult& result, const std::vector<AnnotationLabel>& labels);

// ---------------------------------------------------------------- agreement

/// Nominal Krippendorff's alpha from the coincidence matrix. Units with a
/// single value are not pairable and drop out. Returns nullopt when no unit
/// is pairable. With no label variation at all, alpha is reported as 1.
std::optional<double> krippendorff_alpha(const std::vector<std::vector<std::string>>& units);
std::optional<double> krippendorff_alpha(const std::vector<AnnotationRecord>& annotations);

using LabelPair = std::pair<std::string, std::string>;

/// Mean template-to-template FSIM over annotated pairs.
double fsim_agreement(const std::vector<LabelPair>& pairs, const TemplateSimilarity& table);
/// Fraction of pairs where either label is within the other's k nearest templates.
double topk_agreement(const std::vector<LabelPair>& pairs, const TemplateSimilarity& table, std::size_t k);

struct ConfusionMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXi counts;
    /// Row-normalized to percent; rows without samples stay zero.
    Eigen::MatrixXd percent;
};

ConfusionMatrix confusion_matrix(const std::vector<std::string>& predictions, const std::vector<std::string>& truths,
                                 const std::vector<std::string>& labels);

// ---------------------------------------------------------------- report

/// One evaluated segment with everything the report needs.
struct EvaluationItem {
    std::string segment_id;
    Possession possession = Possession::Own;
    DurationClass bucket = DurationClass::Short;
    ClassificationResult with_rc;
    ClassificationResult without_rc;
    NumericScheme kmeans;
    /// Latest label per annotator.
    std::vector<AnnotationLabel> labels;
    std::vector<std::optional<VfsRating>> ratings;
};

struct CellReport {
    std::string possession;  // own, opponent, all
    std::string bucket;      // short, mid, long, all
    std::size_t scenes = 0;
    /// Scenes whose reference is a bank scheme and therefore scored.
    std::size_t scored = 0;
    std::vector<double> micro;  // index k-1, k = 1..5
    std::vector<double> macro;
    double mean_fsim = 0.0;
    std::size_t co_annotated = 0;
    std::optional<double> alpha;
    std::optional<double> agreement_fsim;
    std::vector<double> agreement_topk;  // k = 1, 3, 5
    std::size_t ratings = 0;
    std::vector<double> rating_share;  // bad, neutral, good
};

struct BaselineRow {
    std::size_t groups = 4;  // |G|
    std::string method;
    std::optional<double> macro_top1, macro_top3, micro_top1, micro_top3;
};

struct EvaluationReport {
    std::vector<CellReport> cells;
    std::vector<BaselineRow> baselines;
    ConfusionMatrix confusion;
    std::size_t unscored = 0;
    std::vector<std::string> notes;
};

struct ReportOptions {
    std::size_t max_k = 5;
    std::uint64_t seed = 7;
};

EvaluationReport build_report(const std::vector<EvaluationItem>& items, const TemplateSet& templates,
                              const TemplateSimilarity& table, const ReportOptions& options = {});

/// Plain-text tables in a possession x duration grid.
std::string render_report_tables(const EvaluationReport& report);
std::string report_to_json(const EvaluationReport& report);
std::string confusion_to_csv(const ConfusionMatrix& m);

}  // namespace formsim
