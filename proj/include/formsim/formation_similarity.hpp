#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "formsim/geometry.hpp"
#include "formsim/role_assignment.hpp"

namespace formsim {

inline constexpr double kDefaultDelta = 1.0 / 3.0;
inline constexpr std::string_view kTemplateSchema = "formsim-templates/1";

/// Group counts from defense to attack, e.g. {4, 2, 3, 1}.
class NumericScheme {
public:
    NumericScheme() = default;
    explicit NumericScheme(std::vector<int> groups);
    /// Parses "4-2-3-1". Throws SchemaError on malformed text.
    static NumericScheme parse(std::string_view text);

    const std::vector<int>& groups() const { return groups_; }
    int players() const;
    int defenders() const { return groups_.empty() ? 0 : groups_.front(); }
    std::string str() const;

    friend bool operator==(const NumericScheme&, const NumericScheme&) = default;
    friend auto operator<=>(const NumericScheme& a, const NumericScheme& b) { return a.str() <=> b.str(); }

private:
    std::vector<int> groups_;
};

/// Role positions rescaled per axis into [0, 1].
struct NormalizedFormation {
    std::vector<Vec2> roles;
};

struct SimilarityMatrix {
    Eigen::MatrixXd entries;
    double delta = kDefaultDelta;
};

struct AssignedSimilarity {
    /// Assigned entries kept, all others zeroed.
    Eigen::MatrixXd assigned;
    std::vector<std::size_t> row_to_col;
    double total = 0.0;
};

struct FsimResult {
    double score = 0.0;
    /// Role i of the first formation is matched to role row_to_col[i] of the second.
    std::vector<std::size_t> row_to_col;
};

struct FormationTemplate {
    NumericScheme scheme;
    std::vector<std::vector<Vec2>> variants;

    std::string name() const { return scheme.str(); }
};

struct TemplateSet {
    std::string bank_version;
    double delta_default = kDefaultDelta;
    std::vector<FormationTemplate> templates;

    std::size_t size() const { return templates.size(); }
    /// Throws LookupError for unknown names.
    const FormationTemplate& at(std::string_view name) const;
    bool contains(std::string_view name) const;
    std::vector<std::string> names() const;
};

struct RankedScheme {
    std::string scheme;
    double fsim = 0.0;
    /// Variant that produced the score and the role correspondence to it.
    std::size_t variant = 0;
    std::vector<std::size_t> row_to_col;
};

struct ClassificationResult {
    std::vector<RankedScheme> ranking;

    const RankedScheme& best() const { return ranking.front(); }
    /// Score for a scheme, or a negative value when it is not ranked.
    double score_of(std::string_view scheme) const;
    /// True when `scheme` is among the first k entries.
    bool in_top_k(std::string_view scheme, std::size_t k) const;
};

/// Symmetric scheme-by-scheme FSIM table, in template order.
struct TemplateSimilarity {
    std::vector<std::string> names;
    Eigen::MatrixXd table;

    std::size_t index_of(std::string_view name) const;
    double at(std::string_view a, std::string_view b) const { return table(index_of(a), index_of(b)); }
    /// The k schemes nearest to `name`: itself first, then by descending FSIM, ties by name.
    std::vector<std::string> nearest(std::string_view name, std::size_t k) const;
};

NormalizedFormation normalize_formation(const std::vector<Vec2>& roles);
inline NormalizedFormation normalize_formation(const Formation& f) { return normalize_formation(f.roles); }

SimilarityMatrix similarity_matrix(const NormalizedFormation& a, const NormalizedFormation& b,
                                   double delta = kDefaultDelta);

AssignedSimilarity optimal_assignment(const SimilarityMatrix& m);

FsimResult fsim_detailed(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double delta = kDefaultDelta);
double fsim(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double delta = kDefaultDelta);
inline double fsim(const Formation& a, const Formation& b, double delta = kDefaultDelta) {
    return fsim(a.roles, b.roles, delta);
}

/// Ranks every scheme by its best variant; ties resolve by scheme name.
ClassificationResult classify(const std::vector<Vec2>& roles, const TemplateSet& templates,
                              double delta = kDefaultDelta);
inline ClassificationResult classify(const Formation& f, const TemplateSet& templates,
                                     double delta = kDefaultDelta) {
    return classify(f.roles, templates, delta);
}

TemplateSimilarity template_similarity_matrix(const TemplateSet& templates, double delta = kDefaultDelta);

/// Reduces a scheme to three groups. Three-group schemes map to themselves,
/// 4-2-3-1 and 4-1-4-1 to 4-5-1, 4-3-2-1 to 4-3-3; any other four-group
/// scheme to its most similar three-group scheme in the table.
NumericScheme reduce_groups(const NumericScheme& scheme, const TemplateSimilarity& table);

/// Template bank I/O. Loading validates: unique names, >= 1 variant,
/// ten roles per variant, groups summing to ten, coordinates in [0, 1].
TemplateSet parse_template_set(std::string_view json_text);
TemplateSet load_template_set(const std::filesystem::path& path);
std::string template_set_to_json(const TemplateSet& templates);
void validate_template_set(const TemplateSet& templates);

}  // namespace formsim
