#include "formsim/formation_similarity.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "formsim/assignment.hpp"
#include "formsim/errors.hpp"

namespace formsim {

using nlohmann::json;

NumericScheme::NumericScheme(std::vector<int> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) throw ContractViolation("a numeric scheme needs at least one group");
    for (int g : groups_)
        if (g <= 0) throw ContractViolation("scheme groups must be positive");
}

NumericScheme NumericScheme::parse(std::string_view text) {
    std::vector<int> groups;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find('-', start), text.size());
        const auto part = text.substr(start, end - start);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size() || value <= 0)
            throw SchemaError(fmt::format("'{}' is not a numeric scheme like 4-4-2", text));
        groups.push_back(value);
        start = end + 1;
    }
    return NumericScheme(std::move(groups));
}

int NumericScheme::players() const { return std::accumulate(groups_.begin(), groups_.end(), 0); }

std::string NumericScheme::str() const { return fmt::format("{}", fmt::join(groups_, "-")); }

const FormationTemplate& TemplateSet::at(std::string_view name) const {
    for (const auto& t : templates)
        if (t.name() == name) return t;
    throw LookupError(fmt::format("scheme '{}' is not in the template bank", name));
}

bool TemplateSet::contains(std::string_view name) const {
    return std::any_of(templates.begin(), templates.end(), [&](const auto& t) { return t.name() == name; });
}

std::vector<std::string> TemplateSet::names() const {
    std::vector<std::string> out;
    for (const auto& t : templates) out.push_back(t.name());
    return out;
}

double ClassificationResult::score_of(std::string_view scheme) const {
    for (const auto& r : ranking)
        if (r.scheme == scheme) return r.fsim;
    return -1.0;
}

bool ClassificationResult::in_top_k(std::string_view scheme, std::size_t k) const {
    const auto limit = std::min(k, ranking.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (ranking[i].scheme == scheme) return true;
    return false;
}

std::size_t TemplateSimilarity::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw LookupError(fmt::format("scheme '{}' is not in the template bank", name));
}

std::vector<std::string> TemplateSimilarity::nearest(std::string_view name, std::size_t k) const {
    const auto self = index_of(name);
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if ((a == self) != (b == self)) return a == self;
        const double sa = table(self, a), sb = table(self, b);
        if (sa != sb) return sa > sb;
        return names[a] < names[b];
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(names[order[i]]);
    return out;
}

NormalizedFormation normalize_formation(const std::vector<Vec2>& roles) {
    if (roles.size() < 2) throw ContractViolation("normalizing a formation needs at least two roles");
    Vec2 lo = roles.front(), hi = roles.front();
    for (const auto& r : roles) {
        lo = {std::min(lo.x, r.x), std::min(lo.y, r.y)};
        hi = {std::max(hi.x, r.x), std::max(hi.y, r.y)};
    }
    constexpr double degenerate = 1e-9;
    const double wx = hi.x - lo.x, wy = hi.y - lo.y;
    NormalizedFormation out;
    out.roles.reserve(roles.size());
    for (const auto& r : roles)
        out.roles.push_back({wx < degenerate ? 0.5 : (r.x - lo.x) / wx, wy < degenerate ? 0.5 : (r.y - lo.y) / wy});
    return out;
}

SimilarityMatrix similarity_matrix(const NormalizedFormation& a, const NormalizedFormation& b, double delta) {
    if (!(delta > 0.0)) throw ContractViolation(fmt::format("tolerance radius must be positive, got {}", delta));
    SimilarityMatrix m;
    m.delta = delta;
    m.entries.resize(static_cast<Eigen::Index>(a.roles.size()), static_cast<Eigen::Index>(b.roles.size()));
    for (std::size_t i = 0; i < a.roles.size(); ++i)
        for (std::size_t j = 0; j < b.roles.size(); ++j)
            m.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::max(1.0 - squared_distance(a.roles[i], b.roles[j]) / delta, 0.0);
    return m;
}

AssignedSimilarity optimal_assignment(const SimilarityMatrix& m) {
    if (m.entries.rows() != m.entries.cols())
        throw ContractViolation(fmt::format("similarity matrix must be square, got {}x{}", m.entries.rows(),
                                            m.entries.cols()));
    const auto solved = solve_max_weight_assignment(m.entries);
    AssignedSimilarity out;
    out.assigned = Eigen::MatrixXd::Zero(m.entries.rows(), m.entries.cols());
    out.row_to_col = solved.row_to_col;
    for (std::size_t i = 0; i < solved.row_to_col.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(solved.row_to_col[i]);
        out.assigned(r, c) = m.entries(r, c);
    }
    out.total = out.assigned.sum();
    return out;
}

FsimResult fsim_detailed(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double delta) {
    if (a.size() != b.size())
        throw ContractViolation(
            fmt::format("FSIM needs equal role counts, got {} and {}", a.size(), b.size()));
    const auto assigned = optimal_assignment(similarity_matrix(normalize_formation(a), normalize_formation(b), delta));
    return {assigned.total / static_cast<double>(a.size()), assigned.row_to_col};
}

double fsim(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double delta) {
    return fsim_detailed(a, b, delta).score;
}

ClassificationResult classify(const std::vector<Vec2>& roles, const TemplateSet& templates, double delta) {
    if (templates.templates.empty()) throw ContractViolation("cannot classify against an empty template bank");
    ClassificationResult result;
    for (const auto& t : templates.templates) {
        RankedScheme best;
        best.scheme = t.name();
        best.fsim = -1.0;
        for (std::size_t v = 0; v < t.variants.size(); ++v) {
            auto r = fsim_detailed(roles, t.variants[v], delta);
            if (r.score > best.fsim) {
                best.fsim = r.score;
                best.variant = v;
                best.row_to_col = std::move(r.row_to_col);
            }
        }
        result.ranking.push_back(std::move(best));
    }
    std::sort(result.ranking.begin(), result.ranking.end(), [](const RankedScheme& a, const RankedScheme& b) {
        if (a.fsim != b.fsim) return a.fsim > b.fsim;
        return a.scheme < b.scheme;
    });
    return result;
}

TemplateSimilarity template_similarity_matrix(const TemplateSet& templates, double delta) {
    TemplateSimilarity out;
    out.names = templates.names();
    const auto t = static_cast<Eigen::Index>(templates.size());
    out.table = Eigen::MatrixXd::Zero(t, t);
    for (Eigen::Index a = 0; a < t; ++a) {
        for (Eigen::Index b = a; b < t; ++b) {
            double best = 0.0;
            for (const auto& va : templates.templates[static_cast<std::size_t>(a)].variants)
                for (const auto& vb : templates.templates[static_cast<std::size_t>(b)].variants)
                    best = std::max(best, fsim(va, vb, delta));
            out.table(a, b) = out.table(b, a) = best;
        }
    }
    return out;
}

NumericScheme reduce_groups(const NumericScheme& scheme, const TemplateSimilarity& table) {
    const auto name = scheme.str();
    table.index_of(name);  // unknown schemes are a lookup error
    if (scheme.groups().size() <= 3) return scheme;
    static const std::map<std::string, std::string> fixed = {
        {"4-2-3-1", "4-5-1"}, {"4-1-4-1", "4-5-1"}, {"4-3-2-1", "4-3-3"}};
    if (const auto it = fixed.find(name); it != fixed.end()) return NumericScheme::parse(it->second);

    const auto row = table.index_of(name);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (NumericScheme::parse(table.names[j]).groups().size() != 3) continue;
        if (!best || table.table(row, j) > table.table(row, *best) ||
            (table.table(row, j) == table.table(row, *best) && table.names[j] < table.names[*best]))
            best = j;
    }
    if (!best) throw LookupError("template bank has no three-group scheme to reduce " + name + " to");
    return NumericScheme::parse(table.names[*best]);
}

void validate_template_set(const TemplateSet& templates) {
    if (templates.templates.empty()) throw SchemaError("template bank is empty");
    if (!(templates.delta_default > 0.0)) throw SchemaError("delta_default must be positive");
    std::set<std::string> seen;
    for (const auto& t : templates.templates) {
        const auto name = t.name();
        if (!seen.insert(name).second) throw SchemaError("duplicate scheme '" + name + "'");
        if (t.scheme.players() != 10) throw SchemaError("scheme '" + name + "' does not sum to ten players");
        if (t.variants.empty()) throw SchemaError("scheme '" + name + "' has no variants");
        for (std::size_t v = 0; v < t.variants.size(); ++v) {
            if (t.variants[v].size() != 10)
                throw SchemaError(fmt::format("scheme '{}' variant {} has {} roles, expected 10", name, v,
                                              t.variants[v].size()));
            for (const auto& p : t.variants[v])
                if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
                    throw SchemaError(fmt::format("scheme '{}' variant {} has a role outside [0,1]^2", name, v));
        }
    }
}

TemplateSet parse_template_set(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("template file: ") + e.what(), 0);
    }
    TemplateSet set;
    try {
        const auto version = doc.at("schema_version").get<std::string>();
        if (version != kTemplateSchema)
            throw SchemaError(fmt::format("unsupported template schema '{}' (expected {})", version, kTemplateSchema));
        set.bank_version = doc.value("bank_version", std::string{});
        set.delta_default = doc.value("delta_default", kDefaultDelta);
        for (const auto& t : doc.at("templates")) {
            FormationTemplate ft;
            ft.scheme = NumericScheme::parse(t.at("name").get<std::string>());
            for (const auto& v : t.at("variants")) {
                std::vector<Vec2> roles;
                for (const auto& p : v) {
                    const auto xy = p.get<std::vector<double>>();
                    if (xy.size() != 2) throw SchemaError("template role must be [x, y]");
                    roles.push_back({xy[0], xy[1]});
                }
                ft.variants.push_back(std::move(roles));
            }
            set.templates.push_back(std::move(ft));
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("template file: ") + e.what());
    }
    validate_template_set(set);
    return set;
}

TemplateSet load_template_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_template_set(buf.str());
}

std::string template_set_to_json(const TemplateSet& templates) {
    json doc;
    doc["schema_version"] = kTemplateSchema;
    doc["bank_version"] = templates.bank_version;
    doc["delta_default"] = templates.delta_default;
    doc["templates"] = json::array();
    for (const auto& t : templates.templates) {
        json variants = json::array();
        for (const auto& v : t.variants) {
            json roles = json::array();
            for (const auto& p : v) roles.push_back({p.x, p.y});
            variants.push_back(std::move(roles));
        }
        doc["templates"].push_back({{"name", t.name()}, {"variants", std::move(variants)}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace formsim
