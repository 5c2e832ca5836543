#include "formsim/evaluation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "formsim/errors.hpp"

namespace formsim {

using nlohmann::json;

std::string to_string(Clarity c) {
    switch (c) {
        case Clarity::EntirelyAmbiguous: return "entirely_ambiguous";
        case Clarity::Ambiguous: return "ambiguous";
        case Clarity::Clear: return "clear";
        case Clarity::VeryClear: return "very_clear";
    }
    return "ambiguous";
}

std::string to_string(VfsRating r) {
    switch (r) {
        case VfsRating::Bad: return "bad";
        case VfsRating::Neutral: return "neutral";
        case VfsRating::Good: return "good";
    }
    return "neutral";
}

Clarity parse_clarity(std::string_view text) {
    if (text == "entirely_ambiguous") return Clarity::EntirelyAmbiguous;
    if (text == "ambiguous") return Clarity::Ambiguous;
    if (text == "clear") return Clarity::Clear;
    if (text == "very_clear") return Clarity::VeryClear;
    throw SchemaError(fmt::format(
        "clarity '{}' is not one of entirely_ambiguous, ambiguous, clear, very_clear", text));
}

VfsRating parse_vfs_rating(std::string_view text) {
    if (text == "bad") return VfsRating::Bad;
    if (text == "neutral") return VfsRating::Neutral;
    if (text == "good") return VfsRating::Good;
    throw SchemaError(fmt::format("vfs rating '{}' is not one of bad, neutral, good", text));
}

AnnotationLabel AnnotationLabel::parse(std::string_view text) {
    if (text == "other" || text == "undefined") return AnnotationLabel(std::string(text));
    return AnnotationLabel(NumericScheme::parse(text).str());
}

// ---------------------------------------------------------------- baselines

KMeansResult kmeans_baseline(const std::vector<Vec2>& roles, std::size_t k) {
    if (k == 0) throw ContractViolation("k-means needs k >= 1");
    if (roles.size() < k)
        throw ContractViolation(fmt::format("k-means with k={} needs at least k roles, got {}", k, roles.size()));
    std::vector<double> ys;
    for (const auto& r : roles) ys.push_back(r.y);
    std::sort(ys.begin(), ys.end());

    const auto n = ys.size();
    std::vector<double> centroids(k);
    for (std::size_t c = 0; c < k; ++c)
        centroids[c] = ys[std::min(n - 1, static_cast<std::size_t>((static_cast<double>(c) + 0.5) * n / k))];

    std::vector<std::size_t> label(n, 0);
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c)
                if (std::abs(ys[i] - centroids[c]) < std::abs(ys[i] - centroids[best])) best = c;
            if (best != label[i]) {
                label[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[label[i]] += ys[i];
            ++count[label[i]];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (count[c]) centroids[c] = sum[c] / static_cast<double>(count[c]);
    }

    std::vector<std::pair<double, int>> clusters;
    for (std::size_t c = 0; c < k; ++c) {
        const auto size = std::count(label.begin(), label.end(), c);
        if (size) clusters.emplace_back(centroids[c], static_cast<int>(size));
    }
    std::sort(clusters.begin(), clusters.end());
    KMeansResult out;
    std::vector<int> groups;
    for (const auto& [centroid, size] : clusters) {
        out.centroids.push_back(centroid);
        groups.push_back(size);
    }
    out.scheme = NumericScheme(std::move(groups));
    out.degenerate = clusters.size() < k;
    return out;
}

TrivialBaselines trivial_baselines(std::size_t items, const std::vector<std::string>& classes, std::uint64_t seed,
                                   std::string_view constant_scheme) {
    if (classes.empty()) throw ContractViolation("trivial baselines need at least one class");
    TrivialBaselines out;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < items; ++i) {
        Ranking r = classes;
        std::shuffle(r.begin(), r.end(), rng);
        out.random_guess.push_back(std::move(r));
        out.constant.push_back({std::string(constant_scheme)});
    }
    return out;
}

Ranking ranking_names(const ClassificationResult& result) {
    Ranking out;
    for (const auto& r : result.ranking) out.push_back(r.scheme);
    return out;
}

// ---------------------------------------------------------------- accuracy

double topk_accuracy(const std::vector<ScoredItem>& items, std::size_t k, AverageMode mode) {
    if (items.empty()) throw ContractViolation("top-k accuracy of an empty set is undefined");
    if (k == 0) throw ContractViolation("k must be at least 1");
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
    std::size_t hits = 0;
    for (const auto& item : items) {
        if (k > item.ranking.size())
            throw ContractViolation(fmt::format("k={} exceeds ranking length {}", k, item.ranking.size()));
        const bool hit = std::find(item.ranking.begin(), item.ranking.begin() + static_cast<long>(k),
                                   item.reference) != item.ranking.begin() + static_cast<long>(k);
        hits += hit;
        auto& c = per_class[item.reference];
        c.first += hit;
        ++c.second;
    }
    if (mode == AverageMode::Micro) return static_cast<double>(hits) / static_cast<double>(items.size());
    double sum = 0.0;
    for (const auto& [_, c] : per_class) sum += static_cast<double>(c.first) / static_cast<double>(c.second);
    return sum / static_cast<double>(per_class.size());
}

std::string select_reference(const ClassificationResult& result, const std::vector<AnnotationLabel>& labels) {
    if (labels.empty()) throw ContractViolation("no annotation to select a reference from");
    const AnnotationLabel* best = nullptr;
    double best_score = -1.0;
    for (const auto& l : labels) {
        if (!l.is_scheme()) continue;
        const double s = result.score_of(l.str());
        if (!best || s > best_score || (s == best_score && l.str() < best->str())) {
            best = &l;
            best_score = s;
        }
    }
    return best ? best->str() : labels.front().str();
}

// ---------------------------------------------------------------- agreement

std::optional<double> krippendorff_alpha(const std::vector<std::vector<std::string>>& units) {
    std::map<std::pair<std::string, std::string>, double> coincidence;
    std::map<std::string, double> marginal;
    bool pairable = false;
    for (const auto& unit : units) {
        const auto m = unit.size();
        if (m < 2) continue;
        pairable = true;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (i != j) coincidence[{unit[i], unit[j]}] += w;
    }
    if (!pairable) return std::nullopt;
    double n = 0.0, observed = 0.0;
    for (const auto& [ck, o] : coincidence) {
        marginal[ck.first] += o;
        n += o;
        if (ck.first != ck.second) observed += o;
    }
    double expected = 0.0;
    for (const auto& [c, nc] : marginal)
        for (const auto& [k, nk] : marginal)
            if (c != k) expected += nc * nk;
    if (expected == 0.0) return 1.0;
    return 1.0 - (n - 1.0) * observed / expected;
}

namespace {

/// Latest record per (segment, annotator), grouped by segment in id order.
std::map<std::string, std::vector<const AnnotationRecord*>> latest_by_segment(
    const std::vector<AnnotationRecord>& annotations) {
    std::map<std::pair<std::string, std::string>, const AnnotationRecord*> latest;
    for (const auto& a : annotations) {
        auto& slot = latest[{a.segment_id, a.annotator_id}];
        if (!slot || a.seq >= slot->seq) slot = &a;
    }
    std::map<std::string, std::vector<const AnnotationRecord*>> out;
    for (const auto& [key, rec] : latest) out[key.first].push_back(rec);
    return out;
}

}  // namespace

std::optional<double> krippendorff_alpha(const std::vector<AnnotationRecord>& annotations) {
    std::vector<std::vector<std::string>> units;
    for (const auto& [_, recs] : latest_by_segment(annotations)) {
        std::vector<std::string> unit;
        for (const auto* r : recs) unit.push_back(r->label.str());
        units.push_back(std::move(unit));
    }
    return krippendorff_alpha(units);
}

double fsim_agreement(const std::vector<LabelPair>& pairs, const TemplateSimilarity& table) {
    if (pairs.empty()) throw ContractViolation("FSIM agreement of an empty pair list is undefined");
    double sum = 0.0;
    for (const auto& [a, b] : pairs) sum += table.at(a, b);
    return sum / static_cast<double>(pairs.size());
}

double topk_agreement(const std::vector<LabelPair>& pairs, const TemplateSimilarity& table, std::size_t k) {
    if (pairs.empty()) throw ContractViolation("top-k agreement of an empty pair list is undefined");
    std::size_t hits = 0;
    for (const auto& [a, b] : pairs) {
        const auto near_a = table.nearest(a, k);
        const auto near_b = table.nearest(b, k);
        const bool hit = std::find(near_a.begin(), near_a.end(), b) != near_a.end() ||
                         std::find(near_b.begin(), near_b.end(), a) != near_b.end();
        hits += hit;
    }
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

ConfusionMatrix confusion_matrix(const std::vector<std::string>& predictions, const std::vector<std::string>& truths,
                                 const std::vector<std::string>& labels) {
    if (predictions.size() != truths.size())
        throw ContractViolation("confusion matrix needs one prediction per truth");
    auto index = [&](const std::string& s) {
        const auto it = std::find(labels.begin(), labels.end(), s);
        if (it == labels.end()) throw LookupError("label '" + s + "' is not in the label set");
        return static_cast<Eigen::Index>(it - labels.begin());
    };
    const auto t = static_cast<Eigen::Index>(labels.size());
    ConfusionMatrix m;
    m.labels = labels;
    m.counts = Eigen::MatrixXi::Zero(t, t);
    for (std::size_t i = 0; i < truths.size(); ++i) ++m.counts(index(truths[i]), index(predictions[i]));
    m.percent = Eigen::MatrixXd::Zero(t, t);
    for (Eigen::Index r = 0; r < t; ++r) {
        const double total = m.counts.row(r).sum();
        if (total > 0) m.percent.row(r) = m.counts.row(r).cast<double>() * (100.0 / total);
    }
    return m;
}

// ---------------------------------------------------------------- report

namespace {

Ranking reduce_ranking(const Ranking& r, const TemplateSimilarity& table) {
    Ranking out;
    for (const auto& s : r) {
        auto reduced = reduce_groups(NumericScheme::parse(s), table).str();
        if (std::find(out.begin(), out.end(), reduced) == out.end()) out.push_back(std::move(reduced));
    }
    return out;
}

std::optional<double> maybe_topk(const std::vector<ScoredItem>& items, std::size_t k, AverageMode mode) {
    if (items.empty()) return std::nullopt;
    for (const auto& i : items)
        if (i.ranking.size() < k) return std::nullopt;
    return topk_accuracy(items, k, mode);
}

CellReport make_cell(std::string possession, std::string bucket, const std::vector<const EvaluationItem*>& items,
                     const TemplateSimilarity& table, std::size_t max_k) {
    CellReport cell;
    cell.possession = std::move(possession);
    cell.bucket = std::move(bucket);
    cell.scenes = items.size();

    std::vector<ScoredItem> scored;
    double fsim_sum = 0.0;
    std::vector<std::vector<std::string>> units;
    std::vector<LabelPair> pairs;
    std::array<std::size_t, 3> ratings{};
    for (const auto* item : items) {
        const auto ref = select_reference(item->with_rc, item->labels);
        if (table.names.end() != std::find(table.names.begin(), table.names.end(), ref)) {
            scored.push_back({ranking_names(item->with_rc), ref});
            fsim_sum += item->with_rc.score_of(ref);
        }
        if (item->labels.size() >= 2) {
            std::vector<std::string> unit;
            for (const auto& l : item->labels) unit.push_back(l.str());
            units.push_back(std::move(unit));
            if (item->labels[0].is_scheme() && item->labels[1].is_scheme())
                pairs.emplace_back(item->labels[0].str(), item->labels[1].str());
        }
        for (const auto& r : item->ratings)
            if (r) ++ratings[static_cast<std::size_t>(*r)];
    }
    cell.scored = scored.size();
    for (std::size_t k = 1; k <= max_k; ++k) {
        cell.micro.push_back(maybe_topk(scored, k, AverageMode::Micro).value_or(0.0));
        cell.macro.push_back(maybe_topk(scored, k, AverageMode::Macro).value_or(0.0));
    }
    cell.mean_fsim = scored.empty() ? 0.0 : fsim_sum / static_cast<double>(scored.size());
    cell.co_annotated = units.size();
    cell.alpha = krippendorff_alpha(units);
    if (!pairs.empty()) {
        cell.agreement_fsim = fsim_agreement(pairs, table);
        for (std::size_t k : {1u, 3u, 5u}) cell.agreement_topk.push_back(topk_agreement(pairs, table, k));
    }
    cell.ratings = ratings[0] + ratings[1] + ratings[2];
    for (auto r : ratings)
        cell.rating_share.push_back(cell.ratings ? static_cast<double>(r) / static_cast<double>(cell.ratings) : 0.0);
    return cell;
}

BaselineRow baseline_row(std::size_t groups, std::string method, const std::vector<ScoredItem>& items) {
    BaselineRow row;
    row.groups = groups;
    row.method = std::move(method);
    row.macro_top1 = maybe_topk(items, 1, AverageMode::Macro);
    row.macro_top3 = maybe_topk(items, 3, AverageMode::Macro);
    row.micro_top1 = maybe_topk(items, 1, AverageMode::Micro);
    row.micro_top3 = maybe_topk(items, 3, AverageMode::Micro);
    return row;
}

}  // namespace

EvaluationReport build_report(const std::vector<EvaluationItem>& items, const TemplateSet& templates,
                              const TemplateSimilarity& table, const ReportOptions& options) {
    EvaluationReport report;
    const std::size_t max_k = std::min(options.max_k, templates.size());

    for (const auto possession : {Possession::Own, Possession::Opponent}) {
        std::vector<const EvaluationItem*> all;
        for (const auto bucket_value : {DurationClass::Short, DurationClass::Mid, DurationClass::Long}) {
            std::vector<const EvaluationItem*> cell;
            for (const auto& i : items)
                if (i.possession == possession && i.bucket == bucket_value) cell.push_back(&i);
            all.insert(all.end(), cell.begin(), cell.end());
            report.cells.push_back(make_cell(to_string(possession), to_string(bucket_value), cell, table, max_k));
        }
        report.cells.push_back(make_cell(to_string(possession), "all", all, table, max_k));
    }
    std::vector<const EvaluationItem*> everything;
    for (const auto& i : items) everything.push_back(&i);
    report.cells.push_back(make_cell("all", "all", everything, table, max_k));

    // Items whose reference is a bank scheme feed the comparison tables.
    std::vector<const EvaluationItem*> scored;
    std::vector<std::string> refs;
    for (const auto& i : items) {
        auto ref = select_reference(i.with_rc, i.labels);
        if (!templates.contains(ref)) {
            ++report.unscored;
            continue;
        }
        scored.push_back(&i);
        refs.push_back(std::move(ref));
    }

    std::vector<std::string> predictions;
    for (const auto* i : scored) predictions.push_back(i->with_rc.best().scheme);
    report.confusion = confusion_matrix(predictions, refs, templates.names());

    if (!scored.empty()) {
        const auto names4 = templates.names();
        std::vector<std::string> names3;
        for (const auto& n : names4) {
            auto r = reduce_groups(NumericScheme::parse(n), table).str();
            if (std::find(names3.begin(), names3.end(), r) == names3.end()) names3.push_back(std::move(r));
        }
        const auto trivial4 = trivial_baselines(scored.size(), names4, options.seed);
        const auto trivial3 = trivial_baselines(scored.size(), names3, options.seed);
        std::vector<ScoredItem> rnd3, const3, km3, norc3, rc3, rnd4, const4, norc4, rc4;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            const auto& item = *scored[i];
            const auto& ref4 = refs[i];
            const auto ref3 = reduce_groups(NumericScheme::parse(ref4), table).str();
            rnd4.push_back({trivial4.random_guess[i], ref4});
            const4.push_back({trivial4.constant[i], ref4});
            norc4.push_back({ranking_names(item.without_rc), ref4});
            rc4.push_back({ranking_names(item.with_rc), ref4});
            rnd3.push_back({trivial3.random_guess[i], ref3});
            const3.push_back({trivial3.constant[i], ref3});
            km3.push_back({{item.kmeans.str()}, ref3});
            norc3.push_back({reduce_ranking(ranking_names(item.without_rc), table), ref3});
            rc3.push_back({reduce_ranking(ranking_names(item.with_rc), table), ref3});
        }
        report.baselines = {baseline_row(3, "Random guess", rnd3),   baseline_row(3, "Always 4-4-2", const3),
                            baseline_row(3, "K-means", km3),         baseline_row(3, "Ours without RC", norc3),
                            baseline_row(3, "Ours with RC", rc3),   baseline_row(4, "Random guess", rnd4),
                            baseline_row(4, "Always 4-4-2", const4), baseline_row(4, "Ours without RC", norc4),
                            baseline_row(4, "Ours with RC", rc4)};
    }

    report.notes.push_back(
        "Macro accuracy averages per-class accuracy over the classes present among the references.");
    report.notes.push_back(
        "With two annotations, the reference is the annotated scheme whose template has the higher FSIM to the VFS.");
    if (report.unscored)
        report.notes.push_back(fmt::format("{} scene(s) whose reference is 'other' or 'undefined' are excluded "
                                           "from accuracy, FSIM and confusion counts.",
                                           report.unscored));
    return report;
}

namespace {

std::string cell_value(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "---"; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string render_report_tables(const EvaluationReport& report) {
    std::ostringstream out;
    const auto& cells = report.cells;
    auto header = [&] {
        out << fmt::format("{:<24}", "possession / duration");
        for (const auto& c : cells)
            out << fmt::format("{:>14}", fmt::format("{} {} ({})", c.possession == "opponent" ? "opp" : c.possession,
                                                     c.bucket, c.scenes));
        out << '\n';
    };
    auto row = [&](const std::string& label, auto getter) {
        out << fmt::format("{:<24}", label);
        for (const auto& c : cells) out << fmt::format("{:>14}", cell_value(getter(c)));
        out << '\n';
    };

    out << "Classification accuracy\n";
    header();
    const std::size_t kmax = cells.empty() ? 0 : cells.front().micro.size();
    for (std::size_t k = 0; k < kmax; ++k)
        row(fmt::format("Macro top-{}", k + 1), [k](const CellReport& c) -> std::optional<double> {
            return c.scored ? std::optional(c.macro[k]) : std::nullopt;
        });
    for (std::size_t k = 0; k < kmax; ++k)
        row(fmt::format("Micro top-{}", k + 1), [k](const CellReport& c) -> std::optional<double> {
            return c.scored ? std::optional(c.micro[k]) : std::nullopt;
        });
    row("FSIM to reference", [](const CellReport& c) -> std::optional<double> {
        return c.scored ? std::optional(c.mean_fsim) : std::nullopt;
    });

    out << "\nAnnotator agreement\n";
    header();
    row("Co-annotated scenes", [](const CellReport& c) -> std::optional<double> {
        return static_cast<double>(c.co_annotated);
    });
    const std::size_t ks[] = {1, 3, 5};
    for (std::size_t i = 0; i < 3; ++i)
        row(fmt::format("Top-{}", ks[i]), [i](const CellReport& c) -> std::optional<double> {
            return i < c.agreement_topk.size() ? std::optional(c.agreement_topk[i]) : std::nullopt;
        });
    row("FSIM", [](const CellReport& c) { return c.agreement_fsim; });
    row("Krippendorff's alpha", [](const CellReport& c) { return c.alpha; });

    out << "\nVFS ratings\n";
    header();
    const char* names[] = {"Bad", "Neutral", "Good"};
    for (std::size_t i = 0; i < 3; ++i)
        row(names[i], [i](const CellReport& c) -> std::optional<double> {
            return c.ratings ? std::optional(c.rating_share[i]) : std::nullopt;
        });

    out << "\nComparison with baselines\n";
    out << fmt::format("{:<4}{:<20}{:>12}{:>12}{:>12}{:>12}\n", "|G|", "Method", "Macro top-1", "Macro top-3",
                       "Micro top-1", "Micro top-3");
    for (const auto& b : report.baselines)
        out << fmt::format("{:<4}{:<20}{:>12}{:>12}{:>12}{:>12}\n", b.groups, b.method, cell_value(b.macro_top1),
                           cell_value(b.macro_top3), cell_value(b.micro_top1), cell_value(b.micro_top3));
    if (!report.notes.empty()) {
        out << '\n';
        for (const auto& n : report.notes) out << "* " << n << '\n';
    }
    return out.str();
}

std::string report_to_json(const EvaluationReport& report) {
    json doc;
    doc["schema_version"] = "formsim-report/1";
    doc["cells"] = json::array();
    for (const auto& c : report.cells) {
        json jc;
        jc["possession"] = c.possession;
        jc["bucket"] = c.bucket;
        jc["scenes"] = c.scenes;
        jc["scored"] = c.scored;
        jc["micro_topk"] = c.micro;
        jc["macro_topk"] = c.macro;
        jc["mean_fsim"] = c.mean_fsim;
        jc["co_annotated"] = c.co_annotated;
        jc["krippendorff_alpha"] = optional_json(c.alpha);
        jc["agreement_fsim"] = optional_json(c.agreement_fsim);
        jc["agreement_topk"] = {{"1", c.agreement_topk.size() > 0 ? json(c.agreement_topk[0]) : json(nullptr)},
                                {"3", c.agreement_topk.size() > 1 ? json(c.agreement_topk[1]) : json(nullptr)},
                                {"5", c.agreement_topk.size() > 2 ? json(c.agreement_topk[2]) : json(nullptr)}};
        jc["ratings"] = c.ratings;
        jc["rating_share"] = {{"bad", c.rating_share[0]}, {"neutral", c.rating_share[1]}, {"good", c.rating_share[2]}};
        doc["cells"].push_back(std::move(jc));
    }
    doc["baselines"] = json::array();
    for (const auto& b : report.baselines)
        doc["baselines"].push_back({{"groups", b.groups},
                                    {"method", b.method},
                                    {"macro_top1", optional_json(b.macro_top1)},
                                    {"macro_top3", optional_json(b.macro_top3)},
                                    {"micro_top1", optional_json(b.micro_top1)},
                                    {"micro_top3", optional_json(b.micro_top3)}});
    json counts = json::array(), percent = json::array();
    for (Eigen::Index r = 0; r < report.confusion.counts.rows(); ++r) {
        json cr = json::array(), pr = json::array();
        for (Eigen::Index c = 0; c < report.confusion.counts.cols(); ++c) {
            cr.push_back(report.confusion.counts(r, c));
            pr.push_back(report.confusion.percent(r, c));
        }
        counts.push_back(std::move(cr));
        percent.push_back(std::move(pr));
    }
    doc["confusion"] = {{"labels", report.confusion.labels}, {"counts", counts}, {"percent", percent}};
    doc["unscored"] = report.unscored;
    doc["notes"] = report.notes;
    return doc.dump(2) + "\n";
}

std::string confusion_to_csv(const ConfusionMatrix& m) {
    std::ostringstream out;
    out << "truth\\prediction";
    for (const auto& l : m.labels) out << ',' << l;
    out << '\n';
    for (Eigen::Index r = 0; r < m.percent.rows(); ++r) {
        out << m.labels[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < m.percent.cols(); ++c) out << ',' << fmt::format("{:.2f}", m.percent(r, c));
        out << '\n';
    }
    return out.str();
}

}  // namespace formsim
