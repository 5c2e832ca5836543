#include "formsim/commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "formsim/errors.hpp"
#include "formsim/render.hpp"
#include "formsim/role_assignment.hpp"

#ifndef FORMSIM_DEFAULT_TEMPLATES
#define FORMSIM_DEFAULT_TEMPLATES "data/templates.json"
#endif

namespace formsim {

namespace fs = std::filesystem;

std::filesystem::path default_templates_path() { return FORMSIM_DEFAULT_TEMPLATES; }

TemplateSet load_templates_or_config_error(const fs::path& path) {
    const auto p = path.empty() ? default_templates_path() : path;
    if (!fs::exists(p)) throw ConfigError("template file not found: " + p.string());
    auto set = load_template_set(p);
    validate_template_set(set);
    return set;
}

std::string segment_count_table(const std::vector<SegmentRecord>& segments) {
    struct Stats {
        std::size_t n = 0;
        double sum = 0.0, sum_sq = 0.0;
        void add(double d) {
            ++n;
            sum += d;
            sum_sq += d * d;
        }
        std::string str() const {
            if (n == 0) return fmt::format("{:>5}  {:>15}", 0, "-");
            const double mean = sum / static_cast<double>(n);
            const double var = n > 1 ? (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1) : 0.0;
            return fmt::format("{:>5}  {:>15}", n, fmt::format("{:.2f} ({:.2f})", mean, std::sqrt(std::max(var, 0.0))));
        }
    };
    std::map<std::pair<int, int>, Stats> grid;  // (possession, bucket), 2 and 3 mean "all"
    for (const auto& s : segments) {
        const int p = static_cast<int>(s.possession), b = static_cast<int>(s.bucket);
        for (int pp : {p, 2})
            for (int bb : {b, 3}) grid[{pp, bb}].add(s.duration_s);
    }
    std::string out = fmt::format("{:<10} {:<6} {:>5}  {:>15}\n", "possession", "bucket", "n", "mean (sd) [s]");
    const char* possession[] = {"own", "opponent", "all"};
    const char* bucket[] = {"short", "mid", "long", "all"};
    for (int p = 0; p < 3; ++p)
        for (int b = 0; b < 4; ++b) {
            if (p == 2 && b != 3) continue;
            out += fmt::format("{:<10} {:<6} {}\n", possession[p], bucket[b], grid[{p, b}].str());
        }
    return out;
}

// ---------------------------------------------------------------- ingest

IngestSummary run_ingest(const GlobalOptions& global, const IngestOptions& options, std::ostream& out) {
    if (!fs::is_regular_file(options.input)) throw Error("input file not found: " + options.input.string());
    if (options.team.empty()) throw ContractViolation("observed team is required");

    // Everything is parsed and segmented before the store is touched.
    std::ifstream in(options.input, std::ios::binary);
    if (!in) throw Error("cannot open " + options.input.string());
    RawMatchFile raw;
    try {
        raw = parse_tracking_file(in, detect_tracking_format(options.input.string()));
    } catch (const ParseError& e) {
        throw ParseError(options.input.string() + ": " + e.what(), 0);
    } catch (const SchemaError& e) {
        throw SchemaError(options.input.string() + ": " + e.what());
    } catch (const IntegrityError& e) {
        throw IntegrityError(options.input.string() + ": " + e.what());
    }
    if (raw.match_id.empty()) throw SchemaError(options.input.string() + ": match_id is empty");
    const auto frames = normalize_coordinates(raw, options.team);
    const auto segments = segment_match(frames, options.team, raw.match_id);

    MatchRecord record;
    record.match_id = raw.match_id;
    record.observed_team = options.team;
    record.source = options.input.filename().string();
    record.frame_rate = raw.frame_rate;
    record.frames = frames.size();
    record.segments = segments.size();

    ProjectStore store(global.store);
    store.write_match(record, frames, segments);

    std::vector<SegmentRecord> records;
    for (const auto& s : segments) records.push_back(SegmentRecord::from_segment(s));
    fmt::print(out, "match {}: {} frames, {} segments (observed team {})\n", record.match_id, record.frames,
               record.segments, record.observed_team);
    out << segment_count_table(records);
    return {record.match_id, record.frames, record.segments};
}

// ---------------------------------------------------------------- classify

ClassifySummary run_classify(const GlobalOptions& global, const ClassifyOptions& options, std::ostream& out) {
    const auto templates = load_templates_or_config_error(global.templates);
    if (!(global.delta > 0.0)) throw ContractViolation("delta must be positive");
    ProjectStore store(global.store);
    if (store.match_ids().empty()) throw ConfigError("store " + global.store.string() + " holds no ingested match");

    VfsOptions vfs_options;
    vfs_options.role_compensation = global.role_compensation;
    vfs_options.permissive = options.permissive;

    ClassifySummary summary;
    for (const auto& match_id : store.match_ids()) {
        const auto frames = store.frames(match_id);
        std::vector<Formation> vfs;
        std::vector<ClassificationRecord> classifications;
        std::vector<RejectedSegment> rejected;
        for (const auto& record : store.segments(match_id)) {
            try {
                const auto segment = store.load_segment(record, frames);
                auto formation = compute_vfs(segment, vfs_options);
                if (formation.n() != templates.templates.front().variants.front().size())
                    throw IntegrityError(fmt::format("{} roles do not match the template role count", formation.n()));
                ClassificationRecord c;
                c.segment_id = record.id;
                c.delta = global.delta;
                c.role_compensation = global.role_compensation;
                c.templates_version = templates.bank_version;
                c.result = classify(formation, templates, global.delta);
                vfs.push_back(std::move(formation));
                classifications.push_back(std::move(c));
            } catch (const IntegrityError& e) {
                rejected.push_back({record.id, e.what()});
            } catch (const ContractViolation& e) {
                rejected.push_back({record.id, e.what()});
            }
        }
        store.write_classifications(match_id, vfs, classifications, rejected);
        summary.classified += classifications.size();
        summary.rejected += rejected.size();

        std::map<std::string, std::size_t> best;
        for (const auto& c : classifications) ++best[c.result.best().scheme];
        fmt::print(out, "match {}: {} classified, {} rejected\n", match_id, classifications.size(), rejected.size());
        for (const auto& [scheme, n] : best) fmt::print(out, "  {:<8} {}\n", scheme, n);
    }
    store.write_templates(templates);
    fmt::print(out, "delta {:.6g}, role compensation {}, templates {}\n", global.delta,
               global.role_compensation ? "on" : "off", templates.bank_version);
    return summary;
}

// ---------------------------------------------------------------- evaluate

namespace {

std::vector<AnnotationRecord> read_annotation_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw Error("annotation file not found: " + path.string());
    std::vector<AnnotationRecord> out;
    std::int64_t seq = 0;
    for (const auto& j : read_json_records(path)) {
        auto a = annotation_from_json(j);
        // Without explicit sequence numbers, file order decides revisions.
        ++seq;
        if (a.seq == 0) a.seq = seq;
        out.push_back(std::move(a));
    }
    return out;
}

/// Latest revision per annotator, ordered by annotator id.
std::vector<AnnotationRecord> latest_per_annotator(std::vector<AnnotationRecord> records) {
    std::map<std::string, AnnotationRecord> latest;
    for (auto& r : records) {
        auto it = latest.find(r.annotator_id);
        if (it == latest.end() || it->second.seq <= r.seq) latest[r.annotator_id] = std::move(r);
    }
    std::vector<AnnotationRecord> out;
    for (auto& [id, r] : latest) out.push_back(std::move(r));
    return out;
}

}  // namespace

EvaluateSummary run_evaluate(const GlobalOptions& global, const EvaluateOptions& options, std::ostream& out,
                             std::ostream& err) {
    ProjectStore store(global.store);
    const auto stored_templates = store.templates();
    if (!stored_templates) throw ConfigError("store " + global.store.string() + " has not been classified yet");
    const auto& templates = *stored_templates;
    const auto table = template_similarity_matrix(templates, global.delta);

    const auto annotations =
        options.annotations.empty() ? store.annotations() : read_annotation_file(options.annotations);

    std::map<std::string, std::vector<AnnotationRecord>> by_segment;
    for (const auto& a : annotations) by_segment[a.segment_id].push_back(a);

    EvaluateSummary summary;
    std::map<std::string, std::pair<std::string, SegmentRecord>> known;  // segment id -> (match, record)
    for (const auto& m : store.match_ids())
        for (auto& s : store.segments(m)) {
            auto id = s.id;
            known.emplace(std::move(id), std::pair{m, std::move(s)});
        }

    std::map<std::string, std::vector<std::string>> wanted;  // match -> segment ids passing the filter
    std::map<std::string, std::vector<AnnotationRecord>> latest;
    for (auto& [segment_id, records] : by_segment) {
        if (!known.count(segment_id)) {
            summary.unjoinable.push_back(segment_id);
            continue;
        }
        auto l = latest_per_annotator(records);
        const bool clear = std::any_of(l.begin(), l.end(), [](const AnnotationRecord& a) {
            return a.clarity == Clarity::Clear || a.clarity == Clarity::VeryClear;
        });
        if (!clear) {
            ++summary.below_clarity;
            continue;
        }
        wanted[known.at(segment_id).first].push_back(segment_id);
        latest.emplace(segment_id, std::move(l));
    }
    if (!summary.unjoinable.empty()) {
        fmt::print(err, "warning: {} annotated segment id(s) not found in the store, excluded:\n",
                   summary.unjoinable.size());
        for (const auto& id : summary.unjoinable) fmt::print(err, "  {}\n", id);
    }

    VfsOptions with_rc, without_rc;
    without_rc.role_compensation = false;
    std::vector<EvaluationItem> items;
    std::vector<std::string> unclassifiable;
    for (const auto& [match_id, ids] : wanted) {
        const auto frames = store.frames(match_id);
        for (const auto& id : ids) {
            const auto& record = known.at(id).second;
            EvaluationItem item;
            item.segment_id = id;
            item.possession = record.possession;
            item.bucket = record.bucket;
            try {
                const auto segment = store.load_segment(record, frames);
                const auto vfs = compute_vfs(segment, with_rc);
                item.with_rc = classify(vfs, templates, global.delta);
                item.without_rc = classify(compute_vfs(segment, without_rc), templates, global.delta);
                item.kmeans = kmeans_baseline(vfs.roles).scheme;
            } catch (const IntegrityError&) {
                unclassifiable.push_back(id);
                continue;
            } catch (const ContractViolation&) {
                unclassifiable.push_back(id);
                continue;
            }
            for (const auto& a : latest.at(id)) {
                item.labels.push_back(a.label);
                item.ratings.push_back(a.vfs_rating);
            }
            items.push_back(std::move(item));
        }
    }
    std::sort(items.begin(), items.end(),
              [](const EvaluationItem& a, const EvaluationItem& b) { return a.segment_id < b.segment_id; });
    summary.evaluated = items.size();

    if (items.empty())
        fmt::print(err, "warning: evaluation set is empty; no annotated segment was marked clear or very clear\n");
    if (!unclassifiable.empty())
        fmt::print(err, "warning: {} annotated segment(s) could not be classified, excluded\n", unclassifiable.size());

    ReportOptions report_options;
    report_options.seed = global.seed;
    summary.report = build_report(items, templates, table, report_options);
    auto& notes = summary.report.notes;
    notes.push_back(fmt::format("{} annotated segment(s) below the clarity filter", summary.below_clarity));
    if (!summary.unjoinable.empty())
        notes.push_back(fmt::format("{} unjoinable annotation id(s) excluded: {}", summary.unjoinable.size(),
                                    fmt::join(summary.unjoinable, ", ")));
    if (!unclassifiable.empty())
        notes.push_back(fmt::format("{} unclassifiable segment(s) excluded: {}", unclassifiable.size(),
                                    fmt::join(unclassifiable, ", ")));
    if (items.empty()) notes.push_back("evaluation set is empty");

    const auto dir = options.out_dir.empty() ? global.store / "report" : options.out_dir;
    write_file_atomic(dir / "report.json", report_to_json(summary.report));
    const auto tables = render_report_tables(summary.report);
    write_file_atomic(dir / "report.txt", tables);
    write_file_atomic(dir / "confusion.csv", confusion_to_csv(summary.report.confusion));
    write_file_atomic(dir / "confusion.svg", render_confusion_svg(summary.report.confusion));
    out << tables;
    fmt::print(out, "report written to {}\n", dir.string());
    return summary;
}

// ---------------------------------------------------------------- synth

std::vector<fs::path> run_synth_generate(const GlobalOptions& global, const SynthOptions& options,
                                         std::ostream& out) {
    const auto templates = load_templates_or_config_error(global.templates);
    const auto match = generate_synthetic_match(options.spec, templates, global.seed);

    const auto stem = options.out_dir / match.raw.match_id;
    auto data_path = stem;
    data_path += options.format == TrackingFormat::CSV ? ".csv" : ".json";
    auto truth_path = stem;
    truth_path += ".truth.json";
    auto annotations_path = stem;
    annotations_path += ".annotations.jsonl";

    std::ostringstream data;
    if (options.format == TrackingFormat::CSV)
        write_tracking_csv(match.raw, data);
    else
        write_tracking_json(match.raw, data);
    std::string annotations;
    for (const auto& a : annotations_from_truth(match)) annotations += to_json(a).dump() + "\n";

    write_file_atomic(data_path, data.str());
    write_file_atomic(truth_path, truth_to_json(match, global.seed));
    write_file_atomic(annotations_path, annotations);
    fmt::print(out, "{} frames, {} segments, observed team {}\n", match.raw.frames.size(), match.truth.size(),
               match.observed_team);
    for (const auto& p : {data_path, truth_path, annotations_path}) fmt::print(out, "wrote {}\n", p.string());
    return {data_path, truth_path, annotations_path};
}

// ---------------------------------------------------------------- templates

void run_templates_validate(const GlobalOptions& global, std::ostream& out) {
    const auto templates = load_templates_or_config_error(global.templates);
    const auto table = template_similarity_matrix(templates, global.delta);
    std::size_t variants = 0;
    for (const auto& t : templates.templates) variants += t.variants.size();
    fmt::print(out, "bank {}: {} schemes, {} variants, delta {:.6g}\n", templates.bank_version, templates.size(),
               variants, global.delta);
    std::string header = fmt::format("{:<8}", "");
    for (const auto& n : table.names) header += fmt::format(" {:>7}", n);
    out << header << '\n';
    for (std::size_t i = 0; i < table.names.size(); ++i) {
        std::string row = fmt::format("{:<8}", table.names[i]);
        for (std::size_t j = 0; j < table.names.size(); ++j)
            row += fmt::format(" {:>7.3f}", table.table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        out << row << '\n';
    }
    for (const auto& t : templates.templates) {
        if (t.scheme.groups().size() != 4) continue;
        fmt::print(out, "{} reduces to {}\n", t.name(), reduce_groups(t.scheme, table).str());
    }
}

}  // namespace formsim
