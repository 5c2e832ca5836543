#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "formsim/evaluation.hpp"
#include "formsim/segmentation.hpp"
#include "formsim/store.hpp"
#include "formsim/synthetic.hpp"
#include "formsim/tracking.hpp"

namespace formsim {

struct GlobalOptions {
    std::filesystem::path store = "formsim-store";
    double delta = kDefaultDelta;
    bool role_compensation = true;
    std::uint64_t seed = 7;
    /// Template bank; empty selects the bank shipped with the build.
    std::filesystem::path templates;
};

std::filesystem::path default_templates_path();
/// Loads and validates; a missing file is a ConfigError.
TemplateSet load_templates_or_config_error(const std::filesystem::path& path);

/// Counts and mean (sd) durations by possession and bucket.
std::string segment_count_table(const std::vector<SegmentRecord>& segments);

struct IngestOptions {
    std::filesystem::path input;
    std::string team;
};

struct IngestSummary {
    std::string match_id;
    std::size_t frames = 0;
    std::size_t segments = 0;
};

IngestSummary run_ingest(const GlobalOptions& global, const IngestOptions& options, std::ostream& out);

struct ClassifyOptions {
    /// Accept segments whose roster is not exactly ten outfield players.
    bool permissive = false;
};

struct ClassifySummary {
    std::size_t classified = 0;
    std::size_t rejected = 0;
};

ClassifySummary run_classify(const GlobalOptions& global, const ClassifyOptions& options, std::ostream& out);

struct EvaluateOptions {
    /// JSON Lines or array of annotation records; empty reads the store's log.
    std::filesystem::path annotations;
    /// Defaults to <store>/report.
    std::filesystem::path out_dir;
};

struct EvaluateSummary {
    std::size_t evaluated = 0;
    std::size_t below_clarity = 0;
    std::vector<std::string> unjoinable;
    EvaluationReport report;
};

EvaluateSummary run_evaluate(const GlobalOptions& global, const EvaluateOptions& options, std::ostream& out,
                             std::ostream& err);

struct SynthOptions {
    std::filesystem::path out_dir = ".";
    SyntheticMatchSpec spec;
    TrackingFormat format = TrackingFormat::CSV;
};

/// Writes <match_id>.csv|json, <match_id>.truth.json and <match_id>.annotations.jsonl.
std::vector<std::filesystem::path> run_synth_generate(const GlobalOptions& global, const SynthOptions& options,
                                                      std::ostream& out);

void run_templates_validate(const GlobalOptions& global, std::ostream& out);

}  // namespace formsim
