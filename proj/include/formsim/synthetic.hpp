#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "formsim/evaluation.hpp"
#include "formsim/formation_similarity.hpp"
#include "formsim/segmentation.hpp"
#include "formsim/tracking.hpp"

namespace formsim {

struct DurationRange {
    double min_s = 5.5;
    double max_s = 9.5;
};

/// Recipe for a desk-scale match with known formations per possession episode.
struct SyntheticMatchSpec {
    std::string match_id = "synthetic";
    /// Scheme per phase, cycled. Empty means every scheme of the bank, in bank order.
    std::vector<std::string> schemes;
    /// Per-frame Gaussian jitter of every player, in normalized pitch units.
    double jitter_sigma = 0.0;
    /// Chance that a given pair of outfield players swaps roles within a segment.
    double swap_probability = 0.0;
    /// Disjoint random pairs that always swap in each segment.
    std::size_t scripted_swaps = 0;
    std::array<std::size_t, 3> segments_per_bucket{4, 4, 4};
    std::array<DurationRange, 3> duration_ranges{{{5.5, 9.5}, {10.5, 19.5}, {20.5, 35.0}}};
    double set_piece_probability = 0.25;
    double frame_rate = 25.0;
    double pitch_length = 105.0;
    double pitch_width = 68.0;
    /// Extent of the team shape on the normalized pitch.
    double shape_width = 0.40;
    double shape_depth = 0.35;
    /// Distance the team center travels over one segment.
    double drift = 0.08;

    void validate() const;
};

struct RoleSwap {
    std::string player_a;
    std::string player_b;
    double time_s = 0.0;
};

struct SyntheticSegmentTruth {
    std::string segment_id;
    std::string scheme;
    std::size_t variant = 0;
    Possession possession = Possession::Own;
    DurationClass bucket = DurationClass::Short;
    std::int64_t first_frame = 0;
    std::int64_t last_frame = 0;
    std::vector<RoleSwap> swaps;
};

struct SyntheticMatch {
    RawMatchFile raw;
    std::string observed_team = "home";
    std::vector<SyntheticSegmentTruth> truth;
};

/// Deterministic for a given (spec, templates, seed).
SyntheticMatch generate_synthetic_match(const SyntheticMatchSpec& spec, const TemplateSet& templates,
                                        std::uint64_t seed);

std::string truth_to_json(const SyntheticMatch& match, std::uint64_t seed);
/// One very-clear annotation per segment, labelled with the generating scheme.
std::vector<AnnotationRecord> annotations_from_truth(const SyntheticMatch& match,
                                                     const std::string& annotator = "synthetic");

}  // namespace formsim
