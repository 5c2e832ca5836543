#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "formsim/tracking.hpp"

namespace formsim {

enum class Possession { Own, Opponent };
enum class DurationClass { Short, Mid, Long };

std::string to_string(Possession p);
std::string to_string(DurationClass d);
Possession parse_possession(std::string_view text);
DurationClass parse_duration_class(std::string_view text);

struct SegmentationConfig {
    double min_duration_s = 5.0;
    double throw_in_window_s = 5.0;
    /// Applies to free kicks, corners and penalties.
    double set_piece_window_s = 10.0;
    /// Boundary slack for duration comparisons; absorbs frame-time rounding.
    double boundary_epsilon_s = 1e-9;
};

/// A possession episode of the observed team or its opponent.
struct Segment {
    std::string id;
    std::string match_id;
    Possession possession = Possession::Own;
    std::vector<Frame> frames;
    double duration = 0.0;
    DurationClass bucket = DurationClass::Short;
    /// True when some running frames had no possession and inherited it.
    bool possession_imputed = false;

    std::int64_t first_frame() const { return frames.front().index; }
    std::int64_t last_frame() const { return frames.back().index; }
    /// Maximal runs of consecutive frame indices covered by the segment.
    std::vector<std::pair<std::int64_t, std::int64_t>> frame_runs() const;
};

/// Stable segment identifier derived from the match and first frame index.
std::string make_segment_id(std::string_view match_id, std::int64_t first_frame);

DurationClass bucket(double duration_s, const SegmentationConfig& config = {});

std::vector<Frame> filter_running(const std::vector<Frame>& frames);

/// Drops frames inside [event time, event time + window) after set pieces.
std::vector<Frame> trim_set_pieces(const std::vector<Frame>& frames, const SegmentationConfig& config = {});

/// Cuts cleaned frames into runs of constant possession. Trimmed gaps do not
/// split a run; a half change or possession change does.
std::vector<Segment> segment_by_possession(const std::vector<Frame>& frames, std::string_view observed_team,
                                           std::string_view match_id, const SegmentationConfig& config = {});

/// trim_set_pieces, then filter_running, then segment_by_possession.
std::vector<Segment> segment_match(const std::vector<Frame>& frames, std::string_view observed_team,
                                   std::string_view match_id, const SegmentationConfig& config = {});

}  // namespace formsim
