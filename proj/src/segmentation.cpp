#include "formsim/segmentation.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "formsim/errors.hpp"

namespace formsim {

std::string to_string(Possession p) { return p == Possession::Own ? "own" : "opponent"; }

std::string to_string(DurationClass d) {
    switch (d) {
        case DurationClass::Short: return "short";
        case DurationClass::Mid: return "mid";
        case DurationClass::Long: return "long";
    }
    return "short";
}

Possession parse_possession(std::string_view text) {
    if (text == "own") return Possession::Own;
    if (text == "opponent") return Possession::Opponent;
    throw SchemaError(fmt::format("unknown possession '{}'", text));
}

DurationClass parse_duration_class(std::string_view text) {
    if (text == "short") return DurationClass::Short;
    if (text == "mid") return DurationClass::Mid;
    if (text == "long") return DurationClass::Long;
    throw SchemaError(fmt::format("unknown duration bucket '{}'", text));
}

std::vector<std::pair<std::int64_t, std::int64_t>> Segment::frame_runs() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    for (const auto& f : frames) {
        if (!runs.empty() && runs.back().second + 1 == f.index) runs.back().second = f.index;
        else runs.emplace_back(f.index, f.index);
    }
    return runs;
}

std::string make_segment_id(std::string_view match_id, std::int64_t first_frame) {
    return fmt::format("{}-s{:07d}", match_id, first_frame);
}

DurationClass bucket(double duration_s, const SegmentationConfig& config) {
    const double eps = config.boundary_epsilon_s;
    if (duration_s < config.min_duration_s - eps)
        throw ContractViolation(fmt::format("duration {} s is below the {} s minimum", duration_s,
                                            config.min_duration_s));
    if (duration_s >= 20.0 - eps) return DurationClass::Long;
    if (duration_s >= 10.0 - eps) return DurationClass::Mid;
    return DurationClass::Short;
}

std::vector<Frame> filter_running(const std::vector<Frame>& frames) {
    std::vector<Frame> out;
    std::copy_if(frames.begin(), frames.end(), std::back_inserter(out),
                 [](const Frame& f) { return f.status == GameStatus::Running; });
    return out;
}

std::vector<Frame> trim_set_pieces(const std::vector<Frame>& frames, const SegmentationConfig& config) {
    std::vector<Frame> out;
    out.reserve(frames.size());
    double blocked_until = -1e300;
    for (const auto& f : frames) {
        if (f.event && *f.event != EventKind::Other) {
            const double window =
                *f.event == EventKind::ThrowIn ? config.throw_in_window_s : config.set_piece_window_s;
            blocked_until = std::max(blocked_until, f.time + window);
        }
        // Half-open window; the eps keeps t = event + window on the kept side.
        if (f.time < blocked_until - config.boundary_epsilon_s) continue;
        out.push_back(f);
    }
    return out;
}

std::vector<Segment> segment_by_possession(const std::vector<Frame>& frames, std::string_view observed_team,
                                           std::string_view match_id, const SegmentationConfig& config) {
    std::vector<Segment> out;
    Segment current;
    std::optional<std::string> holder;
    int half = 0;
    bool imputed = false;

    auto flush = [&] {
        if (current.frames.empty()) return;
        current.duration = current.frames.back().time - current.frames.front().time;
        if (current.duration >= config.min_duration_s - config.boundary_epsilon_s) {
            current.bucket = bucket(current.duration, config);
            current.match_id = std::string(match_id);
            current.id = make_segment_id(match_id, current.first_frame());
            current.possession_imputed = imputed;
            out.push_back(std::move(current));
        }
        current = Segment{};
        imputed = false;
    };

    for (const auto& f : frames) {
        if (f.status != GameStatus::Running) continue;
        std::optional<std::string> owner = f.possession;
        bool missing = false;
        if (!owner) {
            if (!holder || f.half != half) continue;  // nothing to continue from
            owner = holder;
            missing = true;
        }
        if (!holder || *owner != *holder || f.half != half) {
            flush();
            holder = owner;
            half = f.half;
            current.possession = *owner == observed_team ? Possession::Own : Possession::Opponent;
        }
        imputed = imputed || missing;
        current.frames.push_back(f);
    }
    flush();
    return out;
}

std::vector<Segment> segment_match(const std::vector<Frame>& frames, std::string_view observed_team,
                                   std::string_view match_id, const SegmentationConfig& config) {
    return segment_by_possession(filter_running(trim_set_pieces(frames, config)), observed_team, match_id, config);
}

}  // namespace formsim
