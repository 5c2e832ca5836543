#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formsim/geometry.hpp"

namespace formsim {

inline constexpr std::string_view kTrackingSchema = "formsim-tracking/1";

enum class GameStatus { Running, Interrupted };
enum class EventKind { ThrowIn, FreeKick, Corner, Penalty, Other };
enum class AttackDirection { BottomToTop, TopToBottom };
enum class TrackingFormat { CSV, JSON };

std::string to_string(GameStatus status);
std::string to_string(EventKind kind);
std::string to_string(AttackDirection direction);
GameStatus parse_game_status(std::string_view text);
/// Unknown event names map to EventKind::Other.
EventKind parse_event_kind(std::string_view text);
AttackDirection parse_attack_direction(std::string_view text);

struct TeamInfo {
    std::string id;
    /// Roster of every player that may appear for this team (substitutes included).
    std::vector<std::string> players;
    /// Direction of attack in raw pitch coordinates, index 0 = first half.
    std::optional<AttackDirection> attack[2];
};

/// One player sample in raw pitch meters. `x_m` runs along the touchline
/// (goal to goal, 0..pitch_length) and `y_m` across the pitch (0..pitch_width).
struct RawPlayerSample {
    std::string team_id;
    std::string player_id;
    double x_m = 0.0;
    double y_m = 0.0;
    bool is_goalkeeper = false;
};

struct RawFrame {
    std::int64_t index = 0;
    double time_s = 0.0;
    std::optional<Vec2> ball;  // raw meters, same axes as player samples
    std::optional<std::string> possession_team;
    GameStatus status = GameStatus::Running;
    std::optional<EventKind> event;
    std::vector<RawPlayerSample> players;
};

struct RawMatchFile {
    std::string schema_version{kTrackingSchema};
    std::string match_id;
    double pitch_length = 105.0;
    double pitch_width = 68.0;
    double frame_rate = 25.0;
    /// Frames with index >= this value belong to the second half.
    std::int64_t second_half_start_frame = INT64_MAX;
    std::vector<TeamInfo> teams;
    std::vector<RawFrame> frames;

    const TeamInfo& team(std::string_view id) const;
};

/// Parses a tracking file. Frames come back sorted by index; their time
/// stamps must then be strictly increasing.
RawMatchFile parse_tracking_file(std::istream& source, TrackingFormat format);
RawMatchFile parse_tracking_file(std::string_view text, TrackingFormat format);
TrackingFormat detect_tracking_format(std::string_view path);

/// Serializes into the documented formats. Deterministic for a given input.
void write_tracking_csv(const RawMatchFile& match, std::ostream& out);
void write_tracking_json(const RawMatchFile& match, std::ostream& out);

/// A frame in the canonical pitch frame: x in [0, nominal_ratio] across the
/// pitch, y in [0, 1] from the observed team's own goal to the opponent's.
struct Frame {
    std::int64_t index = 0;
    double time = 0.0;
    int half = 1;
    /// Observed team's outfield players.
    std::map<std::string, Vec2> players;
    std::optional<Vec2> goalkeeper;
    std::map<std::string, Vec2> opponents;
    std::optional<Vec2> ball;
    std::optional<std::string> possession;
    GameStatus status = GameStatus::Running;
    std::optional<EventKind> event;
    /// Set when at least one position had to be clamped into the pitch.
    bool clamped = false;
};

struct NormalizationConfig {
    /// Width/length ratio the x axis is scaled to. Pitches wider than this are rejected.
    double nominal_ratio = 0.7;
};

std::vector<Frame> normalize_coordinates(const RawMatchFile& raw, std::string_view observed_team,
                                         const NormalizationConfig& config = {});

}  // namespace formsim
