#include "formsim/tracking.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "formsim/errors.hpp"

namespace formsim {
namespace {

using nlohmann::json;

std::string lower_compact(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '_' || c == '-' || c == ' ') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(s.substr(start)));
            return out;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
}

double parse_double(std::string_view text, std::size_t line, std::string_view field) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw ParseError(fmt::format("invalid number '{}' in column {}", text, field), line);
    return value;
}

std::int64_t parse_int(std::string_view text, std::size_t line, std::string_view field) {
    std::int64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(fmt::format("invalid integer '{}' in column {}", text, field), line);
    return value;
}

bool parse_bool(std::string_view text, std::size_t line, std::string_view field) {
    const auto v = lower_compact(text);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no" || v.empty()) return false;
    throw ParseError(fmt::format("invalid boolean '{}' in column {}", text, field), line);
}

/// Column lookup for one CSV section header.
class ColumnMap {
public:
    ColumnMap(std::string_view header, std::vector<std::string_view> required, std::string_view section,
              std::size_t line) {
        const auto names = split(header, ',');
        for (std::size_t i = 0; i < names.size(); ++i) index_[std::string(names[i])] = i;
        width_ = names.size();
        for (auto name : required) {
            if (!index_.contains(std::string(name)))
                throw SchemaError(
                    fmt::format("line {}: section [{}] is missing required column '{}'", line, section, name));
        }
    }
    std::size_t width() const { return width_; }
    std::size_t operator[](std::string_view name) const { return index_.at(std::string(name)); }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t width_ = 0;
};

struct PendingFrame {
    RawFrame frame;
    bool has_sidecar = false;
    bool has_time = false;
    std::size_t line = 0;
};

void validate_metadata(const RawMatchFile& m) {
    if (m.schema_version != kTrackingSchema)
        throw SchemaError(fmt::format("unsupported schema version '{}' (expected {})", m.schema_version,
                                      kTrackingSchema));
    if (!(m.pitch_length > 0.0) || !(m.pitch_width > 0.0))
        throw SchemaError("pitch dimensions must be positive");
    if (!(m.frame_rate > 0.0)) throw SchemaError("frame_rate must be positive");
    std::set<std::string> ids;
    for (const auto& t : m.teams) {
        if (!ids.insert(t.id).second) throw SchemaError("duplicate team id '" + t.id + "'");
        std::set<std::string> players(t.players.begin(), t.players.end());
        if (players.size() != t.players.size()) throw SchemaError("duplicate player in roster of " + t.id);
    }
}

/// Roster, team and ordering checks shared by both formats; sorts frames.
void finalize_frames(RawMatchFile& m, std::vector<PendingFrame> pending) {
    std::unordered_map<std::string, std::set<std::string>> rosters;
    for (const auto& t : m.teams) rosters[t.id] = {t.players.begin(), t.players.end()};

    std::sort(pending.begin(), pending.end(),
              [](const PendingFrame& a, const PendingFrame& b) { return a.frame.index < b.frame.index; });
    m.frames.clear();
    m.frames.reserve(pending.size());
    for (auto& p : pending) {
        if (!p.has_sidecar)
            throw SchemaError(fmt::format("frame {} has positions but no frame record", p.frame.index));
        if (!p.has_time)
            throw SchemaError(fmt::format("line {}: frame {} has no player positions", p.line, p.frame.index));
        std::unordered_map<std::string, std::set<std::string>> seen;
        for (const auto& s : p.frame.players) {
            const auto roster = rosters.find(s.team_id);
            if (roster == rosters.end())
                throw SchemaError(fmt::format("frame {}: unknown team '{}'", p.frame.index, s.team_id));
            if (!roster->second.contains(s.player_id))
                throw SchemaError(fmt::format("frame {}: player '{}' is not in the declared roster of '{}'",
                                              p.frame.index, s.player_id, s.team_id));
            if (!seen[s.team_id].insert(s.player_id).second)
                throw SchemaError(fmt::format("frame {}: player '{}' appears twice", p.frame.index, s.player_id));
        }
        if (p.frame.possession_team && !rosters.contains(*p.frame.possession_team))
            throw SchemaError(
                fmt::format("frame {}: unknown possession team '{}'", p.frame.index, *p.frame.possession_team));
        if (!m.frames.empty() && !(p.frame.time_s > m.frames.back().time_s))
            throw IntegrityError(fmt::format("frame {}: time stamp {} does not increase (previous {})",
                                             p.frame.index, p.frame.time_s, m.frames.back().time_s));
        m.frames.push_back(std::move(p.frame));
    }
}

std::optional<std::string> optional_text(std::string_view v) {
    if (v.empty()) return std::nullopt;
    return std::string(v);
}

RawMatchFile parse_csv(std::istream& in) {
    RawMatchFile m;
    m.schema_version.clear();
    enum class Section { Header, Frames, Positions } section = Section::Header;
    std::optional<ColumnMap> frame_cols;
    std::optional<ColumnMap> pos_cols;
    bool expect_header = false;
    std::map<std::int64_t, PendingFrame> frames;

    std::string raw_line;
    std::size_t line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        const auto line = trim(raw_line);
        if (line.empty()) continue;
        if (section == Section::Header && line.front() == '#') {
            const auto body = line.substr(1);
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;  // free-form comment
            const auto key = trim(body.substr(0, eq));
            const auto value = trim(body.substr(eq + 1));
            if (key == "schema_version") {
                m.schema_version = value;
            } else if (key == "match_id") {
                m.match_id = value;
            } else if (key == "pitch_length") {
                m.pitch_length = parse_double(value, line_no, key);
            } else if (key == "pitch_width") {
                m.pitch_width = parse_double(value, line_no, key);
            } else if (key == "frame_rate") {
                m.frame_rate = parse_double(value, line_no, key);
            } else if (key == "second_half_start_frame") {
                m.second_half_start_frame = parse_int(value, line_no, key);
            } else if (key == "team") {
                TeamInfo team;
                const auto parts = split(value, ';');
                team.id = parts.at(0);
                for (std::size_t i = 1; i < parts.size(); ++i) {
                    const auto kv = parts[i].find('=');
                    if (kv == std::string_view::npos) throw ParseError("expected key=value in team header", line_no);
                    const auto k = trim(parts[i].substr(0, kv));
                    const auto v = trim(parts[i].substr(kv + 1));
                    if (k == "attack") {
                        const auto dirs = split(v, ',');
                        if (dirs.size() > 2) throw ParseError("at most two attack directions", line_no);
                        for (std::size_t h = 0; h < dirs.size(); ++h)
                            if (!dirs[h].empty()) team.attack[h] = parse_attack_direction(dirs[h]);
                    } else if (k == "players") {
                        for (auto p : split(v, ','))
                            if (!p.empty()) team.players.emplace_back(p);
                    }
                }
                if (team.id.empty()) throw ParseError("empty team id", line_no);
                m.teams.push_back(std::move(team));
            }
            continue;
        }
        if (line == "[frames]") {
            if (m.schema_version.empty()) throw SchemaError("missing schema_version header");
            validate_metadata(m);
            section = Section::Frames;
            expect_header = true;
            continue;
        }
        if (line == "[positions]") {
            if (m.schema_version.empty()) throw SchemaError("missing schema_version header");
            validate_metadata(m);
            section = Section::Positions;
            expect_header = true;
            continue;
        }
        if (section == Section::Header)
            throw ParseError("data row before any [frames] or [positions] section", line_no);

        if (expect_header) {
            if (section == Section::Frames)
                frame_cols.emplace(line,
                                   std::vector<std::string_view>{"frame_idx", "ball_x", "ball_y", "possession_team",
                                                                 "game_status", "event"},
                                   "frames", line_no);
            else
                pos_cols.emplace(line,
                                 std::vector<std::string_view>{"frame_idx", "time_s", "team_id", "player_id", "x_m",
                                                               "y_m", "is_goalkeeper"},
                                 "positions", line_no);
            expect_header = false;
            continue;
        }

        const auto cells = split(line, ',');
        if (section == Section::Frames) {
            const auto& c = *frame_cols;
            if (cells.size() != c.width())
                throw ParseError(fmt::format("expected {} fields, got {}", c.width(), cells.size()), line_no);
            const auto idx = parse_int(cells[c["frame_idx"]], line_no, "frame_idx");
            auto& pf = frames[idx];
            if (pf.has_sidecar) throw ParseError(fmt::format("duplicate frame record {}", idx), line_no);
            pf.has_sidecar = true;
            pf.line = line_no;
            pf.frame.index = idx;
            const auto bx = cells[c["ball_x"]];
            const auto by = cells[c["ball_y"]];
            if (!bx.empty() || !by.empty())
                pf.frame.ball = Vec2{parse_double(bx, line_no, "ball_x"), parse_double(by, line_no, "ball_y")};
            pf.frame.possession_team = optional_text(cells[c["possession_team"]]);
            try {
                pf.frame.status = parse_game_status(cells[c["game_status"]]);
            } catch (const SchemaError& e) {
                throw ParseError(e.what(), line_no);
            }
            if (const auto ev = cells[c["event"]]; !ev.empty()) pf.frame.event = parse_event_kind(ev);
        } else {
            const auto& c = *pos_cols;
            if (cells.size() != c.width())
                throw ParseError(fmt::format("expected {} fields, got {}", c.width(), cells.size()), line_no);
            const auto idx = parse_int(cells[c["frame_idx"]], line_no, "frame_idx");
            const auto t = parse_double(cells[c["time_s"]], line_no, "time_s");
            auto& pf = frames[idx];
            pf.frame.index = idx;
            if (pf.has_time && pf.frame.time_s != t)
                throw IntegrityError(fmt::format("line {}: frame {} has inconsistent time stamps", line_no, idx));
            if (!pf.line) pf.line = line_no;
            pf.has_time = true;
            pf.frame.time_s = t;
            RawPlayerSample s;
            s.team_id = cells[c["team_id"]];
            s.player_id = cells[c["player_id"]];
            s.x_m = parse_double(cells[c["x_m"]], line_no, "x_m");
            s.y_m = parse_double(cells[c["y_m"]], line_no, "y_m");
            s.is_goalkeeper = parse_bool(cells[c["is_goalkeeper"]], line_no, "is_goalkeeper");
            pf.frame.players.push_back(std::move(s));
        }
    }
    if (m.schema_version.empty()) throw SchemaError("missing schema_version header");
    validate_metadata(m);
    std::vector<PendingFrame> pending;
    pending.reserve(frames.size());
    for (auto& [_, pf] : frames) pending.push_back(std::move(pf));
    finalize_frames(m, std::move(pending));
    return m;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

template <class T>
T required(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key)) throw SchemaError(fmt::format("{}: missing required field '{}'", where, key));
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(fmt::format("{}: field '{}' has the wrong type", where, key));
    }
}

RawMatchFile parse_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_of_offset(text, e.byte));
    }
    if (!doc.is_object()) throw SchemaError("tracking document must be a JSON object");
    RawMatchFile m;
    m.schema_version = required<std::string>(doc, "schema_version", "match");
    m.match_id = doc.value("match_id", std::string{});
    m.pitch_length = required<double>(doc, "pitch_length", "match");
    m.pitch_width = required<double>(doc, "pitch_width", "match");
    m.frame_rate = required<double>(doc, "frame_rate", "match");
    m.second_half_start_frame = doc.value("second_half_start_frame", INT64_MAX);
    for (const auto& t : required<json>(doc, "teams", "match")) {
        TeamInfo team;
        team.id = required<std::string>(t, "id", "team");
        const auto attack = t.value("attack", json::array());
        for (std::size_t h = 0; h < attack.size() && h < 2; ++h)
            if (attack[h].is_string()) team.attack[h] = parse_attack_direction(attack[h].get<std::string>());
        team.players = required<std::vector<std::string>>(t, "players", "team " + team.id);
        m.teams.push_back(std::move(team));
    }
    validate_metadata(m);

    std::vector<PendingFrame> pending;
    std::set<std::int64_t> indices;
    for (const auto& f : required<json>(doc, "frames", "match")) {
        PendingFrame pf;
        pf.has_sidecar = true;
        auto& fr = pf.frame;
        fr.index = required<std::int64_t>(f, "frame_idx", "frame");
        const auto where = fmt::format("frame {}", fr.index);
        if (!indices.insert(fr.index).second) throw SchemaError(where + ": duplicate frame index");
        fr.time_s = required<double>(f, "time_s", where);
        pf.has_time = true;
        if (f.contains("ball") && !f["ball"].is_null()) {
            const auto b = f["ball"].get<std::vector<double>>();
            if (b.size() != 2) throw SchemaError(where + ": ball must be [x, y]");
            fr.ball = Vec2{b[0], b[1]};
        }
        if (f.contains("possession_team") && f["possession_team"].is_string())
            fr.possession_team = f["possession_team"].get<std::string>();
        fr.status = parse_game_status(required<std::string>(f, "game_status", where));
        if (f.contains("event") && f["event"].is_string() && !f["event"].get<std::string>().empty())
            fr.event = parse_event_kind(f["event"].get<std::string>());
        for (const auto& p : required<json>(f, "players", where)) {
            RawPlayerSample s;
            s.team_id = required<std::string>(p, "team_id", where);
            s.player_id = required<std::string>(p, "player_id", where);
            s.x_m = required<double>(p, "x_m", where);
            s.y_m = required<double>(p, "y_m", where);
            s.is_goalkeeper = p.value("is_goalkeeper", false);
            fr.players.push_back(std::move(s));
        }
        if (fr.players.empty()) pf.has_time = false;
        pending.push_back(std::move(pf));
    }
    finalize_frames(m, std::move(pending));
    return m;
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

}  // namespace

std::string to_string(GameStatus status) { return status == GameStatus::Running ? "running" : "interrupted"; }

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::ThrowIn: return "throw_in";
        case EventKind::FreeKick: return "free_kick";
        case EventKind::Corner: return "corner";
        case EventKind::Penalty: return "penalty";
        case EventKind::Other: return "other";
    }
    return "other";
}

std::string to_string(AttackDirection direction) {
    return direction == AttackDirection::BottomToTop ? "bottom_to_top" : "top_to_bottom";
}

GameStatus parse_game_status(std::string_view text) {
    const auto v = lower_compact(text);
    if (v == "running") return GameStatus::Running;
    if (v == "interrupted") return GameStatus::Interrupted;
    throw SchemaError(fmt::format("unknown game status '{}'", text));
}

EventKind parse_event_kind(std::string_view text) {
    const auto v = lower_compact(text);
    if (v == "throwin") return EventKind::ThrowIn;
    if (v == "freekick") return EventKind::FreeKick;
    if (v == "corner") return EventKind::Corner;
    if (v == "penalty") return EventKind::Penalty;
    return EventKind::Other;
}

AttackDirection parse_attack_direction(std::string_view text) {
    const auto v = lower_compact(text);
    if (v == "bottomtotop") return AttackDirection::BottomToTop;
    if (v == "toptobottom") return AttackDirection::TopToBottom;
    throw ConfigError(fmt::format("unknown attack direction '{}'", text));
}

const TeamInfo& RawMatchFile::team(std::string_view id) const {
    for (const auto& t : teams)
        if (t.id == id) return t;
    throw ConfigError(fmt::format("team '{}' is not declared in match '{}'", id, match_id));
}

RawMatchFile parse_tracking_file(std::istream& source, TrackingFormat format) {
    if (format == TrackingFormat::CSV) return parse_csv(source);
    std::ostringstream buf;
    buf << source.rdbuf();
    return parse_json(buf.str());
}

RawMatchFile parse_tracking_file(std::string_view text, TrackingFormat format) {
    if (format == TrackingFormat::JSON) return parse_json(text);
    std::istringstream in{std::string(text)};
    return parse_csv(in);
}

TrackingFormat detect_tracking_format(std::string_view path) {
    return path.ends_with(".json") ? TrackingFormat::JSON : TrackingFormat::CSV;
}

void write_tracking_csv(const RawMatchFile& m, std::ostream& out) {
    out << "#schema_version=" << m.schema_version << '\n';
    out << "#match_id=" << m.match_id << '\n';
    out << "#pitch_length=" << fmt_num(m.pitch_length) << '\n';
    out << "#pitch_width=" << fmt_num(m.pitch_width) << '\n';
    out << "#frame_rate=" << fmt_num(m.frame_rate) << '\n';
    if (m.second_half_start_frame != INT64_MAX)
        out << "#second_half_start_frame=" << m.second_half_start_frame << '\n';
    for (const auto& t : m.teams) {
        out << "#team=" << t.id << ";attack=";
        out << (t.attack[0] ? to_string(*t.attack[0]) : "") << ',' << (t.attack[1] ? to_string(*t.attack[1]) : "");
        out << ";players=";
        for (std::size_t i = 0; i < t.players.size(); ++i) out << (i ? "," : "") << t.players[i];
        out << '\n';
    }
    out << "[frames]\nframe_idx,ball_x,ball_y,possession_team,game_status,event\n";
    for (const auto& f : m.frames) {
        out << f.index << ',';
        if (f.ball) out << fmt_num(f.ball->x) << ',' << fmt_num(f.ball->y);
        else out << ',';
        out << ',' << f.possession_team.value_or("") << ',' << to_string(f.status) << ','
            << (f.event ? to_string(*f.event) : "") << '\n';
    }
    out << "[positions]\nframe_idx,time_s,team_id,player_id,x_m,y_m,is_goalkeeper\n";
    for (const auto& f : m.frames)
        for (const auto& p : f.players)
            out << f.index << ',' << fmt_num(f.time_s) << ',' << p.team_id << ',' << p.player_id << ','
                << fmt_num(p.x_m) << ',' << fmt_num(p.y_m) << ',' << (p.is_goalkeeper ? 1 : 0) << '\n';
}

void write_tracking_json(const RawMatchFile& m, std::ostream& out) {
    json doc;
    doc["schema_version"] = m.schema_version;
    doc["match_id"] = m.match_id;
    doc["pitch_length"] = m.pitch_length;
    doc["pitch_width"] = m.pitch_width;
    doc["frame_rate"] = m.frame_rate;
    if (m.second_half_start_frame != INT64_MAX) doc["second_half_start_frame"] = m.second_half_start_frame;
    doc["teams"] = json::array();
    for (const auto& t : m.teams) {
        json attack = json::array();
        for (const auto& a : t.attack) attack.push_back(a ? json(to_string(*a)) : json(nullptr));
        doc["teams"].push_back({{"id", t.id}, {"attack", attack}, {"players", t.players}});
    }
    doc["frames"] = json::array();
    for (const auto& f : m.frames) {
        json jf;
        jf["frame_idx"] = f.index;
        jf["time_s"] = f.time_s;
        jf["ball"] = f.ball ? json::array({f.ball->x, f.ball->y}) : json(nullptr);
        jf["possession_team"] = f.possession_team ? json(*f.possession_team) : json(nullptr);
        jf["game_status"] = to_string(f.status);
        jf["event"] = f.event ? json(to_string(*f.event)) : json(nullptr);
        jf["players"] = json::array();
        for (const auto& p : f.players)
            jf["players"].push_back({{"team_id", p.team_id},
                                     {"player_id", p.player_id},
                                     {"x_m", p.x_m},
                                     {"y_m", p.y_m},
                                     {"is_goalkeeper", p.is_goalkeeper}});
        doc["frames"].push_back(std::move(jf));
    }
    out << doc.dump() << '\n';
}

std::vector<Frame> normalize_coordinates(const RawMatchFile& raw, std::string_view observed_team,
                                         const NormalizationConfig& config) {
    const auto& team = raw.team(observed_team);
    const double length = raw.pitch_length;
    const double ratio = raw.pitch_width / raw.pitch_length;
    if (ratio > config.nominal_ratio + 1e-12)
        throw ConfigError(fmt::format("pitch ratio {:.4f} exceeds the nominal width/length ratio {}", ratio,
                                      config.nominal_ratio));

    std::vector<Frame> out;
    out.reserve(raw.frames.size());
    for (const auto& rf : raw.frames) {
        Frame f;
        f.index = rf.index;
        f.time = rf.time_s;
        f.half = rf.index >= raw.second_half_start_frame ? 2 : 1;
        const auto& dir = team.attack[f.half - 1];
        if (!dir)
            throw ConfigError(fmt::format("attack direction of team '{}' unknown for half {}", team.id, f.half));
        const bool flip = *dir == AttackDirection::TopToBottom;

        auto map = [&](double x_m, double y_m, bool& clamped) {
            Vec2 p{y_m / length, x_m / length};
            if (flip) p = Vec2{ratio - p.x, 1.0 - p.y};
            const Vec2 c{std::clamp(p.x, 0.0, ratio), std::clamp(p.y, 0.0, 1.0)};
            if (c != p) clamped = true;
            return c;
        };

        for (const auto& s : rf.players) {
            const auto pos = map(s.x_m, s.y_m, f.clamped);
            if (s.team_id == team.id) {
                if (s.is_goalkeeper) f.goalkeeper = pos;
                else f.players[s.player_id] = pos;
            } else {
                f.opponents[s.player_id] = pos;
            }
        }
        if (rf.ball) {
            bool ignored = false;
            f.ball = map(rf.ball->x, rf.ball->y, ignored);
        }
        f.possession = rf.possession_team;
        f.status = rf.status;
        f.event = rf.event;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace formsim
