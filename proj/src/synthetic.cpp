#include "formsim/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "formsim/errors.hpp"

namespace formsim {
namespace {

using nlohmann::json;

constexpr std::size_t kOutfield = 10;

std::string home_player(std::size_t k) { return fmt::format("h{}", k + 2); }  // h1 is the goalkeeper
std::string away_player(std::size_t k) { return fmt::format("a{}", k + 1); }

double round_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

/// Emits frames while tracking the running index and time.
class FrameWriter {
public:
    FrameWriter(RawMatchFile& raw, const SyntheticMatchSpec& spec) : raw_(raw), spec_(spec) {}

    std::int64_t next_index() const { return static_cast<std::int64_t>(raw_.frames.size()); }

    /// Players are given on the canonical pitch; `flip` maps back to raw axes.
    void emit(const std::vector<Vec2>& home, Vec2 keeper, const std::vector<Vec2>& away, Vec2 ball,
              const std::string& possession, GameStatus status, std::optional<EventKind> event, bool flip) {
        RawFrame f;
        f.index = next_index();
        f.time_s = static_cast<double>(f.index) / spec_.frame_rate;
        f.status = status;
        f.event = event;
        f.possession_team = possession;
        const double ratio = spec_.pitch_width / spec_.pitch_length;
        auto to_raw = [&](Vec2 p) {
            if (flip) p = Vec2{ratio - p.x, 1.0 - p.y};
            return Vec2{round_mm(p.y * spec_.pitch_length), round_mm(p.x * spec_.pitch_length)};
        };
        auto push = [&](const std::string& team, const std::string& id, Vec2 p, bool gk) {
            const auto r = to_raw(p);
            f.players.push_back({team, id, r.x, r.y, gk});
        };
        push("home", "h1", keeper, true);
        for (std::size_t k = 0; k < home.size(); ++k) push("home", home_player(k), home[k], false);
        for (std::size_t k = 0; k < away.size(); ++k) push("away", away_player(k), away[k], k == 0);
        f.ball = to_raw(ball);
        raw_.frames.push_back(std::move(f));
    }

private:
    RawMatchFile& raw_;
    const SyntheticMatchSpec& spec_;
};

}  // namespace

void SyntheticMatchSpec::validate() const {
    if (jitter_sigma < 0.0) throw ContractViolation("jitter sigma must be non-negative");
    if (swap_probability < 0.0 || swap_probability > 1.0)
        throw ContractViolation("swap probability must lie in [0, 1]");
    if (set_piece_probability < 0.0 || set_piece_probability > 1.0)
        throw ContractViolation("set-piece probability must lie in [0, 1]");
    if (scripted_swaps * 2 > kOutfield) throw ContractViolation("at most five disjoint scripted swaps fit ten players");
    if (!(frame_rate > 0.0) || !(pitch_length > 0.0) || !(pitch_width > 0.0))
        throw ContractViolation("frame rate and pitch dimensions must be positive");
    if (pitch_width / pitch_length > 0.7 + 1e-12) throw ContractViolation("pitch is wider than the nominal ratio");
    static const double lower[] = {5.0, 10.0, 20.0};
    static const double upper[] = {10.0, 20.0, 1e9};
    for (std::size_t b = 0; b < 3; ++b) {
        const auto& r = duration_ranges[b];
        if (r.min_s > r.max_s || r.min_s < lower[b] || r.max_s >= upper[b])
            throw ContractViolation(fmt::format("duration range {} does not fit its bucket", b));
    }
    if (match_id.empty() || match_id.find_first_not_of(
                                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") != std::string::npos)
        throw ContractViolation("match id must be non-empty and use [A-Za-z0-9_-]");
}

SyntheticMatch generate_synthetic_match(const SyntheticMatchSpec& spec, const TemplateSet& templates,
                                        std::uint64_t seed) {
    spec.validate();
    std::vector<const FormationTemplate*> schemes;
    if (spec.schemes.empty()) {
        for (const auto& t : templates.templates) schemes.push_back(&t);
    } else {
        for (const auto& s : spec.schemes) schemes.push_back(&templates.at(s));
    }
    if (schemes.empty()) throw ContractViolation("no schemes to generate from");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SyntheticMatch match;
    auto& raw = match.raw;
    raw.match_id = spec.match_id;
    raw.pitch_length = spec.pitch_length;
    raw.pitch_width = spec.pitch_width;
    raw.frame_rate = spec.frame_rate;
    TeamInfo home{"home", {"h1"}, {AttackDirection::BottomToTop, AttackDirection::TopToBottom}};
    TeamInfo away{"away", {}, {AttackDirection::TopToBottom, AttackDirection::BottomToTop}};
    for (std::size_t k = 0; k < kOutfield; ++k) home.players.push_back(home_player(k));
    for (std::size_t k = 0; k <= kOutfield; ++k) away.players.push_back(away_player(k));
    raw.teams = {home, away};

    std::vector<DurationClass> order;
    for (std::size_t b = 0; b < 3; ++b)
        order.insert(order.end(), spec.segments_per_bucket[b], static_cast<DurationClass>(b));
    std::shuffle(order.begin(), order.end(), rng);

    const double ratio = spec.pitch_width / spec.pitch_length;
    const auto& opp_shape = templates.contains("4-4-2") ? templates.at("4-4-2").variants.front()
                                                        : templates.templates.front().variants.front();
    FrameWriter writer(raw, spec);
    const std::size_t half_at = order.size() / 2;

    for (std::size_t phase = 0; phase < order.size(); ++phase) {
        if (phase == half_at && phase > 0) raw.second_half_start_frame = writer.next_index();
        const bool flip = raw.second_half_start_frame != INT64_MAX;
        const auto bucket_value = order[phase];
        const auto& tpl = *schemes[phase % schemes.size()];
        const auto variant = static_cast<std::size_t>(unit(rng) * static_cast<double>(tpl.variants.size())) %
                             tpl.variants.size();
        const auto& shape = tpl.variants[variant];
        const Possession possession = phase % 2 == 0 ? Possession::Own : Possession::Opponent;
        const std::string owner = possession == Possession::Own ? "home" : "away";

        const auto& range = spec.duration_ranges[static_cast<std::size_t>(bucket_value)];
        const double duration = range.min_s + (range.max_s - range.min_s) * unit(rng);
        const auto body_frames = static_cast<std::int64_t>(std::llround(duration * spec.frame_rate)) + 1;

        // Team center drifts along a straight line with a small lateral wobble.
        const double base_y = possession == Possession::Own ? 0.55 : 0.42;
        const Vec2 c0{ratio / 2 + (unit(rng) - 0.5) * 0.1, base_y + (unit(rng) - 0.5) * 0.2};
        const double heading = unit(rng) * 2.0 * std::numbers::pi;
        const Vec2 c1 = c0 + Vec2{std::cos(heading), std::sin(heading)} * spec.drift;

        std::vector<Vec2> rel(kOutfield);
        for (std::size_t k = 0; k < kOutfield; ++k)
            rel[k] = Vec2{(shape[k].x - 0.5) * spec.shape_width, (shape[k].y - 0.5) * spec.shape_depth};

        // Role swaps: scripted disjoint pairs first, then per-pair chance.
        std::vector<std::size_t> role_of(kOutfield);
        for (std::size_t k = 0; k < kOutfield; ++k) role_of[k] = k;
        std::vector<char> taken(kOutfield, 0);
        struct Swap {
            std::size_t a, b;
            double at;
        };
        std::vector<Swap> swaps;
        for (std::size_t s = 0; s < spec.scripted_swaps; ++s) {
            std::vector<std::size_t> free;
            for (std::size_t k = 0; k < kOutfield; ++k)
                if (!taken[k]) free.push_back(k);
            std::shuffle(free.begin(), free.end(), rng);
            const auto a = std::min(free[0], free[1]), b = std::max(free[0], free[1]);
            taken[a] = taken[b] = 1;
            swaps.push_back({a, b, 0.3 + 0.4 * unit(rng)});
        }
        if (spec.swap_probability > 0.0) {
            for (std::size_t a = 0; a < kOutfield; ++a)
                for (std::size_t b = a + 1; b < kOutfield; ++b) {
                    const double draw = unit(rng);
                    if (taken[a] || taken[b] || draw >= spec.swap_probability) continue;
                    taken[a] = taken[b] = 1;
                    swaps.push_back({a, b, 0.3 + 0.4 * unit(rng)});
                }
        }

        auto team_positions = [&](double u, const std::vector<std::size_t>& roles) {
            const Vec2 wobble{0.01 * std::sin(2.0 * std::numbers::pi * u), 0.0};
            const Vec2 center = c0 + (c1 - c0) * u + wobble;
            std::vector<Vec2> out(kOutfield);
            for (std::size_t k = 0; k < kOutfield; ++k) {
                out[k] = center + rel[roles[k]];
                if (spec.jitter_sigma > 0.0)
                    out[k] += Vec2{gauss(rng), gauss(rng)} * spec.jitter_sigma;
            }
            return std::pair{out, center};
        };
        auto others = [&](Vec2 center) {
            std::vector<Vec2> away_pos;
            away_pos.push_back(Vec2{ratio / 2, 0.95});
            for (const auto& p : opp_shape)
                away_pos.push_back(center + Vec2{0.0, 0.04} +
                                   Vec2{-(p.x - 0.5) * spec.shape_width, -(p.y - 0.5) * spec.shape_depth});
            return away_pos;
        };
        const Vec2 keeper{ratio / 2, 0.04};

        // Optional restart before the episode: one second of interruption, then the set piece.
        if (phase > 0 && unit(rng) < spec.set_piece_probability) {
            const double pick = unit(rng);
            const EventKind kind = pick < 0.5    ? EventKind::ThrowIn
                                   : pick < 0.8  ? EventKind::FreeKick
                                   : pick < 0.95 ? EventKind::Corner
                                                 : EventKind::Penalty;
            const double window = kind == EventKind::ThrowIn ? 5.0 : 10.0;
            const auto [stand, center] = team_positions(0.0, role_of);
            for (int i = 0; i < static_cast<int>(spec.frame_rate); ++i)
                writer.emit(stand, keeper, others(center), center, owner, GameStatus::Interrupted, std::nullopt, flip);
            const auto window_frames = static_cast<std::int64_t>(std::ceil(window * spec.frame_rate));
            for (std::int64_t i = 0; i < window_frames; ++i) {
                const auto [pos, c] = team_positions(0.0, role_of);
                writer.emit(pos, keeper, others(c), c, owner, GameStatus::Running,
                            i == 0 ? std::optional(kind) : std::nullopt, flip);
            }
        }

        SyntheticSegmentTruth truth;
        truth.first_frame = writer.next_index();
        truth.segment_id = make_segment_id(spec.match_id, truth.first_frame);
        truth.scheme = tpl.name();
        truth.variant = variant;
        truth.possession = possession;
        truth.bucket = bucket_value;

        for (std::int64_t i = 0; i < body_frames; ++i) {
            const double u = static_cast<double>(i) / static_cast<double>(body_frames - 1);
            auto roles = role_of;
            for (const auto& s : swaps)
                if (u >= s.at) std::swap(roles[s.a], roles[s.b]);
            const auto [pos, center] = team_positions(u, roles);
            const Vec2 ball = possession == Possession::Own ? pos[static_cast<std::size_t>(i / 25) % kOutfield]
                                                            : center + Vec2{0.0, 0.1};
            writer.emit(pos, keeper, others(center), ball, owner, GameStatus::Running, std::nullopt, flip);
        }
        truth.last_frame = writer.next_index() - 1;
        const double span = static_cast<double>(body_frames - 1) / spec.frame_rate;
        for (const auto& s : swaps)
            truth.swaps.push_back({home_player(s.a), home_player(s.b),
                                   static_cast<double>(truth.first_frame) / spec.frame_rate + s.at * span});
        match.truth.push_back(std::move(truth));
    }
    return match;
}

std::string truth_to_json(const SyntheticMatch& match, std::uint64_t seed) {
    json doc;
    doc["schema_version"] = "formsim-synthetic-truth/1";
    doc["match_id"] = match.raw.match_id;
    doc["observed_team"] = match.observed_team;
    doc["seed"] = seed;
    doc["segments"] = json::array();
    for (const auto& t : match.truth) {
        json swaps = json::array();
        for (const auto& s : t.swaps)
            swaps.push_back({{"player_a", s.player_a}, {"player_b", s.player_b}, {"time_s", s.time_s}});
        doc["segments"].push_back({{"segment_id", t.segment_id},
                                   {"scheme", t.scheme},
                                   {"variant", t.variant},
                                   {"possession", to_string(t.possession)},
                                   {"bucket", to_string(t.bucket)},
                                   {"first_frame", t.first_frame},
                                   {"last_frame", t.last_frame},
                                   {"swaps", swaps}});
    }
    return doc.dump(2) + "\n";
}

std::vector<AnnotationRecord> annotations_from_truth(const SyntheticMatch& match, const std::string& annotator) {
    std::vector<AnnotationRecord> out;
    std::int64_t seq = 0;
    for (const auto& t : match.truth) {
        AnnotationRecord a;
        a.segment_id = t.segment_id;
        a.annotator_id = annotator;
        a.label = AnnotationLabel::parse(t.scheme);
        a.clarity = Clarity::VeryClear;
        a.vfs_rating = VfsRating::Good;
        a.seq = ++seq;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace formsim
