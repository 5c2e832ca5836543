#include <doctest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "formsim/errors.hpp"
#include "formsim/segmentation.hpp"
#include "support.hpp"

using namespace formsim;

namespace {

Frame frame(std::int64_t index, double time, std::optional<std::string> possession = "A",
            GameStatus status = GameStatus::Running, std::optional<EventKind> event = std::nullopt, int half = 1) {
    Frame f;
    f.index = index;
    f.time = time;
    f.possession = std::move(possession);
    f.status = status;
    f.event = event;
    f.half = half;
    return f;
}

/// Frames at 10 fps over [t0, t1] for one holder.
void run(std::vector<Frame>& out, double t0, double t1, const std::string& holder) {
    for (auto i = static_cast<std::int64_t>(std::lround(t0 * 10)); i <= std::lround(t1 * 10); ++i)
        out.push_back(frame(i, static_cast<double>(i) / 10.0, holder));
}

}  // namespace

TEST_CASE("bucket boundaries are half-open") {
    CHECK(bucket(5.0) == DurationClass::Short);
    CHECK(bucket(6.96) == DurationClass::Short);
    CHECK(bucket(9.999) == DurationClass::Short);
    CHECK(bucket(10.0) == DurationClass::Mid);
    CHECK(bucket(13.67) == DurationClass::Mid);
    CHECK(bucket(19.999) == DurationClass::Mid);
    CHECK(bucket(20.0) == DurationClass::Long);
    CHECK(bucket(31.53) == DurationClass::Long);
    CHECK_THROWS_AS(bucket(4.9), ContractViolation);
}

TEST_CASE("every duration of at least five seconds lands in exactly one bucket") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(5.0, 120.0);
    for (int i = 0; i < 2000; ++i) {
        const double d = u(rng);
        const auto b = bucket(d);
        const int hits = (d < 10.0) + (d >= 10.0 && d < 20.0) + (d >= 20.0);
        CHECK(hits == 1);
        CHECK(b == (d < 10.0 ? DurationClass::Short : d < 20.0 ? DurationClass::Mid : DurationClass::Long));
    }
}

TEST_CASE("filter_running") {
    std::vector<Frame> all{frame(0, 0.0), frame(1, 0.1), frame(2, 0.2)};
    CHECK(filter_running(all).size() == 3);
    for (auto& f : all) f.status = GameStatus::Interrupted;
    CHECK(filter_running(all).empty());
    all[0].status = GameStatus::Running;
    all[2].status = GameStatus::Running;
    const auto kept = filter_running(all);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].index == 0);
    CHECK(kept[1].index == 2);
}

TEST_CASE("set-piece windows") {
    std::vector<Frame> frames;
    for (int i = 0; i <= 2200; ++i) frames.push_back(frame(i, i / 10.0));
    CHECK(trim_set_pieces(frames).size() == frames.size());

    frames[1000].event = EventKind::ThrowIn;  // t = 100
    frames[2000].event = EventKind::Corner;   // t = 200
    const auto kept = trim_set_pieces(frames);
    auto has = [&](double t) {
        return std::any_of(kept.begin(), kept.end(), [&](const Frame& f) { return std::abs(f.time - t) < 1e-9; });
    };
    CHECK(has(99.9));
    CHECK(!has(100.0));
    CHECK(!has(104.9));
    CHECK(has(105.0));
    CHECK(has(199.9));
    CHECK(!has(200.0));
    CHECK(!has(209.9));
    CHECK(has(210.0));
    CHECK(kept.size() == frames.size() - 50 - 100);

    // Free kicks and penalties use the long window; Other events do not trim.
    std::vector<Frame> fk{frame(0, 0.0, "A", GameStatus::Running, EventKind::FreeKick), frame(1, 9.9), frame(2, 10.0)};
    CHECK(trim_set_pieces(fk).size() == 1);
    fk[0].event = EventKind::Penalty;
    CHECK(trim_set_pieces(fk).size() == 1);
    fk[0].event = EventKind::Other;
    CHECK(trim_set_pieces(fk).size() == 3);
}

TEST_CASE("possession runs become bucketed segments") {
    std::vector<Frame> frames;
    run(frames, 0.0, 8.0, "A");
    run(frames, 8.1, 20.1, "B");
    const auto segments = segment_by_possession(frames, "A", "m");
    REQUIRE(segments.size() == 2);
    CHECK(segments[0].possession == Possession::Own);
    CHECK(segments[0].bucket == DurationClass::Short);
    CHECK(segments[1].possession == Possession::Opponent);
    CHECK(segments[1].bucket == DurationClass::Mid);
    CHECK(segments[1].id == "m-s0000081");
    CHECK(segments[1].duration == doctest::Approx(12.0));

    std::vector<Frame> shorty;
    run(shorty, 0.0, 4.9, "A");
    CHECK(segment_by_possession(shorty, "A", "m").empty());

    std::vector<Frame> twenty;
    run(twenty, 0.0, 20.0, "A");
    const auto long_one = segment_by_possession(twenty, "A", "m");
    REQUIRE(long_one.size() == 1);
    CHECK(long_one[0].bucket == DurationClass::Long);
}

TEST_CASE("a half change splits a run even when possession continues") {
    std::vector<Frame> frames;
    run(frames, 0.0, 6.0, "A");
    for (int i = 0; i <= 60; ++i) frames.push_back(frame(1000 + i, 100.0 + i / 10.0, "A", GameStatus::Running, {}, 2));
    const auto segments = segment_by_possession(frames, "A", "m");
    CHECK(segments.size() == 2);
}

TEST_CASE("missing possession continues the current run and is flagged") {
    std::vector<Frame> frames;
    run(frames, 0.0, 6.0, "A");
    frames[20].possession.reset();
    frames.insert(frames.begin(), frame(-1, -0.1, std::nullopt));  // nothing to continue from: dropped
    const auto segments = segment_by_possession(frames, "A", "m");
    REQUIRE(segments.size() == 1);
    CHECK(segments[0].possession_imputed);
    CHECK(segments[0].frames.size() == 61);
}

TEST_CASE("segment invariants on a random event stream") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Frame> frames;
    std::string holder = "A";
    for (int i = 0; i < 30000; ++i) {
        if (u(rng) < 0.004) holder = holder == "A" ? "B" : "A";
        auto f = frame(i, i / 25.0, holder);
        if (u(rng) < 0.02) f.status = GameStatus::Interrupted;
        if (u(rng) < 0.0005) f.event = u(rng) < 0.5 ? EventKind::ThrowIn : EventKind::FreeKick;
        if (u(rng) < 0.001) f.possession.reset();
        frames.push_back(f);
    }
    const auto cleaned = filter_running(trim_set_pieces(frames));
    const auto segments = segment_match(frames, "A", "r");
    REQUIRE(!segments.empty());
    std::size_t cursor = 0;
    for (const auto& s : segments) {
        CHECK(s.duration >= 5.0);
        CHECK(s.bucket == bucket(s.duration));
        const std::string owner = s.possession == Possession::Own ? "A" : "B";
        for (const auto& f : s.frames) {
            CHECK(f.status == GameStatus::Running);
            CHECK((!f.possession || *f.possession == owner));
            // Segment frames appear in the cleaned stream in order, once.
            while (cursor < cleaned.size() && cleaned[cursor].index != f.index) ++cursor;
            REQUIRE(cursor < cleaned.size());
            ++cursor;
        }
    }
}

TEST_CASE("golden event script") {
    const auto raw = parse_tracking_file(testing::slurp(testing::data_path("segmentation_script.csv")),
                                         TrackingFormat::CSV);
    const auto segments = segment_match(normalize_coordinates(raw, "A"), "A", raw.match_id);
    const auto golden = nlohmann::json::parse(testing::slurp(testing::data_path("segmentation_script.golden.json")));
    REQUIRE(segments.size() == golden.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        const auto& g = golden[i];
        CAPTURE(i);
        CHECK(s.id == g["id"].get<std::string>());
        CHECK(to_string(s.possession) == g["possession"].get<std::string>());
        CHECK(to_string(s.bucket) == g["bucket"].get<std::string>());
        CHECK(s.duration == doctest::Approx(g["duration_s"].get<double>()).epsilon(1e-9));
        CHECK(s.possession_imputed == g["possession_imputed"].get<bool>());
        std::vector<std::pair<std::int64_t, std::int64_t>> runs;
        for (const auto& r : g["frame_runs"]) runs.emplace_back(r[0].get<std::int64_t>(), r[1].get<std::int64_t>());
        CHECK(s.frame_runs() == runs);
    }
}
