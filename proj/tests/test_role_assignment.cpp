#include <doctest.h>

#include <fmt/format.h>

#include <random>

#include "formsim/errors.hpp"
#include "formsim/role_assignment.hpp"
#include "support.hpp"

using namespace formsim;

namespace {

std::string pid(int i) { return fmt::format("p{:02d}", i); }

Segment segment_from(const std::vector<std::vector<Vec2>>& positions) {
    Segment s;
    s.id = "t-s0000000";
    for (std::size_t t = 0; t < positions.size(); ++t) {
        Frame f;
        f.index = static_cast<std::int64_t>(t);
        f.time = static_cast<double>(t) * 0.04;
        for (std::size_t i = 0; i < positions[t].size(); ++i) f.players[pid(static_cast<int>(i) + 1)] = positions[t][i];
        s.frames.push_back(std::move(f));
    }
    return s;
}

// Two players swap spots A and B between frames 1 and 2 of five; the other
// eight hold still. The team drifts, which centering must remove.
Segment swap_fixture() {
    const Vec2 A{-0.2, 0.0}, B{0.2, 0.0};
    const std::vector<Vec2> still{{0.0, 0.3},   {0.0, -0.3},  {0.3, 0.3}, {-0.3, -0.3},
                                  {0.3, -0.3}, {-0.3, 0.3}, {0.0, 0.1}, {0.0, -0.1}};
    std::vector<std::vector<Vec2>> pos;
    for (int t = 0; t < 5; ++t) {
        const Vec2 drift{0.35 + 0.01 * t, 0.5 + 0.02 * t};
        std::vector<Vec2> f{t < 2 ? A : B, t < 2 ? B : A};
        f.insert(f.end(), still.begin(), still.end());
        for (auto& p : f) p = p + drift;
        pos.push_back(f);
    }
    return segment_from(pos);
}

double identity_cost(const CenteredFrame& f, const std::vector<Vec2>& anchors) {
    std::vector<std::size_t> id(anchors.size());
    std::iota(id.begin(), id.end(), 0);
    return assignment_cost(f, anchors, id);
}

}  // namespace

TEST_CASE("subtract_team_center") {
    auto one = subtract_team_center({{0.3, 0.4}});
    CHECK(one.positions[0] == Vec2{0.0, 0.0});
    auto two = subtract_team_center({{0.1, 0.1}, {0.3, 0.3}});
    CHECK(two.positions[0].x == doctest::Approx(-0.1));
    CHECK(two.positions[1].y == doctest::Approx(0.1));
    auto shifted = subtract_team_center({{0.15, 0.2}, {0.35, 0.4}});
    CHECK(shifted.positions[0].x == doctest::Approx(two.positions[0].x));
    CHECK(shifted.positions[1].y == doctest::Approx(two.positions[1].y));
    CHECK_THROWS_AS(subtract_team_center({}), ContractViolation);

    std::mt19937_64 rng(5);
    const auto c = subtract_team_center(testing::random_roles(rng));
    CHECK(std::abs(centroid(c.positions).x) < 1e-9);
    CHECK(std::abs(centroid(c.positions).y) < 1e-9);
}

TEST_CASE("initialize_roles anchors at per-player means") {
    CenteredFrame a{{{-0.1, 0.0}, {0.1, 0.0}}};
    CenteredFrame b{{{0.1, 0.0}, {-0.1, 0.0}}};
    const auto one = initialize_roles({a});
    CHECK(one.roles == a.positions);
    const auto both = initialize_roles({a, b});
    CHECK(both.roles[0] == Vec2{0.0, 0.0});
    CHECK(both.assignment_per_frame.size() == 2);
    CHECK(both.assignment_per_frame[1] == std::vector<std::size_t>{0, 1});
}

TEST_CASE("assign_frame") {
    RoleSet roles;
    roles.roles = {{-0.2, 0.0}, {0.2, 0.0}, {0.0, 0.3}};
    CHECK(assign_frame(CenteredFrame{roles.roles}, roles) == std::vector<std::size_t>{0, 1, 2});
    CHECK(assign_frame(CenteredFrame{{{0.2, 0.0}, {-0.2, 0.0}, {0.0, 0.3}}}, roles) ==
          std::vector<std::size_t>{1, 0, 2});
    CHECK_THROWS_AS(assign_frame(CenteredFrame{{{0.0, 0.0}}}, roles), ContractViolation);

    // Six random players against six anchors: compare with all 6! mappings.
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        RoleSet r;
        r.roles = testing::random_roles(rng, 6);
        CenteredFrame f{testing::random_roles(rng, 6)};
        const auto p = assign_frame(f, r);
        Eigen::MatrixXd cost(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) cost(i, j) = squared_distance(f.positions[i], r.roles[j]);
        CHECK(std::abs(assignment_cost(f, r.roles, p) - testing::brute_force_best(cost, false)) < 1e-12);
    }
}

TEST_CASE("role compensation recovers the stable spots of a clean swap") {
    const auto s = swap_fixture();
    const auto with = compute_vfs(s);
    REQUIRE(with.n() == 10);
    // Hand-computed: the initial anchors of p01/p02 are (+-0.04, 0), so the two
    // early frames are reassigned and the roles settle on the spots B and A.
    CHECK(std::abs(with.roles[0].x - 0.2) < 1e-12);
    CHECK(std::abs(with.roles[1].x + 0.2) < 1e-12);
    CHECK(std::abs(with.roles[0].y) < 1e-12);
    CHECK(std::abs(with.roles[2].y - 0.3) < 1e-12);

    VfsOptions off;
    off.role_compensation = false;
    const auto without = compute_vfs(s, off);
    CHECK(std::abs(without.roles[0].x - 0.04) < 1e-12);
    CHECK(std::abs(without.roles[1].x + 0.04) < 1e-12);
    CHECK(!without.role_compensation);
}

TEST_CASE("vfs invariants on noisy segments") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0.0, 0.03);
    const auto base = testing::random_roles(rng);
    std::vector<std::vector<Vec2>> pos;
    for (int t = 0; t < 51; ++t) {
        std::vector<Vec2> f;
        for (const auto& b : base) f.push_back({b.x + noise(rng), b.y + noise(rng)});
        if (t > 20 && t < 40) std::swap(f[3], f[7]);
        pos.push_back(f);
    }
    const auto s = segment_from(pos);
    const auto detail = compute_vfs_detailed(s);

    // Optimal reassignment never costs more than keeping player identities.
    const auto init = initialize_roles(detail.frames);
    for (std::size_t t = 0; t < detail.frames.size(); ++t) {
        const auto p = assign_frame(detail.frames[t], init);
        CHECK(assignment_cost(detail.frames[t], init.roles, p) <= identity_cost(detail.frames[t], init.roles) + 1e-15);
    }

    // Each role mean lies in the bounding box of the positions assigned to it.
    for (std::size_t r = 0; r < 10; ++r) {
        double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
        for (std::size_t t = 0; t < detail.frames.size(); ++t) {
            const auto& a = detail.roles.assignment_per_frame[t];
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i] == r) {
                    lo_x = std::min(lo_x, detail.frames[t].positions[i].x);
                    hi_x = std::max(hi_x, detail.frames[t].positions[i].x);
                    lo_y = std::min(lo_y, detail.frames[t].positions[i].y);
                    hi_y = std::max(hi_y, detail.frames[t].positions[i].y);
                }
        }
        const auto& m = detail.formation.roles[r];
        CHECK(m.x >= lo_x - 1e-12);
        CHECK(m.x <= hi_x + 1e-12);
        CHECK(m.y >= lo_y - 1e-12);
        CHECK(m.y <= hi_y + 1e-12);
    }

    // A global translation of every raw position changes nothing.
    auto moved = pos;
    for (auto& f : moved)
        for (auto& p : f) p = p + Vec2{0.05, -0.1};
    const auto shifted = compute_vfs(segment_from(moved));
    for (std::size_t r = 0; r < 10; ++r) {
        CHECK(std::abs(shifted.roles[r].x - detail.formation.roles[r].x) < 1e-9);
        CHECK(std::abs(shifted.roles[r].y - detail.formation.roles[r].y) < 1e-9);
    }
}

TEST_CASE("without compensation the VFS is the per-player mean") {
    std::mt19937_64 rng(2);
    std::vector<std::vector<Vec2>> pos;
    for (int t = 0; t < 7; ++t) pos.push_back(testing::random_roles(rng));
    VfsOptions off;
    off.role_compensation = false;
    const auto f = compute_vfs(segment_from(pos), off);
    for (std::size_t i = 0; i < 10; ++i) {
        Vec2 mean{0, 0};
        for (const auto& frame : pos) mean += frame[i] - centroid(frame);
        mean = mean / 7.0;
        CHECK(std::abs(f.roles[i].x - mean.x) < 1e-12);
        CHECK(std::abs(f.roles[i].y - mean.y) < 1e-12);
    }
}

TEST_CASE("single frame and stationary segments") {
    std::mt19937_64 rng(3);
    const auto one = testing::random_roles(rng);
    const auto f = compute_vfs(segment_from({one}));
    const auto c = subtract_team_center(one);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(f.roles[i].x == doctest::Approx(c.positions[i].x));
        CHECK(f.roles[i].y == doctest::Approx(c.positions[i].y));
    }
    const auto still = compute_vfs(segment_from({one, one, one}));
    for (std::size_t i = 0; i < 10; ++i) CHECK(still.roles[i].x == doctest::Approx(c.positions[i].x));
}

TEST_CASE("roster rules") {
    std::mt19937_64 rng(4);
    auto frames = std::vector<std::vector<Vec2>>{testing::random_roles(rng), testing::random_roles(rng)};
    auto s = segment_from(frames);
    s.frames[1].players.erase("p10");
    s.frames[1].players["p11"] = {0.3, 0.3};
    CHECK_THROWS_AS(compute_vfs(s), IntegrityError);

    const auto nine = segment_from({testing::random_roles(rng, 9)});
    CHECK_THROWS_AS(compute_vfs(nine), IntegrityError);
    VfsOptions permissive;
    permissive.permissive = true;
    CHECK(compute_vfs(nine, permissive).n() == 9);

    CHECK_THROWS_AS(compute_vfs(Segment{}), ContractViolation);
}
