#include <doctest.h>

#include <cmath>
#include <random>

#include "formsim/errors.hpp"
#include "formsim/formation_similarity.hpp"
#include "support.hpp"

using namespace formsim;
using testing::bank;

TEST_CASE("numeric schemes") {
    const auto s = NumericScheme::parse("4-2-3-1");
    CHECK(s.groups() == std::vector<int>{4, 2, 3, 1});
    CHECK(s.players() == 10);
    CHECK(s.defenders() == 4);
    CHECK(s.str() == "4-2-3-1");
    CHECK_THROWS_AS(NumericScheme::parse("4-4-x"), SchemaError);
    CHECK_THROWS_AS(NumericScheme::parse(""), SchemaError);
    CHECK_THROWS_AS(NumericScheme::parse("4-0-6"), SchemaError);
}

TEST_CASE("normalize_formation") {
    const auto corners = normalize_formation(std::vector<Vec2>{{0.0, 0.0}, {0.7, 1.0}}).roles;
    CHECK(corners[0] == Vec2{0.0, 0.0});
    CHECK(corners[1] == Vec2{1.0, 1.0});

    std::mt19937_64 rng(1);
    const auto f = testing::random_roles(rng);
    auto doubled = f;
    for (auto& p : doubled) p = p * 2.0;
    const auto a = normalize_formation(f).roles, b = normalize_formation(doubled).roles;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == doctest::Approx(b[i].x).epsilon(1e-12));
        CHECK(a[i].y == doctest::Approx(b[i].y).epsilon(1e-12));
    }

    const auto line = normalize_formation(std::vector<Vec2>{{0.3, 0.1}, {0.3, 0.5}, {0.3, 0.9}}).roles;
    for (const auto& p : line) CHECK(p.x == 0.5);
    CHECK(line[0].y == 0.0);
    CHECK(line[2].y == 1.0);
    CHECK_THROWS_AS(normalize_formation(std::vector<Vec2>{{0.1, 0.1}}), ContractViolation);
}

TEST_CASE("similarity matrix entries") {
    const NormalizedFormation a{{{0.0, 0.0}, {0.0, 0.0}}};
    const NormalizedFormation b{{{0.0, 0.0}, {0.2, 0.2}}};
    const auto m = similarity_matrix(a, b, 1.0 / 3.0);
    CHECK(m.entries(0, 0) == 1.0);
    CHECK(std::abs(m.entries(0, 1) - 0.76) < 1e-12);

    const double d = 0.25;
    const NormalizedFormation c{{{0.0, 0.0}, {0.3, 0.4}}};  // squared distance 0.25
    CHECK(similarity_matrix(c, c, d).entries(0, 1) == 0.0);
    CHECK_THROWS_AS(similarity_matrix(a, b, 0.0), ContractViolation);
    CHECK_THROWS_AS(similarity_matrix(a, b, -1.0), ContractViolation);

    // Non-increasing along a ray and zero past sqrt(delta).
    double prev = 1.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        const NormalizedFormation p{{{0.0, 0.0}, {r * 0.6, r * 0.8}}};
        const double v = similarity_matrix(p, p, 1.0 / 3.0).entries(0, 1);
        CHECK(v <= prev);
        CHECK(v >= 0.0);
        if (r > std::sqrt(1.0 / 3.0)) CHECK(v == 0.0);
        prev = v;
    }
}

TEST_CASE("optimal_assignment") {
    Eigen::MatrixXd dominant = Eigen::MatrixXd::Constant(4, 4, 0.3);
    dominant.diagonal().setOnes();
    const auto id = optimal_assignment({dominant, 1.0 / 3.0});
    CHECK(id.row_to_col == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(id.total == doctest::Approx(4.0));
    CHECK(id.assigned(0, 1) == 0.0);
    CHECK(id.assigned(2, 2) == 1.0);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd m(7, 7);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) m(i, j) = u(rng);
        const auto a = optimal_assignment({m, 1.0 / 3.0});
        CHECK(std::abs(a.total - testing::brute_force_best(m, true)) < 1e-12);
        CHECK(std::abs(a.assigned.sum() - a.total) < 1e-12);

        // Dominates random permutations.
        std::vector<int> perm(7);
        std::iota(perm.begin(), perm.end(), 0);
        for (int k = 0; k < 1000; ++k) {
            std::shuffle(perm.begin(), perm.end(), rng);
            double t = 0.0;
            for (int i = 0; i < 7; ++i) t += m(i, perm[i]);
            CHECK(a.total >= t - 1e-12);
        }
    }
    CHECK_THROWS_AS(optimal_assignment({Eigen::MatrixXd::Zero(2, 3), 1.0}), ContractViolation);
}

TEST_CASE("fsim basics") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto a = testing::random_roles(rng), b = testing::random_roles(rng);
        CHECK(fsim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        const double ab = fsim(a, b);
        CHECK(std::abs(ab - fsim(b, a)) < 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
    CHECK_THROWS_AS(fsim(testing::random_roles(rng, 10), testing::random_roles(rng, 9)), ContractViolation);
}

TEST_CASE("fsim is zero when every normalized pair is at least sqrt(delta) apart") {
    // Four roles on the corners of the unit square against four roles at edge
    // midpoints of a square grid that normalizes to the same box but is rotated
    // by 45 degrees: every cross pair has squared distance >= 0.25 = delta.
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const std::vector<Vec2> diamond{{0.5, 0}, {0, 0.5}, {1, 0.5}, {0.5, 1}};
    const double delta = 0.25;
    Eigen::MatrixXd m(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = std::max(1.0 - squared_distance(square[i], diamond[j]) / delta, 0.0);
    CHECK(testing::brute_force_best(m, true) == 0.0);
    CHECK(fsim(square, diamond, delta) == 0.0);
}

TEST_CASE("fsim with an appended identical role never decreases") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        // Pre-normalized operands, so a shared point inside [0,1]^2 leaves the
        // normalization untouched.
        auto a = normalize_formation(testing::random_roles(rng, 9)).roles;
        auto b = normalize_formation(testing::random_roles(rng, 9)).roles;
        const double before = fsim(a, b);
        const Vec2 shared{u(rng), u(rng)};
        a.push_back(shared);
        b.push_back(shared);
        CHECK(fsim(a, b) >= before - 1e-12);
    }
}

TEST_CASE("classify against the shipped bank") {
    REQUIRE(bank().size() == 12);
    const auto& v = bank().at("4-4-2").variants.front();
    const auto r = classify(v, bank());
    CHECK(r.best().scheme == "4-4-2");
    CHECK(r.best().fsim == doctest::Approx(1.0));
    CHECK(r.ranking.size() == 12);
    for (std::size_t i = 1; i < r.ranking.size(); ++i) CHECK(r.ranking[i - 1].fsim >= r.ranking[i].fsim);
    CHECK(r.in_top_k("4-4-2", 1));
    CHECK(r.score_of("9-1") < 0.0);

    // Noise of max norm 0.02 per role keeps the best scheme.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, 2 * M_PI), rad(0.0, 0.02);
    for (const auto& t : bank().templates)
        for (const auto& variant : t.variants)
            for (int trial = 0; trial < 10; ++trial) {
                auto noisy = variant;
                for (auto& p : noisy) {
                    const double a = ang(rng), d = rad(rng);
                    p = p + Vec2{d * std::cos(a), d * std::sin(a)};
                }
                CHECK(classify(noisy, bank()).best().scheme == t.name());
            }

    // Ties break by name.
    TemplateSet twins;
    twins.templates = {{NumericScheme::parse("4-5-1"), {v}}, {NumericScheme::parse("4-4-2"), {v}}};
    const auto tied = classify(v, twins);
    CHECK(tied.ranking[0].scheme == "4-4-2");
    CHECK_THROWS_AS(classify(v, TemplateSet{}), ContractViolation);
}

TEST_CASE("classification ranking is invariant to translation and scale") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 30; ++i) {
        const auto f = testing::random_roles(rng);
        auto g = f;
        for (auto& p : g) p = p * 3.5 + Vec2{-2.0, 7.0};
        const auto a = classify(f, bank()), b = classify(g, bank());
        for (std::size_t k = 0; k < a.ranking.size(); ++k) CHECK(a.ranking[k].scheme == b.ranking[k].scheme);
    }
}

TEST_CASE("template similarity table") {
    const auto table = template_similarity_matrix(bank());
    const auto t = static_cast<Eigen::Index>(bank().size());
    for (Eigen::Index i = 0; i < t; ++i) {
        CHECK(table.table(i, i) == 1.0);
        for (Eigen::Index j = 0; j < t; ++j) CHECK(std::abs(table.table(i, j) - table.table(j, i)) < 1e-12);
    }
    CHECK(table.at("4-4-2", "4-5-1") == table.table(table.index_of("4-4-2"), table.index_of("4-5-1")));
    const auto near = table.nearest("4-4-2", 3);
    REQUIRE(near.size() == 3);
    CHECK(near[0] == "4-4-2");
    CHECK(table.nearest("4-4-2", 100).size() == 12);
    CHECK_THROWS_AS(table.index_of("2-2-6"), LookupError);
}

TEST_CASE("group reduction") {
    const auto table = template_similarity_matrix(bank());
    CHECK(reduce_groups(NumericScheme::parse("4-2-3-1"), table).str() == "4-5-1");
    CHECK(reduce_groups(NumericScheme::parse("4-1-4-1"), table).str() == "4-5-1");
    CHECK(reduce_groups(NumericScheme::parse("4-3-2-1"), table).str() == "4-3-3");
    CHECK(reduce_groups(NumericScheme::parse("4-4-2"), table).str() == "4-4-2");
    CHECK_THROWS_AS(reduce_groups(NumericScheme::parse("3-3-3-1"), table), LookupError);
}

TEST_CASE("template file validation") {
    const auto good = template_set_to_json(bank());
    const auto back = parse_template_set(good);
    CHECK(back.size() == bank().size());
    CHECK(back.bank_version == bank().bank_version);
    CHECK(back.at("5-2-3").variants == bank().at("5-2-3").variants);

    CHECK_THROWS_AS(parse_template_set("{"), ParseError);
    CHECK_THROWS_AS(parse_template_set(R"({"schema_version": "other/1", "templates": []})"), SchemaError);

    auto broken = bank();
    broken.templates[0].variants[0].pop_back();
    CHECK_THROWS_AS(validate_template_set(broken), SchemaError);
    broken = bank();
    broken.templates.push_back(broken.templates[0]);
    CHECK_THROWS_AS(validate_template_set(broken), SchemaError);
    broken = bank();
    broken.templates[0].variants[0][0] = {1.5, 0.2};
    CHECK_THROWS_AS(validate_template_set(broken), SchemaError);
    CHECK_THROWS_AS(load_template_set("/nonexistent/templates.json"), ConfigError);
}
