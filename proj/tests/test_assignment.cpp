#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "formsim/assignment.hpp"
#include "formsim/errors.hpp"
#include "support.hpp"

using namespace formsim;

namespace {

bool is_permutation(const std::vector<std::size_t>& p) {
    std::vector<bool> seen(p.size(), false);
    for (auto c : p) {
        if (c >= p.size() || seen[c]) return false;
        seen[c] = true;
    }
    return true;
}

double total_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& p) {
    double t = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) t += m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
    return t;
}

}  // namespace

TEST_CASE("min-cost assignment matches exhaustive search") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int n : {1, 2, 3, 5, 6, 7}) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::MatrixXd m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = u(rng);
            const auto a = solve_min_cost_assignment(m);
            CHECK(is_permutation(a.row_to_col));
            CHECK(a.total == doctest::Approx(total_of(m, a.row_to_col)).epsilon(1e-14));
            CHECK(std::abs(a.total - testing::brute_force_best(m, false)) < 1e-12);
        }
    }
}

TEST_CASE("max-weight assignment matches exhaustive search on integer-valued ties") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> u(0, 3);
    for (int trial = 0; trial < 40; ++trial) {
        Eigen::MatrixXd m(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) m(i, j) = u(rng);
        const auto a = solve_max_weight_assignment(m);
        CHECK(a.total == testing::brute_force_best(m, true));
    }
}

TEST_CASE("equal-cost optima resolve to the lexicographically smallest mapping") {
    CHECK(solve_min_cost_assignment(Eigen::MatrixXd::Zero(5, 5)).row_to_col == std::vector<std::size_t>{0, 1, 2, 3, 4});

    // Two optima of cost 2: {0->0, 1->1, 2->2} and {0->1, 1->0, 2->2}.
    Eigen::MatrixXd m(3, 3);
    m << 1, 1, 5,  //
        1, 1, 5,   //
        5, 5, 0;
    CHECK(solve_min_cost_assignment(m).row_to_col == std::vector<std::size_t>{0, 1, 2});

    // The lexicographic search over all 7! mappings agrees with the solver.
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> u(0, 2);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd c(7, 7);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) c(i, j) = u(rng);
        std::vector<std::size_t> perm(7), best;
        std::iota(perm.begin(), perm.end(), 0);
        double best_total = 1e300;
        do {
            const double t = total_of(c, perm);
            if (t < best_total) {  // strict: the first optimum in lexicographic order wins
                best_total = t;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(solve_min_cost_assignment(c).row_to_col == best);
    }
}

TEST_CASE("permutation matrix is recovered") {
    const std::vector<std::size_t> p{3, 0, 4, 1, 2};
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
    for (std::size_t i = 0; i < p.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i])) = 1.0;
    const auto a = solve_max_weight_assignment(m);
    CHECK(a.row_to_col == p);
    CHECK(a.total == 5.0);
}

TEST_CASE("contract violations") {
    CHECK_THROWS_AS(solve_min_cost_assignment(Eigen::MatrixXd::Zero(2, 3)), ContractViolation);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_min_cost_assignment(m), ContractViolation);
    m(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(solve_max_weight_assignment(m), ContractViolation);
    CHECK(solve_min_cost_assignment(Eigen::MatrixXd(0, 0)).row_to_col.empty());
}

TEST_CASE("large magnitudes keep the optimum exact") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1e6, 1e6 + 1.0);
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) m(i, j) = u(rng);
    const auto a = solve_min_cost_assignment(m);
    CHECK(std::abs(a.total - testing::brute_force_best(m, false)) < 1e-8);
}
