#include "formsim/assignment.hpp"

#include <fmt/format.h>

#include <limits>

#include "formsim/errors.hpp"

namespace formsim {
namespace {

struct HungarianSolution {
    std::vector<std::size_t> row_to_col;
    std::vector<double> row_potential;
    std::vector<double> col_potential;
};

// Shortest augmenting path formulation with potentials; 1-based internally.
HungarianSolution hungarian(const Eigen::MatrixXd& a) {
    const auto n = static_cast<std::size_t>(a.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    HungarianSolution s;
    s.row_to_col.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) s.row_to_col[p[j] - 1] = j - 1;
    s.row_potential.assign(u.begin() + 1, u.end());
    s.col_potential.assign(v.begin() + 1, v.end());
    return s;
}

/// Kuhn augmenting path over the tight-edge graph.
bool augment(std::size_t row, const std::vector<std::vector<std::size_t>>& adj, const std::vector<char>& col_blocked,
             std::vector<char>& visited, std::vector<std::ptrdiff_t>& col_owner) {
    for (auto c : adj[row]) {
        if (col_blocked[c] || visited[c]) continue;
        visited[c] = 1;
        if (col_owner[c] < 0 ||
            augment(static_cast<std::size_t>(col_owner[c]), adj, col_blocked, visited, col_owner)) {
            col_owner[c] = static_cast<std::ptrdiff_t>(row);
            return true;
        }
    }
    return false;
}

bool has_perfect_matching(std::size_t first_row, const std::vector<std::vector<std::size_t>>& adj,
                          const std::vector<char>& col_blocked) {
    const auto n = adj.size();
    std::vector<std::ptrdiff_t> owner(n, -1);
    std::vector<char> visited(n);
    for (std::size_t r = first_row; r < n; ++r) {
        std::fill(visited.begin(), visited.end(), 0);
        if (!augment(r, adj, col_blocked, visited, owner)) return false;
    }
    return true;
}

double total_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& row_to_col) {
    double total = 0.0;
    for (std::size_t r = 0; r < row_to_col.size(); ++r)
        total += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(row_to_col[r]));
    return total;
}

}  // namespace

Assignment solve_min_cost_assignment(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols())
        throw ContractViolation(fmt::format("assignment needs a square matrix, got {}x{}", cost.rows(), cost.cols()));
    const auto n = static_cast<std::size_t>(cost.rows());
    if (n == 0) return {};
    if (!cost.allFinite()) throw ContractViolation("assignment matrix contains non-finite entries");

    const auto sol = hungarian(cost);
    Assignment best{sol.row_to_col, total_of(cost, sol.row_to_col)};

    // Every optimum is a perfect matching on edges with zero reduced cost, so
    // the lexicographically smallest optimum is found greedily on that graph.
    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double tol = 1e-11 * scale;
    std::vector<std::vector<std::size_t>> tight(n);
    bool unique = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double reduced = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                   sol.row_potential[i] - sol.col_potential[j];
            if (reduced <= tol) tight[i].push_back(j);
        }
        if (tight[i].size() > 1) unique = false;
    }
    if (unique) return best;

    std::vector<char> blocked(n, 0);
    std::vector<std::size_t> lex(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (auto j : tight[i]) {
            if (blocked[j]) continue;
            blocked[j] = 1;
            if (has_perfect_matching(i + 1, tight, blocked)) {
                lex[i] = j;
                placed = true;
                break;
            }
            blocked[j] = 0;
        }
        if (!placed) return best;  // tolerance artifacts; keep the solver's optimum
    }
    const double lex_total = total_of(cost, lex);
    if (lex_total <= best.total + 1e-12 * scale) return {lex, lex_total};
    return best;
}

Assignment solve_max_weight_assignment(const Eigen::MatrixXd& weight) {
    auto result = solve_min_cost_assignment(-weight);
    result.total = -result.total;
    return result;
}

}  // namespace formsim
