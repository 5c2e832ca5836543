#include "formsim/role_assignment.hpp"

#include <fmt/format.h>

#include "formsim/assignment.hpp"
#include "formsim/errors.hpp"

namespace formsim {

CenteredFrame subtract_team_center(const std::vector<Vec2>& positions) {
    if (positions.empty()) throw ContractViolation("cannot center an empty player list");
    const auto center = centroid(positions);
    CenteredFrame out;
    out.positions.reserve(positions.size());
    for (const auto& p : positions) out.positions.push_back(p - center);
    return out;
}

RoleSet initialize_roles(const std::vector<CenteredFrame>& frames) {
    if (frames.empty()) throw ContractViolation("cannot initialize roles without frames");
    const auto n = frames.front().positions.size();
    RoleSet set;
    set.roles.assign(n, Vec2{});
    for (const auto& f : frames) {
        if (f.positions.size() != n)
            throw IntegrityError(fmt::format("frame has {} players, expected {}", f.positions.size(), n));
        for (std::size_t k = 0; k < n; ++k) set.roles[k] += f.positions[k];
    }
    std::vector<std::size_t> identity(n);
    for (std::size_t k = 0; k < n; ++k) {
        set.roles[k] = set.roles[k] / static_cast<double>(frames.size());
        identity[k] = k;
    }
    set.assignment_per_frame.assign(frames.size(), identity);
    return set;
}

std::vector<std::size_t> assign_frame(const CenteredFrame& frame, const RoleSet& roles) {
    const auto n = frame.positions.size();
    if (n != roles.roles.size())
        throw ContractViolation(fmt::format("{} players cannot be assigned to {} roles", n, roles.roles.size()));
    Eigen::MatrixXd cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t r = 0; r < n; ++r)
            cost(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(r)) =
                squared_distance(frame.positions[p], roles.roles[r]);
    return solve_min_cost_assignment(cost).row_to_col;
}

double assignment_cost(const CenteredFrame& frame, const std::vector<Vec2>& anchors,
                       const std::vector<std::size_t>& player_to_role) {
    double total = 0.0;
    for (std::size_t p = 0; p < frame.positions.size(); ++p)
        total += squared_distance(frame.positions[p], anchors.at(player_to_role.at(p)));
    return total;
}

std::vector<std::string> stable_roster(const Segment& segment) {
    if (segment.frames.empty()) throw ContractViolation("segment " + segment.id + " has no frames");
    std::vector<std::string> roster;
    for (const auto& [id, _] : segment.frames.front().players) roster.push_back(id);
    for (const auto& f : segment.frames) {
        bool same = f.players.size() == roster.size();
        if (same) {
            std::size_t k = 0;
            for (const auto& [id, _] : f.players) same = same && id == roster[k++];
        }
        if (!same)
            throw IntegrityError(
                fmt::format("segment {}: outfield roster changes at frame {}", segment.id, f.index));
    }
    return roster;
}

std::vector<CenteredFrame> center_segment(const Segment& segment, const std::vector<std::string>& roster) {
    std::vector<CenteredFrame> out;
    out.reserve(segment.frames.size());
    std::vector<Vec2> raw(roster.size());
    for (const auto& f : segment.frames) {
        for (std::size_t k = 0; k < roster.size(); ++k) raw[k] = f.players.at(roster[k]);
        out.push_back(subtract_team_center(raw));
    }
    return out;
}

VfsResult compute_vfs_detailed(const Segment& segment, const VfsOptions& options) {
    const auto roster = stable_roster(segment);
    if (roster.empty()) throw IntegrityError("segment " + segment.id + " has no outfield players");
    if (!options.permissive && roster.size() != options.expected_players)
        throw IntegrityError(fmt::format("segment {}: {} outfield players, expected {}", segment.id, roster.size(),
                                         options.expected_players));

    VfsResult result;
    result.frames = center_segment(segment, roster);
    result.roles = initialize_roles(result.frames);

    const int passes = options.role_compensation ? options.iterations : 0;
    const auto n = roster.size();
    for (int it = 0; it < passes; ++it) {
        std::vector<Vec2> sums(n);
        for (std::size_t f = 0; f < result.frames.size(); ++f) {
            auto mapping = assign_frame(result.frames[f], result.roles);
            for (std::size_t p = 0; p < n; ++p) sums[mapping[p]] += result.frames[f].positions[p];
            result.roles.assignment_per_frame[f] = std::move(mapping);
        }
        // Each role receives exactly one position per frame.
        for (std::size_t r = 0; r < n; ++r)
            result.roles.roles[r] = sums[r] / static_cast<double>(result.frames.size());
    }

    result.formation.segment_id = segment.id;
    result.formation.roles = result.roles.roles;
    result.formation.role_compensation = options.role_compensation;
    return result;
}

Formation compute_vfs(const Segment& segment, const VfsOptions& options) {
    return compute_vfs_detailed(segment, options).formation;
}

}  // namespace formsim
