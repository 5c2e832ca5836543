#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "formsim/geometry.hpp"
#include "formsim/segmentation.hpp"

namespace formsim {

/// One frame of the observed team with its centroid removed.
struct CenteredFrame {
    std::vector<Vec2> positions;
};

/// Role anchors plus, per frame, the player -> role bijection.
struct RoleSet {
    std::vector<Vec2> roles;
    std::vector<std::vector<std::size_t>> assignment_per_frame;
};

/// The visual formation summary: mean position per role over a segment.
struct Formation {
    std::string segment_id;
    std::vector<Vec2> roles;
    bool role_compensation = true;

    std::size_t n() const { return roles.size(); }
};

struct VfsOptions {
    bool role_compensation = true;
    /// Assignment passes; one is the default and what the method prescribes.
    int iterations = 1;
    /// Accept segments whose outfield roster is not exactly ten players.
    bool permissive = false;
    std::size_t expected_players = 10;
};

CenteredFrame subtract_team_center(const std::vector<Vec2>& positions);

/// Anchors roles at the per-player mean of the centered positions (identity assignment).
RoleSet initialize_roles(const std::vector<CenteredFrame>& frames);

/// Player -> role bijection minimizing the summed squared distance to the anchors.
std::vector<std::size_t> assign_frame(const CenteredFrame& frame, const RoleSet& roles);

/// Summed squared distance of a frame under a given player -> role mapping.
double assignment_cost(const CenteredFrame& frame, const std::vector<Vec2>& anchors,
                       const std::vector<std::size_t>& player_to_role);

/// Player ids in the order used for role indices, validated to be constant
/// across the segment. Throws IntegrityError on roster changes.
std::vector<std::string> stable_roster(const Segment& segment);

std::vector<CenteredFrame> center_segment(const Segment& segment, const std::vector<std::string>& roster);

struct VfsResult {
    Formation formation;
    RoleSet roles;  // final anchors and the assignment used in the last pass
    std::vector<CenteredFrame> frames;
};

VfsResult compute_vfs_detailed(const Segment& segment, const VfsOptions& options = {});
Formation compute_vfs(const Segment& segment, const VfsOptions& options = {});

}  // namespace formsim
