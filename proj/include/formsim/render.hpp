#pragma once

#include <optional>
#include <string>
#include <vector>

#include "formsim/evaluation.hpp"
#include "formsim/formation_similarity.hpp"

namespace formsim {

struct TemplateOverlay {
    std::string scheme;
    std::vector<Vec2> roles;
    /// VFS role i is matched to template role row_to_col[i].
    std::vector<std::size_t> row_to_col;
};

/// Schematic pitch with one disc per role, attack pointing up. Roles are
/// drawn normalized, so an overlaid template lines up with the VFS.
std::string render_vfs_svg(const std::vector<Vec2>& roles, const std::optional<TemplateOverlay>& overlay = {});

/// Row-normalized heat map, rows = reference, columns = prediction.
std::string render_confusion_svg(const ConfusionMatrix& m);

}  // namespace formsim
