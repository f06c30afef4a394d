#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rpr/atlas.hpp"

namespace rpr {

/// "workspace" (theta1, alpha torus) and "jointspace" (rho2, rho3 plane).
const std::vector<std::string>& figure_names();

/// Standalone SVG document. Every marker carries data-id/data-x/data-y attributes equal to
/// its points.csv row. Throws Error(Validation) for an unknown figure name.
std::string render_figure(const AtlasData& atlas, std::string_view figure);

}  // namespace rpr
