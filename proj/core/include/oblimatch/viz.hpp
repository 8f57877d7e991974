#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oblimatch/descriptor_field.hpp"
#include "oblimatch/matcher.hpp"

namespace oblimatch {

// Side-by-side keypoint plot with one line per match. When correctness flags
// are given, lines are green (correct) or red (wrong); otherwise gray.
std::string render_matches_svg(const KeypointSet& kps_a, const KeypointSet& kps_b,
                               const MatchList& matches,
                               const std::optional<std::vector<bool>>& correctness);

}  // namespace oblimatch
