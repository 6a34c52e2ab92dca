#pragma once

#include <iosfwd>

#include "cslam/backend/pose_graph.hpp"

namespace cslam::backend {

/// Writes VERTEX_SE2 and EDGE_SE2 lines with ids robot * 10^6 + keyframe.
void write_g2o(std::ostream& os, const PoseGraph& graph);

/// Reads the format written by write_g2o. Edge kinds are inferred from the
/// endpoints. Throws std::runtime_error with the line number on bad input.
PoseGraph read_g2o(std::istream& is);

}  // namespace cslam::backend
