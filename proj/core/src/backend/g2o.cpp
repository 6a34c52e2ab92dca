#include "cslam/backend/g2o.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cslam::backend {

void write_g2o(std::ostream& os, const PoseGraph& graph) {
  os << std::setprecision(17);
  for (const auto& [key, p] : graph.nodes()) {
    os << "VERTEX_SE2 " << encode_node_id(key) << ' ' << p.x << ' ' << p.y << ' ' << p.theta << '\n';
  }
  for (const auto& e : graph.edges()) {
    const auto& m = e.measurement;
    const auto& i = e.information;
    os << "EDGE_SE2 " << encode_node_id(e.from) << ' ' << encode_node_id(e.to) << ' ' << m.x << ' ' << m.y
       << ' ' << m.theta << ' ' << i(0, 0) << ' ' << i(0, 1) << ' ' << i(0, 2) << ' ' << i(1, 1) << ' '
       << i(1, 2) << ' ' << i(2, 2) << '\n';
  }
}

PoseGraph read_g2o(std::istream& is) {
  PoseGraph g;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("g2o line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "VERTEX_SE2") {
      std::int64_t id;
      double x, y, th;
      if (!(ls >> id >> x >> y >> th)) fail("malformed VERTEX_SE2");
      g.add_node(decode_node_id(id), Pose2(x, y, th));
    } else if (tag == "EDGE_SE2") {
      std::int64_t a, b;
      double dx, dy, dth, i11, i12, i13, i22, i23, i33;
      if (!(ls >> a >> b >> dx >> dy >> dth >> i11 >> i12 >> i13 >> i22 >> i23 >> i33)) fail("malformed EDGE_SE2");
      Edge e;
      e.from = decode_node_id(a);
      e.to = decode_node_id(b);
      if (e.from.robot != e.to.robot) {
        e.kind = EdgeKind::InterRobotLoop;
      } else if (e.to.keyframe == e.from.keyframe + 1) {
        e.kind = EdgeKind::Odometry;
      } else {
        e.kind = EdgeKind::IntraRobotLoop;
      }
      e.measurement = Pose2(dx, dy, dth);
      e.information << i11, i12, i13, i12, i22, i23, i13, i23, i33;
      try {
        g.insert_own(e, e.from.robot);
      } catch (const std::invalid_argument& ex) {
        fail(ex.what());
      }
    } else {
      fail("unknown tag " + tag);
    }
  }
  return g;
}

}  // namespace cslam::backend
