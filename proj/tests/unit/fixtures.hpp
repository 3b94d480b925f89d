#pragma once

#include "rkinv/graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace rkinv::test {

inline Graph make(std::vector<std::string> v, std::vector<GraphSpec::EdgeSpec> e,
                  std::map<std::string, double> kappa = {}, bool allow_recurrent = false) {
  GraphSpec s;
  s.vertices = std::move(v);
  s.edges = std::move(e);
  s.kappa = std::move(kappa);
  GraphOptions o;
  o.allow_recurrent = allow_recurrent;
  return Graph::build(s, o);
}

// G = [[1, 1], [1, 2]]
inline Graph ab() { return make({"a", "b"}, {{"a", "b", 1.0}}, {{"a", 1.0}}); }

inline Graph path3() {
  return make({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 0.5}}, {{"a", 0.5}, {"c", 0.5}});
}

inline Graph single_edge() { return make({"a", "b"}, {{"a", "b", 1.0}}, {}, true); }

inline Graph triangle() {
  return make({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 1.0}, {"c", "a", 1.0}}, {}, true);
}

} // namespace rkinv::test
