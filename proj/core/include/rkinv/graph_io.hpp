#pragma once

#include "rkinv/graph.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace rkinv {

// Graph spec files are JSON objects:
//
//   {
//     "vertices": ["a", "b", "c"],
//     "edges":    [["a", "b", 1.0], ["b", "c", 0.5]],
//     "kappa":    {"a": 1.0},        // optional, missing vertices get 0
//     "x0":       "a",               // optional
//     "u":        1.0                // optional, must be positive
//   }
//
// dump_graph_spec(parse_graph_spec(s)) is a fixed point after one pass.
GraphSpec parse_graph_spec(std::string_view text);
GraphSpec load_graph_spec(const std::filesystem::path &path);
std::string dump_graph_spec(const GraphSpec &spec);
void save_graph_spec(const GraphSpec &spec, const std::filesystem::path &path);

} // namespace rkinv
