#include "rkinv/graph_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace rkinv {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string &what) {
  throw GraphError(GraphError::Kind::kParse, "graph spec: " + what);
}

} // namespace

GraphSpec parse_graph_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    parse_error(e.what());
  }
  if (!doc.is_object())
    parse_error("top level must be an object");

  GraphSpec spec;
  try {
    if (!doc.contains("vertices") || !doc["vertices"].is_array())
      parse_error("missing 'vertices' list");
    for (const auto &v : doc["vertices"])
      spec.vertices.push_back(v.get<std::string>());

    if (doc.contains("edges")) {
      for (const auto &e : doc["edges"]) {
        if (!e.is_array() || e.size() != 3)
          parse_error("each edge must be [from, to, W]");
        spec.edges.push_back(
            {e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<double>()});
      }
    }
    if (doc.contains("kappa")) {
      if (!doc["kappa"].is_object())
        parse_error("'kappa' must be an object");
      for (const auto &[label, value] : doc["kappa"].items())
        spec.kappa[label] = value.get<double>();
    }
    if (doc.contains("x0"))
      spec.x0 = doc["x0"].get<std::string>();
    if (doc.contains("u")) {
      spec.u = doc["u"].get<double>();
      if (!(*spec.u > 0.0))
        parse_error("'u' must be positive");
    }
  } catch (const json::type_error &e) {
    parse_error(e.what());
  }
  return spec;
}

GraphSpec load_graph_spec(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw GraphError(GraphError::Kind::kParse,
                     "cannot open graph spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph_spec(buf.str());
}

std::string dump_graph_spec(const GraphSpec &spec) {
  json doc;
  doc["vertices"] = spec.vertices;
  doc["edges"] = json::array();
  for (const auto &e : spec.edges)
    doc["edges"].push_back(json::array({e.from, e.to, e.conductance}));
  doc["kappa"] = json::object();
  for (const auto &[label, value] : spec.kappa)
    doc["kappa"][label] = value;
  if (spec.x0)
    doc["x0"] = *spec.x0;
  if (spec.u)
    doc["u"] = *spec.u;
  return doc.dump(2) + "\n";
}

void save_graph_spec(const GraphSpec &spec, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write '" + path.string() + "'");
  out << dump_graph_spec(spec);
}

} // namespace rkinv
