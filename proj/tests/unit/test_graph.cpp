#include "fixtures.hpp"

#include "rkinv/graph.hpp"
#include "rkinv/graph_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace rkinv {
namespace {

using test::make;

GraphError::Kind error_kind(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const GraphError &e) {
    return e.kind();
  }
  ADD_FAILURE() << "no GraphError thrown";
  return GraphError::Kind::kParse;
}

TEST(Graph, RejectsInvalidInput) {
  using K = GraphError::Kind;
  EXPECT_EQ(error_kind([] { make({}, {}); }), K::kEmpty);
  EXPECT_EQ(error_kind([] { make({"a", "a"}, {}, {{"a", 1.0}}); }), K::kDuplicateLabel);
  EXPECT_EQ(error_kind([] { make({"a", "b"}, {{"a", "q", 1.0}}, {{"a", 1.0}}); }),
            K::kUnknownLabel);
  EXPECT_EQ(error_kind([] { make({"a", "b"}, {{"a", "b", 0.0}}, {{"a", 1.0}}); }),
            K::kNonpositiveConductance);
  EXPECT_EQ(error_kind([] { make({"a", "b"}, {{"a", "a", 1.0}}, {{"a", 1.0}}); }), K::kSelfLoop);
  EXPECT_EQ(error_kind([] { make({"a", "b"}, {{"a", "b", 1.0}}, {{"a", -1.0}}); }),
            K::kNegativeKilling);
  EXPECT_EQ(error_kind([] { make({"a", "b", "c"}, {{"a", "b", 1.0}}, {{"a", 1.0}}); }),
            K::kDisconnected);
  EXPECT_EQ(error_kind([] { make({"a", "b"}, {{"a", "b", 1.0}}); }), K::kRecurrent);
  EXPECT_EQ(error_kind([] { make({"a", "b"}, {{"a", "b", 1.0}}, {{"q", 1.0}}); }),
            K::kUnknownLabel);
}

TEST(Graph, RecurrentGraphsAllowedOnRequestButHaveNoGreenFunction) {
  const Graph g = test::single_edge();
  EXPECT_FALSE(g.transient());
  EXPECT_THROW(green_function(g), GraphError);
}

TEST(Graph, AccessorsAndIncidence) {
  const Graph g = make({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 0.5}, {"a", "b", 2.0}},
                       {{"c", 0.25}});
  EXPECT_EQ(g.num_vertices(), 3u);
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_EQ(g.vertex("b"), 1u);
  EXPECT_FALSE(g.find("z").has_value());
  const auto inc = g.incident(1);
  ASSERT_EQ(inc.size(), 3u);
  EXPECT_EQ(inc[0], 0u);
  EXPECT_EQ(inc[1], 1u);
  EXPECT_EQ(inc[2], 2u);
  EXPECT_DOUBLE_EQ(g.total_conductance(1), 3.5);
  EXPECT_TRUE(g.killing_only_at(2));
  EXPECT_EQ(g.edge(1).other(1), 2u);
}

TEST(Graph, GreenFunctionOfTwoVertexGraph) {
  const Eigen::MatrixXd G = green_function(test::ab());
  EXPECT_NEAR(G(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(G(0, 1), 1.0, 1e-14);
  EXPECT_NEAR(G(1, 0), 1.0, 1e-14);
  EXPECT_NEAR(G(1, 1), 2.0, 1e-14);
}

TEST(Graph, DirichletFormMatchesPrecisionMatrix) {
  const Graph g = test::path3();
  const std::vector<double> f{0.3, -1.2, 0.7};
  const Eigen::Map<const Eigen::VectorXd> v(f.data(), 3);
  EXPECT_NEAR(dirichlet_form(g, f), v.dot(precision_matrix(g) * v), 1e-12);
}

TEST(Graph, HarmonicTransformOnSingleEdge) {
  const double c = 0.7;
  const Graph g = make({"a", "b"}, {{"a", "b", 1.0}}, {{"b", c}});
  const HTransform ht = harmonic_killing_transform(g, 0);
  EXPECT_NEAR(ht.h[0], 1.0, 1e-14);
  EXPECT_NEAR(ht.h[1], 1.0 / (1.0 + c), 1e-14);
  EXPECT_NEAR(ht.graph.edge(0).conductance, 1.0 / (1.0 + c), 1e-14);
  EXPECT_NEAR(ht.graph.kappa(0), c / (1.0 + c), 1e-14);
  EXPECT_EQ(ht.graph.kappa(1), 0.0);
}

TEST(Graph, HarmonicTransformPreservesDirichletForm) {
  const Graph g = make({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 1.0}, {"a", "c", 0.4}},
                       {{"b", 0.3}, {"c", 0.5}, {"a", 0.2}});
  const HTransform ht = harmonic_killing_transform(g, 0);
  const std::vector<double> f{0.9, -0.4, 1.3};
  std::vector<double> hf(3);
  for (int i = 0; i < 3; ++i)
    hf[i] = ht.h[i] * f[i];
  EXPECT_NEAR(dirichlet_form(ht.graph, f), dirichlet_form(g, hf), 1e-12);
  EXPECT_TRUE(ht.graph.killing_only_at(0));
}

TEST(Graph, RemoveVerticesMovesConductanceToKilling) {
  const Graph g = test::path3();
  const Subgraph s = remove_vertices(g, {true, false, false}, 1);
  ASSERT_EQ(s.graph.num_vertices(), 2u);
  EXPECT_EQ(s.parent_vertex[0], 1u);
  EXPECT_EQ(s.parent_vertex[1], 2u);
  EXPECT_NEAR(s.graph.kappa(0), 1.0, 1e-15);
  EXPECT_NEAR(s.graph.kappa(1), 0.5, 1e-15);
  ASSERT_EQ(s.graph.num_edges(), 1u);
  EXPECT_EQ(s.parent_edge[0], 1u);
}

TEST(EdgeSet, CodesAndSetOperations) {
  const std::vector<EdgeId> ids{0, 2};
  EdgeSet s = EdgeSet::from_ids(3, ids);
  EXPECT_EQ(s.code(), 5u);
  EXPECT_EQ(EdgeSet::from_code(3, 5), s);
  EXPECT_EQ(s.count(), 2u);
  EXPECT_TRUE(s.subset_of(EdgeSet::all(3)));
  const std::vector<EdgeId> bad{3};
  EXPECT_THROW(EdgeSet::from_ids(3, bad), GraphError);
  EdgeSet t(3);
  t.insert(1);
  s |= t;
  EXPECT_EQ(s, EdgeSet::all(3));
}

TEST(Clusters, CountsComponentsOfOpenEdges) {
  const Graph g = test::path3();
  const ClusterPartition none = clusters(g, EdgeSet(2));
  EXPECT_EQ(none.count, 3u);
  const std::vector<EdgeId> first{0};
  const ClusterPartition one = clusters(g, first);
  EXPECT_EQ(one.count, 2u);
  EXPECT_TRUE(one.same(0, 1));
  EXPECT_FALSE(one.same(1, 2));
}

TEST(GraphIo, RoundTripIsAFixedPoint) {
  const std::string text = R"({"vertices": ["a", "b"], "edges": [["a", "b", 1.5]],
                                "kappa": {"b": 0.25}, "x0": "a", "u": 2.0})";
  const GraphSpec spec = parse_graph_spec(text);
  EXPECT_EQ(spec.vertices.size(), 2u);
  EXPECT_EQ(spec.x0.value(), "a");
  EXPECT_DOUBLE_EQ(spec.u.value(), 2.0);
  const std::string once = dump_graph_spec(spec);
  EXPECT_EQ(dump_graph_spec(parse_graph_spec(once)), once);
  const Graph g = Graph::build(spec);
  EXPECT_DOUBLE_EQ(g.kappa(1), 0.25);
}

TEST(GraphIo, ParseErrors) {
  EXPECT_THROW(parse_graph_spec("{not json"), GraphError);
  EXPECT_THROW(parse_graph_spec(R"({"vertices": ["a"], "edges": [], "u": -1})"), GraphError);
  EXPECT_THROW(parse_graph_spec(R"({"vertices": ["a"], "edges": [["a"]]})"), GraphError);
  EXPECT_THROW(load_graph_spec("/nonexistent/graph.json"), GraphError);
}

} // namespace
} // namespace rkinv
