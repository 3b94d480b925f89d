#include "rkinv/loop_soup.hpp"

#include <algorithm>
#include <stdexcept>

namespace rkinv {

PDPartition sample_pd_partition(double alpha, double eps, Rng &rng) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("sample_pd_partition: alpha must be positive");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("sample_pd_partition: eps must be in (0,1)");
  PDPartition pd;
  double rest = 1.0;
  while (rest >= eps) {
    const double piece = rest * beta_one(rng, alpha);
    pd.masses.push_back(piece);
    rest -= piece;
  }
  pd.remainder = rest;
  return pd;
}

std::vector<double> partition_thresholds(const PDPartition &pd, double u) {
  std::vector<double> cuts;
  double acc = 0.0;
  for (double m : pd.masses) {
    acc += m;
    const double t = acc * u;
    if (!(t < u))
      break;
    if (t > 0.0 && (cuts.empty() || t > cuts.back()))
      cuts.push_back(t);
  }
  return cuts;
}

SoupFields fields(const LoopSoupSample &soup) {
  SoupFields f;
  f.occupation.assign(soup.num_vertices, 0.0);
  f.crossings.assign(soup.num_edges, 0);
  for (const Trajectory &loop : soup.loops) {
    for (const Step &s : loop.steps) {
      f.occupation.at(s.vertex) += s.holding;
      if (s.exit == ExitKind::kJump)
        ++f.crossings.at(s.edge);
    }
  }
  return f;
}

namespace {

std::vector<Trajectory> loops_from_root(const HTransform &ht, double green_root,
                                        double alpha, double eps, Rng &rng) {
  const double total = gamma(rng, alpha, green_root);
  const Trajectory path = run_conditioned_to_return(ht, total, rng);
  const PDPartition pd = sample_pd_partition(alpha, eps, rng);
  // Cut against the summed holdings, which can sit an ulp below `total`.
  return excursion_split(path, ht.x0, partition_thresholds(pd, path.local_time(ht.x0)));
}

} // namespace

std::vector<Trajectory> sample_loops_at_vertex(const Graph &g, VertexId x,
                                               double alpha, double eps,
                                               Rng &rng) {
  const Eigen::MatrixXd green = green_function(g);
  const auto xi = static_cast<Eigen::Index>(x);
  return loops_from_root(harmonic_killing_transform(g, x), green(xi, xi), alpha,
                         eps, rng);
}

LoopSoupSampler::LoopSoupSampler(const Graph &g, std::vector<VertexId> enumeration,
                                 double alpha, double eps)
    : graph_(&g), enumeration_(std::move(enumeration)), alpha_(alpha), eps_(eps) {
  const std::size_t n = g.num_vertices();
  {
    std::vector<VertexId> sorted = enumeration_;
    std::sort(sorted.begin(), sorted.end());
    bool ok = sorted.size() == n;
    for (std::size_t i = 0; ok && i < n; ++i)
      ok = sorted[i] == i;
    if (!ok)
      throw std::invalid_argument("enumeration must list every vertex once");
  }
  if (!(alpha > 0.0))
    throw std::invalid_argument("loop soup intensity alpha must be positive");
  std::vector<bool> removed(n, false);
  for (VertexId root : enumeration_) {
    Subgraph sub = remove_vertices(g, removed, root);
    const auto local = static_cast<VertexId>(
        std::find(sub.parent_vertex.begin(), sub.parent_vertex.end(), root) -
        sub.parent_vertex.begin());
    const Eigen::MatrixXd green = green_function(sub.graph);
    const auto li = static_cast<Eigen::Index>(local);
    HTransform ht = harmonic_killing_transform(sub.graph, local);
    stages_.push_back(Stage{std::move(sub), local, green(li, li), std::move(ht)});
    removed[root] = true;
  }
}

LoopSoupSample LoopSoupSampler::sample(Rng &rng) const {
  LoopSoupSample soup;
  soup.num_vertices = graph_->num_vertices();
  soup.num_edges = graph_->num_edges();
  for (const Stage &stage : stages_) {
    auto loops = loops_from_root(stage.ht, stage.green_root, alpha_, eps_, rng);
    for (Trajectory &loop : loops) {
      loop.start = stage.sub.parent_vertex[loop.start];
      for (Step &s : loop.steps) {
        s.vertex = stage.sub.parent_vertex[s.vertex];
        if (s.exit == ExitKind::kJump)
          s.edge = stage.sub.parent_edge[s.edge];
      }
      soup.loops.push_back(std::move(loop));
    }
  }
  return soup;
}

LoopSoupSample sample_loop_soup(const Graph &g, double alpha,
                                const std::vector<VertexId> &enumeration,
                                double eps, Rng &rng) {
  return LoopSoupSampler(g, enumeration, alpha, eps).sample(rng);
}

std::vector<VertexId> default_enumeration(const Graph &g) {
  std::vector<VertexId> order(g.num_vertices());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  return order;
}

} // namespace rkinv
