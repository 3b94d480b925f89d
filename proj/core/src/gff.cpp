#include "rkinv/gff.hpp"

#include <cmath>
#include <stdexcept>

namespace rkinv {

FieldDecomposition field_decompose(const FieldReal &phi) {
  FieldDecomposition out;
  out.magnitude.reserve(phi.size());
  out.sign.reserve(phi.size());
  for (double v : phi) {
    out.magnitude.push_back(std::fabs(v));
    out.sign.push_back(v < 0.0 ? -1 : 1);
  }
  return out;
}

namespace {

std::vector<VertexId> free_vertices(const Graph &g, const ConditionSpec &cond) {
  std::vector<VertexId> free;
  for (VertexId v = 0; v < g.num_vertices(); ++v)
    if (!cond.pinned.count(v))
      free.push_back(v);
  return free;
}

void check_condition(const Graph &g, const ConditionSpec &cond) {
  for (const auto &[v, value] : cond.pinned) {
    if (v >= g.num_vertices())
      throw std::invalid_argument("condition pins an unknown vertex");
    if (!std::isfinite(value))
      throw std::invalid_argument("condition pins a non-finite value");
  }
}

} // namespace

ConditionalMoments conditional_moments(const Graph &g, const ConditionSpec &cond) {
  GffSampler sampler(g, cond);
  return sampler.moments();
}

GffSampler::GffSampler(const Graph &g, ConditionSpec cond)
    : graph_(&g), cond_(std::move(cond)) {
  check_condition(g, cond_);
  const std::size_t n = g.num_vertices();
  moments_.free = free_vertices(g, cond_);
  moments_.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto &[v, value] : cond_.pinned)
    moments_.mean(static_cast<Eigen::Index>(v)) = value;

  const auto m = static_cast<Eigen::Index>(moments_.free.size());
  if (m == 0) {
    moments_.covariance.resize(0, 0);
    return;
  }
  const Eigen::MatrixXd lambda = precision_matrix(g);
  Eigen::MatrixXd lff(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto x = static_cast<Eigen::Index>(moments_.free[i]);
    for (Eigen::Index j = 0; j < m; ++j)
      lff(i, j) = lambda(x, static_cast<Eigen::Index>(moments_.free[j]));
    for (const auto &[v, value] : cond_.pinned)
      rhs(i) -= lambda(x, static_cast<Eigen::Index>(v)) * value;
  }
  llt_.compute(lff);
  if (llt_.info() != Eigen::Success)
    throw GraphError(GraphError::Kind::kRecurrent,
                     "restricted precision matrix is singular");
  const Eigen::VectorXd mean_free = llt_.solve(rhs);
  for (Eigen::Index i = 0; i < m; ++i)
    moments_.mean(static_cast<Eigen::Index>(moments_.free[i])) = mean_free(i);
  Eigen::MatrixXd cov = llt_.solve(Eigen::MatrixXd::Identity(m, m));
  moments_.covariance = (cov + cov.transpose()) / 2.0;
}

FieldReal GffSampler::sample(Rng &rng) const {
  FieldReal phi(graph_->num_vertices());
  for (std::size_t v = 0; v < phi.size(); ++v)
    phi[v] = moments_.mean(static_cast<Eigen::Index>(v));
  const auto m = static_cast<Eigen::Index>(moments_.free.size());
  if (m == 0)
    return phi;
  Eigen::VectorXd xi(m);
  for (Eigen::Index i = 0; i < m; ++i)
    xi(i) = normal(rng);
  // Lambda_FF = L L^T, so L^{-T} xi has covariance Lambda_FF^{-1}.
  const Eigen::VectorXd z = llt_.matrixU().solve(xi);
  for (Eigen::Index i = 0; i < m; ++i)
    phi[moments_.free[i]] += z(i);
  for (const auto &[v, value] : cond_.pinned)
    phi[v] = value;
  return phi;
}

double GffSampler::log_density(const FieldReal &phi) const {
  return -0.5 * dirichlet_form(*graph_, phi);
}

FieldReal sample_gff(const Graph &g, const ConditionSpec &cond, Rng &rng) {
  return GffSampler(g, cond).sample(rng);
}

} // namespace rkinv
