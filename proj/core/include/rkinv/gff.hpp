#pragma once

#include "rkinv/graph.hpp"
#include "rkinv/rng.hpp"

#include <Eigen/Dense>

#include <map>
#include <vector>

namespace rkinv {

/// Values pinned on a vertex subset U. An empty spec is the free field.
struct ConditionSpec {
  std::map<VertexId, double> pinned;

  static ConditionSpec free() { return {}; }
  static ConditionSpec pin(VertexId x, double value) { return {{{x, value}}}; }
};

using FieldReal = std::vector<double>;

struct FieldDecomposition {
  std::vector<double> magnitude; // |phi|
  std::vector<int> sign;         // +1 or -1, +1 at zero
};

FieldDecomposition field_decompose(const FieldReal &phi);

struct ConditionalMoments {
  Eigen::VectorXd mean;          // on all of V, equal to f on U
  Eigen::MatrixXd covariance;    // on the free vertices, in `free` order
  std::vector<VertexId> free;    // V \ U in increasing order
};

ConditionalMoments conditional_moments(const Graph &g, const ConditionSpec &cond);

/// Exact sampler for the field conditioned on `cond`. The Cholesky factor of
/// the restricted precision matrix is computed once; draws solve L^T z = xi.
class GffSampler {
public:
  GffSampler(const Graph &g, ConditionSpec cond);

  FieldReal sample(Rng &rng) const;
  const ConditionalMoments &moments() const { return moments_; }

  // Log density up to the normalizing constant, for fields matching the
  // pinned values: -E(phi, phi) / 2 restricted to the free coordinates.
  double log_density(const FieldReal &phi) const;

private:
  const Graph *graph_;
  ConditionSpec cond_;
  ConditionalMoments moments_;
  Eigen::LLT<Eigen::MatrixXd> llt_; // of Lambda restricted to free vertices
};

FieldReal sample_gff(const Graph &g, const ConditionSpec &cond, Rng &rng);

} // namespace rkinv
