#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pprx/errors.hpp"
#include "pprx/ppr.hpp"
#include "pprx/textgraph.hpp"

namespace pprx {

// Graph-level document vector (sum-pooled node representations).
struct DocEmbedding {
  Eigen::VectorXd u;
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;

  Eigen::Index dim() const noexcept { return u.size(); }
};

// h = p^T X: the PPR-weighted mix of node feature rows.
inline Eigen::VectorXd node_hidden(const PprVector& v, const Eigen::MatrixXd& x) {
  if (v.size() != x.rows())
    throw Error(ErrorKind::Shape, "PPR vector has " + std::to_string(v.size()) + " entries but X has " +
                                      std::to_string(x.rows()) + " rows");
  return x.transpose() * v.p;
}

// u = sum of node_hidden(P[i], X) over seeds not in `excluded`.
inline DocEmbedding readout_sum(std::span<const PprVector> ppr, const Eigen::MatrixXd& x,
                                const MaskSet& excluded = {}) {
  if (static_cast<Eigen::Index>(ppr.size()) != x.rows())
    throw Error(ErrorKind::Shape, "one PPR vector per node required");
  if (!excluded.empty()) excluded.validate(ppr.size());
  DocEmbedding out;
  out.u = Eigen::VectorXd::Zero(x.cols());
  out.n_nodes = ppr.size();
  for (std::size_t i = 0; i < ppr.size(); ++i) {
    if (excluded.contains(i)) continue;
    out.u += node_hidden(ppr[i], x);
  }
  return out;
}

// Same readout through the linearity identity u = (sum_i p_i)^T X, given the
// pooled weight vector directly.
inline Eigen::VectorXd pooled_readout(const Eigen::VectorXd& weights, const Eigen::MatrixXd& x) {
  if (weights.size() != x.rows()) throw Error(ErrorKind::Shape, "pooled weights and X disagree on node count");
  return x.transpose() * weights;
}

// Per-dimension affine normalization fitted on training embeddings.
struct Standardizer {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  double epsilon = 1e-8;

  Eigen::Index dim() const noexcept { return mu.size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    if (u.size() != mu.size())
      throw Error(ErrorKind::Shape, "embedding has " + std::to_string(u.size()) + " dims, standardizer " +
                                        std::to_string(mu.size()));
    return ((u - mu).array() / (sigma.array() + epsilon)).matrix();
  }
};

inline Eigen::VectorXd standardize(const DocEmbedding& e, const Standardizer& s) { return s.apply(e.u); }

// Mean and population standard deviation per dimension.
inline Standardizer fit_standardizer(std::span<const DocEmbedding> embeddings) {
  if (embeddings.empty()) throw Error(ErrorKind::EmptyTrainingSet, "cannot fit a standardizer on zero embeddings");
  const Eigen::Index d = embeddings.front().dim();
  Standardizer s;
  s.mu = Eigen::VectorXd::Zero(d);
  for (const auto& e : embeddings) {
    if (e.dim() != d) throw Error(ErrorKind::Shape, "embeddings differ in dimension");
    s.mu += e.u;
  }
  const double count = static_cast<double>(embeddings.size());
  s.mu /= count;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& e : embeddings) var += (e.u - s.mu).array().square().matrix();
  s.sigma = (var / count).array().sqrt().matrix();
  return s;
}

}  // namespace pprx
