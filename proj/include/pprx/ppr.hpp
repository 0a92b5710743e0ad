#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pprx/errors.hpp"
#include "pprx/parallel.hpp"
#include "pprx/textgraph.hpp"

namespace pprx {

struct PprConfig {
  double alpha = 0.85;  // walk-continuation probability
  double tol = 1e-9;    // L1 fixed-point residual
  int max_iters = 1000;
  double push_tol = 1e-10;  // L1 norm of the push-out carry
  int push_max_iters = 2000;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1)");
    if (!(tol > 0.0) || !(push_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
    if (max_iters < 1 || push_max_iters < 1) throw Error(ErrorKind::InvalidArgument, "iteration caps must be positive");
  }
};

// Column-stochastic M = A D^-1 of a word graph. Zero-degree columns carry a
// self-loop so every column sums to one.
class TransitionMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  TransitionMatrix() = default;
  explicit TransitionMatrix(Sparse m) : m_(std::move(m)) { m_.makeCompressed(); }

  static TransitionMatrix from_graph(const WordGraph& graph) {
    const auto n = static_cast<Eigen::Index>(graph.num_nodes());
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "graph has no nodes");
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(graph.num_edges() * 2 + graph.num_nodes());
    for (NodeId j = 0; j < graph.num_nodes(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const std::size_t deg = graph.degree(j);
      if (deg == 0) {
        entries.emplace_back(col, col, 1.0);
        continue;
      }
      const double w = 1.0 / static_cast<double>(deg);
      for (NodeId i : graph.neighbors(j)) entries.emplace_back(static_cast<Eigen::Index>(i), col, w);
    }
    Sparse m(n, n);
    m.setFromTriplets(entries.begin(), entries.end());
    return TransitionMatrix(std::move(m));
  }

  Eigen::Index size() const noexcept { return m_.cols(); }
  const Sparse& sparse() const noexcept { return m_; }
  double operator()(Eigen::Index row, Eigen::Index col) const { return m_.coeff(row, col); }

  bool column_equals(Eigen::Index col, const TransitionMatrix& other) const {
    Sparse::InnerIterator a(m_, col);
    Sparse::InnerIterator b(other.m_, col);
    for (; a && b; ++a, ++b)
      if (a.index() != b.index() || a.value() != b.value()) return false;
    return !a && !b;
  }

 private:
  Sparse m_;
};

inline TransitionMatrix transition_matrix(const WordGraph& graph) { return TransitionMatrix::from_graph(graph); }

// Seeded stationary distribution: p = alpha M p + (1 - alpha) e_seed.
struct PprVector {
  Eigen::VectorXd p;
  NodeId seed = 0;
  double alpha = 0.85;

  Eigen::Index size() const noexcept { return p.size(); }
  double operator[](Eigen::Index i) const { return p[i]; }
};

// ||p - (alpha M p + (1 - alpha) r)||_1 with r = e_seed.
inline double fixed_point_residual(const TransitionMatrix& m, const PprVector& v) {
  Eigen::VectorXd next = v.alpha * (m.sparse() * v.p);
  next[static_cast<Eigen::Index>(v.seed)] += 1.0 - v.alpha;
  return (next - v.p).lpNorm<1>();
}

// Power iteration from p = r. Stops once successive iterates differ by at most
// cfg.tol in L1 and returns the last iterate, whose own residual is then at
// most alpha * cfg.tol. When `residual_trace` is given, every iteration's L1
// step size is appended to it.
inline PprVector solve_ppr(const TransitionMatrix& m, NodeId seed, const PprConfig& cfg,
                           std::vector<double>* residual_trace = nullptr) {
  cfg.validate();
  const Eigen::Index n = m.size();
  if (static_cast<Eigen::Index>(seed) >= n)
    throw Error(ErrorKind::InvalidArgument, "seed " + std::to_string(seed) + " out of range");
  const auto s = static_cast<Eigen::Index>(seed);
  const double teleport = 1.0 - cfg.alpha;

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  p[s] = 1.0;
  Eigen::VectorXd next(n);
  double residual = 0.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    next.noalias() = cfg.alpha * (m.sparse() * p);
    next[s] += teleport;
    residual = (next - p).lpNorm<1>();
    p.swap(next);
    if (residual_trace) residual_trace->push_back(residual);
    if (residual <= cfg.tol) return PprVector{std::move(p), seed, cfg.alpha};
  }
  throw SolverDidNotConverge(seed, residual, cfg.max_iters);
}

inline std::vector<PprVector> all_ppr(const TransitionMatrix& m, const PprConfig& cfg, unsigned workers = 1) {
  std::vector<PprVector> out(static_cast<std::size_t>(m.size()));
  parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = solve_ppr(m, i, cfg); });
  return out;
}

inline std::vector<PprVector> all_ppr(const WordGraph& graph, const PprConfig& cfg, unsigned workers = 1) {
  return all_ppr(transition_matrix(graph), cfg, workers);
}

// Sum of every seed's PPR vector, obtained from a single power iteration with
// an all-ones personalization (the fixed point is linear in r). The stopping
// threshold is cfg.tol scaled by the total mass n.
inline Eigen::VectorXd ppr_mass(const TransitionMatrix& m, const PprConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = m.size();
  const double teleport = 1.0 - cfg.alpha;
  const double threshold = cfg.tol * static_cast<double>(n);
  Eigen::VectorXd p = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd next(n);
  double residual = 0.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    next.noalias() = cfg.alpha * (m.sparse() * p);
    next.array() += teleport;
    residual = (next - p).lpNorm<1>();
    p.swap(next);
    if (residual <= threshold) return p;
  }
  throw SolverDidNotConverge(0, residual, cfg.max_iters);
}

// Columns where M and M' differ. Only these feed the push-out vector.
struct TransitionDelta {
  std::vector<Eigen::Index> changed_columns;

  static TransitionDelta between(const TransitionMatrix& before, const TransitionMatrix& after) {
    if (before.size() != after.size()) throw Error(ErrorKind::Shape, "transition matrices differ in size");
    TransitionDelta delta;
    for (Eigen::Index c = 0; c < before.size(); ++c)
      if (!before.column_equals(c, after)) delta.changed_columns.push_back(c);
    return delta;
  }

  // Masking a node rewrites its own column and the columns of its neighbors.
  static TransitionDelta for_mask(const WordGraph& graph, const MaskSet& mask) {
    mask.validate(graph.num_nodes());
    std::vector<Eigen::Index> cols;
    for (NodeId j : mask) {
      cols.push_back(static_cast<Eigen::Index>(j));
      for (NodeId nb : graph.neighbors(j)) cols.push_back(static_cast<Eigen::Index>(nb));
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return TransitionDelta{std::move(cols)};
  }
};

// Push-out tracking of a converged PPR vector across a topology change:
//   carry = alpha (M' - M) p,   p' = p + sum_k (alpha M')^k carry.
// The pushout is assembled from the changed columns only. The series stops
// once ||carry||_1 < push_tol; entries in (-push_tol, 0) are clamped to zero.
inline PprVector track_ppr(const PprVector& v, const TransitionMatrix& m, const TransitionMatrix& m_new,
                           const TransitionDelta& delta, const PprConfig& cfg) {
  cfg.validate();
  if (v.alpha != cfg.alpha) throw Error(ErrorKind::InvalidArgument, "PPR vector and config disagree on alpha");
  if (v.size() != m.size() || m.size() != m_new.size())
    throw Error(ErrorKind::Shape, "PPR vector and transition matrices differ in size");

  using Iter = TransitionMatrix::Sparse::InnerIterator;
  Eigen::VectorXd carry = Eigen::VectorXd::Zero(v.size());
  for (Eigen::Index c : delta.changed_columns) {
    const double mass = cfg.alpha * v.p[c];
    if (mass == 0.0) continue;
    for (Iter it(m_new.sparse(), c); it; ++it) carry[it.index()] += mass * it.value();
    for (Iter it(m.sparse(), c); it; ++it) carry[it.index()] -= mass * it.value();
  }

  Eigen::VectorXd acc = v.p + carry;
  Eigen::VectorXd next(v.size());
  int iters = 0;
  while (carry.lpNorm<1>() >= cfg.push_tol) {
    if (++iters > cfg.push_max_iters)
      throw Error(ErrorKind::TrackerDidNotConverge, "seed " + std::to_string(v.seed) + " carry " +
                                                        std::to_string(carry.lpNorm<1>()) + " after " +
                                                        std::to_string(cfg.push_max_iters) + " iterations");
    next.noalias() = cfg.alpha * (m_new.sparse() * carry);
    carry.swap(next);
    acc += carry;
  }
  for (Eigen::Index i = 0; i < acc.size(); ++i)
    if (acc[i] < 0.0 && acc[i] > -cfg.push_tol) acc[i] = 0.0;
  return PprVector{std::move(acc), v.seed, v.alpha};
}

inline PprVector track_ppr(const PprVector& v, const TransitionMatrix& m, const TransitionMatrix& m_new,
                           const PprConfig& cfg) {
  return track_ppr(v, m, m_new, TransitionDelta::between(m, m_new), cfg);
}

}  // namespace pprx
