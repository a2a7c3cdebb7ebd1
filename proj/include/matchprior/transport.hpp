#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "matchprior/errors.hpp"
#include "matchprior/measure.hpp"

namespace matchprior {

/// A point mass at an arbitrary location in R^d.
template <typename Scalar>
struct Atom {
  Vector<Scalar> location;
  Scalar mass{};
};

template <typename Scalar>
std::vector<Atom<Scalar>> atoms_of(const DiscreteMeasure<Scalar>& m) {
  std::vector<Atom<Scalar>> out;
  for (Index i = 0; i < m.size(); ++i) {
    if (m.mass(i) <= 0) continue;
    Vector<Scalar> loc(1);
    loc[0] = m.grid().point(i);
    out.push_back({std::move(loc), m.mass(i)});
  }
  return out;
}

/// Exact optimal transport cost between two finite atomic measures under the
/// Euclidean ground metric, by successive shortest augmenting paths with
/// Johnson potentials on the dense bipartite transport network.
template <typename Scalar>
Scalar w1_flow(std::span<const Atom<Scalar>> a, std::span<const Atom<Scalar>> b) {
  constexpr std::size_t kMaxAtoms = 4096;
  if (a.size() > kMaxAtoms || b.size() > kMaxAtoms)
    throw DomainError("w1_flow supports at most 4096 atoms per side");
  Scalar total_a = 0, total_b = 0;
  for (const auto& x : a) total_a += x.mass;
  for (const auto& x : b) total_b += x.mass;
  using std::abs;
  if (abs(total_a - total_b) > Scalar(1e-12))
    throw UnbalancedTransport("total masses differ");
  if (a.empty() || b.empty()) return 0;

  const Index n = Index(a.size()), m = Index(b.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cost(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) {
      if (a[i].location.size() != b[j].location.size())
        throw DomainError("atom locations have different dimensions");
      cost(i, j) = (a[i].location - b[j].location).norm();
    }

  const Scalar eps = Scalar(1e-15) * std::max(Scalar(1), total_a);
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> flow =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);
  Vector<Scalar> supply(n), demand(m);
  for (Index i = 0; i < n; ++i) supply[i] = a[i].mass;
  for (Index j = 0; j < m; ++j) demand[j] = b[j].mass;
  Vector<Scalar> pot_a = Vector<Scalar>::Zero(n), pot_b = Vector<Scalar>::Zero(m);

  // Nodes 0..n-1 are sources, n..n+m-1 are sinks.
  const Index nodes = n + m;
  Vector<Scalar> dist(nodes);
  std::vector<Index> parent(nodes);
  std::vector<char> done(nodes);

  Scalar remaining = supply.sum();
  while (remaining > eps) {
    dist.setConstant(inf);
    std::fill(parent.begin(), parent.end(), Index(-1));
    std::fill(done.begin(), done.end(), 0);
    for (Index i = 0; i < n; ++i)
      if (supply[i] > eps) dist[i] = 0;

    for (;;) {
      Index u = -1;
      for (Index v = 0; v < nodes; ++v)
        if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[u])) u = v;
      if (u < 0) break;
      done[u] = 1;
      if (u < n) {
        for (Index j = 0; j < m; ++j) {
          const Scalar reduced = cost(u, j) + pot_a[u] - pot_b[j];
          const Scalar cand = dist[u] + std::max(Scalar(0), reduced);
          if (cand < dist[n + j]) {
            dist[n + j] = cand;
            parent[n + j] = u;
          }
        }
      } else {
        const Index j = u - n;
        for (Index i = 0; i < n; ++i) {
          if (flow(i, j) <= eps) continue;
          const Scalar reduced = -cost(i, j) + pot_b[j] - pot_a[i];
          const Scalar cand = dist[u] + std::max(Scalar(0), reduced);
          if (cand < dist[i]) {
            dist[i] = cand;
            parent[i] = u;
          }
        }
      }
    }

    Index sink = -1;
    for (Index j = 0; j < m; ++j)
      if (demand[j] > eps && dist[n + j] < inf && (sink < 0 || dist[n + j] < dist[n + sink])) sink = j;
    if (sink < 0) break;  // only rounding residue left

    const Scalar cap = dist[n + sink];
    for (Index i = 0; i < n; ++i) pot_a[i] += std::min(dist[i], cap);
    for (Index j = 0; j < m; ++j) pot_b[j] += std::min(dist[n + j], cap);

    // Walk back to the source to find the bottleneck.
    Scalar push = demand[sink];
    Index v = n + sink;
    while (parent[v] >= 0) {
      const Index p = parent[v];
      if (p >= n) push = std::min(push, flow(v, p - n));  // backward edge sink->source
      v = p;
    }
    push = std::min(push, supply[v]);

    v = n + sink;
    while (parent[v] >= 0) {
      const Index p = parent[v];
      if (p < n)
        flow(p, v - n) += push;
      else
        flow(v, p - n) -= push;
      v = p;
    }
    supply[v] -= push;
    demand[sink] -= push;
    remaining -= push;
  }

  return flow.cwiseProduct(cost).sum();
}

template <typename Scalar>
Scalar w1_flow(const std::vector<Atom<Scalar>>& a, const std::vector<Atom<Scalar>>& b) {
  return w1_flow(std::span<const Atom<Scalar>>(a), std::span<const Atom<Scalar>>(b));
}

}  // namespace matchprior
