#include "fvsggm/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fvsggm/error.hpp"
#include "fvsggm/union_find.hpp"

namespace fvsggm {

namespace {

constexpr double kRhoClamp = 1.0 - 1e-12;

}  // namespace

SpanningTree::SpanningTree(Index size, std::vector<Edge> edges, std::vector<double> weights)
    : size_(size), edges_(std::move(edges)), weights_(std::move(weights)) {
  if (size < 0) throw_input("tree size must be nonnegative");
  if (!weights_.empty() && weights_.size() != edges_.size()) {
    throw_input("tree weights must align with edges");
  }
  adj_.assign(static_cast<std::size_t>(size), {});
  UnionFind uf(static_cast<std::size_t>(size));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    Edge& ed = edges_[e];
    if (ed.u > ed.v) std::swap(ed.u, ed.v);
    if (ed.u < 0 || ed.v >= size) throw_input("tree edge node out of range");
    if (ed.u == ed.v) throw_input("tree edge is a self loop at node " + std::to_string(ed.u));
    if (!uf.unite(ed.u, ed.v)) {
      throw_input("tree edges contain a cycle or duplicate at (" + std::to_string(ed.u) + "," +
                  std::to_string(ed.v) + ")");
    }
    adj_[ed.u].emplace_back(ed.v, static_cast<Index>(e));
    adj_[ed.v].emplace_back(ed.u, static_cast<Index>(e));
  }

  rooted_.parent.assign(static_cast<std::size_t>(size), -1);
  rooted_.parent_edge.assign(static_cast<std::size_t>(size), -1);
  rooted_.order.reserve(static_cast<std::size_t>(size));
  std::vector<char> seen(static_cast<std::size_t>(size), 0);
  std::vector<Index> stack;
  for (Index root = 0; root < size; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    stack.push_back(root);
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      rooted_.order.push_back(i);
      for (auto it = adj_[i].rbegin(); it != adj_[i].rend(); ++it) {
        const auto [nb, e] = *it;
        if (seen[nb]) continue;
        seen[nb] = 1;
        rooted_.parent[nb] = i;
        rooted_.parent_edge[nb] = e;
        stack.push_back(nb);
      }
    }
  }
}

std::vector<Index> SpanningTree::degrees() const {
  std::vector<Index> d(static_cast<std::size_t>(size_));
  for (Index i = 0; i < size_; ++i) d[i] = static_cast<Index>(adj_[i].size());
  return d;
}

std::vector<Edge> SpanningTree::sorted_edges() const {
  std::vector<Edge> out = edges_;
  std::sort(out.begin(), out.end());
  return out;
}

MatrixXd TreeMatrix::dense() const {
  MatrixXd d = MatrixXd::Zero(size(), size());
  d.diagonal() = diag;
  const auto& es = tree.edges();
  for (std::size_t e = 0; e < es.size(); ++e) {
    d(es[e].u, es[e].v) = edge[e];
    d(es[e].v, es[e].u) = edge[e];
  }
  return d;
}

MatrixXd TreeMatrix::multiply(const MatrixXd& x) const {
  MatrixXd y = diag.asDiagonal() * x;
  const auto& es = tree.edges();
  for (std::size_t e = 0; e < es.size(); ++e) {
    y.row(es[e].u) += edge[e] * x.row(es[e].v);
    y.row(es[e].v) += edge[e] * x.row(es[e].u);
  }
  return y;
}

VectorXd TreeMatrix::multiply(const VectorXd& x) const {
  return multiply(MatrixXd(x)).col(0);
}

double gaussian_mutual_information(double rho) {
  const double r = std::min(std::abs(rho), kRhoClamp);
  return -0.5 * std::log1p(-r * r);
}

SpanningTree max_weight_spanning_tree(Index m, const MatrixXd& weight) {
  struct Cand {
    double w;
    Edge e;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) cands.push_back({weight(i, j), {i, j}});
  // Generated in lexicographic order, so a stable sort keeps that order for ties.
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.w > b.w; });
  UnionFind uf(static_cast<std::size_t>(m));
  std::vector<Edge> edges;
  std::vector<double> ws;
  edges.reserve(static_cast<std::size_t>(std::max<Index>(m - 1, 0)));
  for (const Cand& c : cands) {
    if (uf.unite(c.e.u, c.e.v)) {
      edges.push_back(c.e);
      ws.push_back(c.w);
      if (static_cast<Index>(edges.size()) == m - 1) break;
    }
  }
  return SpanningTree(m, std::move(edges), std::move(ws));
}

SymMatrix tree_projection(const SymMatrix& cov, const SpanningTree& tree) {
  const Index m = cov.dim();
  if (tree.size() != m) throw_input("tree_projection: tree/covariance size mismatch");
  const MatrixXd& c = cov.dense();
  VectorXd sd(m);
  for (Index i = 0; i < m; ++i) {
    if (!(c(i, i) > 0.0)) throw_input("tree_projection: nonpositive variance at " + std::to_string(i));
    sd(i) = std::sqrt(c(i, i));
  }
  const auto& es = tree.edges();
  std::vector<double> rho(es.size());
  for (std::size_t e = 0; e < es.size(); ++e) rho[e] = c(es[e].u, es[e].v) / (sd(es[e].u) * sd(es[e].v));

  SymMatrix out(m);
  // Correlation from `src` to every node, accumulated along a DFS from src.
  std::vector<double> corr(static_cast<std::size_t>(m));
  std::vector<Index> from(static_cast<std::size_t>(m));
  std::vector<Index> stack;
  for (Index src = 0; src < m; ++src) {
    std::fill(corr.begin(), corr.end(), 0.0);
    std::fill(from.begin(), from.end(), -1);
    corr[src] = 1.0;
    from[src] = src;
    stack.assign(1, src);
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (const auto& [nb, e] : tree.adjacency()[i]) {
        if (from[nb] != -1) continue;
        from[nb] = i;
        corr[nb] = corr[i] * rho[e];
        stack.push_back(nb);
      }
    }
    for (Index j = src + 1; j < m; ++j) out.set(src, j, sd(src) * sd(j) * corr[j]);
  }
  for (Index i = 0; i < m; ++i) out.set(i, i, c(i, i));
  for (const Edge& e : es) out.set(e.u, e.v, c(e.u, e.v));
  return out;
}

ChowLiuResult chow_liu(const SymMatrix& cov) {
  const Index m = cov.dim();
  const MatrixXd& c = cov.dense();
  for (Index i = 0; i < m; ++i) {
    if (!(c(i, i) > 0.0)) throw_input("chow_liu: nonpositive variance at node " + std::to_string(i));
  }
  MatrixXd w = MatrixXd::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j)
      w(i, j) = gaussian_mutual_information(c(i, j) / std::sqrt(c(i, i) * c(j, j)));
  ChowLiuResult r;
  r.tree = max_weight_spanning_tree(m, w);
  r.cov_cl = tree_projection(cov, r.tree);
  return r;
}

TreeMatrix tree_information_matrix(const SymMatrix& cov, const SpanningTree& tree) {
  const Index m = cov.dim();
  if (tree.size() != m) throw_input("tree_information_matrix: tree/covariance size mismatch");
  const MatrixXd& c = cov.dense();
  TreeMatrix j;
  j.tree = tree;
  j.diag.resize(m);
  j.edge.resize(tree.edges().size());
  const auto deg = tree.degrees();
  for (Index i = 0; i < m; ++i) {
    if (!(c(i, i) > 0.0)) {
      throw_numerical("tree_information_matrix: nonpositive variance at " + std::to_string(i));
    }
    j.diag(i) = static_cast<double>(1 - deg[i]) / c(i, i);
  }
  const auto& es = tree.edges();
  for (std::size_t e = 0; e < es.size(); ++e) {
    const Index a = es[e].u, b = es[e].v;
    const double sab = c(a, b);
    const double det = c(a, a) * c(b, b) - sab * sab;
    if (!(det > 0.0)) {
      throw_numerical("tree_information_matrix: |rho| >= 1 on edge (" + std::to_string(a) + "," +
                      std::to_string(b) + ")");
    }
    j.edge[e] = -sab / det;
    // (S_aa - S_ab S_bb^{-1} S_ba)^{-1} = S_bb / det
    j.diag(a) += c(b, b) / det;
    j.diag(b) += c(a, a) / det;
  }
  return j;
}

TreeBpResult tree_bp(const TreeMatrix& j, const MatrixXd& rhs) {
  const Index m = j.size();
  if (rhs.rows() != m) throw_input("tree_bp: right-hand side has wrong length");
  const Index r = rhs.cols();
  const auto& rt = j.tree.rooted();

  // Upward pass (reverse pre-order): subtree precisions and potentials.
  VectorXd j_up = j.diag;
  MatrixXd h_up = rhs;
  VectorXd msg_j = VectorXd::Zero(m);
  MatrixXd msg_h = MatrixXd::Zero(m, r);
  for (auto it = rt.order.rbegin(); it != rt.order.rend(); ++it) {
    const Index i = *it;
    if (!(j_up(i) > 0.0)) {
      throw_numerical("tree_bp: nonpositive message precision at node " + std::to_string(i) +
                      " (matrix not PD)");
    }
    const Index p = rt.parent[i];
    if (p < 0) continue;
    const double a = j.edge[rt.parent_edge[i]];
    msg_j(i) = -a * a / j_up(i);
    msg_h.row(i) = (-a / j_up(i)) * h_up.row(i);
    j_up(p) += msg_j(i);
    h_up.row(p) += msg_h.row(i);
  }

  // Downward pass (pre-order).
  VectorXd j_full(m);
  MatrixXd h_full(m, r);
  for (const Index i : rt.order) {
    const Index p = rt.parent[i];
    if (p < 0) {
      j_full(i) = j_up(i);
      h_full.row(i) = h_up.row(i);
      continue;
    }
    const double a = j.edge[rt.parent_edge[i]];
    const double excl = j_full(p) - msg_j(i);
    if (!(excl > 0.0)) {
      throw_numerical("tree_bp: nonpositive message precision at node " + std::to_string(p));
    }
    j_full(i) = j_up(i) - a * a / excl;
    h_full.row(i) = h_up.row(i) - (a / excl) * (h_full.row(p) - msg_h.row(i));
    if (!(j_full(i) > 0.0)) {
      throw_numerical("tree_bp: nonpositive marginal precision at node " + std::to_string(i));
    }
  }

  TreeBpResult out;
  out.node_variance = j_full.cwiseInverse();
  out.solves = out.node_variance.asDiagonal() * h_full;
  const auto& es = j.tree.edges();
  out.edge_covariance.resize(es.size());
  for (Index i = 0; i < m; ++i) {
    const Index p = rt.parent[i];
    if (p < 0) continue;
    const Index e = rt.parent_edge[i];
    // x_i | x_p has precision j_up(i) and mean -J_ip x_p / j_up(i).
    out.edge_covariance[e] = -j.edge[e] * out.node_variance(p) / j_up(i);
  }
  return out;
}

double tree_log_det_inv(const TreeBpResult& bp, const SpanningTree& tree) {
  if (bp.node_variance.size() != tree.size()) throw_input("tree_log_det_inv: size mismatch");
  double acc = 0.0;
  for (Index i = 0; i < tree.size(); ++i) {
    const double p = bp.node_variance(i);
    if (!(p > 0.0)) throw_numerical("tree_log_det_inv: nonpositive variance at " + std::to_string(i));
    acc += std::log(p);
  }
  const auto& es = tree.edges();
  for (std::size_t e = 0; e < es.size(); ++e) {
    const double pii = bp.node_variance(es[e].u), pjj = bp.node_variance(es[e].v);
    const double pij = bp.edge_covariance[e];
    const double r2 = pij * pij / (pii * pjj);
    if (!(r2 < 1.0)) throw_numerical("tree_log_det_inv: nonpositive edge determinant");
    acc += std::log1p(-r2);
  }
  return acc;
}

}  // namespace fvsggm
