#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sketchparse/graphrank/graphrank.hpp"

namespace sketchparse::graphrank {

namespace {

double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2 * std::numbers::pi);
  return d > std::numbers::pi ? 2 * std::numbers::pi - d : d;
}

using PolarTable = std::vector<std::optional<std::pair<double, double>>>;

PolarTable polar_table(const AttributeGraph& g) {
  const std::size_t n = g.locals.size();
  PolarTable t(n * n);
  for (const auto& e : g.edges) {
    t[e.a * n + e.b] = g.polar(e.a, e.b);
    t[e.b * n + e.a] = g.polar(e.b, e.a);
  }
  return t;
}

double global_unary(const AttributeGraph& q, const AttributeGraph& c, const MatchParams& p) {
  std::size_t sq = 0, sc = 0, common = 0;
  for (const auto& [part, n] : q.global.histogram) {
    sq += n;
    const auto it = c.global.histogram.find(part);
    if (it != c.global.histogram.end()) common += std::min(n, it->second);
  }
  for (const auto& [part, n] : c.global.histogram) sc += n;
  const double overlap = std::max(sq, sc) == 0 ? 1.0 : static_cast<double>(common) / std::max(sq, sc);
  return overlap * std::exp(-std::abs(q.global.area_fraction - c.global.area_fraction) / p.sigma_centroid);
}

}  // namespace

Affinity build_affinity(const AttributeGraph& q, const AttributeGraph& c, const MatchParams& p) {
  Affinity a;
  a.query_nodes = q.locals.size();
  a.cand_nodes = c.locals.size();
  a.candidates.push_back({Candidate::kGlobal, Candidate::kGlobal});
  for (std::size_t i = 0; i < q.locals.size(); ++i)
    for (std::size_t j = 0; j < c.locals.size(); ++j)
      if (q.locals[i].part == c.locals[j].part) a.candidates.push_back({i, j});

  const std::size_t n = a.candidates.size();
  a.matrix.assign(n * n, 0.0);
  const PolarTable qp = polar_table(q), cp = polar_table(c);
  const std::size_t nq = q.locals.size(), nc = c.locals.size();
  a.matrix[0] = global_unary(q, c, p);
  for (std::size_t u = 1; u < n; ++u) {
    const auto& L = q.locals[a.candidates[u].query];
    const auto& R = c.locals[a.candidates[u].cand];
    const double w = std::sqrt(L.area * R.area);
    const double d = std::hypot(L.cx - R.cx, L.cy - R.cy);
    a.matrix[u * n + u] = w * std::exp(-std::abs(L.angle - R.angle) / p.sigma_angle - d / p.sigma_centroid);
    // local-global edge: absolute position
    const double g = w * std::exp(-d / p.sigma_centroid);
    a.matrix[u] = a.matrix[u * n] = g;
  }
  for (std::size_t u = 1; u < n; ++u) {
    const auto [i, j] = a.candidates[u];
    for (std::size_t v = u + 1; v < n; ++v) {
      const auto [k, l] = a.candidates[v];
      if (i == k || j == l) continue;
      const auto& eq = qp[i * nq + k];
      const auto& ec = cp[j * nc + l];
      if (!eq || !ec) continue;
      const double w = std::sqrt(std::sqrt(q.locals[i].area * q.locals[k].area * c.locals[j].area * c.locals[l].area));
      const double s = w * std::exp(-std::abs(eq->first - ec->first) / p.sigma_r -
                                    angle_diff(eq->second, ec->second) / p.sigma_theta);
      a.matrix[u * n + v] = a.matrix[v * n + u] = s;
    }
  }
  return a;
}

double assignment_score(const Affinity& a, const std::vector<std::size_t>& selected) {
  double s = 0.0;
  for (auto u : selected)
    for (auto v : selected) s += a.at(u, v);
  return s;
}

bool satisfies_constraints(const Affinity& a, const std::vector<std::size_t>& selected) {
  std::vector<bool> q_used(a.query_nodes + 1, false), c_used(a.cand_nodes + 1, false);
  for (auto u : selected) {
    if (u >= a.size()) return false;
    const auto& cand = a.candidates[u];
    const bool qg = cand.query == Candidate::kGlobal, cg = cand.cand == Candidate::kGlobal;
    if (qg != cg) return false;  // global only with global
    const std::size_t qi = qg ? a.query_nodes : cand.query, ci = cg ? a.cand_nodes : cand.cand;
    if (q_used[qi] || c_used[ci]) return false;
    q_used[qi] = c_used[ci] = true;
  }
  return true;
}

MatchResult rrwm_match(const Affinity& a, const MatchParams& p) {
  const std::size_t n = a.size();
  if (n == 0) throw ContractViolation("rrwm_match: empty candidate list");
  // Row (query) and column (candidate) of each correspondence in the
  // assignment matrix; the global node takes the last row and column.
  std::vector<std::size_t> row(n), col(n);
  for (std::size_t u = 0; u < n; ++u) {
    const auto& c = a.candidates[u];
    row[u] = c.query == Candidate::kGlobal ? a.query_nodes : c.query;
    col[u] = c.cand == Candidate::kGlobal ? a.cand_nodes : c.cand;
  }
  double dmax = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    double d = 0.0;
    for (std::size_t v = 0; v < n; ++v) d += a.at(u, v);
    dmax = std::max(dmax, d);
  }
  const double inv = dmax > 0.0 ? 1.0 / dmax : 1.0;

  auto normalize = [](std::vector<double>& v) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (s > 0.0)
      for (auto& e : v) e /= s;
  };

  MatchResult r;
  std::vector<double> x(n, 1.0 / static_cast<double>(n)), walk(n), jump(n);
  std::vector<double> rsum(a.query_nodes + 1), csum(a.cand_nodes + 1);
  for (r.iterations = 0; r.iterations < p.max_iterations;) {
    for (std::size_t u = 0; u < n; ++u) {
      double s = 0.0;
      for (std::size_t v = 0; v < n; ++v) s += a.at(u, v) * x[v];
      walk[u] = s * inv;
    }
    normalize(walk);
    const double m = *std::max_element(walk.begin(), walk.end());
    for (std::size_t u = 0; u < n; ++u) jump[u] = m > 0.0 ? std::exp(p.inflation * walk[u] / m) : 1.0;
    for (std::size_t it = 0; it < p.sinkhorn_iterations; ++it) {
      std::fill(rsum.begin(), rsum.end(), 0.0);
      for (std::size_t u = 0; u < n; ++u) rsum[row[u]] += jump[u];
      for (std::size_t u = 0; u < n; ++u) jump[u] /= rsum[row[u]];
      std::fill(csum.begin(), csum.end(), 0.0);
      for (std::size_t u = 0; u < n; ++u) csum[col[u]] += jump[u];
      for (std::size_t u = 0; u < n; ++u) jump[u] /= csum[col[u]];
    }
    normalize(jump);
    double delta = 0.0;
    std::vector<double> next(n);
    for (std::size_t u = 0; u < n; ++u) next[u] = p.alpha * walk[u] + (1.0 - p.alpha) * jump[u];
    normalize(next);
    for (std::size_t u = 0; u < n; ++u) delta = std::max(delta, std::abs(next[u] - x[u]));
    x.swap(next);
    ++r.iterations;
    if (delta < p.tolerance) {
      r.converged = true;
      break;
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto u, auto v) { return x[u] > x[v]; });
  std::vector<bool> q_used(a.query_nodes + 1, false), c_used(a.cand_nodes + 1, false);
  r.local.assign(a.query_nodes, std::nullopt);
  for (auto u : order) {
    if (q_used[row[u]] || c_used[col[u]]) continue;
    q_used[row[u]] = c_used[col[u]] = true;
    r.selected.push_back(u);
    if (a.candidates[u].query == Candidate::kGlobal) {
      r.global_matched = true;
    } else {
      r.local[a.candidates[u].query] = a.candidates[u].cand;
    }
  }
  std::sort(r.selected.begin(), r.selected.end());
  r.score = assignment_score(a, r.selected);
  return r;
}

std::vector<RerankEntry> rerank(const imaging::LabelMap& query, const std::vector<RankedCandidate>& candidates,
                                std::size_t top, const MatchParams& p) {
  std::vector<RerankEntry> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back({c.id, std::nullopt});
  const std::size_t t = std::min(top, candidates.size());
  if (t == 0) return out;
  const auto qg = build_graph(query);
  for (std::size_t i = 0; i < t; ++i) out[i].score = rrwm_match(build_affinity(qg, build_graph(candidates[i].labels), p), p).score;
  std::stable_sort(out.begin(), out.begin() + static_cast<long>(t),
                   [](const RerankEntry& a, const RerankEntry& b) { return *a.score > *b.score; });
  return out;
}

}  // namespace sketchparse::graphrank
