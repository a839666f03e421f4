#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sketchparse/graphrank/graphrank.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::graphrank {
namespace {

using imaging::LabelMap;

void fill_rect(LabelMap& m, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h, int v) {
  for (std::size_t y = y0; y < y0 + h; ++y)
    for (std::size_t x = x0; x < x0 + w; ++x) m.at(x, y) = static_cast<std::uint8_t>(v);
}

// Best constrained assignment by enumeration.
struct Oracle {
  const Affinity& a;
  std::vector<std::size_t> best;
  double best_score = -1.0;
  std::vector<std::size_t> cur;
  std::vector<bool> c_used;

  explicit Oracle(const Affinity& aff) : a(aff), c_used(aff.cand_nodes, false) {
    cur.push_back(0);  // global pair; all affinities are non-negative
    recurse(0);
  }
  void recurse(std::size_t qi) {
    if (qi == a.query_nodes) {
      auto sel = cur;
      std::sort(sel.begin(), sel.end());
      const double s = assignment_score(a, sel);
      if (s > best_score + 1e-12) {
        best_score = s;
        best = sel;
      }
      return;
    }
    recurse(qi + 1);
    for (std::size_t u = 1; u < a.size(); ++u) {
      const auto& c = a.candidates[u];
      if (c.query != qi || c_used[c.cand]) continue;
      c_used[c.cand] = true;
      cur.push_back(u);
      recurse(qi + 1);
      cur.pop_back();
      c_used[c.cand] = false;
    }
  }
};

AttributeGraph permuted(const AttributeGraph& g, const std::vector<std::size_t>& perm) {
  // perm[old] = new
  AttributeGraph out = g;
  for (std::size_t i = 0; i < g.locals.size(); ++i) out.locals[perm[i]] = g.locals[i];
  for (auto& e : out.edges) {
    const std::size_t a = perm[e.a], b = perm[e.b];
    if (a < b) {
      e = {a, b, e.r, e.theta};
    } else {
      const double t = e.theta > 0 ? e.theta - std::numbers::pi : e.theta + std::numbers::pi;
      e = {b, a, e.r, t};
    }
  }
  return out;
}

AttributeGraph random_graph(numcore::Rng& rng, std::size_t n, int parts) {
  AttributeGraph g;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    LocalNode v;
    v.part = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(parts)));
    v.area = rng.uniform(0.05, 1.0);
    total += v.area;
    v.angle = rng.uniform(0.1, 2.0);
    v.cx = rng.uniform(0.1, 0.9);
    v.cy = rng.uniform(0.1, 0.9);
    g.locals.push_back(v);
    ++g.global.histogram[v.part];
  }
  for (auto& v : g.locals) v.area /= total;
  g.global.area_fraction = rng.uniform(0.1, 0.5);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < 0.5) continue;
      const double dx = g.locals[b].cx - g.locals[a].cx, dy = g.locals[b].cy - g.locals[a].cy;
      g.edges.push_back({a, b, std::hypot(dx, dy), std::atan2(dy, dx)});
    }
  }
  return g;
}

AttributeGraph perturbed(const AttributeGraph& g, numcore::Rng& rng, double noise) {
  AttributeGraph out = g;
  for (auto& v : out.locals) {
    v.angle += rng.uniform(-noise, noise);
    v.cx += rng.uniform(-noise, noise) * 0.2;
    v.cy += rng.uniform(-noise, noise) * 0.2;
    v.area *= 1.0 + rng.uniform(-noise, noise);
  }
  for (auto& e : out.edges) {
    const double dx = out.locals[e.b].cx - out.locals[e.a].cx, dy = out.locals[e.b].cy - out.locals[e.a].cy;
    e.r = std::hypot(dx, dy);
    e.theta = std::atan2(dy, dx);
  }
  return out;
}

TEST(Graph, SquarePartCounts) {
  LabelMap m(10, 10);
  fill_rect(m, 2, 2, 5, 5, 1);
  const auto g = build_graph(m);
  EXPECT_EQ(g.global.histogram, (std::map<int, std::size_t>{{1, 1}}));
  EXPECT_DOUBLE_EQ(g.global.area_fraction, 0.25);
  ASSERT_EQ(g.locals.size(), 1u);
  EXPECT_DOUBLE_EQ(g.locals[0].area, 1.0);
  EXPECT_DOUBLE_EQ(g.locals[0].cx, 0.45);
  const auto blank = build_graph(LabelMap(4, 4));
  EXPECT_TRUE(blank.locals.empty());
  EXPECT_TRUE(blank.global.histogram.empty());
}

TEST(Graph, TinyInstancesAreDropped) {
  LabelMap m(100, 30);
  fill_rect(m, 0, 0, 100, 20, 1);  // 2000 px
  m.at(50, 25) = 2;                // 1/2001 < 0.1%
  const auto g = build_graph(m);
  ASSERT_EQ(g.locals.size(), 1u);
  EXPECT_EQ(g.global.histogram.count(2), 0u);
  fill_rect(m, 50, 25, 2, 2, 2);  // 4/2004 > 0.1%
  EXPECT_EQ(build_graph(m).locals.size(), 2u);
}

TEST(Graph, TouchingPartsShareOneReciprocalEdge) {
  LabelMap m(20, 10);
  fill_rect(m, 2, 2, 6, 6, 1);
  fill_rect(m, 8, 2, 6, 6, 2);
  fill_rect(m, 16, 2, 2, 2, 3);  // separate, no edge
  const auto g = build_graph(m);
  ASSERT_EQ(g.locals.size(), 3u);
  ASSERT_EQ(g.edges.size(), 1u);
  const auto ab = g.polar(0, 1), ba = g.polar(1, 0);
  ASSERT_TRUE(ab && ba);
  EXPECT_DOUBLE_EQ(ab->first, ba->first);
  EXPECT_NEAR(std::abs(ab->second - ba->second), std::numbers::pi, 1e-12);
  EXPECT_FALSE(g.polar(0, 2));
}

TEST(Graph, SubtendedAngleIsAngularExtent) {
  LabelMap m(21, 21);
  // A ring around the centre covers every direction.
  for (std::size_t y = 0; y < 21; ++y)
    for (std::size_t x = 0; x < 21; ++x) {
      const double r = std::hypot(x + 0.5 - 10.5, y + 0.5 - 10.5);
      if (r > 6 && r < 9) m.at(x, y) = 1;
    }
  const auto ring = build_graph(m);
  ASSERT_EQ(ring.locals.size(), 1u);
  EXPECT_GT(ring.locals[0].angle, 0.95 * 2 * std::numbers::pi);
  LabelMap n(21, 21);
  n.at(20, 10) = 1;
  n.at(20, 11) = 1;
  const auto small = build_graph(n);
  EXPECT_LT(small.locals[0].angle, 0.2);
  EXPECT_GT(small.locals[0].angle, 0.0);
}

TEST(Affinity, CandidatesRespectPartTypes) {
  numcore::Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto q = random_graph(rng, 1 + rng.below(6), 3);
    const auto c = random_graph(rng, 1 + rng.below(6), 3);
    const auto a = build_affinity(q, c);
    std::size_t bound = 1;
    for (const auto& [part, n] : q.global.histogram) {
      const auto it = c.global.histogram.find(part);
      if (it != c.global.histogram.end()) bound += n * it->second;
    }
    EXPECT_EQ(a.size(), bound);
    EXPECT_EQ(a.candidates[0].query, Candidate::kGlobal);
    for (std::size_t u = 1; u < a.size(); ++u)
      EXPECT_EQ(q.locals[a.candidates[u].query].part, c.locals[a.candidates[u].cand].part);
    for (std::size_t u = 0; u < a.size(); ++u)
      for (std::size_t v = 0; v < a.size(); ++v) {
        EXPECT_EQ(a.at(u, v), a.at(v, u));
        EXPECT_GE(a.at(u, v), 0.0);
        EXPECT_LE(a.at(u, v), 1.0);
      }
  }
}

TEST(Affinity, IdentityPairsHaveMaximalUnary) {
  numcore::Rng rng(4);
  const auto g = random_graph(rng, 6, 2);
  const auto a = build_affinity(g, g);
  for (std::size_t u = 1; u < a.size(); ++u) {
    const auto [i, j] = a.candidates[u];
    if (i != j) continue;
    EXPECT_DOUBLE_EQ(a.at(u, u), g.locals[i].area);
    for (std::size_t v = 1; v < a.size(); ++v)
      if (a.candidates[v].query == i) {
        EXPECT_LE(a.at(v, v), a.at(u, u));
      }
  }
  EXPECT_DOUBLE_EQ(a.at(0, 0), 1.0);
}

TEST(Match, IdenticalTrianglesRecoverIdentity) {
  LabelMap m(30, 30);
  fill_rect(m, 3, 3, 5, 5, 1);
  fill_rect(m, 20, 4, 6, 4, 1);
  fill_rect(m, 10, 20, 4, 7, 1);
  const auto g = build_graph(m);
  ASSERT_EQ(g.locals.size(), 3u);
  const auto a = build_affinity(g, g);
  const auto r = rrwm_match(a);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.local[i], std::optional<std::size_t>(i));
  EXPECT_TRUE(r.global_matched);
  Oracle o(a);
  EXPECT_EQ(r.selected, o.best);
  EXPECT_TRUE(r.converged);
}

TEST(Match, GlobalOnlyGraphs) {
  const auto g = build_graph(LabelMap(8, 8));
  const auto a = build_affinity(g, g);
  ASSERT_EQ(a.size(), 1u);
  const auto r = rrwm_match(a);
  EXPECT_EQ(r.score, a.at(0, 0));
  EXPECT_TRUE(r.global_matched);
  Affinity empty;
  EXPECT_THROW(rrwm_match(empty), ContractViolation);
}

TEST(Match, AgreesWithExhaustiveOracleOnPerturbedPairs) {
  numcore::Rng rng(5);
  int agree = 0, truth = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const auto q = random_graph(rng, n, 1 + static_cast<int>(rng.below(3)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    numcore::shuffle(perm, rng);
    const auto c = permuted(perturbed(q, rng, 0.05), perm);
    const auto a = build_affinity(q, c);
    const auto r = rrwm_match(a);
    ASSERT_TRUE(satisfies_constraints(a, r.selected));
    Oracle o(a);
    agree += r.selected == o.best;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) ok &= r.local[i] == std::optional<std::size_t>(perm[i]);
    truth += ok;
  }
  EXPECT_GE(agree, 95);
  EXPECT_GE(truth, 95);
}

TEST(Match, CandidateNodeOrderDoesNotChangeScore) {
  numcore::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const auto q = random_graph(rng, n, 2);
    const auto c = perturbed(q, rng, 0.1);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    numcore::shuffle(perm, rng);
    const double s1 = rrwm_match(build_affinity(q, c)).score;
    const double s2 = rrwm_match(build_affinity(q, permuted(c, perm))).score;
    EXPECT_NEAR(s1, s2, 1e-9);
  }
}

LabelMap random_scene(numcore::Rng& rng) {
  LabelMap m(32, 32);
  const auto k = 1 + rng.below(5);
  for (std::size_t i = 0; i < k; ++i) {
    const auto w = 3 + rng.below(8), h = 3 + rng.below(8);
    fill_rect(m, rng.below(32 - w), rng.below(32 - h), w, h, 1 + static_cast<int>(rng.below(3)));
  }
  return m;
}

TEST(Rerank, DuplicateRisesToTheTop) {
  numcore::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto query = random_scene(rng);
    std::vector<RankedCandidate> pool;
    for (int i = 0; i < 12; ++i) pool.push_back({"c" + std::to_string(i), random_scene(rng)});
    const auto at = rng.below(pool.size());
    pool[at] = {"dup", query};
    const auto out = rerank(query, pool, 50);
    ASSERT_EQ(out.size(), pool.size());
    EXPECT_EQ(out[0].id, "dup");
    std::vector<std::string> a, b;
    for (const auto& e : out) a.push_back(e.id);
    for (const auto& e : pool) b.push_back(e.id);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(Rerank, WindowAndStability) {
  numcore::Rng rng(8);
  const auto query = random_scene(rng);
  std::vector<RankedCandidate> pool;
  for (int i = 0; i < 6; ++i) pool.push_back({"c" + std::to_string(i), random_scene(rng)});
  const auto none = rerank(query, pool, 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(none[i].id, pool[i].id);
    EXPECT_FALSE(none[i].score);
  }
  const auto two = rerank(query, pool, 2);
  for (std::size_t i = 2; i < pool.size(); ++i) EXPECT_EQ(two[i].id, pool[i].id);
  // Equal candidates keep their initial order.
  std::vector<RankedCandidate> same{{"x", pool[0].labels}, {"y", pool[0].labels}, {"z", pool[0].labels}};
  const auto tie = rerank(query, same, 50);
  EXPECT_EQ(tie[0].id, "x");
  EXPECT_EQ(tie[2].id, "z");
  const auto again = rerank(query, pool, 50);
  for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(again[i].id, rerank(query, pool, 50)[i].id);
}

}  // namespace
}  // namespace sketchparse::graphrank
