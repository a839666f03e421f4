#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sketchparse/imaging/raster.hpp"

namespace sketchparse::graphrank {

struct LocalNode {
  int part = 0;
  std::size_t pixels = 0;
  double area = 0.0;   // fraction of non-background pixels
  double angle = 0.0;  // angular extent seen from the image centre, radians
  double cx = 0.0;     // centroid, normalized to [0,1]
  double cy = 0.0;
};

/// Adjacency between locals a < b; (r, theta) locate b relative to a.
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double r = 0.0;
  double theta = 0.0;  // (-pi, pi]
};

struct GlobalNode {
  std::map<int, std::size_t> histogram;  // kept local nodes per part id
  double area_fraction = 0.0;            // non-background / all pixels
};

struct AttributeGraph {
  GlobalNode global;
  std::vector<LocalNode> locals;  // ordered by (part, centroid row, centroid col)
  std::vector<Edge> edges;

  /// Polar position of `to` seen from `from`; nullopt when not adjacent.
  std::optional<std::pair<double, double>> polar(std::size_t from, std::size_t to) const;
};

inline constexpr double kMinAreaFraction = 0.001;

/// One local node per 4-connected part instance; instances under 0.1% of the
/// foreground are dropped. Two instances are adjacent when a 4-neighbour pixel
/// pair joins them.
AttributeGraph build_graph(const imaging::LabelMap& lm);

struct MatchParams {
  double sigma_angle = 0.5;
  double sigma_centroid = 0.25;
  double sigma_r = 0.25;
  double sigma_theta = 0.5;
  double alpha = 0.2;
  double inflation = 30.0;
  std::size_t sinkhorn_iterations = 10;
  double tolerance = 1e-8;
  std::size_t max_iterations = 300;
};

/// Candidate correspondence. Index kGlobal stands for the global node.
struct Candidate {
  static constexpr std::size_t kGlobal = static_cast<std::size_t>(-1);
  std::size_t query = 0;
  std::size_t cand = 0;
};

struct Affinity {
  std::vector<Candidate> candidates;  // [0] is global<->global
  std::vector<double> matrix;         // n x n, symmetric, entries in [0,1]
  std::size_t query_nodes = 0;        // locals only
  std::size_t cand_nodes = 0;

  std::size_t size() const { return candidates.size(); }
  double at(std::size_t i, std::size_t j) const { return matrix[i * candidates.size() + j]; }
};

/// Candidates are global<->global plus every same-part local pair. Unary
/// terms sit on the diagonal, pairwise terms off it.
Affinity build_affinity(const AttributeGraph& q, const AttributeGraph& c, const MatchParams& p = {});

struct MatchResult {
  /// query local -> candidate local, or nullopt
  std::vector<std::optional<std::size_t>> local;
  bool global_matched = false;
  std::vector<std::size_t> selected;  // chosen candidate indices, ascending
  double score = 0.0;                 // z' A z on the selected indicator
  bool converged = false;
  std::size_t iterations = 0;
};

/// Reweighted random walk on the association graph, then greedy one-to-one
/// discretization. Throws ContractViolation on an empty candidate list.
MatchResult rrwm_match(const Affinity& a, const MatchParams& p = {});

/// z' A z for a candidate subset.
double assignment_score(const Affinity& a, const std::vector<std::size_t>& selected);

/// True when the subset is one-to-one and every pair is a legal candidate.
bool satisfies_constraints(const Affinity& a, const std::vector<std::size_t>& selected);

struct RankedCandidate {
  std::string id;
  imaging::LabelMap labels;
};

struct RerankEntry {
  std::string id;
  std::optional<double> score;  // nullopt outside the re-ranked window
};

/// Scores the first min(top, n) candidates against the query and sorts them
/// by descending score, stable on ties; the rest keep their order.
std::vector<RerankEntry> rerank(const imaging::LabelMap& query, const std::vector<RankedCandidate>& candidates,
                                std::size_t top = 50, const MatchParams& p = {});

}  // namespace sketchparse::graphrank
