#include "etalab/network.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include "etalab/error.hpp"

namespace etalab {

int manhattan(Vertex a, Vertex b) { return std::abs(a.i - b.i) + std::abs(a.j - b.j); }

namespace {

bool grid_adjacent(Vertex a, Vertex b) { return manhattan(a, b) == 1; }

}  // namespace

RoadNetwork RoadNetwork::build_grid(int p) {
  if (p < 1) {
    throw InvalidArgument("grid size must be >= 1 (p = 0 has no segments)");
  }
  std::vector<Segment> segments;
  segments.reserve(static_cast<std::size_t>(4) * p * (p + 1));
  constexpr int kSteps[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  for (int i = 0; i <= p; ++i) {
    for (int j = 0; j <= p; ++j) {
      for (const auto& step : kSteps) {
        Vertex head{i + step[0], j + step[1]};
        if (head.i < 0 || head.j < 0 || head.i > p || head.j > p) continue;
        segments.push_back({{i, j}, head});
      }
    }
  }
  return from_segments(p, std::move(segments));
}

RoadNetwork RoadNetwork::from_segments(int p, std::vector<Segment> segments) {
  if (p < 1) throw InvalidArgument("grid size must be >= 1");
  RoadNetwork net;
  net.p_ = p;
  std::sort(segments.begin(), segments.end());
  if (std::adjacent_find(segments.begin(), segments.end()) != segments.end()) {
    throw InvalidArgument("duplicate segment in network");
  }
  for (const auto& s : segments) {
    if (!net.contains(s.tail) || !net.contains(s.head)) {
      throw InvalidArgument("segment endpoint outside the grid box");
    }
    if (!grid_adjacent(s.tail, s.head)) {
      throw InvalidArgument("segment endpoints are not grid-adjacent");
    }
  }
  net.segments_ = std::move(segments);
  net.build_indices();
  return net;
}

std::uint64_t RoadNetwork::key(const Segment& s) {
  auto pack = [](Vertex v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.i)) << 16) |
           static_cast<std::uint32_t>(v.j);
  };
  return (pack(s.tail) << 32) | pack(s.head);
}

void RoadNetwork::build_indices() {
  lookup_.clear();
  lookup_.reserve(segments_.size());
  const std::size_t nv = vertex_count();
  std::vector<std::vector<SegmentIndex>> per_vertex(nv);
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto idx = static_cast<SegmentIndex>(k);
    lookup_.emplace(key(segments_[k]), idx);
    per_vertex[vertex_id(segments_[k].tail)].push_back(idx);
    per_vertex[vertex_id(segments_[k].head)].push_back(idx);
  }
  incident_offsets_.assign(nv + 1, 0);
  incident_.clear();
  for (std::size_t v = 0; v < nv; ++v) {
    std::sort(per_vertex[v].begin(), per_vertex[v].end());
    incident_.insert(incident_.end(), per_vertex[v].begin(), per_vertex[v].end());
    incident_offsets_[v + 1] = incident_.size();
  }
}

std::optional<SegmentIndex> RoadNetwork::find(const Segment& s) const {
  auto it = lookup_.find(key(s));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

SegmentIndex RoadNetwork::index_of(const Segment& s) const {
  if (auto k = find(s)) return *k;
  throw InvalidArgument("segment (" + std::to_string(s.tail.i) + "," + std::to_string(s.tail.j) +
                        ")->(" + std::to_string(s.head.i) + "," + std::to_string(s.head.j) +
                        ") is not in the network");
}

std::span<const SegmentIndex> RoadNetwork::incident(Vertex v) const {
  if (!contains(v)) return {};
  const auto id = vertex_id(v);
  return std::span<const SegmentIndex>(incident_).subspan(
      incident_offsets_[id], incident_offsets_[id + 1] - incident_offsets_[id]);
}

std::string to_string(AdjacencyRule rule) {
  switch (rule) {
    case AdjacencyRule::kShareAnyEndpoint:
      return "share_any_endpoint";
    case AdjacencyRule::kHeadToTailChain:
      return "head_to_tail_chain";
    case AdjacencyRule::kUndirectedEdgeIncidence:
      return "undirected_edge_incidence";
  }
  return "unknown";
}

AdjacencyRule parse_adjacency_rule(const std::string& name) {
  for (auto rule : {AdjacencyRule::kShareAnyEndpoint, AdjacencyRule::kHeadToTailChain,
                    AdjacencyRule::kUndirectedEdgeIncidence}) {
    if (to_string(rule) == name) return rule;
  }
  throw InvalidArgument("unknown adjacency rule '" + name + "'");
}

std::vector<int> SegmentGraph::degrees() const {
  std::vector<int> d(adjacency.size());
  for (std::size_t n = 0; n < adjacency.size(); ++n) d[n] = static_cast<int>(adjacency[n].size());
  return d;
}

SegmentGraph segment_graph(const RoadNetwork& net, AdjacencyRule rule) {
  SegmentGraph g;
  g.rule = rule;
  const auto& segs = net.segments();
  const std::size_t m = segs.size();

  if (rule == AdjacencyRule::kUndirectedEdgeIncidence) {
    // One node per undirected edge, numbered in order of first appearance.
    std::map<std::pair<Vertex, Vertex>, int> edge_node;
    g.node_of_segment.resize(m);
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (std::size_t k = 0; k < m; ++k) {
      auto e = std::minmax(segs[k].tail, segs[k].head);
      auto [it, inserted] = edge_node.emplace(std::pair{e.first, e.second}, static_cast<int>(edges.size()));
      if (inserted) edges.emplace_back(e.first, e.second);
      g.node_of_segment[k] = it->second;
    }
    g.adjacency.assign(edges.size(), {});
    for (std::size_t a = 0; a < edges.size(); ++a) {
      for (std::size_t b = a + 1; b < edges.size(); ++b) {
        const auto& [a0, a1] = edges[a];
        const auto& [b0, b1] = edges[b];
        if (a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1) {
          g.adjacency[a].push_back(static_cast<int>(b));
          g.adjacency[b].push_back(static_cast<int>(a));
        }
      }
    }
  } else {
    g.node_of_segment.resize(m);
    g.adjacency.assign(m, {});
    for (std::size_t k = 0; k < m; ++k) g.node_of_segment[k] = static_cast<int>(k);
    // Candidates share at least one vertex, so scanning incident lists suffices.
    for (std::size_t a = 0; a < m; ++a) {
      const Segment& s = segs[a];
      std::vector<int> nbrs;
      for (Vertex v : {s.tail, s.head}) {
        for (SegmentIndex b : net.incident(v)) {
          if (static_cast<std::size_t>(b) == a) continue;
          const Segment& t = segs[static_cast<std::size_t>(b)];
          const bool linked = rule == AdjacencyRule::kShareAnyEndpoint
                                  ? true
                                  : (s.head == t.tail || t.head == s.tail);
          if (linked) nbrs.push_back(b);
        }
      }
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      g.adjacency[a] = std::move(nbrs);
    }
  }
  for (auto& row : g.adjacency) std::sort(row.begin(), row.end());
  return g;
}

}  // namespace etalab
