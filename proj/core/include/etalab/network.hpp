#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace etalab {

using SegmentIndex = std::int32_t;

/// Grid intersection (i, j) with 0 <= i, j <= p.
struct Vertex {
  int i = 0;
  int j = 0;

  auto operator<=>(const Vertex&) const = default;
};

/// L1 (Manhattan) distance between two grid vertices.
int manhattan(Vertex a, Vertex b);

/// Directed road segment between two adjacent vertices.
struct Segment {
  Vertex tail;
  Vertex head;

  auto operator<=>(const Segment&) const = default;

  Segment reversed() const { return {head, tail}; }
};

/// Directed grid road network. Segments are indexed lexicographically by
/// (tail.i, tail.j, head.i, head.j); both directions of every grid edge
/// are present.
class RoadNetwork {
 public:
  /// Builds the (p+1)x(p+1) vertex grid with 4p(p+1) directed segments.
  static RoadNetwork build_grid(int p);

  /// Custom network over the vertex box {0..p}^2. Segments are sorted into
  /// canonical order; each must join grid-adjacent vertices.
  static RoadNetwork from_segments(int p, std::vector<Segment> segments);

  int grid_size() const { return p_; }
  std::size_t vertex_count() const { return static_cast<std::size_t>(p_ + 1) * (p_ + 1); }
  std::size_t segment_count() const { return segments_.size(); }

  const Segment& segment(SegmentIndex k) const { return segments_.at(static_cast<std::size_t>(k)); }
  const std::vector<Segment>& segments() const { return segments_; }

  std::optional<SegmentIndex> find(const Segment& s) const;
  /// Throws InvalidArgument when the segment is not part of the network.
  SegmentIndex index_of(const Segment& s) const;
  SegmentIndex index_of(Vertex tail, Vertex head) const { return index_of(Segment{tail, head}); }

  bool contains(Vertex v) const { return v.i >= 0 && v.j >= 0 && v.i <= p_ && v.j <= p_; }
  /// Segments having v as tail or head, in index order.
  std::span<const SegmentIndex> incident(Vertex v) const;

 private:
  RoadNetwork() = default;
  void build_indices();
  std::size_t vertex_id(Vertex v) const { return static_cast<std::size_t>(v.i) * (p_ + 1) + v.j; }
  static std::uint64_t key(const Segment& s);

  int p_ = 0;
  std::vector<Segment> segments_;
  std::unordered_map<std::uint64_t, SegmentIndex> lookup_;
  std::vector<std::size_t> incident_offsets_;
  std::vector<SegmentIndex> incident_;
};

/// How two segments are "directly connected" in the diffusion graph.
enum class AdjacencyRule {
  /// Directed segments are nodes; adjacent when they share any endpoint.
  kShareAnyEndpoint,
  /// Directed segments are nodes; adjacent when one's head is the other's tail.
  kHeadToTailChain,
  /// Undirected grid edges are nodes, adjacent when they share a vertex.
  /// Both directions of an edge map to the same node.
  kUndirectedEdgeIncidence,
};

std::string to_string(AdjacencyRule rule);
AdjacencyRule parse_adjacency_rule(const std::string& name);

/// Undirected graph used by the diffusion kernel. Nodes are either the
/// segments themselves or the underlying undirected edges, depending on the
/// rule; node_of_segment maps a segment index to its node.
struct SegmentGraph {
  AdjacencyRule rule = AdjacencyRule::kUndirectedEdgeIncidence;
  std::vector<std::vector<int>> adjacency;
  std::vector<int> node_of_segment;

  std::size_t node_count() const { return adjacency.size(); }
  int degree(int node) const { return static_cast<int>(adjacency.at(static_cast<std::size_t>(node)).size()); }
  std::vector<int> degrees() const;
};

SegmentGraph segment_graph(const RoadNetwork& net,
                           AdjacencyRule rule = AdjacencyRule::kUndirectedEdgeIncidence);

}  // namespace etalab
