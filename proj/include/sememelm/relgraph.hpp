#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sememelm/lexicon.hpp"

namespace sememelm {

// Directed labeled graph over the full sememe inventory. Immutable once
// built; adjacency indexes the edge list by endpoint.
struct SememeGraph {
  struct Edge {
    SememeId src;
    RelationTypeId relation;
    SememeId dst;
  };

  size_t node_count = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<uint32_t>> in_edges;   // node -> incoming edge ids
  std::vector<std::vector<uint32_t>> out_edges;  // node -> outgoing edge ids
};

SememeGraph build_graph(const SememeInventory& inventory,
                        const std::vector<RelationTriple>& triples);

// Placeholder global id for the virtual node inside a pair subgraph.
inline constexpr SememeId kVirtualNodeId =
    std::numeric_limits<SememeId>::max();

struct PairSubgraph {
  struct LocalEdge {
    uint32_t src;
    RelationTypeId relation;
    uint32_t dst;
  };

  std::vector<SememeId> local_nodes;  // global ids; kVirtualNodeId if virtual
  std::vector<LocalEdge> local_edges;
  std::optional<uint32_t> virtual_index;
  std::vector<uint32_t> head_members;  // local indices in S_h
  std::vector<uint32_t> tail_members;  // local indices in S_t

  bool augmented() const { return virtual_index.has_value(); }
  size_t sememe_node_count() const {
    return local_nodes.size() - (augmented() ? 1 : 0);
  }
};

// Induced subgraph over head ∪ tail (ascending global id). hops=1 also pulls
// in nodes sitting on a directed length-2 path between member nodes.
PairSubgraph extract_subgraph(const SememeGraph& graph,
                              std::span<const SememeId> head_sememes,
                              std::span<const SememeId> tail_sememes,
                              int hops = 0);

// Synthetic relation-type id for sememe -> virtual edges; one past the real
// types so it can never collide.
RelationTypeId virtual_relation_id(const SememeInventory& inventory);

// Appends the virtual node and one edge from every sememe node to it.
PairSubgraph add_virtual_node(PairSubgraph subgraph,
                              RelationTypeId virtual_relation);

}  // namespace sememelm
