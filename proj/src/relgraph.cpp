#include "sememelm/relgraph.hpp"

#include <algorithm>
#include <unordered_map>

#include "sememelm/error.hpp"

namespace sememelm {

SememeGraph build_graph(const SememeInventory& inventory,
                        const std::vector<RelationTriple>& triples) {
  SememeGraph graph;
  graph.node_count = inventory.sememe_count();
  graph.in_edges.resize(graph.node_count);
  graph.out_edges.resize(graph.node_count);
  graph.edges.reserve(triples.size());
  for (const RelationTriple& t : triples) {
    require(t.head < graph.node_count && t.tail < graph.node_count,
            "build_graph: sememe id out of range (", t.head, " or ", t.tail,
            " >= ", graph.node_count, ")");
    require(t.relation < inventory.relation_type_count(),
            "build_graph: relation-type id ", t.relation, " out of range");
    uint32_t edge_id = static_cast<uint32_t>(graph.edges.size());
    graph.edges.push_back({t.head, t.relation, t.tail});
    graph.out_edges[t.head].push_back(edge_id);
    graph.in_edges[t.tail].push_back(edge_id);
  }
  return graph;
}

PairSubgraph extract_subgraph(const SememeGraph& graph,
                              std::span<const SememeId> head_sememes,
                              std::span<const SememeId> tail_sememes,
                              int hops) {
  require(!head_sememes.empty() && !tail_sememes.empty(),
          "extract_subgraph: empty member set (degenerate pairs are handled "
          "before extraction)");
  for (SememeId s : head_sememes)
    require(s < graph.node_count, "extract_subgraph: head id ", s,
            " out of range");
  for (SememeId s : tail_sememes)
    require(s < graph.node_count, "extract_subgraph: tail id ", s,
            " out of range");

  std::vector<SememeId> members(head_sememes.begin(), head_sememes.end());
  members.insert(members.end(), tail_sememes.begin(), tail_sememes.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());

  std::vector<SememeId> nodes = members;
  if (hops >= 1) {
    // Midpoints of a -> x -> b with a, b members and x not.
    std::vector<char> is_member(graph.node_count, 0);
    for (SememeId m : members) is_member[m] = 1;
    std::vector<SememeId> mids;
    for (SememeId a : members) {
      for (uint32_t eid : graph.out_edges[a]) {
        SememeId x = graph.edges[eid].dst;
        if (is_member[x]) continue;
        for (uint32_t eid2 : graph.out_edges[x]) {
          if (is_member[graph.edges[eid2].dst]) {
            mids.push_back(x);
            break;
          }
        }
      }
    }
    nodes.insert(nodes.end(), mids.begin(), mids.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  }

  PairSubgraph sub;
  sub.local_nodes = nodes;

  std::unordered_map<SememeId, uint32_t> local_of;
  local_of.reserve(nodes.size());
  for (uint32_t i = 0; i < nodes.size(); ++i) local_of.emplace(nodes[i], i);

  // Induced edges, in global edge-list order.
  std::vector<uint32_t> edge_ids;
  for (SememeId n : nodes)
    for (uint32_t eid : graph.out_edges[n])
      if (local_of.count(graph.edges[eid].dst)) edge_ids.push_back(eid);
  std::sort(edge_ids.begin(), edge_ids.end());
  for (uint32_t eid : edge_ids) {
    const SememeGraph::Edge& e = graph.edges[eid];
    sub.local_edges.push_back(
        {local_of.at(e.src), e.relation, local_of.at(e.dst)});
  }

  for (SememeId s : head_sememes) {
    uint32_t li = local_of.at(s);
    if (std::find(sub.head_members.begin(), sub.head_members.end(), li) ==
        sub.head_members.end())
      sub.head_members.push_back(li);
  }
  for (SememeId s : tail_sememes) {
    uint32_t li = local_of.at(s);
    if (std::find(sub.tail_members.begin(), sub.tail_members.end(), li) ==
        sub.tail_members.end())
      sub.tail_members.push_back(li);
  }
  std::sort(sub.head_members.begin(), sub.head_members.end());
  std::sort(sub.tail_members.begin(), sub.tail_members.end());
  return sub;
}

RelationTypeId virtual_relation_id(const SememeInventory& inventory) {
  return static_cast<RelationTypeId>(inventory.relation_type_count());
}

PairSubgraph add_virtual_node(PairSubgraph subgraph,
                              RelationTypeId virtual_relation) {
  require(!subgraph.augmented(), "add_virtual_node: subgraph already augmented");
  require(!subgraph.local_nodes.empty(), "add_virtual_node: empty subgraph");
  uint32_t vi = static_cast<uint32_t>(subgraph.local_nodes.size());
  subgraph.local_nodes.push_back(kVirtualNodeId);
  subgraph.virtual_index = vi;
  for (uint32_t i = 0; i < vi; ++i)
    subgraph.local_edges.push_back({i, virtual_relation, vi});
  return subgraph;
}

}  // namespace sememelm
