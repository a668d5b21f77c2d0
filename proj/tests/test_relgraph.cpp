#include <doctest.h>

#include <algorithm>

#include "oracle_helpers.hpp"
#include "sememelm/error.hpp"
#include "sememelm/relgraph.hpp"
#include "sememelm/rng.hpp"

using namespace sememelm;

namespace {

SememeInventory make_inventory(int sememes, int relations) {
  SememeInventory inv;
  for (int i = 0; i < sememes; ++i) inv.intern_sememe("s" + std::to_string(i));
  for (int i = 0; i < relations; ++i)
    inv.intern_relation("r" + std::to_string(i));
  return inv;
}

}  // namespace

TEST_CASE("a graph with no triples is all isolated nodes") {
  SememeInventory inv = make_inventory(4, 1);
  SememeGraph g = build_graph(inv, {});
  CHECK(g.node_count == 4);
  CHECK(g.edges.empty());
  for (const auto& adj : g.in_edges) CHECK(adj.empty());
}

TEST_CASE("degrees match a brute-force count over the triple list") {
  SememeInventory inv = make_inventory(4, 1);
  std::vector<RelationTriple> triples = {{0, 0, 2}, {1, 0, 2}};
  SememeGraph g = build_graph(inv, triples);
  CHECK(g.in_edges[2].size() == 2);
  CHECK(g.out_edges[2].empty());
  CHECK(g.out_edges[0].size() == 1);
  // Oracle: count directly from the triples.
  for (SememeId v = 0; v < 4; ++v) {
    size_t in_deg = 0, out_deg = 0;
    for (const auto& t : triples) {
      if (t.tail == v) ++in_deg;
      if (t.head == v) ++out_deg;
    }
    CHECK(g.in_edges[v].size() == in_deg);
    CHECK(g.out_edges[v].size() == out_deg);
  }
}

TEST_CASE("build_graph rejects out-of-range ids") {
  SememeInventory inv = make_inventory(2, 1);
  CHECK_THROWS_AS(build_graph(inv, {{0, 0, 7}}), Error);
  CHECK_THROWS_AS(build_graph(inv, {{0, 9, 1}}), Error);
}

TEST_CASE("extract_subgraph keeps exactly the induced edges") {
  SememeInventory inv = make_inventory(4, 1);
  // a=0, b=1, c=2, d=3; edges a->c and c->d.
  SememeGraph g = build_graph(inv, {{0, 0, 2}, {2, 0, 3}});
  std::vector<SememeId> head{0, 1}, tail{2};
  PairSubgraph sub = extract_subgraph(g, head, tail);
  CHECK(sub.local_nodes == std::vector<SememeId>{0, 1, 2});
  REQUIRE(sub.local_edges.size() == 1);  // c->d leaves the member set
  CHECK(sub.local_edges[0].src == 0);
  CHECK(sub.local_edges[0].dst == 2);
  CHECK(sub.head_members == std::vector<uint32_t>{0, 1});
  CHECK(sub.tail_members == std::vector<uint32_t>{2});
}

TEST_CASE("disjoint member sets with no connecting edges yield no edges") {
  SememeInventory inv = make_inventory(4, 1);
  SememeGraph g = build_graph(inv, {{0, 0, 1}});
  std::vector<SememeId> head{2}, tail{3};
  PairSubgraph sub = extract_subgraph(g, head, tail);
  CHECK(sub.local_nodes.size() == 2);
  CHECK(sub.local_edges.empty());
}

TEST_CASE("a sememe in both sets appears once, marked twice") {
  SememeInventory inv = make_inventory(2, 1);
  SememeGraph g = build_graph(inv, {});
  std::vector<SememeId> s{0};
  PairSubgraph sub = extract_subgraph(g, s, s);
  CHECK(sub.local_nodes == std::vector<SememeId>{0});
  CHECK(sub.head_members == std::vector<uint32_t>{0});
  CHECK(sub.tail_members == std::vector<uint32_t>{0});
}

TEST_CASE("extract_subgraph(G, S, S) returns sorted S") {
  SememeInventory inv = make_inventory(6, 1);
  SememeGraph g = build_graph(inv, {});
  std::vector<SememeId> s{4, 1, 3};
  PairSubgraph sub = extract_subgraph(g, s, s);
  CHECK(sub.local_nodes == std::vector<SememeId>{1, 3, 4});
}

TEST_CASE("induced subgraph matches the brute-force filter on random graphs") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 2 + rng.index(49);
    SememeInventory inv = make_inventory(static_cast<int>(n), 3);
    std::vector<RelationTriple> triples;
    const size_t edge_count = rng.index(3 * n);
    for (size_t e = 0; e < edge_count; ++e)
      triples.push_back({static_cast<SememeId>(rng.index(n)),
                         static_cast<RelationTypeId>(rng.index(3)),
                         static_cast<SememeId>(rng.index(n))});
    SememeGraph g = build_graph(inv, triples);
    std::vector<SememeId> head, tail;
    for (SememeId v = 0; v < n; ++v) {
      if (rng.uniform() < 0.3) head.push_back(v);
      if (rng.uniform() < 0.3) tail.push_back(v);
    }
    if (head.empty()) head.push_back(static_cast<SememeId>(rng.index(n)));
    if (tail.empty()) tail.push_back(static_cast<SememeId>(rng.index(n)));

    PairSubgraph sub = extract_subgraph(g, head, tail);
    auto expected = oracle::induced_edges(g, sub.local_nodes);
    REQUIRE(sub.local_edges.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
      CHECK(sub.local_nodes[sub.local_edges[i].src] == expected[i].src);
      CHECK(sub.local_edges[i].relation == expected[i].rel);
      CHECK(sub.local_nodes[sub.local_edges[i].dst] == expected[i].dst);
    }
  }
}

TEST_CASE("hops=1 pulls in midpoints of member-to-member paths") {
  SememeInventory inv = make_inventory(5, 1);
  // 0 -> 2 -> 1 (2 is a midpoint), 0 -> 3 (3 leads nowhere useful), 4 isolated.
  SememeGraph g = build_graph(inv, {{0, 0, 2}, {2, 0, 1}, {0, 0, 3}});
  std::vector<SememeId> head{0}, tail{1};
  PairSubgraph plain = extract_subgraph(g, head, tail, 0);
  CHECK(plain.local_nodes == std::vector<SememeId>{0, 1});
  PairSubgraph expanded = extract_subgraph(g, head, tail, 1);
  CHECK(expanded.local_nodes == std::vector<SememeId>{0, 1, 2});
  CHECK(expanded.local_edges.size() == 2);
  // Midpoints are not members of either word set.
  CHECK(expanded.head_members == std::vector<uint32_t>{0});
  CHECK(expanded.tail_members == std::vector<uint32_t>{1});
}

TEST_CASE("add_virtual_node wires every sememe node to the virtual sink") {
  SememeInventory inv = make_inventory(4, 2);
  SememeGraph g = build_graph(inv, {{0, 0, 1}});
  std::vector<SememeId> head{0, 1}, tail{2};
  PairSubgraph sub = extract_subgraph(g, head, tail);
  RelationTypeId vrel = virtual_relation_id(inv);
  CHECK(vrel == 2);  // one past the real types
  PairSubgraph aug = add_virtual_node(std::move(sub), vrel);
  REQUIRE(aug.augmented());
  CHECK(*aug.virtual_index == 3);
  CHECK(aug.local_nodes.back() == kVirtualNodeId);
  size_t virtual_in = 0, virtual_out = 0;
  for (const auto& e : aug.local_edges) {
    if (e.dst == *aug.virtual_index) {
      ++virtual_in;
      CHECK(e.relation == vrel);
    }
    if (e.src == *aug.virtual_index) ++virtual_out;
  }
  CHECK(virtual_in == 3);
  CHECK(virtual_out == 0);
}

TEST_CASE("one-node subgraph gains exactly one virtual edge") {
  SememeInventory inv = make_inventory(1, 0);
  SememeGraph g = build_graph(inv, {});
  std::vector<SememeId> s{0};
  PairSubgraph aug =
      add_virtual_node(extract_subgraph(g, s, s), virtual_relation_id(inv));
  CHECK(aug.local_edges.size() == 1);
}

TEST_CASE("augmenting twice or augmenting an empty subgraph errors") {
  SememeInventory inv = make_inventory(2, 1);
  SememeGraph g = build_graph(inv, {});
  std::vector<SememeId> s{0, 1};
  PairSubgraph aug =
      add_virtual_node(extract_subgraph(g, s, s), virtual_relation_id(inv));
  CHECK_THROWS_AS(add_virtual_node(std::move(aug), virtual_relation_id(inv)),
                  Error);
  PairSubgraph empty;
  CHECK_THROWS_AS(add_virtual_node(std::move(empty), 0), Error);
}

TEST_CASE("subgraph extraction is deterministic") {
  SememeInventory inv = make_inventory(10, 2);
  Rng rng(7);
  std::vector<RelationTriple> triples;
  for (int e = 0; e < 20; ++e)
    triples.push_back({static_cast<SememeId>(rng.index(10)),
                       static_cast<RelationTypeId>(rng.index(2)),
                       static_cast<SememeId>(rng.index(10))});
  SememeGraph g = build_graph(inv, triples);
  std::vector<SememeId> head{1, 4, 7}, tail{2, 4};
  PairSubgraph a = extract_subgraph(g, head, tail);
  PairSubgraph b = extract_subgraph(g, head, tail);
  CHECK(a.local_nodes == b.local_nodes);
  REQUIRE(a.local_edges.size() == b.local_edges.size());
  for (size_t i = 0; i < a.local_edges.size(); ++i) {
    CHECK(a.local_edges[i].src == b.local_edges[i].src);
    CHECK(a.local_edges[i].relation == b.local_edges[i].relation);
    CHECK(a.local_edges[i].dst == b.local_edges[i].dst);
  }
}
