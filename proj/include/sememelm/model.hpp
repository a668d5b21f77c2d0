#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sememelm/autodiff.hpp"
#include "sememelm/config.hpp"
#include "sememelm/gat.hpp"
#include "sememelm/lexicon.hpp"
#include "sememelm/relgraph.hpp"
#include "sememelm/textenc.hpp"

namespace sememelm {

// Everything trainable: GAT layers and virtual seed, both projections, and
// the text-encoder weights.
struct RelationModel {
  TrainConfig config;
  textenc::Vocabulary vocab;
  textenc::EncoderParams encoder;
  gat::GatParams graph_encoder;
  ad::Tensor align_projection;  // [d, encoder_dim], used by the word-alignment loss
  uint64_t seed = 0;

  static RelationModel init(const TrainConfig& config, const Lexicon& lexicon);

  std::vector<std::pair<std::string, ad::Tensor>> named_params() const;
  void zero_grad();
};

// The graph subsystem: lexicon, relation graph, and initial node vectors.
// Optional at inference; pairs without it (or with an empty sememe
// intersection) take the encoder-only degenerate path.
struct GraphContext {
  SememeInventory inventory;
  Lexicon lexicon;
  std::vector<RelationTriple> triples;
  SememeGraph graph;
  EmbeddingTable embeddings;
  std::optional<NodeInitSource> node_init;

  GraphContext() = default;
  // node_init points into embeddings; keep the context pinned in place.
  GraphContext(const GraphContext&) = delete;
  GraphContext& operator=(const GraphContext&) = delete;

  void finalize(uint64_t seed);  // builds graph + node_init from the rest
};

// For the word-alignment loss: one word occurrence with its encoder-side
// state and the matching sememe-node states from the pair's subgraph.
struct WordAlignTerm {
  ad::Tensor word_state;    // [encoder_dim]
  ad::Tensor sememe_states;  // [k, graph_dim]
};

// One word pair pushed through the full pipeline. The graph side is absent
// on the degenerate path; h_m is computed identically either way.
struct PairForward {
  ad::Tensor mask_state;                  // h_m, [1, encoder_dim]
  std::optional<ad::Tensor> graph_state;  // h_g', [1, encoder_dim]
  std::vector<WordAlignTerm> align_terms;
  bool degenerate = true;
};

PairForward forward_pair(const RelationModel& model, GraphContext* context,
                         const std::string& head, const std::string& tail);

}  // namespace sememelm
