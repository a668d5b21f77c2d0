#pragma once

#include <cstdint>
#include <vector>

#include "sememelm/autodiff.hpp"
#include "sememelm/lexicon.hpp"
#include "sememelm/relgraph.hpp"
#include "sememelm/rng.hpp"

namespace sememelm::gat {

// Node states are stored one row per local node; parameter matrices act on
// the right (h' = h * W), so each matrix is [in_dim, out_dim].
struct LayerParams {
  ad::Tensor value;  // [d, d]
  ad::Tensor query;  // [d, d]
  ad::Tensor key;    // [d, d]
};

struct GatParams {
  std::vector<LayerParams> layers;
  ad::Tensor virtual_seed;  // [d], the virtual node's initial state
  ad::Tensor projection;    // [d, encoder_dim], maps h_g into the encoder space
  double leaky_slope = 0.2;
  size_t graph_dim = 0;
  size_t encoder_dim = 0;

  static GatParams init(size_t graph_dim, size_t encoder_dim,
                        size_t layer_count, double leaky_slope, Rng& rng);
};

// Allowed senders per receiver: row i marks {j : edge j -> i} plus i itself.
// Messages flow along edge direction only; the edge's relation label plays
// no part in attention.
std::vector<uint8_t> attention_mask(const PairSubgraph& subgraph);

// alpha[i][j] = softmax_j over allowed senders of (q_i . k_j); zero outside.
ad::Tensor attention_coefficients(const GatParams& params, size_t layer,
                                  const ad::Tensor& states,
                                  const PairSubgraph& subgraph);

// One update: h'_i = LeakyReLU(sum_j alpha_ij * (h_j W)).
ad::Tensor gat_layer(const GatParams& params, size_t layer,
                     const ad::Tensor& states, const PairSubgraph& subgraph);

struct PairEncoding {
  ad::Tensor graph_rep;      // [1, d], the virtual node's final state (h_g)
  ad::Tensor sememe_states;  // [n_sememe, d], aligned with sememe_local_indices
  std::vector<uint32_t> sememe_local_indices;
  int layers_run = 0;
};

// Runs all layers over an augmented subgraph. Sememe rows are initialized
// from `init` by label; the virtual row starts from the trainable seed.
PairEncoding encode_pair(const GatParams& params, const PairSubgraph& subgraph,
                         const SememeInventory& inventory,
                         NodeInitSource& init);

// h_g' = h_g * projection.
ad::Tensor project(const GatParams& params, const ad::Tensor& graph_rep);

}  // namespace sememelm::gat
