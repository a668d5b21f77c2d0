#include "sememelm/gat.hpp"

#include <cmath>

#include "sememelm/error.hpp"

namespace sememelm::gat {

namespace {

ad::Tensor xavier(size_t in_dim, size_t out_dim, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  std::vector<double> v(in_dim * out_dim);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return ad::Tensor::parameter({in_dim, out_dim}, std::move(v));
}

}  // namespace

GatParams GatParams::init(size_t graph_dim, size_t encoder_dim,
                          size_t layer_count, double leaky_slope, Rng& rng) {
  require(graph_dim > 0 && encoder_dim > 0 && layer_count > 0,
          "gat: dims and layer count must be positive");
  GatParams p;
  p.graph_dim = graph_dim;
  p.encoder_dim = encoder_dim;
  p.leaky_slope = leaky_slope;
  for (size_t l = 0; l < layer_count; ++l) {
    LayerParams layer;
    layer.value = xavier(graph_dim, graph_dim, rng);
    layer.query = xavier(graph_dim, graph_dim, rng);
    layer.key = xavier(graph_dim, graph_dim, rng);
    p.layers.push_back(std::move(layer));
  }
  std::vector<double> seed(graph_dim);
  for (double& x : seed) x = rng.normal(0.0, 0.02);
  p.virtual_seed = ad::Tensor::parameter({graph_dim}, std::move(seed));
  p.projection = xavier(graph_dim, encoder_dim, rng);
  return p;
}

std::vector<uint8_t> attention_mask(const PairSubgraph& subgraph) {
  const size_t n = subgraph.local_nodes.size();
  std::vector<uint8_t> mask(n * n, 0);
  for (size_t i = 0; i < n; ++i) mask[i * n + i] = 1;  // self
  for (const PairSubgraph::LocalEdge& e : subgraph.local_edges)
    mask[static_cast<size_t>(e.dst) * n + e.src] = 1;  // sender j -> receiver i
  return mask;
}

ad::Tensor attention_coefficients(const GatParams& params, size_t layer,
                                  const ad::Tensor& states,
                                  const PairSubgraph& subgraph) {
  require(layer < params.layers.size(), "gat: layer ", layer, " out of range");
  const size_t n = subgraph.local_nodes.size();
  require(states.rank() == 2 && states.shape()[0] == n,
          "gat: states must have one row per local node");
  const LayerParams& lp = params.layers[layer];
  ad::Tensor queries = ad::matmul(states, lp.query);          // [n, d]
  ad::Tensor keys = ad::matmul(states, lp.key);               // [n, d]
  ad::Tensor logits = ad::matmul(queries, ad::transpose(keys));  // [n, n]
  return ad::masked_softmax_rows(logits, attention_mask(subgraph));
}

ad::Tensor gat_layer(const GatParams& params, size_t layer,
                     const ad::Tensor& states, const PairSubgraph& subgraph) {
  ad::Tensor alpha = attention_coefficients(params, layer, states, subgraph);
  ad::Tensor messages = ad::matmul(states, params.layers[layer].value);
  return ad::leaky_relu(ad::matmul(alpha, messages), params.leaky_slope);
}

PairEncoding encode_pair(const GatParams& params, const PairSubgraph& subgraph,
                         const SememeInventory& inventory,
                         NodeInitSource& init) {
  require(subgraph.augmented(), "encode_pair: subgraph not augmented");
  require(init.dimension() == params.graph_dim,
          "encode_pair: embedding dimension ", init.dimension(),
          " != graph dimension ", params.graph_dim);
  const size_t n = subgraph.local_nodes.size();
  const size_t d = params.graph_dim;
  const uint32_t vi = *subgraph.virtual_index;

  // Initial states: constant rows for sememe nodes (merged into contiguous
  // blocks), the trainable seed for the virtual node.
  std::vector<ad::Tensor> blocks;
  std::vector<double> buf;
  auto flush = [&]() {
    if (buf.empty()) return;
    blocks.push_back(ad::Tensor::constant({buf.size() / d, d}, buf));
    buf.clear();
  };
  for (size_t i = 0; i < n; ++i) {
    if (i == vi) {
      flush();
      blocks.push_back(params.virtual_seed);
      continue;
    }
    const std::vector<double>& row =
        init.get(inventory.sememe_label(subgraph.local_nodes[i]));
    buf.insert(buf.end(), row.begin(), row.end());
  }
  flush();
  ad::Tensor states = ad::concat_rows(blocks);

  PairEncoding out;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    states = gat_layer(params, l, states, subgraph);
    ++out.layers_run;
  }

  out.graph_rep = ad::select_rows(states, {vi});
  std::vector<size_t> sememe_rows;
  for (size_t i = 0; i < n; ++i) {
    if (i == vi) continue;
    sememe_rows.push_back(i);
    out.sememe_local_indices.push_back(static_cast<uint32_t>(i));
  }
  if (!sememe_rows.empty())
    out.sememe_states = ad::select_rows(states, sememe_rows);
  return out;
}

ad::Tensor project(const GatParams& params, const ad::Tensor& graph_rep) {
  require(graph_rep.rank() == 2 && graph_rep.shape()[1] == params.graph_dim,
          "project: expected [*, ", params.graph_dim, "] input");
  return ad::matmul(graph_rep, params.projection);
}

}  // namespace sememelm::gat
