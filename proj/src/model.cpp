#include "sememelm/model.hpp"

#include <cmath>

#include "sememelm/error.hpp"

namespace sememelm {

RelationModel RelationModel::init(const TrainConfig& config,
                                  const Lexicon& lexicon) {
  config.validate();
  RelationModel m;
  m.config = config;
  m.seed = config.seed;
  m.vocab = textenc::Vocabulary::build(lexicon);
  Rng rng(Rng::mix(config.seed, Rng::hash_string("model-init")));
  m.encoder = textenc::EncoderParams::init(
      m.vocab.size(), static_cast<size_t>(config.encoder_dim),
      static_cast<size_t>(config.max_len), config.leaky_slope, rng);
  m.graph_encoder = gat::GatParams::init(
      static_cast<size_t>(config.graph_dim),
      static_cast<size_t>(config.encoder_dim),
      static_cast<size_t>(config.layers), config.leaky_slope, rng);
  double bound = std::sqrt(6.0 / static_cast<double>(config.graph_dim +
                                                     config.encoder_dim));
  std::vector<double> p(static_cast<size_t>(config.graph_dim) *
                        static_cast<size_t>(config.encoder_dim));
  for (double& x : p) x = rng.uniform(-bound, bound);
  m.align_projection = ad::Tensor::parameter(
      {static_cast<size_t>(config.graph_dim),
       static_cast<size_t>(config.encoder_dim)},
      std::move(p));
  return m;
}

std::vector<std::pair<std::string, ad::Tensor>> RelationModel::named_params()
    const {
  std::vector<std::pair<std::string, ad::Tensor>> out;
  for (size_t l = 0; l < graph_encoder.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    out.emplace_back("gat." + prefix + "value", graph_encoder.layers[l].value);
    out.emplace_back("gat." + prefix + "query", graph_encoder.layers[l].query);
    out.emplace_back("gat." + prefix + "key", graph_encoder.layers[l].key);
  }
  out.emplace_back("gat.virtual_seed", graph_encoder.virtual_seed);
  out.emplace_back("projections.relation", graph_encoder.projection);
  out.emplace_back("projections.word_align", align_projection);
  out.emplace_back("textenc.token_embeddings", encoder.token_embeddings);
  out.emplace_back("textenc.position_embeddings", encoder.position_embeddings);
  out.emplace_back("textenc.mixer_w1", encoder.mixer_w1);
  out.emplace_back("textenc.mixer_b1", encoder.mixer_b1);
  out.emplace_back("textenc.mixer_w2", encoder.mixer_w2);
  out.emplace_back("textenc.mixer_b2", encoder.mixer_b2);
  return out;
}

void RelationModel::zero_grad() {
  for (auto& [name, tensor] : named_params()) {
    ad::Tensor t = tensor;
    t.zero_grad();
  }
}

void GraphContext::finalize(uint64_t seed) {
  graph = build_graph(inventory, triples);
  node_init.emplace(embeddings, seed);
}

namespace {

// Local sememe indices belonging to one word of the pair, mapped to rows of
// encoding.sememe_states.
std::vector<size_t> member_state_rows(const gat::PairEncoding& encoding,
                                      const std::vector<uint32_t>& members) {
  std::vector<size_t> rows;
  for (uint32_t local : members) {
    for (size_t r = 0; r < encoding.sememe_local_indices.size(); ++r) {
      if (encoding.sememe_local_indices[r] == local) {
        rows.push_back(r);
        break;
      }
    }
  }
  return rows;
}

}  // namespace

PairForward forward_pair(const RelationModel& model, GraphContext* context,
                         const std::string& head, const std::string& tail) {
  PairForward out;

  // Graph side first (independent of the encoder path).
  std::vector<SememeId> head_set, tail_set;
  if (context && context->node_init) {
    SememeSetMode mode = model.config.intersection_mode()
                             ? SememeSetMode::kIntersection
                             : SememeSetMode::kUnion;
    if (const WordEntry* e = context->lexicon.find(head))
      head_set = sememe_set(*e, mode);
    if (const WordEntry* e = context->lexicon.find(tail))
      tail_set = sememe_set(*e, mode);
  }
  out.degenerate = head_set.empty() || tail_set.empty();

  // Encoder side; identical whether or not the graph side exists.
  textenc::TokenizedPrompt prompt = textenc::tokenize(
      textenc::render_template(head, tail),
      static_cast<size_t>(model.config.max_len));
  textenc::PromptEncoding enc =
      textenc::encode(model.encoder, model.vocab, prompt);
  out.mask_state = enc.mask_state;

  if (out.degenerate) return out;

  PairSubgraph sub = extract_subgraph(context->graph, head_set, tail_set,
                                      model.config.hops);
  sub = add_virtual_node(std::move(sub),
                         virtual_relation_id(context->inventory));
  gat::PairEncoding genc = gat::encode_pair(model.graph_encoder, sub,
                                            context->inventory,
                                            *context->node_init);
  out.graph_state = gat::project(model.graph_encoder, genc.graph_rep);

  std::vector<size_t> head_rows = member_state_rows(genc, sub.head_members);
  std::vector<size_t> tail_rows = member_state_rows(genc, sub.tail_members);
  if (!head_rows.empty())
    out.align_terms.push_back(
        {enc.head_state, ad::select_rows(genc.sememe_states, head_rows)});
  if (!tail_rows.empty())
    out.align_terms.push_back(
        {enc.tail_state, ad::select_rows(genc.sememe_states, tail_rows)});
  return out;
}

}  // namespace sememelm
