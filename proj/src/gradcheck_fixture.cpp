#include "sememelm/gradcheck_fixture.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "sememelm/error.hpp"
#include "sememelm/training.hpp"

namespace sememelm {

GradCheckReport run_gradcheck_fixture(uint64_t seed, int nodes, int dim) {
  require(nodes >= 1 && nodes <= 16, "gradcheck: nodes must be in [1, 16]");
  require(dim >= 2 && dim <= 64, "gradcheck: dim must be in [2, 64]");
  Rng rng(Rng::mix(seed, Rng::hash_string("gradcheck")));

  // Inventory and random directed edges over it.
  SememeInventory inventory;
  std::vector<SememeId> sememes;
  for (int i = 0; i < nodes; ++i)
    sememes.push_back(inventory.intern_sememe("n" + std::to_string(i)));
  for (int r = 0; r < 3; ++r) inventory.intern_relation("r" + std::to_string(r));

  std::vector<RelationTriple> triples;
  for (SememeId a : sememes)
    for (SememeId b : sememes) {
      if (a == b) continue;
      if (rng.uniform() < 0.4) {
        triples.push_back(
            {a, static_cast<RelationTypeId>(rng.index(3)), b});
      }
    }
  if (nodes >= 2 && triples.empty())
    triples.push_back({sememes[0], 0, sememes[1]});

  // Words whose sense intersections are single sememes spread over the graph.
  Lexicon lexicon;
  std::vector<std::string> words = {"wa", "wb", "wc", "wd"};
  for (size_t i = 0; i < words.size(); ++i) {
    WordEntry entry;
    entry.word = words[i];
    SememeId own = sememes[i % sememes.size()];
    SememeId other = sememes[(i + 1) % sememes.size()];
    if (own == other) {
      entry.senses = {{own}};
    } else {
      // Two senses sharing exactly `own`.
      std::vector<SememeId> s1{own, other};
      std::sort(s1.begin(), s1.end());
      entry.senses = {s1, {own}};
    }
    lexicon.add(std::move(entry));
  }

  GraphContext context;
  context.inventory = std::move(inventory);
  context.lexicon = std::move(lexicon);
  context.triples = std::move(triples);
  for (SememeId s : sememes) {
    std::vector<double> row(static_cast<size_t>(dim));
    for (double& v : row) v = rng.uniform(-0.5, 0.5);
    context.embeddings.insert(context.inventory.sememe_label(s),
                              std::move(row));
  }
  context.finalize(seed);

  RelationDataset data;
  {
    RelationGroup g0;
    g0.relation = "fixture0";
    g0.train_positives = {{"wa", "wb"}, {"wc", "wd"}, {"wa", "wd"}};
    g0.train_negatives = {{"wb", "wa"}, {"wd", "wc"}};
    RelationGroup g1;
    g1.relation = "fixture1";
    g1.train_positives = {{"wb", "wc"}, {"wd", "wa"}};
    g1.train_negatives = {{"wc", "wb"}};
    data.relations = {std::move(g0), std::move(g1)};
  }

  TrainConfig config;
  config.seed = seed;
  config.encoder_dim = dim;
  config.graph_dim = dim;
  config.max_len = 16;
  config.tau = 0.5;
  RelationModel model = RelationModel::init(config, context.lexicon);

  auto objective = [&]() {
    std::vector<ContrastiveGroup> groups;
    std::vector<WordAlignTerm> align_terms;
    std::vector<ad::Tensor> graph_vecs, encoder_vecs;
    for (const RelationGroup& group : data.relations) {
      ContrastiveGroup cg;
      auto run_pair = [&](const WordPair& pair) {
        PairForward fwd = forward_pair(model, &context, pair.head, pair.tail);
        if (!fwd.degenerate) {
          graph_vecs.push_back(*fwd.graph_state);
          encoder_vecs.push_back(fwd.mask_state);
          align_terms.insert(align_terms.end(), fwd.align_terms.begin(),
                             fwd.align_terms.end());
        }
        // Same contrastive input as the training loop.
        return ad::normalize_rows(
            fwd.graph_state ? *fwd.graph_state : fwd.mask_state);
      };
      for (const WordPair& p : group.train_positives)
        cg.positives.push_back(run_pair(p));
      for (const WordPair& p : group.train_negatives)
        cg.negatives.push_back(run_pair(p));
      groups.push_back(std::move(cg));
    }
    ad::Tensor l1 = word_alignment_loss(align_terms, model.align_projection);
    ad::Tensor l2 = graph_vecs.empty()
                        ? ad::Tensor::scalar(0.0)
                        : relation_alignment_loss(ad::concat_rows(graph_vecs),
                                                  ad::concat_rows(encoder_vecs));
    ad::Tensor l3 = contrastive_loss(groups, config.tau).loss;
    return total_loss(l1, l2, l3, LossToggles{});
  };

  std::vector<ad::Tensor> params;
  GradCheckReport report;
  for (auto& [name, tensor] : model.named_params()) {
    params.push_back(tensor);
    report.parameter_count += tensor.numel();
  }
  report.max_rel_err = ad::grad_check(objective, params, kGradCheckEps);
  return report;
}

}  // namespace sememelm
