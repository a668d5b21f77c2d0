#include "sememelm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "sememelm/error.hpp"

namespace sememelm {

using nlohmann::json;

namespace {

std::vector<WordPair> take(const std::vector<WordPair>& pairs, size_t begin,
                           size_t end) {
  return {pairs.begin() + static_cast<ptrdiff_t>(begin),
          pairs.begin() + static_cast<ptrdiff_t>(end)};
}

// 80/20 split with at least one element on each side when possible.
size_t train_count(size_t n) {
  size_t k = static_cast<size_t>(std::llround(0.8 * static_cast<double>(n)));
  if (k == n && n > 1) k = n - 1;
  if (k == 0) k = 1;
  return k;
}

}  // namespace

RelationDataset load_relation_data(std::istream& in, uint64_t seed) {
  RelationDataset data;
  std::set<std::string> seen_relations;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      fail("relations line ", line_no, ": malformed JSON: ", e.what());
    }
    require(record.contains("relation") && record["relation"].is_string(),
            "relations line ", line_no, ": missing \"relation\"");
    require(record.contains("pairs") && record["pairs"].is_array(),
            "relations line ", line_no, ": missing \"pairs\"");
    const std::string relation = record["relation"].get<std::string>();
    require(seen_relations.insert(relation).second, "relations line ", line_no,
            ": duplicate relation '", relation, "'");

    struct Scored {
      WordPair pair;
      double score;
      size_t order;
    };
    std::vector<Scored> scored;
    std::set<std::pair<std::string, std::string>> seen_pairs;
    for (const json& p : record["pairs"]) {
      require(p.contains("head") && p.contains("tail") && p.contains("score"),
              "relations line ", line_no,
              ": pair needs head, tail and score");
      Scored s;
      s.pair.head = p["head"].get<std::string>();
      s.pair.tail = p["tail"].get<std::string>();
      require(p["score"].is_number(), "relations line ", line_no,
              ": score must be a number");
      s.score = p["score"].get<double>();
      s.order = scored.size();
      require(seen_pairs.insert({s.pair.head, s.pair.tail}).second,
              "relation '", relation, "': duplicate pair (", s.pair.head, ", ",
              s.pair.tail, ")");
      scored.push_back(std::move(s));
    }
    require(scored.size() >= 2, "relation '", relation, "': needs at least 2 ",
            "scored pairs, got ", scored.size());

    // Highest typicality first; ties keep file order.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) {
                       return a.score > b.score;
                     });
    const size_t n = scored.size();
    const size_t n_pos = std::min<size_t>(10, n / 2);
    const size_t n_neg = std::min<size_t>(10, n - n_pos);
    require(n_pos >= 2, "relation '", relation,
            "': needs at least 2 positives after top/bottom selection");
    require(n_neg >= 1, "relation '", relation,
            "': needs at least 1 negative after top/bottom selection");

    std::vector<WordPair> positives, negatives;
    for (size_t i = 0; i < n_pos; ++i) positives.push_back(scored[i].pair);
    for (size_t i = n - n_neg; i < n; ++i) negatives.push_back(scored[i].pair);

    Rng rng(Rng::mix(seed, Rng::hash_string(relation)));
    rng.shuffle(positives);
    rng.shuffle(negatives);
    RelationGroup group;
    group.relation = relation;
    const size_t pos_train = train_count(positives.size());
    const size_t neg_train = train_count(negatives.size());
    group.train_positives = take(positives, 0, pos_train);
    group.val_positives = take(positives, pos_train, positives.size());
    group.train_negatives = take(negatives, 0, neg_train);
    group.val_negatives = take(negatives, neg_train, negatives.size());
    data.relations.push_back(std::move(group));
  }
  return data;
}

// ---- losses ----

ad::Tensor word_alignment_loss(std::span<const WordAlignTerm> terms,
                               const ad::Tensor& align_projection) {
  ad::Tensor loss = ad::Tensor::scalar(0.0);
  for (const WordAlignTerm& term : terms) {
    ad::Tensor projected = ad::matmul(term.sememe_states, align_projection);
    ad::Tensor mean_proj = ad::mean_rows(projected);
    loss = ad::add(loss, ad::l2_norm_rows(ad::sub(term.word_state, mean_proj)));
  }
  return loss;
}

ad::Tensor relation_alignment_loss(const ad::Tensor& graph_batch,
                                   const ad::Tensor& encoder_batch) {
  require(graph_batch.defined() && graph_batch.rank() == 2,
          "relation_alignment_loss: empty batch");
  return ad::squared_error_mean(graph_batch, encoder_batch);
}

ContrastiveResult contrastive_loss(std::span<const ContrastiveGroup> groups,
                                   double tau,
                                   bool denominator_includes_positive) {
  require(tau > 0.0, "contrastive_loss: tau must be > 0");
  ContrastiveResult result;
  result.loss = ad::Tensor::scalar(0.0);
  const double inv_tau = 1.0 / tau;
  for (const ContrastiveGroup& group : groups) {
    require(group.positives.size() >= 2,
            "contrastive_loss: a relation needs >= 2 positives");
    require(!group.negatives.empty(),
            "contrastive_loss: a relation needs >= 1 negative");
    for (size_t a = 0; a < group.positives.size(); ++a) {
      // Stable log-sum-exp of the anchor's negative scores; shared across
      // this anchor's positives unless the positive joins the denominator.
      std::vector<ad::Tensor> neg_scores;
      double max_score = -std::numeric_limits<double>::infinity();
      for (const ad::Tensor& neg : group.negatives) {
        ad::Tensor s = ad::scale(ad::dot(group.positives[a], neg), inv_tau);
        max_score = std::max(max_score, s.item());
        neg_scores.push_back(std::move(s));
      }
      std::vector<ad::Tensor> pos_scores(group.positives.size());
      for (size_t p = 0; p < group.positives.size(); ++p) {
        if (p == a) continue;
        pos_scores[p] = ad::scale(
            ad::dot(group.positives[a], group.positives[p]), inv_tau);
        if (denominator_includes_positive)
          max_score = std::max(max_score, pos_scores[p].item());
      }
      auto lse_term = [&](const ad::Tensor& s) {
        return ad::exp(ad::add(s, ad::Tensor::scalar(-max_score)));
      };
      ad::Tensor neg_sum = ad::Tensor::scalar(0.0);
      for (const ad::Tensor& s : neg_scores)
        neg_sum = ad::add(neg_sum, lse_term(s));
      ad::Tensor shared_log_denom;
      if (!denominator_includes_positive)
        shared_log_denom =
            ad::add(ad::log(neg_sum), ad::Tensor::scalar(max_score));
      for (size_t p = 0; p < group.positives.size(); ++p) {
        if (p == a) continue;
        ad::Tensor log_denom = shared_log_denom;
        if (denominator_includes_positive)
          log_denom = ad::add(ad::log(ad::add(neg_sum, lse_term(pos_scores[p]))),
                              ad::Tensor::scalar(max_score));
        result.loss =
            ad::add(result.loss, ad::sub(log_denom, pos_scores[p]));
        ++result.pair_count;
      }
    }
  }
  return result;
}

ad::Tensor total_loss(const ad::Tensor& l1, const ad::Tensor& l2,
                      const ad::Tensor& l3, const LossToggles& toggles) {
  ad::Tensor total = ad::Tensor::scalar(0.0);
  if (toggles.use_l1) {
    require(l1.defined(), "total_loss: L1 enabled but not computed");
    total = ad::add(total, l1);
  }
  if (toggles.use_l2) {
    require(l2.defined(), "total_loss: L2 enabled but not computed");
    total = ad::add(total, l2);
  }
  if (toggles.use_l3) {
    require(l3.defined(), "total_loss: L3 enabled but not computed");
    total = ad::add(total, l3);
  }
  return total;
}

// ---- optimizer ----

AdamW::AdamW(std::vector<ad::Tensor> params, double learning_rate, double beta1,
             double beta2, double eps, double weight_decay)
    : params_(std::move(params)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  for (const ad::Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    ad::Tensor& p = params_[pi];
    auto& values = p.values_mut();
    const std::vector<double>* grad = p.has_grad() ? &p.grad() : nullptr;
    for (size_t i = 0; i < values.size(); ++i) {
      const double g = grad ? (*grad)[i] : 0.0;
      m_[pi][i] = beta1_ * m_[pi][i] + (1.0 - beta1_) * g;
      v_[pi][i] = beta2_ * v_[pi][i] + (1.0 - beta2_) * g * g;
      const double m_hat = m_[pi][i] / bc1;
      const double v_hat = v_[pi][i] / bc2;
      values[i] -= lr_ * weight_decay_ * values[i];
      values[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

void AdamW::zero_grad() {
  for (ad::Tensor& p : params_) p.zero_grad();
}

// ---- training loop ----

namespace {

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

std::vector<double> pair_rep(const RelationModel& model, GraphContext* context,
                             const WordPair& pair) {
  return forward_pair(model, context, pair.head, pair.tail)
      .mask_state.values();
}

}  // namespace

double validation_retrieval_accuracy(const RelationModel& model,
                                     GraphContext* context,
                                     const RelationDataset& data) {
  std::vector<std::vector<double>> centroids;
  std::vector<size_t> relation_of_centroid;
  for (size_t r = 0; r < data.relations.size(); ++r) {
    const RelationGroup& group = data.relations[r];
    if (group.train_positives.empty()) continue;
    std::vector<double> centroid(
        static_cast<size_t>(model.config.encoder_dim), 0.0);
    for (const WordPair& p : group.train_positives) {
      std::vector<double> rep = pair_rep(model, context, p);
      for (size_t i = 0; i < centroid.size(); ++i) centroid[i] += rep[i];
    }
    for (double& c : centroid)
      c /= static_cast<double>(group.train_positives.size());
    centroids.push_back(std::move(centroid));
    relation_of_centroid.push_back(r);
  }
  if (centroids.empty()) return 0.0;

  size_t correct = 0, total = 0;
  for (size_t r = 0; r < data.relations.size(); ++r) {
    for (const WordPair& p : data.relations[r].val_positives) {
      std::vector<double> rep = pair_rep(model, context, p);
      size_t best = 0;
      double best_score = -2.0;
      for (size_t c = 0; c < centroids.size(); ++c) {
        double s = cosine_sim(rep, centroids[c]);
        if (s > best_score) {
          best_score = s;
          best = c;
        }
      }
      ++total;
      if (relation_of_centroid[best] == r) ++correct;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) /
                                static_cast<double>(total);
}

TrainResult train(RelationModel& model, GraphContext* context,
                  const RelationDataset& data, const TrainConfig& config,
                  std::ostream* log) {
  config.validate();
  require(!data.relations.empty(), "train: empty dataset");
  for (const RelationGroup& g : data.relations) {
    require(g.train_positives.size() >= 2, "train: relation '", g.relation,
            "' has fewer than 2 training positives");
    require(!g.train_negatives.empty(), "train: relation '", g.relation,
            "' has no training negatives");
  }

  std::vector<ad::Tensor> params;
  for (auto& [name, tensor] : model.named_params()) params.push_back(tensor);
  AdamW optimizer(params, config.learning_rate, config.adam_beta1,
                  config.adam_beta2, config.adam_eps, config.weight_decay);

  LossToggles toggles{config.use_l1, config.use_l2, config.use_l3};
  Rng batch_rng(Rng::mix(config.seed, Rng::hash_string("batch-order")));
  TrainResult result;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<size_t> order(data.relations.size());
    std::iota(order.begin(), order.end(), 0);
    batch_rng.shuffle(order);

    double sum_l1 = 0.0, sum_l2 = 0.0, sum_l3 = 0.0, sum_total = 0.0;
    size_t batches = 0;

    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(config.batch_relations)) {
      const size_t end = std::min(
          order.size(), begin + static_cast<size_t>(config.batch_relations));
      const std::string batch_id =
          "epoch " + std::to_string(epoch) + " batch " +
          std::to_string(begin / static_cast<size_t>(config.batch_relations));

      optimizer.zero_grad();
      ad::Tensor l1, l2, l3;
      try {
        std::vector<ContrastiveGroup> groups;
        std::vector<WordAlignTerm> align_terms;
        std::vector<ad::Tensor> graph_vecs, encoder_vecs;
        const StopGradientSide stop_side = config.stop_gradient();

        for (size_t gi = begin; gi < end; ++gi) {
          const RelationGroup& group = data.relations[order[gi]];
          ContrastiveGroup cg;
          auto run_pair = [&](const WordPair& pair) {
            PairForward fwd =
                forward_pair(model, context, pair.head, pair.tail);
            if (!fwd.degenerate) {
              if (toggles.use_l2) {
                ad::Tensor g = *fwd.graph_state;
                ad::Tensor m = fwd.mask_state;
                if (stop_side == StopGradientSide::kGraph) g = g.detach();
                if (stop_side == StopGradientSide::kEncoder) m = m.detach();
                graph_vecs.push_back(g);
                encoder_vecs.push_back(m);
              }
              if (toggles.use_l1)
                align_terms.insert(align_terms.end(), fwd.align_terms.begin(),
                                   fwd.align_terms.end());
            }
            // Contrastive geometry matches the cosine metric used at
            // inference (unit vectors). The x vectors come from the graph
            // side where it exists: the GAT is shared across all pairs, so
            // the grouping it learns carries to unseen pairs, and L2 pulls
            // h_m along. Degenerate pairs fall back to h_m.
            return ad::normalize_rows(
                fwd.graph_state ? *fwd.graph_state : fwd.mask_state);
          };
          for (const WordPair& p : group.train_positives)
            cg.positives.push_back(run_pair(p));
          for (const WordPair& p : group.train_negatives)
            cg.negatives.push_back(run_pair(p));
          groups.push_back(std::move(cg));
        }

        if (toggles.use_l1)
          l1 = word_alignment_loss(align_terms, model.align_projection);
        if (toggles.use_l2)
          l2 = graph_vecs.empty()
                   ? ad::Tensor::scalar(0.0)
                   : relation_alignment_loss(ad::concat_rows(graph_vecs),
                                             ad::concat_rows(encoder_vecs));
        if (toggles.use_l3)
          l3 = contrastive_loss(groups, config.tau,
                                config.denominator_includes_positive)
                   .loss;

        ad::Tensor total = total_loss(l1, l2, l3, toggles);
        require(std::isfinite(total.item()), "non-finite loss");
        ad::backward(total);
        optimizer.step();

        sum_l1 += toggles.use_l1 ? l1.item() : 0.0;
        sum_l2 += toggles.use_l2 ? l2.item() : 0.0;
        sum_l3 += toggles.use_l3 ? l3.item() : 0.0;
        sum_total += total.item();
        ++batches;
        ++result.steps;
      } catch (const Error& e) {
        const std::string what = e.what();
        const char* label = what.find("non-finite") != std::string::npos
                                ? "diverged"
                                : "failed";
        fail("train: ", label, " at ", batch_id, ": ", what);
      }
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    const double inv = batches ? 1.0 / static_cast<double>(batches) : 0.0;
    metrics.l1 = sum_l1 * inv;
    metrics.l2 = sum_l2 * inv;
    metrics.l3 = sum_l3 * inv;
    metrics.total = sum_total * inv;
    try {
      metrics.val_acc = validation_retrieval_accuracy(model, context, data);
    } catch (const Error& e) {
      // Parameters went non-finite on the last update of this epoch.
      fail("train: diverged at epoch ", epoch, " validation: ", e.what());
    }
    result.epochs.push_back(metrics);
    if (log) {
      (*log) << "epoch " << epoch << " total " << metrics.total << " val_acc "
             << metrics.val_acc << "\n";
    }
  }
  return result;
}

}  // namespace sememelm
