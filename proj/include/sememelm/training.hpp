#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sememelm/autodiff.hpp"
#include "sememelm/model.hpp"

namespace sememelm {

struct WordPair {
  std::string head;
  std::string tail;
  bool operator==(const WordPair&) const = default;
};

// Per relation: top-10 scored pairs become positives, bottom-10 negatives,
// each split 80/20 into train/validation by a seeded shuffle.
struct RelationGroup {
  std::string relation;
  std::vector<WordPair> train_positives;
  std::vector<WordPair> val_positives;
  std::vector<WordPair> train_negatives;
  std::vector<WordPair> val_negatives;
};

struct RelationDataset {
  std::vector<RelationGroup> relations;
};

// JSONL: {"relation": str, "pairs": [{"head", "tail", "score"}, ...]}.
RelationDataset load_relation_data(std::istream& in, uint64_t seed);

struct LossToggles {
  bool use_l1 = true;
  bool use_l2 = true;
  bool use_l3 = true;
};

// L1: sum over word occurrences of || h_w - mean_s(P h_s) ||2.
ad::Tensor word_alignment_loss(std::span<const WordAlignTerm> terms,
                               const ad::Tensor& align_projection);

// L2: MSE between stacked graph-side and encoder-side relation vectors,
// mean over batch rows and coordinates.
ad::Tensor relation_alignment_loss(const ad::Tensor& graph_batch,
                                   const ad::Tensor& encoder_batch);

struct ContrastiveGroup {
  std::vector<ad::Tensor> positives;  // the x_a / x_p vectors
  std::vector<ad::Tensor> negatives;  // the x_n vectors
};

struct ContrastiveResult {
  ad::Tensor loss;
  size_t pair_count = 0;  // anchors-positive pairs summed, a != p
};

// Sum over relations and ordered (a, p) pairs, a != p, of
// -log(exp(a.p / tau) / sum_n exp(a.n / tau)). The denominator covers the
// negatives only, so the value may be negative; setting
// denominator_includes_positive adds the a.p term to the denominator.
ContrastiveResult contrastive_loss(std::span<const ContrastiveGroup> groups,
                                   double tau,
                                   bool denominator_includes_positive = false);

// Sum of the enabled components, in L1, L2, L3 order.
ad::Tensor total_loss(const ad::Tensor& l1, const ad::Tensor& l2,
                      const ad::Tensor& l3, const LossToggles& toggles);

// Decoupled weight decay + adaptive moments. Parameters with no accumulated
// gradient still receive the decay term.
class AdamW {
 public:
  AdamW(std::vector<ad::Tensor> params, double learning_rate, double beta1,
        double beta2, double eps, double weight_decay);

  void step();
  void zero_grad();

 private:
  std::vector<ad::Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  int64_t t_ = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double total = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  int64_t steps = 0;
};

// Deterministic under a fixed seed: batch order, init and updates reproduce
// bitwise. Degenerate pairs contribute to L3 only. Non-finite losses abort
// with the offending batch id.
TrainResult train(RelationModel& model, GraphContext* context,
                  const RelationDataset& data, const TrainConfig& config,
                  std::ostream* log = nullptr);

// Nearest-centroid retrieval over validation positives (centroids from the
// train positives of each relation); the val_acc column of the metrics.
double validation_retrieval_accuracy(const RelationModel& model,
                                     GraphContext* context,
                                     const RelationDataset& data);

}  // namespace sememelm
