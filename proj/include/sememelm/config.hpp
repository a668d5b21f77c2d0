#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace sememelm {

enum class StopGradientSide { kNone, kGraph, kEncoder };
enum class InferenceRep { kMask, kGraph, kConcat };

// Every knob of the training and inference pipeline. Defaults are the
// desk-scale configuration; a flat key=value file and CLI flags override.
struct TrainConfig {
  uint64_t seed = 1;
  int epochs = 50;
  int batch_relations = 4;
  double tau = 0.5;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool use_l1 = true;
  bool use_l2 = true;
  bool use_l3 = true;
  int encoder_dim = 64;  // D_lm
  int graph_dim = 300;   // d
  int layers = 2;        // graph updating steps L
  int heads = 1;         // single-head attention unless raised
  double leaky_slope = 0.2;
  int max_len = 64;
  std::string sememe_mode = "intersection";  // or "union"
  int hops = 0;
  bool denominator_includes_positive = false;
  std::string stop_gradient_side = "none";  // none|graph|encoder
  std::string inference_rep = "hm";         // hm|hg|concat

  StopGradientSide stop_gradient() const;
  InferenceRep inference() const;
  bool intersection_mode() const { return sememe_mode == "intersection"; }
  void validate() const;
};

// key = value per line; '#' starts a comment. Unknown keys are errors.
TrainConfig parse_config_file(const std::string& path, TrainConfig base = {});
void apply_config_entry(TrainConfig& config, const std::string& key,
                        const std::string& value);

nlohmann::ordered_json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);
std::string config_to_text(const TrainConfig& config);

}  // namespace sememelm
