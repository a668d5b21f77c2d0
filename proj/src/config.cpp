#include "sememelm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sememelm/error.hpp"

namespace sememelm {

StopGradientSide TrainConfig::stop_gradient() const {
  if (stop_gradient_side == "none") return StopGradientSide::kNone;
  if (stop_gradient_side == "graph") return StopGradientSide::kGraph;
  if (stop_gradient_side == "encoder") return StopGradientSide::kEncoder;
  fail("config: stop_gradient_side must be none|graph|encoder, got '",
       stop_gradient_side, "'");
}

InferenceRep TrainConfig::inference() const {
  if (inference_rep == "hm") return InferenceRep::kMask;
  if (inference_rep == "hg") return InferenceRep::kGraph;
  if (inference_rep == "concat") return InferenceRep::kConcat;
  fail("config: inference_rep must be hm|hg|concat, got '", inference_rep, "'");
}

void TrainConfig::validate() const {
  require(tau > 0.0, "config: tau must be > 0");
  require(learning_rate > 0.0, "config: learning_rate must be > 0");
  require(weight_decay >= 0.0, "config: weight_decay must be >= 0");
  require(epochs >= 0, "config: epochs must be >= 0");
  require(batch_relations > 0, "config: batch_relations must be > 0");
  require(encoder_dim > 0 && graph_dim > 0, "config: dims must be > 0");
  require(layers > 0, "config: layers must be > 0");
  require(heads == 1, "config: only single-head attention is implemented");
  require(max_len >= 11, "config: max_len must fit the template (>= 11)");
  require(hops >= 0 && hops <= 1, "config: hops must be 0 or 1");
  require(sememe_mode == "intersection" || sememe_mode == "union",
          "config: sememe_mode must be intersection|union");
  stop_gradient();
  inference();
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail("config: key '", key, "' expects a boolean, got '", v, "'");
}

double parse_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  require(end == v.c_str() + v.size() && !v.empty(), "config: key '", key,
          "' expects a number, got '", v, "'");
  return d;
}

int64_t parse_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  long long i = std::strtoll(v.c_str(), &end, 10);
  require(end == v.c_str() + v.size() && !v.empty(), "config: key '", key,
          "' expects an integer, got '", v, "'");
  return i;
}

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_entry(TrainConfig& c, const std::string& key,
                        const std::string& value) {
  if (key == "seed") c.seed = static_cast<uint64_t>(parse_int(value, key));
  else if (key == "epochs") c.epochs = static_cast<int>(parse_int(value, key));
  else if (key == "batch_relations")
    c.batch_relations = static_cast<int>(parse_int(value, key));
  else if (key == "tau") c.tau = parse_double(value, key);
  else if (key == "learning_rate") c.learning_rate = parse_double(value, key);
  else if (key == "weight_decay") c.weight_decay = parse_double(value, key);
  else if (key == "adam_beta1") c.adam_beta1 = parse_double(value, key);
  else if (key == "adam_beta2") c.adam_beta2 = parse_double(value, key);
  else if (key == "adam_eps") c.adam_eps = parse_double(value, key);
  else if (key == "use_l1") c.use_l1 = parse_bool(value, key);
  else if (key == "use_l2") c.use_l2 = parse_bool(value, key);
  else if (key == "use_l3") c.use_l3 = parse_bool(value, key);
  else if (key == "encoder_dim")
    c.encoder_dim = static_cast<int>(parse_int(value, key));
  else if (key == "graph_dim")
    c.graph_dim = static_cast<int>(parse_int(value, key));
  else if (key == "layers") c.layers = static_cast<int>(parse_int(value, key));
  else if (key == "heads") c.heads = static_cast<int>(parse_int(value, key));
  else if (key == "leaky_slope") c.leaky_slope = parse_double(value, key);
  else if (key == "max_len") c.max_len = static_cast<int>(parse_int(value, key));
  else if (key == "sememe_mode") c.sememe_mode = value;
  else if (key == "hops") c.hops = static_cast<int>(parse_int(value, key));
  else if (key == "denominator_includes_positive")
    c.denominator_includes_positive = parse_bool(value, key);
  else if (key == "stop_gradient_side") c.stop_gradient_side = value;
  else if (key == "inference_rep") c.inference_rep = value;
  else fail("config: unknown key '", key, "'");
}

TrainConfig parse_config_file(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '", path, "'");
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    require(eq != std::string::npos, "config line ", line_no,
            ": expected key = value");
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    require(!key.empty(), "config line ", line_no, ": empty key");
    try {
      apply_config_entry(base, key, value);
    } catch (const Error& e) {
      fail("config line ", line_no, ": ", e.what());
    }
  }
  return base;
}

nlohmann::ordered_json config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_relations"] = c.batch_relations;
  j["tau"] = c.tau;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["use_l1"] = c.use_l1;
  j["use_l2"] = c.use_l2;
  j["use_l3"] = c.use_l3;
  j["encoder_dim"] = c.encoder_dim;
  j["graph_dim"] = c.graph_dim;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["leaky_slope"] = c.leaky_slope;
  j["max_len"] = c.max_len;
  j["sememe_mode"] = c.sememe_mode;
  j["hops"] = c.hops;
  j["denominator_includes_positive"] = c.denominator_includes_positive;
  j["stop_gradient_side"] = c.stop_gradient_side;
  j["inference_rep"] = c.inference_rep;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.seed = j.at("seed").get<uint64_t>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_relations = j.at("batch_relations").get<int>();
  c.tau = j.at("tau").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.use_l1 = j.at("use_l1").get<bool>();
  c.use_l2 = j.at("use_l2").get<bool>();
  c.use_l3 = j.at("use_l3").get<bool>();
  c.encoder_dim = j.at("encoder_dim").get<int>();
  c.graph_dim = j.at("graph_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.max_len = j.at("max_len").get<int>();
  c.sememe_mode = j.at("sememe_mode").get<std::string>();
  c.hops = j.at("hops").get<int>();
  c.denominator_includes_positive =
      j.at("denominator_includes_positive").get<bool>();
  c.stop_gradient_side = j.at("stop_gradient_side").get<std::string>();
  c.inference_rep = j.at("inference_rep").get<std::string>();
  return c;
}

std::string config_to_text(const TrainConfig& c) {
  std::ostringstream os;
  const nlohmann::ordered_json j = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    os << key << " = ";
    if (value.is_string()) os << value.get<std::string>();
    else os << value.dump();
    os << "\n";
  }
  return os.str();
}

}  // namespace sememelm
