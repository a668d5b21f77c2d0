#include "sememelm/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "sememelm/error.hpp"

namespace sememelm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json tensor_to_json(const ad::Tensor& t) {
  ordered_json j;
  j["shape"] = t.shape();
  j["data"] = t.values();
  return j;
}

ad::Tensor tensor_from_json(const json& j, const char* name) {
  require(j.contains("shape") && j.contains("data"), "checkpoint: section '",
          name, "' is missing shape/data");
  ad::Shape shape = j.at("shape").get<ad::Shape>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  require(data.size() == ad::shape_numel(shape), "checkpoint: '", name,
          "': data length ", data.size(), " does not match shape ",
          ad::shape_str(shape));
  return ad::Tensor::parameter(std::move(shape), std::move(data));
}

}  // namespace

ordered_json checkpoint_to_json(const RelationModel& model) {
  ordered_json j;
  j["format_version"] = kCheckpointVersion;
  j["seed"] = model.seed;
  j["config"] = config_to_json(model.config);

  ordered_json gat_section;
  for (size_t l = 0; l < model.graph_encoder.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    gat_section[prefix + "value"] =
        tensor_to_json(model.graph_encoder.layers[l].value);
    gat_section[prefix + "query"] =
        tensor_to_json(model.graph_encoder.layers[l].query);
    gat_section[prefix + "key"] =
        tensor_to_json(model.graph_encoder.layers[l].key);
  }
  gat_section["virtual_seed"] = tensor_to_json(model.graph_encoder.virtual_seed);

  ordered_json textenc_section;
  textenc_section["vocabulary"] = model.vocab.tokens;
  textenc_section["token_embeddings"] =
      tensor_to_json(model.encoder.token_embeddings);
  textenc_section["position_embeddings"] =
      tensor_to_json(model.encoder.position_embeddings);
  textenc_section["mixer_w1"] = tensor_to_json(model.encoder.mixer_w1);
  textenc_section["mixer_b1"] = tensor_to_json(model.encoder.mixer_b1);
  textenc_section["mixer_w2"] = tensor_to_json(model.encoder.mixer_w2);
  textenc_section["mixer_b2"] = tensor_to_json(model.encoder.mixer_b2);

  ordered_json proj_section;
  proj_section["relation"] = tensor_to_json(model.graph_encoder.projection);
  proj_section["word_align"] = tensor_to_json(model.align_projection);

  ordered_json sections;
  sections["gat"] = std::move(gat_section);
  sections["textenc"] = std::move(textenc_section);
  sections["projections"] = std::move(proj_section);
  j["sections"] = std::move(sections);
  return j;
}

RelationModel checkpoint_from_json(const json& j) {
  require(j.contains("format_version"), "checkpoint: missing format_version");
  const int version = j.at("format_version").get<int>();
  require(version >= 1 && version <= kCheckpointVersion,
          "checkpoint: unsupported format_version ", version,
          " (this build reads up to ", kCheckpointVersion, ")");

  RelationModel m;
  m.config = config_from_json(j.at("config"));
  m.config.validate();
  m.seed = j.at("seed").get<uint64_t>();

  const json& sections = j.at("sections");
  const json& gat_section = sections.at("gat");
  const json& textenc_section = sections.at("textenc");
  const json& proj_section = sections.at("projections");

  m.vocab.tokens = textenc_section.at("vocabulary").get<std::vector<std::string>>();
  for (uint32_t i = 0; i < m.vocab.tokens.size(); ++i)
    m.vocab.ids.emplace(m.vocab.tokens[i], i);
  auto mask_it = m.vocab.ids.find(textenc::kMaskToken);
  auto unk_it = m.vocab.ids.find(textenc::kUnkToken);
  require(mask_it != m.vocab.ids.end() && unk_it != m.vocab.ids.end(),
          "checkpoint: vocabulary lacks mask/unk tokens");
  m.vocab.mask_id = mask_it->second;
  m.vocab.unk_id = unk_it->second;

  m.encoder.dim = static_cast<size_t>(m.config.encoder_dim);
  m.encoder.max_len = static_cast<size_t>(m.config.max_len);
  m.encoder.leaky_slope = m.config.leaky_slope;
  m.encoder.token_embeddings =
      tensor_from_json(textenc_section.at("token_embeddings"), "token_embeddings");
  m.encoder.position_embeddings = tensor_from_json(
      textenc_section.at("position_embeddings"), "position_embeddings");
  m.encoder.mixer_w1 = tensor_from_json(textenc_section.at("mixer_w1"), "mixer_w1");
  m.encoder.mixer_b1 = tensor_from_json(textenc_section.at("mixer_b1"), "mixer_b1");
  m.encoder.mixer_w2 = tensor_from_json(textenc_section.at("mixer_w2"), "mixer_w2");
  m.encoder.mixer_b2 = tensor_from_json(textenc_section.at("mixer_b2"), "mixer_b2");
  require(m.encoder.token_embeddings.shape()[0] == m.vocab.size(),
          "checkpoint: token embedding rows != vocabulary size");

  m.graph_encoder.graph_dim = static_cast<size_t>(m.config.graph_dim);
  m.graph_encoder.encoder_dim = static_cast<size_t>(m.config.encoder_dim);
  m.graph_encoder.leaky_slope = m.config.leaky_slope;
  for (int l = 0; l < m.config.layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    gat::LayerParams layer;
    layer.value = tensor_from_json(gat_section.at(prefix + "value"), "gat value");
    layer.query = tensor_from_json(gat_section.at(prefix + "query"), "gat query");
    layer.key = tensor_from_json(gat_section.at(prefix + "key"), "gat key");
    m.graph_encoder.layers.push_back(std::move(layer));
  }
  m.graph_encoder.virtual_seed =
      tensor_from_json(gat_section.at("virtual_seed"), "virtual_seed");
  m.graph_encoder.projection =
      tensor_from_json(proj_section.at("relation"), "projection");
  m.align_projection =
      tensor_from_json(proj_section.at("word_align"), "align_projection");
  return m;
}

void save_checkpoint(const RelationModel& model, const std::string& path) {
  write_file(path, checkpoint_to_json(model).dump() + "\n");
}

namespace {
constexpr char kBinaryMagic[8] = {'S', 'M', 'L', 'M', 'C', 'K', 'P', '1'};
}

void save_checkpoint_binary(const RelationModel& model,
                            const std::string& path) {
  std::vector<uint8_t> cbor = json::to_cbor(checkpoint_to_json(model));
  std::string out(kBinaryMagic, sizeof kBinaryMagic);
  out.append(reinterpret_cast<const char*>(cbor.data()), cbor.size());
  write_file(path, out);
}

RelationModel load_checkpoint(const std::string& path) {
  std::string raw = read_file(path);
  json j;
  if (raw.size() >= sizeof kBinaryMagic &&
      raw.compare(0, sizeof kBinaryMagic, kBinaryMagic, sizeof kBinaryMagic) ==
          0) {
    try {
      j = json::from_cbor(raw.begin() + sizeof kBinaryMagic, raw.end());
    } catch (const json::exception& e) {
      fail("checkpoint '", path, "': malformed binary payload: ", e.what());
    }
  } else {
    try {
      j = json::parse(raw);
    } catch (const json::exception& e) {
      fail("checkpoint '", path, "': malformed JSON: ", e.what());
    }
  }
  return checkpoint_from_json(j);
}

// ---- graph bundle ----

ordered_json bundle_to_json(const SememeInventory& inventory,
                            const Lexicon& lexicon,
                            const std::vector<RelationTriple>& triples) {
  ordered_json j;
  j["format_version"] = kBundleVersion;
  ordered_json sememes = ordered_json::array();
  for (size_t i = 0; i < inventory.sememe_count(); ++i)
    sememes.push_back(inventory.sememe_label(static_cast<SememeId>(i)));
  j["sememes"] = std::move(sememes);
  ordered_json relations = ordered_json::array();
  for (size_t i = 0; i < inventory.relation_type_count(); ++i)
    relations.push_back(inventory.relation_label(static_cast<RelationTypeId>(i)));
  j["relation_types"] = std::move(relations);
  ordered_json words = ordered_json::array();
  for (const WordEntry& e : lexicon.entries) {
    ordered_json w;
    w["word"] = e.word;
    w["senses"] = e.senses;
    words.push_back(std::move(w));
  }
  j["words"] = std::move(words);
  ordered_json ts = ordered_json::array();
  for (const RelationTriple& t : triples)
    ts.push_back({t.head, t.relation, t.tail});
  j["triples"] = std::move(ts);
  return j;
}

void save_bundle(const SememeInventory& inventory, const Lexicon& lexicon,
                 const std::vector<RelationTriple>& triples,
                 const std::string& path) {
  write_file(path, bundle_to_json(inventory, lexicon, triples).dump() + "\n");
}

void load_bundle_into(GraphContext& context, const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail("bundle '", path, "': malformed JSON: ", e.what());
  }
  require(j.contains("format_version"), "bundle: missing format_version");
  const int version = j.at("format_version").get<int>();
  require(version >= 1 && version <= kBundleVersion,
          "bundle: unsupported format_version ", version);

  for (const auto& label : j.at("sememes"))
    context.inventory.intern_sememe(label.get<std::string>());
  for (const auto& label : j.at("relation_types"))
    context.inventory.intern_relation(label.get<std::string>());
  for (const auto& w : j.at("words")) {
    WordEntry entry;
    entry.word = w.at("word").get<std::string>();
    entry.senses = w.at("senses").get<std::vector<std::vector<SememeId>>>();
    for (const auto& sense : entry.senses) {
      require(!sense.empty(), "bundle: empty sense for word '", entry.word, "'");
      for (SememeId id : sense)
        require(id < context.inventory.sememe_count(),
                "bundle: sememe id out of range in word '", entry.word, "'");
    }
    require(!entry.senses.empty(), "bundle: word '", entry.word,
            "' has no senses");
    context.lexicon.add(std::move(entry));
  }
  for (const auto& t : j.at("triples")) {
    require(t.is_array() && t.size() == 3, "bundle: triple must be [h, r, t]");
    RelationTriple triple{t[0].get<SememeId>(), t[1].get<RelationTypeId>(),
                          t[2].get<SememeId>()};
    require(triple.head < context.inventory.sememe_count() &&
                triple.tail < context.inventory.sememe_count() &&
                triple.relation < context.inventory.relation_type_count(),
            "bundle: triple id out of range");
    context.triples.push_back(triple);
  }
}

// ---- small file helpers ----

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '", path, "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write '", path, "'");
  out << contents;
  require(out.good(), "failed writing '", path, "'");
}

}  // namespace sememelm
