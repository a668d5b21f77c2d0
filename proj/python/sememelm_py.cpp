// Python bindings over the core library: graph building and inspection,
// training, checkpoint loading, pair representations and analogy evaluation.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "sememelm/checkpoint.hpp"
#include "sememelm/error.hpp"
#include "sememelm/evalkit.hpp"
#include "sememelm/gradcheck_fixture.hpp"
#include "sememelm/synth.hpp"
#include "sememelm/training.hpp"

namespace py = pybind11;
using namespace sememelm;

namespace {

py::object json_to_py(const nlohmann::ordered_json& j) {
  py::module json_mod = py::module::import("json");
  return json_mod.attr("loads")(j.dump());
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), what, ": cannot open '", path, "'");
  return in;
}

struct PyBundle {
  std::unique_ptr<GraphContext> context = std::make_unique<GraphContext>();

  static PyBundle build(const std::string& lexicon_path,
                        const std::string& triples_path) {
    PyBundle b;
    std::ifstream lex = open_input(lexicon_path, "lexicon");
    b.context->lexicon = parse_lexicon(lex, b.context->inventory);
    std::ifstream tri = open_input(triples_path, "triples");
    b.context->triples = parse_relation_triples(tri, b.context->inventory);
    b.context->graph = build_graph(b.context->inventory, b.context->triples);
    return b;
  }

  static PyBundle load(const std::string& path) {
    PyBundle b;
    load_bundle_into(*b.context, path);
    b.context->graph = build_graph(b.context->inventory, b.context->triples);
    return b;
  }

  void save(const std::string& path) const {
    save_bundle(context->inventory, context->lexicon, context->triples, path);
  }

  size_t node_count() const { return context->graph.node_count; }
  size_t edge_count() const { return context->graph.edges.size(); }
  size_t relation_type_count() const {
    return context->inventory.relation_type_count();
  }
  size_t word_count() const { return context->lexicon.entries.size(); }

  std::vector<std::string> sememes_of(const std::string& word,
                                      const std::string& mode) const {
    const WordEntry* entry = context->lexicon.find(word);
    require(entry != nullptr, "unknown word '", word, "'");
    auto ids = sememe_set(*entry, mode == "union" ? SememeSetMode::kUnion
                                                  : SememeSetMode::kIntersection);
    std::vector<std::string> out;
    for (SememeId id : ids) out.push_back(context->inventory.sememe_label(id));
    return out;
  }

  py::object inspect_pair(const std::string& head, const std::string& tail,
                          int hops) const {
    nlohmann::ordered_json out;
    std::vector<SememeId> head_set, tail_set;
    if (const WordEntry* e = context->lexicon.find(head))
      head_set = sememe_set(*e);
    if (const WordEntry* e = context->lexicon.find(tail))
      tail_set = sememe_set(*e);
    if (head_set.empty() || tail_set.empty()) {
      out["nodes"] = nlohmann::ordered_json::array();
      out["edges"] = nlohmann::ordered_json::array();
      out["virtual_index"] = nullptr;
      out["head_members"] = nlohmann::ordered_json::array();
      out["tail_members"] = nlohmann::ordered_json::array();
      out["degenerate"] = true;
      return json_to_py(out);
    }
    PairSubgraph sub =
        extract_subgraph(context->graph, head_set, tail_set, hops);
    sub = add_virtual_node(std::move(sub),
                           virtual_relation_id(context->inventory));
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (SememeId id : sub.local_nodes)
      nodes.push_back(id == kVirtualNodeId
                          ? std::string("<virtual>")
                          : context->inventory.sememe_label(id));
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const PairSubgraph::LocalEdge& e : sub.local_edges) {
      std::string rel = e.relation < context->inventory.relation_type_count()
                            ? context->inventory.relation_label(e.relation)
                            : std::string("<virtual>");
      edges.push_back({e.src, rel, e.dst});
    }
    out["nodes"] = std::move(nodes);
    out["edges"] = std::move(edges);
    out["virtual_index"] = *sub.virtual_index;
    out["head_members"] = sub.head_members;
    out["tail_members"] = sub.tail_members;
    out["degenerate"] = false;
    return json_to_py(out);
  }
};

TrainConfig resolve_config(const std::string& config_path,
                           const py::dict& overrides) {
  TrainConfig config;
  if (!config_path.empty()) config = parse_config_file(config_path, config);
  for (auto item : overrides) {
    apply_config_entry(config, py::str(item.first),
                       py::str(item.second));
  }
  config.validate();
  return config;
}

struct PyModel {
  RelationModel model;
  std::unique_ptr<GraphContext> context;  // null on the encoder-only path

  static PyModel load(const std::string& checkpoint_path,
                      const std::string& graph_path,
                      const std::string& embeddings_path) {
    PyModel m{load_checkpoint(checkpoint_path), nullptr};
    if (!graph_path.empty()) {
      require(!embeddings_path.empty(), "loading a graph needs embeddings");
      m.context = std::make_unique<GraphContext>();
      load_bundle_into(*m.context, graph_path);
      std::ifstream emb = open_input(embeddings_path, "embeddings");
      m.context->embeddings = load_embeddings(emb);
      m.context->finalize(m.model.seed);
    }
    return m;
  }

  std::vector<double> representation(const std::string& head,
                                     const std::string& tail) const {
    return relation_representation(model, context.get(), {head, tail});
  }

  py::tuple answer(const std::pair<std::string, std::string>& stem,
                   const std::vector<std::pair<std::string, std::string>>&
                       choices) const {
    AnalogyQuestion q;
    q.stem = {stem.first, stem.second};
    for (const auto& c : choices) q.choices.push_back({c.first, c.second});
    q.answer = 0;
    ChoiceResult r = answer_question(model, context.get(), q);
    return py::make_tuple(r.chosen, r.scores);
  }

  py::object evaluate_file(const std::string& dataset_path) const {
    std::ifstream ds = open_input(dataset_path, "dataset");
    std::vector<AnalogyQuestion> questions = parse_analogy_dataset(ds);
    EvalReport report = evaluate(model, context.get(), questions);
    return json_to_py(report_to_json(
        report, std::filesystem::path(dataset_path).filename().string()));
  }
};

py::list train_files(const std::string& graph_path,
                     const std::string& relations_path,
                     const std::string& embeddings_path,
                     const std::string& out_checkpoint,
                     const std::string& config_path,
                     const py::dict& overrides) {
  TrainConfig config = resolve_config(config_path, overrides);
  auto context = std::make_unique<GraphContext>();
  load_bundle_into(*context, graph_path);
  std::ifstream emb = open_input(embeddings_path, "embeddings");
  context->embeddings = load_embeddings(emb);
  context->finalize(config.seed);
  std::ifstream rel = open_input(relations_path, "relations");
  RelationDataset data = load_relation_data(rel, config.seed);
  RelationModel model = RelationModel::init(config, context->lexicon);
  TrainResult result = train(model, context.get(), data, config, nullptr);
  save_checkpoint(model, out_checkpoint);
  py::list metrics;
  for (const EpochMetrics& m : result.epochs) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["L1"] = m.l1;
    d["L2"] = m.l2;
    d["L3"] = m.l3;
    d["total"] = m.total;
    d["val_acc"] = m.val_acc;
    metrics.append(d);
  }
  return metrics;
}

}  // namespace

PYBIND11_MODULE(_sememelm, m) {
  m.doc() = "context-free relation representations over a sememe graph";

  py::register_exception<Error>(m, "SememelmError");

  m.def("render_template", &textenc::render_template, py::arg("head"),
        py::arg("tail"));
  m.def(
      "tokenize",
      [](const std::string& sentence, size_t max_tokens) {
        textenc::TokenizedPrompt p = textenc::tokenize(sentence, max_tokens);
        py::dict d;
        d["tokens"] = p.tokens;
        d["mask_index"] = p.mask_index;
        d["head_span"] = py::make_tuple(p.head_span.first, p.head_span.second);
        d["tail_span"] = py::make_tuple(p.tail_span.first, p.tail_span.second);
        return d;
      },
      py::arg("sentence"), py::arg("max_tokens") = textenc::kDefaultMaxTokens);

  py::class_<PyBundle>(m, "GraphBundle")
      .def_static("build", &PyBundle::build, py::arg("lexicon"),
                  py::arg("triples"))
      .def_static("load", &PyBundle::load, py::arg("path"))
      .def("save", &PyBundle::save, py::arg("path"))
      .def_property_readonly("node_count", &PyBundle::node_count)
      .def_property_readonly("edge_count", &PyBundle::edge_count)
      .def_property_readonly("relation_type_count",
                             &PyBundle::relation_type_count)
      .def_property_readonly("word_count", &PyBundle::word_count)
      .def("sememe_set", &PyBundle::sememes_of, py::arg("word"),
           py::arg("mode") = "intersection")
      .def("inspect_pair", &PyBundle::inspect_pair, py::arg("head"),
           py::arg("tail"), py::arg("hops") = 0);

  py::class_<PyModel>(m, "Model")
      .def_static("load", &PyModel::load, py::arg("checkpoint"),
                  py::arg("graph") = "", py::arg("embeddings") = "")
      .def("representation", &PyModel::representation, py::arg("head"),
           py::arg("tail"))
      .def("answer", &PyModel::answer, py::arg("stem"), py::arg("choices"))
      .def("evaluate", &PyModel::evaluate_file, py::arg("dataset"));

  m.def("train", &train_files, py::arg("graph"), py::arg("relations"),
        py::arg("embeddings"), py::arg("out"), py::arg("config") = "",
        py::arg("overrides") = py::dict());

  m.def(
      "synth",
      [](const std::string& out_dir, uint64_t seed, int questions) {
        SynthSpec spec;
        spec.seed = seed;
        spec.questions = questions;
        SynthSummary s = generate_fixture(spec, out_dir);
        py::dict d;
        d["sememes"] = s.sememes;
        d["relation_types"] = s.relation_types;
        d["words"] = s.words;
        d["training_pairs"] = s.training_pairs;
        d["questions"] = s.questions;
        return d;
      },
      py::arg("out_dir"), py::arg("seed") = 1, py::arg("questions") = 200);

  m.def(
      "gradcheck",
      [](uint64_t seed, int nodes, int dim) {
        return run_gradcheck_fixture(seed, nodes, dim).max_rel_err;
      },
      py::arg("seed") = 7, py::arg("nodes") = 5, py::arg("dim") = 8);

  m.attr("__version__") = "0.1.0";
}
