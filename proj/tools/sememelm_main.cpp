// Command-line front end: build-graph, inspect-pair, train, eval, embed,
// gradcheck and synth subcommands over the sememelm library.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sememelm/checkpoint.hpp"
#include "sememelm/config.hpp"
#include "sememelm/error.hpp"
#include "sememelm/evalkit.hpp"
#include "sememelm/gradcheck_fixture.hpp"
#include "sememelm/synth.hpp"
#include "sememelm/training.hpp"

namespace {

using namespace sememelm;
using nlohmann::ordered_json;

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), what, ": cannot open '", path, "'");
  return in;
}

void load_graph_side(GraphContext& context, const std::string& bundle_path,
                     const std::string& embeddings_path, uint64_t seed) {
  load_bundle_into(context, bundle_path);
  std::ifstream emb = open_input(embeddings_path, "embeddings");
  context.embeddings = load_embeddings(emb);
  context.finalize(seed);
}

// Config resolution order: defaults < file < CLI flags < SEMEMELM_SEED.
struct ConfigCli {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--set", overrides,
                    "override a config entry, e.g. --set epochs=10");
  }

  TrainConfig resolve() const {
    TrainConfig config;
    if (!config_path.empty()) config = parse_config_file(config_path, config);
    for (const std::string& kv : overrides) {
      size_t eq = kv.find('=');
      require(eq != std::string::npos, "--set expects key=value, got '", kv,
              "'");
      apply_config_entry(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (const char* env = std::getenv("SEMEMELM_SEED")) {
      apply_config_entry(config, "seed", env);
    }
    config.validate();
    return config;
  }
};

int cmd_build_graph(const std::string& lexicon_path,
                    const std::string& triples_path,
                    const std::string& out_path) {
  SememeInventory inventory;
  std::ifstream lex = open_input(lexicon_path, "lexicon");
  Lexicon lexicon = parse_lexicon(lex, inventory);
  std::ifstream tri = open_input(triples_path, "triples");
  std::vector<RelationTriple> triples = parse_relation_triples(tri, inventory);
  SememeGraph graph = build_graph(inventory, triples);
  save_bundle(inventory, lexicon, triples, out_path);
  std::cout << "nodes=" << graph.node_count << " edges=" << graph.edges.size()
            << " relation_types=" << inventory.relation_type_count()
            << " words=" << lexicon.entries.size() << "\n";
  return 0;
}

int cmd_inspect_pair(const std::string& bundle_path, const std::string& head,
                     const std::string& tail, const std::string& mode,
                     int hops) {
  GraphContext context;
  load_bundle_into(context, bundle_path);
  context.graph = build_graph(context.inventory, context.triples);
  SememeSetMode set_mode = mode == "union" ? SememeSetMode::kUnion
                                           : SememeSetMode::kIntersection;

  std::vector<SememeId> head_set, tail_set;
  if (const WordEntry* e = context.lexicon.find(head))
    head_set = sememe_set(*e, set_mode);
  if (const WordEntry* e = context.lexicon.find(tail))
    tail_set = sememe_set(*e, set_mode);

  ordered_json out;
  if (head_set.empty() || tail_set.empty()) {
    out["nodes"] = ordered_json::array();
    out["edges"] = ordered_json::array();
    out["virtual_index"] = nullptr;
    out["head_members"] = ordered_json::array();
    out["tail_members"] = ordered_json::array();
    out["degenerate"] = true;
  } else {
    PairSubgraph sub =
        extract_subgraph(context.graph, head_set, tail_set, hops);
    sub = add_virtual_node(std::move(sub),
                           virtual_relation_id(context.inventory));
    ordered_json nodes = ordered_json::array();
    for (SememeId id : sub.local_nodes)
      nodes.push_back(id == kVirtualNodeId
                          ? std::string("<virtual>")
                          : context.inventory.sememe_label(id));
    ordered_json edges = ordered_json::array();
    for (const PairSubgraph::LocalEdge& e : sub.local_edges) {
      std::string rel =
          e.relation < context.inventory.relation_type_count()
              ? context.inventory.relation_label(e.relation)
              : std::string("<virtual>");
      edges.push_back({e.src, rel, e.dst});
    }
    out["nodes"] = std::move(nodes);
    out["edges"] = std::move(edges);
    out["virtual_index"] = *sub.virtual_index;
    out["head_members"] = sub.head_members;
    out["tail_members"] = sub.tail_members;
    out["degenerate"] = false;
  }
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_train(const std::string& bundle_path,
              const std::string& relations_path,
              const std::string& embeddings_path, const ConfigCli& config_cli,
              const std::string& out_path, const std::string& metrics_path,
              const std::string& format) {
  require(format == "json" || format == "binary",
          "train: --format must be json or binary");
  TrainConfig config = config_cli.resolve();
  GraphContext context;
  load_graph_side(context, bundle_path, embeddings_path, config.seed);
  require(static_cast<int>(context.embeddings.dimension) == config.graph_dim,
          "train: embeddings dimension ", context.embeddings.dimension,
          " != graph_dim ", config.graph_dim);

  std::ifstream rel = open_input(relations_path, "relations");
  RelationDataset data = load_relation_data(rel, config.seed);

  RelationModel model = RelationModel::init(config, context.lexicon);
  TrainResult result = train(model, &context, data, config, &std::cerr);
  if (format == "binary") save_checkpoint_binary(model, out_path);
  else save_checkpoint(model, out_path);

  if (!metrics_path.empty()) {
    std::string metrics;
    for (const EpochMetrics& m : result.epochs) {
      ordered_json j;
      j["epoch"] = m.epoch;
      j["L1"] = m.l1;
      j["L2"] = m.l2;
      j["L3"] = m.l3;
      j["total"] = m.total;
      j["val_acc"] = m.val_acc;
      metrics += j.dump();
      metrics += '\n';
    }
    write_file(metrics_path, metrics);
  }
  if (!context.node_init->imputed_labels().empty())
    std::cerr << "imputed " << context.node_init->imputed_labels().size()
              << " sememe vectors absent from the embedding table\n";
  std::cout << "steps=" << result.steps << " epochs=" << result.epochs.size()
            << " checkpoint=" << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path,
             const std::string& bundle_path, const std::string& embeddings_path,
             const std::string& report_path, const std::string& tsv_path,
             const std::string& baseline) {
  std::ifstream ds = open_input(dataset_path, "dataset");
  std::vector<AnalogyQuestion> questions = parse_analogy_dataset(ds);
  const std::string dataset_name =
      std::filesystem::path(dataset_path).filename().string();

  ordered_json report;
  double accuracy = 0.0;
  if (!baseline.empty()) {
    require(baseline == "vector-offset", "eval: unknown baseline '", baseline,
            "'");
    require(!embeddings_path.empty(),
            "eval: --baseline vector-offset needs --embeddings");
    std::ifstream emb = open_input(embeddings_path, "embeddings");
    EmbeddingTable table = load_embeddings(emb);
    BaselineReport br = vector_offset_baseline(table, questions);
    report["dataset"] = dataset_name;
    report["baseline"] = baseline;
    report["accuracy"] = br.accuracy;
    report["n"] = br.n;
    report["missing_words"] = br.missing_words;
    report["flagged_questions"] = br.flagged_questions;
    ordered_json per = ordered_json::array();
    for (const QuestionRecord& r : br.per_question)
      per.push_back(question_record_to_json(r));
    report["per_question"] = std::move(per);
    accuracy = br.accuracy;
  } else {
    require(!checkpoint_path.empty(), "eval: --checkpoint is required");
    RelationModel model = load_checkpoint(checkpoint_path);
    GraphContext context;
    std::optional<bool> graph_loaded;
    if (!bundle_path.empty()) {
      require(!embeddings_path.empty(),
              "eval: --graph also needs --embeddings");
      load_graph_side(context, bundle_path, embeddings_path, model.seed);
      graph_loaded = true;
    }
    EvalReport er =
        evaluate(model, graph_loaded ? &context : nullptr, questions);
    report = report_to_json(er, dataset_name);
    accuracy = er.accuracy;
    if (!tsv_path.empty()) write_file(tsv_path, report_to_tsv(er, dataset_name));
  }

  if (!report_path.empty()) write_file(report_path, report.dump() + "\n");
  std::cout << "dataset=" << dataset_name << " accuracy=" << accuracy
            << " n=" << questions.size() << "\n";
  return 0;
}

int cmd_embed(const std::string& checkpoint_path, const std::string& head,
              const std::string& tail, const std::string& bundle_path,
              const std::string& embeddings_path) {
  RelationModel model = load_checkpoint(checkpoint_path);
  GraphContext context;
  GraphContext* context_ptr = nullptr;
  if (!bundle_path.empty()) {
    require(!embeddings_path.empty(), "embed: --graph also needs --embeddings");
    load_graph_side(context, bundle_path, embeddings_path, model.seed);
    context_ptr = &context;
  }
  PairForward fwd = forward_pair(model, context_ptr, head, tail);
  ordered_json out;
  out["head"] = head;
  out["tail"] = tail;
  out["degenerate"] = fwd.degenerate;
  out["representation"] =
      relation_representation(model, context_ptr, WordPair{head, tail});
  out["h_m"] = fwd.mask_state.values();
  if (fwd.graph_state)
    out["h_g_prime"] = fwd.graph_state->values();
  else
    out["h_g_prime"] = nullptr;
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_gradcheck(uint64_t seed, int nodes, int dim) {
  GradCheckReport report = run_gradcheck_fixture(seed, nodes, dim);
  ordered_json out;
  out["seed"] = seed;
  out["nodes"] = nodes;
  out["dim"] = dim;
  out["parameters"] = report.parameter_count;
  out["max_rel_err"] = report.max_rel_err;
  out["threshold"] = kGradCheckThreshold;
  std::cout << out.dump() << "\n";
  return report.max_rel_err < kGradCheckThreshold ? 0 : 1;
}

int cmd_synth(uint64_t seed, const std::string& out_dir, int questions) {
  SynthSpec spec;
  spec.seed = seed;
  spec.questions = questions;
  if (const char* env = std::getenv("SEMEMELM_SEED"))
    spec.seed = static_cast<uint64_t>(std::strtoull(env, nullptr, 10));
  SynthSummary summary = generate_fixture(spec, out_dir);
  std::cout << "sememes=" << summary.sememes
            << " relation_types=" << summary.relation_types
            << " words=" << summary.words
            << " training_pairs=" << summary.training_pairs
            << " questions=" << summary.questions << " dir=" << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-free relation representations over a sememe graph"};
  app.require_subcommand(1);
  app.failure_message([](const CLI::App*, const CLI::Error& e) {
    return std::string("error: ") + e.what() + "\n";
  });

  // build-graph
  std::string lexicon_path, triples_path, out_path;
  CLI::App* build = app.add_subcommand(
      "build-graph", "parse a lexicon and triples into a graph bundle");
  build->add_option("--lexicon", lexicon_path)->required();
  build->add_option("--triples", triples_path)->required();
  build->add_option("--out", out_path)->required();

  // inspect-pair
  std::string bundle_path, head, tail, set_mode = "intersection";
  int hops = 0;
  CLI::App* inspect = app.add_subcommand(
      "inspect-pair", "print the augmented subgraph of a word pair as JSON");
  inspect->add_option("--graph", bundle_path)->required();
  inspect->add_option("--head", head)->required();
  inspect->add_option("--tail", tail)->required();
  inspect->add_option("--mode", set_mode, "intersection|union");
  inspect->add_option("--hops", hops, "0 or 1");

  // train
  std::string relations_path, embeddings_path, metrics_path;
  std::string checkpoint_format = "json";
  ConfigCli config_cli;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a relation model from scratch");
  train_cmd->add_option("--graph", bundle_path)->required();
  train_cmd->add_option("--relations", relations_path)->required();
  train_cmd->add_option("--embeddings", embeddings_path)->required();
  train_cmd->add_option("--out", out_path)->required();
  train_cmd->add_option("--metrics", metrics_path, "per-epoch metrics JSONL");
  train_cmd->add_option("--format", checkpoint_format,
                        "checkpoint format: json (default) or binary");
  config_cli.attach(train_cmd);

  // eval
  std::string checkpoint_path, dataset_path, report_path, tsv_path, baseline;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "answer an analogy dataset and report accuracy");
  eval_cmd->add_option("--checkpoint", checkpoint_path);
  eval_cmd->add_option("--dataset", dataset_path)->required();
  eval_cmd->add_option("--graph", bundle_path);
  eval_cmd->add_option("--embeddings", embeddings_path);
  eval_cmd->add_option("--report", report_path, "write the full JSON report");
  eval_cmd->add_option("--tsv", tsv_path, "write a one-line TSV summary");
  eval_cmd->add_option("--baseline", baseline, "vector-offset");

  // embed
  CLI::App* embed_cmd =
      app.add_subcommand("embed", "dump the relation representation of a pair");
  embed_cmd->add_option("--checkpoint", checkpoint_path)->required();
  embed_cmd->add_option("--head", head)->required();
  embed_cmd->add_option("--tail", tail)->required();
  embed_cmd->add_option("--graph", bundle_path);
  embed_cmd->add_option("--embeddings", embeddings_path);

  // gradcheck
  uint64_t seed = 7;
  int nodes = 5, dim = 8;
  CLI::App* grad_cmd = app.add_subcommand(
      "gradcheck", "finite-difference check of the full loss gradient");
  grad_cmd->add_option("--seed", seed);
  grad_cmd->add_option("--nodes", nodes, "graph nodes in the fixture");
  grad_cmd->add_option("--dim", dim, "model dimension in the fixture");

  // synth
  std::string synth_dir;
  int questions = 200;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "generate a deterministic synthetic fixture");
  synth_cmd->add_option("--seed", seed);
  synth_cmd->add_option("--out", synth_dir)->required();
  synth_cmd->add_option("--questions", questions);

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed())
      return cmd_build_graph(lexicon_path, triples_path, out_path);
    if (inspect->parsed())
      return cmd_inspect_pair(bundle_path, head, tail, set_mode, hops);
    if (train_cmd->parsed())
      return cmd_train(bundle_path, relations_path, embeddings_path,
                       config_cli, out_path, metrics_path, checkpoint_format);
    if (eval_cmd->parsed())
      return cmd_eval(checkpoint_path, dataset_path, bundle_path,
                      embeddings_path, report_path, tsv_path, baseline);
    if (embed_cmd->parsed())
      return cmd_embed(checkpoint_path, head, tail, bundle_path,
                       embeddings_path);
    if (grad_cmd->parsed()) return cmd_gradcheck(seed, nodes, dim);
    if (synth_cmd->parsed()) return cmd_synth(seed, synth_dir, questions);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
