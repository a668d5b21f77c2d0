#include "sememelm/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sememelm/checkpoint.hpp"
#include "sememelm/config.hpp"
#include "sememelm/error.hpp"
#include "sememelm/rng.hpp"
#include "sememelm/training.hpp"

namespace sememelm {

using nlohmann::ordered_json;

namespace {

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

SynthSummary generate_fixture(const SynthSpec& spec,
                              const std::string& out_dir) {
  require(spec.relation_types >= 4, "synth: needs at least 4 relation types");
  require(spec.choices >= 2 && spec.choices <= spec.relation_types,
          "synth: choices must be in [2, relation_types]");
  require(spec.sources_per_relation >= 1 && spec.targets_per_relation >= 1 &&
              spec.words_per_sememe >= 2,
          "synth: cluster sizes too small");
  require(spec.positives_per_relation >= 4 && spec.negatives_per_relation >= 2,
          "synth: too few scored pairs per relation");
  require(spec.filler_sememes >= 2, "synth: needs at least 2 filler sememes");

  std::filesystem::create_directories(out_dir);
  Rng rng(Rng::mix(spec.seed, Rng::hash_string("synth")));

  // Sememe universe: per relation a source and a target cluster, plus
  // fillers used only inside senses (isolated graph nodes).
  struct Cluster {
    std::vector<std::string> sememes;
    std::vector<std::string> words;  // all words over the cluster's sememes
  };
  std::vector<Cluster> sources(spec.relation_types);
  std::vector<Cluster> targets(spec.relation_types);
  std::vector<std::string> relation_labels;
  std::vector<std::string> all_sememes;
  std::vector<std::string> fillers;

  for (int r = 0; r < spec.relation_types; ++r) {
    relation_labels.push_back("rel" + two_digits(r));
    for (int i = 0; i < spec.sources_per_relation; ++i) {
      std::string s = "s" + two_digits(r) + "a" + std::to_string(i);
      sources[r].sememes.push_back(s);
      all_sememes.push_back(s);
    }
    for (int i = 0; i < spec.targets_per_relation; ++i) {
      std::string s = "s" + two_digits(r) + "b" + std::to_string(i);
      targets[r].sememes.push_back(s);
      all_sememes.push_back(s);
    }
  }
  for (int i = 0; i < spec.filler_sememes; ++i) {
    fillers.push_back("f" + std::to_string(i));
    all_sememes.push_back(fillers.back());
  }

  // Words: each word has two senses sharing exactly its cluster sememe, so
  // the sense intersection is that single sememe.
  ordered_json lexicon_lines = ordered_json::array();
  std::map<std::string, std::string> sememe_of_word;
  auto add_words = [&](Cluster& cluster) {
    for (const std::string& s : cluster.sememes) {
      for (int w = 0; w < spec.words_per_sememe; ++w) {
        std::string word = s + "w" + std::to_string(w);
        size_t fa = rng.index(fillers.size());
        size_t fb = rng.index(fillers.size() - 1);
        if (fb >= fa) ++fb;  // distinct fillers keep the intersection tight
        ordered_json rec;
        rec["word"] = word;
        rec["senses"] = ordered_json::array(
            {ordered_json::array({s, fillers[fa]}),
             ordered_json::array({s, fillers[fb]})});
        lexicon_lines.push_back(std::move(rec));
        cluster.words.push_back(word);
        sememe_of_word[word] = s;
      }
    }
  };
  for (int r = 0; r < spec.relation_types; ++r) {
    add_words(sources[r]);
    add_words(targets[r]);
  }
  for (int i = 0; i < spec.degenerate_words; ++i) {
    size_t fa = rng.index(fillers.size());
    size_t fb = rng.index(fillers.size() - 1);
    if (fb >= fa) ++fb;
    ordered_json rec;
    rec["word"] = "deg" + two_digits(i);
    rec["senses"] = ordered_json::array({ordered_json::array({fillers[fa]}),
                                         ordered_json::array({fillers[fb]})});
    lexicon_lines.push_back(std::move(rec));
  }

  // Triples: complete bipartite source -> target per relation.
  std::string triples_text;
  for (int r = 0; r < spec.relation_types; ++r)
    for (const std::string& a : sources[r].sememes)
      for (const std::string& b : targets[r].sememes)
        triples_text += a + "\t" + relation_labels[r] + "\t" + b + "\n";

  // Embeddings for every sememe.
  std::string embeddings_text;
  for (const std::string& s : all_sememes) {
    embeddings_text += s;
    for (int i = 0; i < spec.embedding_dim; ++i)
      embeddings_text += " " + format_double(rng.uniform(-0.5, 0.5));
    embeddings_text += "\n";
  }

  // Scored relation data. Positives are true pairs of the relation (high
  // scores), negatives are pairs borrowed from other relations (low scores).
  // The first positives form a perfect cover of the relation's words, so the
  // top-10 selection leaves every word trained at least once.
  using Pair = std::pair<std::string, std::string>;
  std::vector<std::set<Pair>> file_pairs(spec.relation_types);
  auto sample_pair = [&](int r, std::set<Pair>& used) -> Pair {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const std::string& h =
          sources[r].words[rng.index(sources[r].words.size())];
      const std::string& t =
          targets[r].words[rng.index(targets[r].words.size())];
      if (used.insert({h, t}).second) return {h, t};
    }
    fail("synth: pair universe exhausted for relation ", r);
  };

  ordered_json relation_lines = ordered_json::array();
  int training_pairs = 0;
  for (int r = 0; r < spec.relation_types; ++r) {
    std::vector<Pair> positives;
    std::vector<std::string> heads = sources[r].words;
    std::vector<std::string> tails = targets[r].words;
    rng.shuffle(heads);
    rng.shuffle(tails);
    const size_t cover = std::min(heads.size(), tails.size());
    for (size_t i = 0; i < cover; ++i) {
      positives.push_back({heads[i % heads.size()], tails[i % tails.size()]});
      file_pairs[r].insert(positives.back());
    }
    while (positives.size() < static_cast<size_t>(spec.positives_per_relation))
      positives.push_back(sample_pair(r, file_pairs[r]));

    ordered_json pairs = ordered_json::array();
    for (size_t i = 0; i < positives.size(); ++i) {
      ordered_json p;
      p["head"] = positives[i].first;
      p["tail"] = positives[i].second;
      p["score"] = 1.0 - 0.01 * static_cast<double>(i);
      pairs.push_back(std::move(p));
      ++training_pairs;
    }
    for (int i = 0; i < spec.negatives_per_relation; ++i) {
      int other = static_cast<int>(rng.index(spec.relation_types - 1));
      if (other >= r) ++other;
      auto [h, t] = sample_pair(other, file_pairs[other]);
      ordered_json p;
      p["head"] = h;
      p["tail"] = t;
      p["score"] = 0.30 - 0.01 * i;
      pairs.push_back(std::move(p));
      ++training_pairs;
    }
    ordered_json line;
    line["relation"] = relation_labels[r];
    line["pairs"] = std::move(pairs);
    relation_lines.push_back(std::move(line));
  }

  auto dump_jsonl = [](const ordered_json& lines) {
    std::string out;
    for (const auto& line : lines) {
      out += line.dump();
      out += '\n';
    }
    return out;
  };

  // Replay the loader's top/bottom selection and seeded split so question
  // words can be restricted to words that actually receive training signal;
  // unseen words would answer at chance.
  const std::string relations_text = dump_jsonl(relation_lines);
  std::istringstream relations_stream(relations_text);
  RelationDataset loaded = load_relation_data(relations_stream, spec.seed);
  auto relation_index_of = [&](const std::string& head) -> int {
    auto it = sememe_of_word.find(head);
    if (it == sememe_of_word.end()) return -1;
    for (int r = 0; r < spec.relation_types; ++r)
      if (std::find(sources[r].sememes.begin(), sources[r].sememes.end(),
                    it->second) != sources[r].sememes.end())
        return r;
    return -1;
  };
  std::vector<std::set<std::string>> trained_heads(spec.relation_types);
  std::vector<std::set<std::string>> trained_tails(spec.relation_types);
  for (const RelationGroup& group : loaded.relations) {
    auto note = [&](const WordPair& p) {
      int r = relation_index_of(p.head);
      if (r < 0) return;
      trained_heads[r].insert(p.head);
      trained_tails[r].insert(p.tail);
    };
    for (const WordPair& p : group.train_positives) note(p);
    for (const WordPair& p : group.train_negatives) note(p);
  }

  // Questions over trained words only, in combinations absent from the
  // training file. Stem and correct choice share the relation but use
  // disjoint sememes, so raw subgraph overlap carries no signal and only a
  // learned grouping of the relation's sememe pairs can match them. The
  // wrong choices come from distinct other relations.
  auto fresh_pair = [&](int r, const Pair* avoid_sememes_of) -> Pair {
    std::vector<std::string> hs(trained_heads[r].begin(),
                                trained_heads[r].end());
    std::vector<std::string> ts(trained_tails[r].begin(),
                                trained_tails[r].end());
    require(!hs.empty() && !ts.empty(),
            "synth: relation ", r, " has no trained words");
    for (int attempt = 0; attempt < 2000; ++attempt) {
      Pair p{hs[rng.index(hs.size())], ts[rng.index(ts.size())]};
      if (file_pairs[r].count(p)) continue;
      if (avoid_sememes_of &&
          (sememe_of_word.at(p.first) ==
               sememe_of_word.at(avoid_sememes_of->first) ||
           sememe_of_word.at(p.second) ==
               sememe_of_word.at(avoid_sememes_of->second)))
        continue;
      return p;
    }
    fail("synth: no fresh question pair for relation ", r);
  };

  ordered_json question_lines = ordered_json::array();
  for (int q = 0; q < spec.questions; ++q) {
    int r = static_cast<int>(rng.index(spec.relation_types));
    Pair stem = fresh_pair(r, nullptr);
    Pair correct = fresh_pair(r, &stem);
    std::vector<int> others;
    for (int o = 0; o < spec.relation_types; ++o)
      if (o != r) others.push_back(o);
    rng.shuffle(others);
    std::vector<Pair> wrong;
    for (int i = 0; i < spec.choices - 1; ++i)
      wrong.push_back(fresh_pair(others[static_cast<size_t>(i)], nullptr));
    size_t answer = rng.index(static_cast<size_t>(spec.choices));
    ordered_json choices = ordered_json::array();
    size_t wi = 0;
    for (size_t c = 0; c < static_cast<size_t>(spec.choices); ++c) {
      const Pair& pair = (c == answer) ? correct : wrong[wi++];
      choices.push_back({pair.first, pair.second});
    }
    ordered_json line;
    line["stem"] = {stem.first, stem.second};
    line["choice"] = std::move(choices);
    line["answer"] = answer;
    question_lines.push_back(std::move(line));
  }

  // Verification pass: a choice is structurally correct iff its word sememes
  // are linked by the stem's relation; exactly one per question, at the gold
  // index.
  auto relation_of = [&](const std::string& head,
                         const std::string& tail) -> int {
    auto hs = sememe_of_word.find(head);
    auto ts = sememe_of_word.find(tail);
    if (hs == sememe_of_word.end() || ts == sememe_of_word.end()) return -1;
    for (int r = 0; r < spec.relation_types; ++r) {
      bool src_hit = std::find(sources[r].sememes.begin(),
                               sources[r].sememes.end(),
                               hs->second) != sources[r].sememes.end();
      bool tgt_hit = std::find(targets[r].sememes.begin(),
                               targets[r].sememes.end(),
                               ts->second) != targets[r].sememes.end();
      if (src_hit && tgt_hit) return r;
    }
    return -1;
  };
  for (const auto& line : question_lines) {
    int stem_rel = relation_of(line["stem"][0], line["stem"][1]);
    require(stem_rel >= 0, "synth: stem pair has no relation");
    size_t matches = 0, match_index = 0;
    for (size_t c = 0; c < line["choice"].size(); ++c) {
      if (relation_of(line["choice"][c][0], line["choice"][c][1]) == stem_rel) {
        ++matches;
        match_index = c;
      }
    }
    require(matches == 1 && match_index == line["answer"].get<size_t>(),
            "synth: question verification failed (", matches,
            " structurally correct choices)");
  }

  // Scaled-down experiment configuration for this fixture.
  TrainConfig config;
  config.seed = spec.seed;
  config.epochs = 250;
  config.batch_relations = 4;
  config.learning_rate = 0.002;
  config.encoder_dim = 32;
  config.graph_dim = spec.embedding_dim;
  config.max_len = 16;

  const std::filesystem::path dir(out_dir);
  write_file((dir / "lexicon.jsonl").string(), dump_jsonl(lexicon_lines));
  write_file((dir / "triples.tsv").string(), triples_text);
  write_file((dir / "embeddings.txt").string(), embeddings_text);
  write_file((dir / "relations.jsonl").string(), relations_text);
  write_file((dir / "questions.jsonl").string(), dump_jsonl(question_lines));
  write_file((dir / "config.txt").string(), config_to_text(config));

  SynthSummary summary;
  summary.sememes = static_cast<int>(all_sememes.size());
  summary.relation_types = spec.relation_types;
  summary.words = static_cast<int>(lexicon_lines.size());
  summary.training_pairs = training_pairs;
  summary.questions = spec.questions;
  return summary;
}

}  // namespace sememelm
