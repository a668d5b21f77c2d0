#pragma once

#include <cstdint>
#include <string>

namespace sememelm {

// Deterministic end-to-end fixture. Each relation type connects a disjoint
// cluster of source sememes to a disjoint cluster of target sememes
// (complete bipartite, all edges carrying that relation), every word maps to
// exactly one cluster sememe through a two-sense intersection, so the
// relation of any word pair is recoverable from the graph alone — which is
// what makes the generated analogy answers well-defined.
struct SynthSpec {
  uint64_t seed = 1;
  int relation_types = 12;
  int sources_per_relation = 2;
  int targets_per_relation = 2;
  int words_per_sememe = 4;
  int filler_sememes = 8;
  int degenerate_words = 12;
  int positives_per_relation = 13;  // top-10 survive selection
  int negatives_per_relation = 12;  // bottom-10 survive selection
  int questions = 200;
  int choices = 4;
  int embedding_dim = 32;
};

struct SynthSummary {
  int sememes = 0;
  int relation_types = 0;
  int words = 0;
  int training_pairs = 0;
  int questions = 0;
};

// Writes lexicon.jsonl, triples.tsv, embeddings.txt, relations.jsonl,
// questions.jsonl and config.txt into out_dir (created if missing). Runs an
// internal verification pass: every question must have exactly one choice
// whose sememe pair is connected by the stem's relation type.
SynthSummary generate_fixture(const SynthSpec& spec, const std::string& out_dir);

}  // namespace sememelm
