#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sememelm/model.hpp"
#include "sememelm/training.hpp"

namespace sememelm {

struct AnalogyQuestion {
  WordPair stem;
  std::vector<WordPair> choices;  // 2 or more
  size_t answer = 0;              // gold index
};

// JSONL: {"stem": [h, t], "choice": [[h, t], ...], "answer": int}.
std::vector<AnalogyQuestion> parse_analogy_dataset(std::istream& in);

// Zero vectors score 0 by convention.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// The relation vector used at inference. Default is h_m (it exists on the
// degenerate path too); "hg" and "concat" are ablation modes — degenerate
// pairs then fall back to h_m / zero-padded h_m respectively.
std::vector<double> relation_representation(const RelationModel& model,
                                            GraphContext* context,
                                            const WordPair& pair);

struct ChoiceResult {
  size_t chosen = 0;
  std::vector<double> scores;
};

// Argmax of cosine(stem, choice); ties break to the lowest index.
ChoiceResult choose(std::span<const double> stem_rep,
                    const std::vector<std::vector<double>>& choice_reps);

ChoiceResult answer_question(const RelationModel& model, GraphContext* context,
                             const AnalogyQuestion& question);

struct QuestionRecord {
  size_t chosen = 0;
  size_t gold = 0;
  std::vector<double> scores;
};

nlohmann::ordered_json question_record_to_json(const QuestionRecord& r);
QuestionRecord question_record_from_json(const nlohmann::json& j);

struct EvalReport {
  double accuracy = 0.0;
  size_t n = 0;
  std::vector<QuestionRecord> per_question;
};

EvalReport evaluate(const RelationModel& model, GraphContext* context,
                    std::span<const AnalogyQuestion> questions);

// rep(h, t) = embed(t) - embed(h); questions touching missing words or
// zero offsets are flagged in the coverage counters (missing words score
// their choice at -inf, so they are never chosen).
struct BaselineReport {
  double accuracy = 0.0;
  size_t n = 0;
  size_t missing_words = 0;
  size_t flagged_questions = 0;  // missing or zero-offset representations
  std::vector<QuestionRecord> per_question;
};

BaselineReport vector_offset_baseline(const EmbeddingTable& embeddings,
                                      std::span<const AnalogyQuestion> questions);

nlohmann::ordered_json report_to_json(const EvalReport& report,
                                      const std::string& dataset_name);
std::string report_to_tsv(const EvalReport& report,
                          const std::string& dataset_name);

}  // namespace sememelm
