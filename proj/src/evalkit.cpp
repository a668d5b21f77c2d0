#include "sememelm/evalkit.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sememelm/error.hpp"

namespace sememelm {

using nlohmann::json;

std::vector<AnalogyQuestion> parse_analogy_dataset(std::istream& in) {
  std::vector<AnalogyQuestion> questions;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      fail("analogy line ", line_no, ": malformed JSON: ", e.what());
    }
    auto parse_pair = [&](const json& j) {
      require(j.is_array() && j.size() == 2 && j[0].is_string() &&
                  j[1].is_string(),
              "analogy line ", line_no, ": word pair must be [head, tail]");
      return WordPair{j[0].get<std::string>(), j[1].get<std::string>()};
    };
    require(record.contains("stem") && record.contains("choice") &&
                record.contains("answer"),
            "analogy line ", line_no,
            ": expected {\"stem\", \"choice\", \"answer\"}");
    AnalogyQuestion q;
    q.stem = parse_pair(record["stem"]);
    require(record["choice"].is_array(), "analogy line ", line_no,
            ": \"choice\" must be an array");
    for (const json& c : record["choice"]) q.choices.push_back(parse_pair(c));
    require(q.choices.size() >= 2, "analogy line ", line_no,
            ": needs at least 2 choices, got ", q.choices.size());
    require(record["answer"].is_number_integer(), "analogy line ", line_no,
            ": \"answer\" must be an integer");
    int64_t answer = record["answer"].get<int64_t>();
    require(answer >= 0 && static_cast<size_t>(answer) < q.choices.size(),
            "analogy line ", line_no, ": answer ", answer,
            " out of range for ", q.choices.size(), " choices");
    q.answer = static_cast<size_t>(answer);
    questions.push_back(std::move(q));
  }
  return questions;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "cosine: dimension mismatch ", a.size(), " vs ",
          b.size());
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

std::vector<double> relation_representation(const RelationModel& model,
                                            GraphContext* context,
                                            const WordPair& pair) {
  PairForward fwd = forward_pair(model, context, pair.head, pair.tail);
  const InferenceRep mode = model.config.inference();
  if (mode == InferenceRep::kMask || fwd.degenerate) {
    std::vector<double> rep = fwd.mask_state.values();
    if (mode == InferenceRep::kConcat)
      rep.resize(2 * rep.size(), 0.0);  // degenerate: zero-padded graph half
    return rep;
  }
  if (mode == InferenceRep::kGraph) return fwd.graph_state->values();
  std::vector<double> rep = fwd.mask_state.values();
  const auto& g = fwd.graph_state->values();
  rep.insert(rep.end(), g.begin(), g.end());
  return rep;
}

ChoiceResult choose(std::span<const double> stem_rep,
                    const std::vector<std::vector<double>>& choice_reps) {
  require(choice_reps.size() >= 2, "choose: needs at least 2 choices");
  ChoiceResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < choice_reps.size(); ++i) {
    double s = cosine_similarity(stem_rep, choice_reps[i]);
    result.scores.push_back(s);
    if (s > best) {  // strict: ties keep the lowest index
      best = s;
      result.chosen = i;
    }
  }
  return result;
}

ChoiceResult answer_question(const RelationModel& model, GraphContext* context,
                             const AnalogyQuestion& question) {
  std::vector<double> stem = relation_representation(model, context,
                                                     question.stem);
  std::vector<std::vector<double>> choices;
  choices.reserve(question.choices.size());
  for (const WordPair& c : question.choices)
    choices.push_back(relation_representation(model, context, c));
  return choose(stem, choices);
}

nlohmann::ordered_json question_record_to_json(const QuestionRecord& r) {
  nlohmann::ordered_json j;
  j["chosen"] = r.chosen;
  j["gold"] = r.gold;
  j["scores"] = r.scores;
  return j;
}

QuestionRecord question_record_from_json(const json& j) {
  QuestionRecord r;
  r.chosen = j.at("chosen").get<size_t>();
  r.gold = j.at("gold").get<size_t>();
  r.scores = j.at("scores").get<std::vector<double>>();
  return r;
}

EvalReport evaluate(const RelationModel& model, GraphContext* context,
                    std::span<const AnalogyQuestion> questions) {
  require(!questions.empty(), "evaluate: empty dataset");
  EvalReport report;
  size_t correct = 0;
  for (const AnalogyQuestion& q : questions) {
    ChoiceResult cr = answer_question(model, context, q);
    if (cr.chosen == q.answer) ++correct;
    report.per_question.push_back({cr.chosen, q.answer, std::move(cr.scores)});
  }
  report.n = questions.size();
  report.accuracy = static_cast<double>(correct) /
                    static_cast<double>(questions.size());
  return report;
}

BaselineReport vector_offset_baseline(
    const EmbeddingTable& embeddings,
    std::span<const AnalogyQuestion> questions) {
  require(!questions.empty(), "baseline: empty dataset");
  BaselineReport report;
  size_t correct = 0;
  for (const AnalogyQuestion& q : questions) {
    bool flagged = false;
    auto offset = [&](const WordPair& pair,
                      bool& ok) -> std::vector<double> {
      const std::vector<double>* h = embeddings.find(pair.head);
      const std::vector<double>* t = embeddings.find(pair.tail);
      if (!h) ++report.missing_words;
      if (!t) ++report.missing_words;
      if (!h || !t) {
        ok = false;
        flagged = true;
        return {};
      }
      std::vector<double> d(t->size());
      bool zero = true;
      for (size_t i = 0; i < d.size(); ++i) {
        d[i] = (*t)[i] - (*h)[i];
        if (d[i] != 0.0) zero = false;
      }
      if (zero) flagged = true;
      ok = true;
      return d;
    };

    bool stem_ok = false;
    std::vector<double> stem = offset(q.stem, stem_ok);
    QuestionRecord record;
    record.gold = q.answer;
    double best = -std::numeric_limits<double>::infinity();
    record.chosen = 0;
    for (size_t i = 0; i < q.choices.size(); ++i) {
      bool choice_ok = false;
      std::vector<double> rep = offset(q.choices[i], choice_ok);
      double s = (stem_ok && choice_ok)
                     ? cosine_similarity(stem, rep)
                     : -std::numeric_limits<double>::infinity();
      record.scores.push_back(s);
      if (s > best) {
        best = s;
        record.chosen = i;
      }
    }
    if (flagged) ++report.flagged_questions;
    if (record.chosen == q.answer) ++correct;
    report.per_question.push_back(std::move(record));
  }
  report.n = questions.size();
  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(questions.size());
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report,
                                      const std::string& dataset_name) {
  nlohmann::ordered_json j;
  j["dataset"] = dataset_name;
  j["accuracy"] = report.accuracy;
  j["n"] = report.n;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const QuestionRecord& r : report.per_question)
    per.push_back(question_record_to_json(r));
  j["per_question"] = std::move(per);
  return j;
}

std::string report_to_tsv(const EvalReport& report,
                          const std::string& dataset_name) {
  std::ostringstream os;
  os << "dataset\taccuracy\tn\n";
  os << dataset_name << '\t' << report.accuracy << '\t' << report.n << '\n';
  return os.str();
}

}  // namespace sememelm
