#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracle_helpers.hpp"
#include "sememelm/error.hpp"
#include "sememelm/evalkit.hpp"

using namespace sememelm;

TEST_CASE("analogy datasets parse in order with validated answers") {
  std::istringstream in(
      R"({"stem":["bee","honey"],"choice":[["butterfly","cocoon pupa"],["hen","egg"],["father","child"],["farmer","food"]],"answer":3})"
      "\n");
  auto qs = parse_analogy_dataset(in);
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].choices.size() == 4);
  CHECK(qs[0].answer == 3);
  CHECK(qs[0].choices[0].tail == "cocoon pupa");
}

TEST_CASE("empty stream parses to an empty dataset") {
  std::istringstream in("");
  CHECK(parse_analogy_dataset(in).empty());
}

TEST_CASE("analogy parse errors: bad answer index, too few choices") {
  std::istringstream bad_answer(
      R"({"stem":["a","b"],"choice":[["c","d"],["e","f"]],"answer":5})" "\n");
  CHECK_THROWS_WITH_AS(parse_analogy_dataset(bad_answer),
                       doctest::Contains("out of range"), Error);
  std::istringstream one_choice(
      R"({"stem":["a","b"],"choice":[["c","d"]],"answer":0})" "\n");
  CHECK_THROWS_AS(parse_analogy_dataset(one_choice), Error);
}

TEST_CASE("cosine convention: zero vectors score zero") {
  std::vector<double> z{0, 0}, x{1, 0};
  CHECK(cosine_similarity(z, x) == 0.0);
  CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
}

TEST_CASE("choose: ties break to the lowest index") {
  std::vector<double> stem{1.0, 0.0};
  std::vector<std::vector<double>> same{{2.0, 0.0}, {3.0, 0.0}, {1.0, 0.0}};
  ChoiceResult r = choose(stem, same);
  CHECK(r.chosen == 0);  // all cosines equal 1
}

TEST_CASE("choose: orthogonal choices score 1 and 0") {
  std::vector<double> stem{1.0, 0.0};
  std::vector<std::vector<double>> choices{{1.0, 0.0}, {0.0, 1.0}};
  ChoiceResult r = choose(stem, choices);
  CHECK(r.chosen == 0);
  CHECK(r.scores[0] == doctest::Approx(1.0));
  CHECK(r.scores[1] == doctest::Approx(0.0));
}

TEST_CASE("choose matches an exhaustive score-table oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    size_t dim = 2 + rng.index(6);
    std::vector<double> stem(dim);
    for (double& v : stem) v = rng.uniform(-1, 1);
    std::vector<std::vector<double>> choices(2 + rng.index(8));
    for (auto& c : choices) {
      c.resize(dim);
      for (double& v : c) v = rng.uniform(-1, 1);
    }
    ChoiceResult r = choose(stem, choices);
    // Oracle: full cosine table, first maximum wins.
    size_t best = 0;
    double best_score = -2.0;
    for (size_t i = 0; i < choices.size(); ++i) {
      double dot = 0, na = 0, nb = 0;
      for (size_t c = 0; c < dim; ++c) {
        dot += stem[c] * choices[i][c];
        na += stem[c] * stem[c];
        nb += choices[i][c] * choices[i][c];
      }
      double s = (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    CHECK(r.chosen == best);
  }
}

TEST_CASE("evaluate accuracy arithmetic") {
  // Build a model-free check through the baseline path: embeddings chosen so
  // the offset of choice 0 always equals the stem offset.
  EmbeddingTable table;
  table.insert("a", {0.0, 0.0});
  table.insert("b", {1.0, 0.0});
  table.insert("c", {5.0, 5.0});
  table.insert("d", {6.0, 5.0});
  table.insert("x", {0.0, 2.0});
  table.insert("y", {2.0, 0.0});
  std::vector<AnalogyQuestion> qs;
  qs.push_back({{"a", "b"}, {{"c", "d"}, {"x", "y"}}, 0});
  qs.push_back({{"a", "b"}, {{"x", "y"}, {"c", "d"}}, 0});  // gold wrong here
  BaselineReport r = vector_offset_baseline(table, qs);
  CHECK(r.n == 2);
  CHECK(r.accuracy == doctest::Approx(0.5));  // second question picks index 1
  CHECK(r.per_question[0].chosen == 0);
  CHECK(r.per_question[1].chosen == 1);
  CHECK(r.per_question[0].scores[0] == doctest::Approx(1.0));
}

TEST_CASE("baseline flags missing words and zero offsets") {
  EmbeddingTable table;
  table.insert("a", {1.0, 1.0});
  table.insert("b", {1.0, 1.0});  // zero offset
  std::vector<AnalogyQuestion> qs;
  qs.push_back({{"a", "b"}, {{"a", "missing"}, {"b", "a"}}, 1});
  BaselineReport r = vector_offset_baseline(table, qs);
  CHECK(r.missing_words == 1);
  CHECK(r.flagged_questions == 1);
  // The missing-word choice scores -inf and is never chosen.
  CHECK(r.per_question[0].chosen == 1);
  CHECK(std::isinf(r.per_question[0].scores[0]));
}

TEST_CASE("all-zero embeddings tie-break to index 0 and set the flag") {
  EmbeddingTable table;
  for (const char* w : {"a", "b", "c", "d"})
    table.insert(w, {0.0, 0.0});
  std::vector<AnalogyQuestion> qs;
  qs.push_back({{"a", "b"}, {{"c", "d"}, {"a", "c"}}, 1});
  BaselineReport r = vector_offset_baseline(table, qs);
  CHECK(r.per_question[0].chosen == 0);
  CHECK(r.flagged_questions == 1);
}

TEST_CASE("stem offset equal to exactly one choice offset wins with score 1") {
  EmbeddingTable table;
  table.insert("h1", {0.0, 0.0});
  table.insert("t1", {2.0, 1.0});
  table.insert("h2", {1.0, 1.0});
  table.insert("t2", {3.0, 2.0});  // same offset (2, 1)
  table.insert("h3", {0.0, 0.0});
  table.insert("t3", {-1.0, 4.0});
  std::vector<AnalogyQuestion> qs;
  qs.push_back({{"h1", "t1"}, {{"h3", "t3"}, {"h2", "t2"}}, 1});
  BaselineReport r = vector_offset_baseline(table, qs);
  CHECK(r.per_question[0].chosen == 1);
  CHECK(r.per_question[0].scores[1] == doctest::Approx(1.0));
}

TEST_CASE("question records round-trip through JSON") {
  QuestionRecord rec{2, 1, {0.25, -0.5, 1.0}};
  QuestionRecord back = question_record_from_json(question_record_to_json(rec));
  CHECK(back.chosen == rec.chosen);
  CHECK(back.gold == rec.gold);
  CHECK(back.scores == rec.scores);
}

TEST_CASE("argmax is invariant to positive scaling and orthogonal maps") {
  Rng rng(47);
  oracle::Matrix q = oracle::random_orthogonal(6, 77);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> stem(6);
    for (double& v : stem) v = rng.uniform(-1, 1);
    std::vector<std::vector<double>> choices(4);
    for (auto& c : choices) {
      c.resize(6);
      for (double& v : c) v = rng.uniform(-1, 1);
    }
    size_t base = choose(stem, choices).chosen;

    auto scaled = choices;
    std::vector<double> stem_scaled = stem;
    for (auto& c : scaled)
      for (double& v : c) v *= 7.3;
    for (double& v : stem_scaled) v *= 7.3;
    CHECK(choose(stem_scaled, scaled).chosen == base);

    std::vector<double> stem_rot = oracle::apply_matrix(q, stem);
    std::vector<std::vector<double>> rot;
    for (const auto& c : choices) rot.push_back(oracle::apply_matrix(q, c));
    CHECK(choose(stem_rot, rot).chosen == base);
  }
}

TEST_CASE("a random-representation model answers 4-choice questions at chance") {
  // 1000 questions, uniform gold index, representations drawn fresh per pair:
  // accuracy must sit inside the 3-sigma band around 0.25.
  Rng rng(53);
  size_t correct = 0;
  const size_t n = 1000;
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> stem(8);
    for (double& v : stem) v = rng.uniform(-1, 1);
    std::vector<std::vector<double>> choices(4);
    for (auto& c : choices) {
      c.resize(8);
      for (double& v : c) v = rng.uniform(-1, 1);
    }
    size_t gold = rng.index(4);
    if (choose(stem, choices).chosen == gold) ++correct;
  }
  double acc = static_cast<double>(correct) / static_cast<double>(n);
  CHECK(acc >= 0.20);
  CHECK(acc <= 0.30);
}
