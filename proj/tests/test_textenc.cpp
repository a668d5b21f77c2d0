#include <doctest.h>

#include <cmath>

#include "sememelm/error.hpp"
#include "sememelm/textenc.hpp"

using namespace sememelm;
using namespace sememelm::textenc;

namespace {

Lexicon tiny_lexicon(const std::vector<std::string>& words) {
  SememeInventory inv;
  SememeId s = inv.intern_sememe("x");
  Lexicon lex;
  for (const auto& w : words) lex.add({w, {{s}}});
  return lex;
}

}  // namespace

TEST_CASE("render_template substitutes literally") {
  CHECK(render_template("ceramics", "teacups") ==
        "I finally discovered the relation between ceramics and teacups : "
        "<mask>");
  CHECK(render_template("a", "b") ==
        "I finally discovered the relation between a and b : <mask>");
  CHECK_THROWS_AS(render_template("", "x"), Error);
  CHECK_THROWS_AS(render_template("  ", "x"), Error);
}

TEST_CASE("the rendered prompt tokenizes to 11 tokens with known spans") {
  TokenizedPrompt p = tokenize(render_template("bee", "honey"));
  CHECK(p.tokens.size() == 11);
  CHECK(p.mask_index == 10);
  CHECK(p.head_span == std::pair<size_t, size_t>{6, 6});
  CHECK(p.tail_span == std::pair<size_t, size_t>{8, 8});
  CHECK(p.tokens[6] == "bee");
  CHECK(p.tokens[0] == "i");  // case-folded
}

TEST_CASE("multi-word terms widen their spans") {
  TokenizedPrompt p = tokenize(render_template("goose feather", "coat"));
  CHECK(p.head_span == std::pair<size_t, size_t>{6, 7});
  CHECK(p.tail_span == std::pair<size_t, size_t>{9, 9});
  CHECK(p.tokens[p.mask_index] == kMaskToken);
}

TEST_CASE("long prompts truncate from the left and keep the mask") {
  std::string head;
  for (int i = 0; i < 70; ++i) head += "h" + std::to_string(i) + " ";
  TokenizedPrompt p = tokenize(render_template(head, "tail"), 64);
  CHECK(p.tokens.size() == 64);
  CHECK(p.mask_index == 63);
  CHECK(p.tokens[p.mask_index] == kMaskToken);
  // The preamble is gone entirely and the head span was clipped at zero.
  CHECK(p.head_span.first == 0);
  CHECK(p.tokens[p.tail_span.first] == "tail");
}

TEST_CASE("a span truncated away is an error") {
  std::string tail;
  for (int i = 0; i < 70; ++i) tail += "t" + std::to_string(i) + " ";
  CHECK_THROWS_WITH_AS(tokenize(render_template("head", tail), 64),
                       doctest::Contains("unresolvable"), Error);
}

TEST_CASE("vocabulary holds scaffold, mask, unk, then lexicon words") {
  Vocabulary v = Vocabulary::build(tiny_lexicon({"Bee", "honey"}));
  CHECK(v.id_of("i") == 0);
  CHECK(v.tokens[v.mask_id] == kMaskToken);
  CHECK(v.tokens[v.unk_id] == kUnkToken);
  CHECK(v.id_of("bee") == v.id_of("BEE"));  // case-folded lookup
  CHECK(v.id_of("никогда") == v.unk_id);    // unknown falls back
}

TEST_CASE("h_m equals the token-state row at the mask position") {
  Lexicon lex = tiny_lexicon({"bee", "honey"});
  Vocabulary vocab = Vocabulary::build(lex);
  Rng rng(5);
  EncoderParams params = EncoderParams::init(vocab.size(), 8, 16, 0.2, rng);
  TokenizedPrompt prompt = tokenize(render_template("bee", "honey"), 16);
  PromptEncoding enc = encode(params, vocab, prompt);
  const size_t d = 8;
  for (size_t c = 0; c < d; ++c)
    CHECK(enc.mask_state.values()[c] ==
          enc.token_states.values()[prompt.mask_index * d + c]);
}

TEST_CASE("identity mixer reduces the token state to embed + pos + mean") {
  Lexicon lex = tiny_lexicon({"bee", "honey"});
  Vocabulary vocab = Vocabulary::build(lex);
  const size_t d = 4;
  Rng rng(6);
  EncoderParams params = EncoderParams::init(vocab.size(), d, 16, 0.2, rng);
  // Non-negative embeddings so the LeakyReLU is a no-op, identity affine
  // maps, zero position table.
  std::vector<double> tok(vocab.size() * d);
  Rng vrng(7);
  for (double& v : tok) v = vrng.uniform(0.0, 1.0);
  params.token_embeddings = ad::Tensor::parameter({vocab.size(), d}, tok);
  params.position_embeddings =
      ad::Tensor::parameter({16, d}, std::vector<double>(16 * d, 0.0));
  std::vector<double> eye(d * d, 0.0);
  for (size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
  params.mixer_w1 = ad::Tensor::parameter({d, d}, eye);
  params.mixer_w2 = ad::Tensor::parameter({d, d}, eye);

  TokenizedPrompt prompt = tokenize(render_template("bee", "honey"), 16);
  PromptEncoding enc = encode(params, vocab, prompt);

  // Oracle: h_head = embed(bee) + mean of all token embeds.
  std::vector<double> mean(d, 0.0);
  for (const std::string& t : prompt.tokens) {
    size_t row = vocab.id_of(t);
    for (size_t c = 0; c < d; ++c) mean[c] += tok[row * d + c];
  }
  for (double& v : mean) v /= static_cast<double>(prompt.tokens.size());
  size_t bee = vocab.id_of("bee");
  for (size_t c = 0; c < d; ++c)
    CHECK(enc.head_state.values()[c] ==
          doctest::Approx(tok[bee * d + c] + mean[c]).epsilon(1e-12));
}

TEST_CASE("changing the tail changes the mask state") {
  Lexicon lex = tiny_lexicon({"bee", "honey", "wax"});
  Vocabulary vocab = Vocabulary::build(lex);
  Rng rng(8);
  EncoderParams params = EncoderParams::init(vocab.size(), 8, 16, 0.2, rng);
  PromptEncoding a =
      encode(params, vocab, tokenize(render_template("bee", "honey"), 16));
  PromptEncoding b =
      encode(params, vocab, tokenize(render_template("bee", "wax"), 16));
  bool differs = false;
  for (size_t c = 0; c < 8; ++c)
    if (a.mask_state.values()[c] != b.mask_state.values()[c]) differs = true;
  CHECK(differs);
}

TEST_CASE("identical prompts encode bitwise identically") {
  Lexicon lex = tiny_lexicon({"bee", "honey"});
  Vocabulary vocab = Vocabulary::build(lex);
  Rng rng(9);
  EncoderParams params = EncoderParams::init(vocab.size(), 8, 16, 0.2, rng);
  TokenizedPrompt prompt = tokenize(render_template("bee", "honey"), 16);
  PromptEncoding a = encode(params, vocab, prompt);
  PromptEncoding b = encode(params, vocab, prompt);
  CHECK(a.mask_state.values() == b.mask_state.values());
  CHECK(a.head_state.values() == b.head_state.values());
}

TEST_CASE("prompts beyond max_len are rejected by encode") {
  Lexicon lex = tiny_lexicon({"bee"});
  Vocabulary vocab = Vocabulary::build(lex);
  Rng rng(10);
  EncoderParams params = EncoderParams::init(vocab.size(), 4, 8, 0.2, rng);
  TokenizedPrompt prompt = tokenize(render_template("bee", "bee"));  // 11 > 8
  CHECK_THROWS_AS(encode(params, vocab, prompt), Error);
}

TEST_CASE("encoder gradients pass the finite-difference check") {
  Lexicon lex = tiny_lexicon({"bee", "honey"});
  Vocabulary vocab = Vocabulary::build(lex);
  Rng rng(11);
  EncoderParams params = EncoderParams::init(vocab.size(), 6, 16, 0.2, rng);
  TokenizedPrompt prompt = tokenize(render_template("bee", "honey"), 16);
  auto fn = [&]() {
    PromptEncoding enc = encode(params, vocab, prompt);
    ad::Tensor mix = ad::add(ad::mean_rows(enc.mask_state),
                             ad::add(enc.head_state, enc.tail_state));
    return ad::dot(mix, mix);
  };
  std::vector<ad::Tensor> plist{params.token_embeddings,
                                params.position_embeddings,
                                params.mixer_w1,
                                params.mixer_b1,
                                params.mixer_w2,
                                params.mixer_b2};
  CHECK(ad::grad_check(fn, plist, 1e-5) < 1e-4);
}

TEST_CASE("render output contains head and tail exactly once") {
  std::string s = render_template("zebra", "stripes");
  auto count = [&](const std::string& needle) {
    size_t c = 0, pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
      ++c;
      pos += needle.size();
    }
    return c;
  };
  CHECK(count("zebra") == 1);
  CHECK(count("stripes") == 1);
}
