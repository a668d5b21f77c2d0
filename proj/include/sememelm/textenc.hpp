#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sememelm/autodiff.hpp"
#include "sememelm/lexicon.hpp"
#include "sememelm/rng.hpp"

namespace sememelm::textenc {

inline constexpr const char* kMaskToken = "<mask>";
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr size_t kDefaultMaxTokens = 64;

// "I finally discovered the relation between <head> and <tail> : <mask>"
std::string render_template(std::string_view head, std::string_view tail);

struct TokenizedPrompt {
  std::vector<std::string> tokens;  // case-folded
  size_t mask_index = 0;
  std::pair<size_t, size_t> head_span{0, 0};  // inclusive token range
  std::pair<size_t, size_t> tail_span{0, 0};
};

// Whitespace tokenization of a rendered template. Spans are recovered
// structurally (fixed six-token preamble, first "and" separator, ": <mask>"
// suffix). Prompts longer than max_tokens are truncated from the left; the
// mask always survives, a fully truncated word span is an error.
TokenizedPrompt tokenize(std::string_view sentence,
                         size_t max_tokens = kDefaultMaxTokens);

// Case-folded token ids; unknown tokens map to <unk>.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, uint32_t> ids;
  uint32_t unk_id = 0;
  uint32_t mask_id = 0;

  uint32_t id_of(std::string_view token) const;
  size_t size() const { return tokens.size(); }

  // Template scaffold + <mask> + <unk> + the lexicon's words in file order.
  static Vocabulary build(const Lexicon& lexicon);
};

struct EncoderParams {
  ad::Tensor token_embeddings;     // [vocab, dim]
  ad::Tensor position_embeddings;  // [max_len, dim]
  ad::Tensor mixer_w1;             // [dim, dim]
  ad::Tensor mixer_b1;             // [dim]
  ad::Tensor mixer_w2;             // [dim, dim]
  ad::Tensor mixer_b2;             // [dim]
  double leaky_slope = 0.2;
  size_t dim = 0;
  size_t max_len = 0;

  static EncoderParams init(size_t vocab_size, size_t dim, size_t max_len,
                            double leaky_slope, Rng& rng);
};

struct PromptEncoding {
  ad::Tensor token_states;  // [T, dim]
  ad::Tensor mask_state;    // [1, dim] — h_m, the relation representation
  ad::Tensor head_state;    // [dim] — mean over the head span
  ad::Tensor tail_state;    // [dim]
};

// Per-token state: mixer(embed(token) + pos(index) + mean of all token
// embeds). The global-mean term is what lets the mask position see both
// words; the mixer is two affine maps with a LeakyReLU between.
PromptEncoding encode(const EncoderParams& params, const Vocabulary& vocab,
                      const TokenizedPrompt& prompt);

}  // namespace sememelm::textenc
