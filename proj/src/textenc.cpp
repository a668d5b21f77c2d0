#include "sememelm/textenc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sememelm/error.hpp"

namespace sememelm::textenc {

namespace {

const std::vector<std::string> kPreamble = {"i",        "finally", "discovered",
                                            "the",      "relation", "between"};

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

}  // namespace

std::string render_template(std::string_view head, std::string_view tail) {
  std::string h = trim(head), t = trim(tail);
  require(!h.empty(), "render_template: empty head word");
  require(!t.empty(), "render_template: empty tail word");
  std::string out = "I finally discovered the relation between ";
  out += h;
  out += " and ";
  out += t;
  out += " : ";
  out += kMaskToken;
  return out;
}

TokenizedPrompt tokenize(std::string_view sentence, size_t max_tokens) {
  std::vector<std::string> raw = split_ws(sentence);
  require(raw.size() >= kPreamble.size() + 5,
          "tokenize: sentence too short for the template");
  for (std::string& t : raw) t = fold_case(t);

  // Suffix must be ": <mask>".
  const size_t n = raw.size();
  require(raw[n - 1] == kMaskToken && raw[n - 2] == ":",
          "tokenize: sentence does not end with ': ", kMaskToken, "'");
  for (size_t i = 0; i < kPreamble.size(); ++i)
    require(raw[i] == kPreamble[i], "tokenize: template preamble mismatch at '",
            raw[i], "'");

  // Middle is HEAD and TAIL joined by the first standalone "and". Words that
  // themselves contain " and " are mis-split; the template gives no way to
  // tell, so the first separator wins.
  const size_t mid_begin = kPreamble.size();
  const size_t mid_end = n - 2;  // exclusive
  size_t sep = mid_end;
  for (size_t i = mid_begin + 1; i + 1 < mid_end; ++i) {
    if (raw[i] == "and") {
      sep = i;
      break;
    }
  }
  require(sep != mid_end && sep > mid_begin && sep + 1 < mid_end,
          "tokenize: unresolvable span (no head/tail separator)");

  TokenizedPrompt prompt;
  prompt.tokens = raw;
  prompt.mask_index = n - 1;
  prompt.head_span = {mid_begin, sep - 1};
  prompt.tail_span = {sep + 1, mid_end - 1};

  if (n > max_tokens) {
    const size_t drop = n - max_tokens;
    require(drop <= prompt.mask_index, "tokenize: mask would be truncated");
    prompt.tokens.erase(prompt.tokens.begin(),
                        prompt.tokens.begin() + static_cast<ptrdiff_t>(drop));
    prompt.mask_index -= drop;
    auto shift_span = [&](std::pair<size_t, size_t>& span, const char* which) {
      require(span.second >= drop, "tokenize: unresolvable ", which,
              " span after truncation");
      span.second -= drop;
      span.first = span.first >= drop ? span.first - drop : 0;
    };
    shift_span(prompt.head_span, "head");
    shift_span(prompt.tail_span, "tail");
  }
  return prompt;
}

uint32_t Vocabulary::id_of(std::string_view token) const {
  auto it = ids.find(fold_case(token));
  return it == ids.end() ? unk_id : it->second;
}

Vocabulary Vocabulary::build(const Lexicon& lexicon) {
  Vocabulary v;
  auto add = [&](const std::string& tok) {
    if (v.ids.emplace(tok, static_cast<uint32_t>(v.tokens.size())).second)
      v.tokens.push_back(tok);
  };
  for (const std::string& t : kPreamble) add(t);
  add("and");
  add(":");
  add(kMaskToken);
  add(kUnkToken);
  v.mask_id = v.ids.at(kMaskToken);
  v.unk_id = v.ids.at(kUnkToken);
  for (const WordEntry& e : lexicon.entries)
    for (const std::string& part : split_ws(e.word)) add(fold_case(part));
  return v;
}

EncoderParams EncoderParams::init(size_t vocab_size, size_t dim, size_t max_len,
                                  double leaky_slope, Rng& rng) {
  require(vocab_size > 0 && dim > 0 && max_len > 0,
          "encoder: vocab, dim and max_len must be positive");
  EncoderParams p;
  p.dim = dim;
  p.max_len = max_len;
  p.leaky_slope = leaky_slope;
  auto table = [&](size_t rows, double stddev) {
    std::vector<double> v(rows * dim);
    for (double& x : v) x = rng.normal(0.0, stddev);
    return ad::Tensor::parameter({rows, dim}, std::move(v));
  };
  p.token_embeddings = table(vocab_size, 0.02);
  p.position_embeddings = table(max_len, 0.02);
  double bound = std::sqrt(6.0 / static_cast<double>(dim + dim));
  auto affine = [&]() {
    std::vector<double> v(dim * dim);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return ad::Tensor::parameter({dim, dim}, std::move(v));
  };
  p.mixer_w1 = affine();
  p.mixer_b1 = ad::Tensor::parameter({dim}, std::vector<double>(dim, 0.0));
  p.mixer_w2 = affine();
  p.mixer_b2 = ad::Tensor::parameter({dim}, std::vector<double>(dim, 0.0));
  return p;
}

PromptEncoding encode(const EncoderParams& params, const Vocabulary& vocab,
                      const TokenizedPrompt& prompt) {
  const size_t T = prompt.tokens.size();
  require(T > 0, "encode: empty prompt");
  require(T <= params.max_len, "encode: prompt length ", T,
          " exceeds max length ", params.max_len);
  require(prompt.mask_index < T, "encode: mask index out of range");

  std::vector<size_t> token_ids(T), positions(T);
  for (size_t i = 0; i < T; ++i) {
    token_ids[i] = vocab.id_of(prompt.tokens[i]);
    positions[i] = i;
  }

  ad::Tensor embeds = ad::select_rows(params.token_embeddings, token_ids);
  ad::Tensor pos = ad::select_rows(params.position_embeddings, positions);
  ad::Tensor mean_embed = ad::mean_rows(embeds);  // [dim]

  // Replicate the mean and biases to one row per token; gradient folds back
  // additively through concat_rows.
  std::vector<ad::Tensor> mean_rows_rep(T, mean_embed);
  ad::Tensor mean_block = ad::concat_rows(mean_rows_rep);
  ad::Tensor mixed_in = ad::add(ad::add(embeds, pos), mean_block);

  std::vector<ad::Tensor> b1_rep(T, params.mixer_b1);
  std::vector<ad::Tensor> b2_rep(T, params.mixer_b2);
  ad::Tensor hidden = ad::leaky_relu(
      ad::add(ad::matmul(mixed_in, params.mixer_w1), ad::concat_rows(b1_rep)),
      params.leaky_slope);
  ad::Tensor states =
      ad::add(ad::matmul(hidden, params.mixer_w2), ad::concat_rows(b2_rep));

  auto span_rows = [&](std::pair<size_t, size_t> span) {
    require(span.first <= span.second && span.second < T,
            "encode: span out of range");
    std::vector<size_t> rows;
    for (size_t i = span.first; i <= span.second; ++i) rows.push_back(i);
    return rows;
  };

  PromptEncoding out;
  out.token_states = states;
  out.mask_state = ad::select_rows(states, {prompt.mask_index});
  out.head_state = ad::mean_rows(ad::select_rows(states, span_rows(prompt.head_span)));
  out.tail_state = ad::mean_rows(ad::select_rows(states, span_rows(prompt.tail_span)));
  return out;
}

}  // namespace sememelm::textenc
