#include "sememelm/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "sememelm/error.hpp"

namespace sememelm {

using nlohmann::json;

// ---- SememeInventory ----

SememeId SememeInventory::intern_sememe(std::string_view label) {
  require(!label.empty(), "inventory: empty sememe label");
  auto it = sememe_ids_.find(std::string(label));
  if (it != sememe_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(sememe_labels_.size());
  sememe_labels_.emplace_back(label);
  sememe_ids_.emplace(std::string(label), id);
  return id;
}

RelationTypeId SememeInventory::intern_relation(std::string_view label) {
  require(!label.empty(), "inventory: empty relation-type label");
  auto it = relation_ids_.find(std::string(label));
  if (it != relation_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(relation_labels_.size());
  relation_labels_.emplace_back(label);
  relation_ids_.emplace(std::string(label), id);
  return id;
}

std::optional<SememeId> SememeInventory::find_sememe(
    std::string_view label) const {
  auto it = sememe_ids_.find(std::string(label));
  if (it == sememe_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationTypeId> SememeInventory::find_relation(
    std::string_view label) const {
  auto it = relation_ids_.find(std::string(label));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& SememeInventory::sememe_label(SememeId id) const {
  require(id < sememe_labels_.size(), "inventory: sememe id ", id,
          " out of range");
  return sememe_labels_[id];
}

const std::string& SememeInventory::relation_label(RelationTypeId id) const {
  require(id < relation_labels_.size(), "inventory: relation-type id ", id,
          " out of range");
  return relation_labels_[id];
}

// ---- Lexicon ----

const WordEntry* Lexicon::find(std::string_view word) const {
  auto it = by_word.find(std::string(word));
  if (it == by_word.end()) return nullptr;
  return &entries[it->second];
}

void Lexicon::add(WordEntry entry) {
  require(by_word.find(entry.word) == by_word.end(), "lexicon: duplicate word '",
          entry.word, "'");
  by_word.emplace(entry.word, entries.size());
  entries.push_back(std::move(entry));
}

Lexicon parse_lexicon(std::istream& in, SememeInventory& inventory) {
  Lexicon lexicon;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      fail("lexicon line ", line_no, ": malformed JSON: ", e.what());
    }
    require(record.is_object() && record.contains("word") &&
                record.contains("senses"),
            "lexicon line ", line_no, ": expected {\"word\", \"senses\"}");
    require(record["word"].is_string(), "lexicon line ", line_no,
            ": \"word\" must be a string");
    WordEntry entry;
    entry.word = record["word"].get<std::string>();
    require(!entry.word.empty(), "lexicon line ", line_no, ": empty word");
    const json& senses = record["senses"];
    require(senses.is_array() && !senses.empty(), "lexicon line ", line_no,
            ": word '", entry.word, "' has an empty sense list");
    for (const json& sense : senses) {
      require(sense.is_array() && !sense.empty(), "lexicon line ", line_no,
              ": word '", entry.word, "' has an empty sense");
      std::vector<SememeId> ids;
      for (const json& s : sense) {
        require(s.is_string(), "lexicon line ", line_no,
                ": sememe labels must be strings");
        ids.push_back(inventory.intern_sememe(s.get<std::string>()));
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      entry.senses.push_back(std::move(ids));
    }
    try {
      lexicon.add(std::move(entry));
    } catch (const Error& e) {
      fail("lexicon line ", line_no, ": ", e.what());
    }
  }
  return lexicon;
}

// ---- triples ----

std::vector<RelationTriple> parse_relation_triples(std::istream& in,
                                                   SememeInventory& inventory) {
  std::vector<RelationTriple> triples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos
                                              ? std::string::npos
                                              : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    require(fields.size() == 3, "triples line ", line_no, ": expected 3 fields, got ",
            fields.size());
    for (const auto& f : fields)
      require(!f.empty(), "triples line ", line_no, ": empty field");
    RelationTriple t;
    t.head = inventory.intern_sememe(fields[0]);
    t.relation = inventory.intern_relation(fields[1]);
    t.tail = inventory.intern_sememe(fields[2]);
    triples.push_back(t);
  }
  return triples;
}

// ---- sememe sets ----

std::vector<SememeId> sememe_set(const WordEntry& entry, SememeSetMode mode) {
  require(!entry.senses.empty(), "sememe_set: word '", entry.word,
          "' has no senses");
  std::vector<SememeId> acc = entry.senses[0];  // already sorted unique
  for (size_t i = 1; i < entry.senses.size(); ++i) {
    std::vector<SememeId> next;
    if (mode == SememeSetMode::kIntersection) {
      std::set_intersection(acc.begin(), acc.end(), entry.senses[i].begin(),
                            entry.senses[i].end(), std::back_inserter(next));
    } else {
      std::set_union(acc.begin(), acc.end(), entry.senses[i].begin(),
                     entry.senses[i].end(), std::back_inserter(next));
    }
    acc = std::move(next);
  }
  return acc;
}

// ---- embeddings ----

const std::vector<double>* EmbeddingTable::find(std::string_view label) const {
  auto it = index.find(std::string(label));
  if (it == index.end()) return nullptr;
  return &rows[it->second];
}

void EmbeddingTable::insert(std::string label, std::vector<double> row) {
  require(index.find(label) == index.end(), "embeddings: duplicate label '",
          label, "'");
  if (dimension == 0 && rows.empty()) dimension = row.size();
  require(row.size() == dimension, "embeddings: label '", label, "' has ",
          row.size(), " values, expected ", dimension);
  for (double v : row)
    require(std::isfinite(v), "embeddings: non-finite value for '", label, "'");
  index.emplace(label, rows.size());
  labels.push_back(std::move(label));
  rows.push_back(std::move(row));
}

EmbeddingTable load_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label;
    ls >> label;
    require(!label.empty(), "embeddings line ", line_no, ": missing label");
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      require(end == tok.c_str() + tok.size(), "embeddings line ", line_no,
              ": non-numeric token '", tok, "'");
      require(std::isfinite(v), "embeddings line ", line_no,
              ": non-finite value '", tok, "'");
      row.push_back(v);
    }
    require(!row.empty(), "embeddings line ", line_no, ": no values for '",
            label, "'");
    if (table.dimension != 0 || !table.rows.empty())
      require(row.size() == table.dimension, "embeddings line ", line_no,
              ": dimension ", row.size(), " differs from ", table.dimension);
    try {
      table.insert(std::move(label), std::move(row));
    } catch (const Error& e) {
      fail("embeddings line ", line_no, ": ", e.what());
    }
  }
  return table;
}

const std::vector<double>& NodeInitSource::get(const std::string& label) {
  if (const std::vector<double>* row = table_->find(label)) return *row;
  auto it = cache_.find(label);
  if (it != cache_.end()) return it->second;
  Rng rng(Rng::mix(seed_, Rng::hash_string(label)));
  std::vector<double> row(table_->dimension);
  for (double& v : row) v = rng.uniform(-0.05, 0.05);
  imputed_.push_back(label);
  return cache_.emplace(label, std::move(row)).first->second;
}

// ---- serializers ----

std::string serialize_lexicon(const SememeInventory& inventory,
                              const Lexicon& lexicon) {
  std::string out;
  for (const WordEntry& entry : lexicon.entries) {
    nlohmann::ordered_json senses = nlohmann::ordered_json::array();
    for (const auto& sense : entry.senses) {
      nlohmann::ordered_json labels = nlohmann::ordered_json::array();
      for (SememeId id : sense) labels.push_back(inventory.sememe_label(id));
      senses.push_back(std::move(labels));
    }
    nlohmann::ordered_json record;
    record["word"] = entry.word;
    record["senses"] = std::move(senses);
    out += record.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_triples(const SememeInventory& inventory,
                              const std::vector<RelationTriple>& triples) {
  std::string out;
  for (const RelationTriple& t : triples) {
    out += inventory.sememe_label(t.head);
    out += '\t';
    out += inventory.relation_label(t.relation);
    out += '\t';
    out += inventory.sememe_label(t.tail);
    out += '\n';
  }
  return out;
}

}  // namespace sememelm
