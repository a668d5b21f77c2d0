#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sememelm/rng.hpp"

namespace sememelm {

using SememeId = uint32_t;
using RelationTypeId = uint32_t;

// Interned sememe and relation-type vocabularies. Ids are dense and assigned
// in first-seen order, so two parses of byte-identical input agree.
class SememeInventory {
 public:
  SememeId intern_sememe(std::string_view label);
  RelationTypeId intern_relation(std::string_view label);
  std::optional<SememeId> find_sememe(std::string_view label) const;
  std::optional<RelationTypeId> find_relation(std::string_view label) const;
  const std::string& sememe_label(SememeId id) const;
  const std::string& relation_label(RelationTypeId id) const;
  size_t sememe_count() const { return sememe_labels_.size(); }
  size_t relation_type_count() const { return relation_labels_.size(); }

 private:
  std::vector<std::string> sememe_labels_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, uint32_t> sememe_ids_;
  std::unordered_map<std::string, uint32_t> relation_ids_;
};

// One word with its per-sense sememe sets. Sense order follows the input;
// each sense set is stored sorted and deduplicated.
struct WordEntry {
  std::string word;
  std::vector<std::vector<SememeId>> senses;
};

struct Lexicon {
  std::vector<WordEntry> entries;
  std::unordered_map<std::string, size_t> by_word;

  const WordEntry* find(std::string_view word) const;
  void add(WordEntry entry);  // fails on duplicate word
};

// One line per record: {"word": str, "senses": [[str, ...], ...]}.
Lexicon parse_lexicon(std::istream& in, SememeInventory& inventory);

struct RelationTriple {
  SememeId head;
  RelationTypeId relation;
  SememeId tail;
};

// head<TAB>relation<TAB>tail per non-empty line. Sememes and relation types
// not seen before are added to the inventory.
std::vector<RelationTriple> parse_relation_triples(std::istream& in,
                                                   SememeInventory& inventory);

enum class SememeSetMode { kIntersection, kUnion };

// Sememes shared by every sense (or the union of all senses in kUnion mode),
// sorted ascending. Empty is a normal result and selects the degenerate
// encoder-only path downstream.
std::vector<SememeId> sememe_set(const WordEntry& entry,
                                 SememeSetMode mode = SememeSetMode::kIntersection);

// Dense label -> vector table parsed from "label v1 ... vD" lines.
struct EmbeddingTable {
  size_t dimension = 0;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::unordered_map<std::string, size_t> index;

  const std::vector<double>* find(std::string_view label) const;
  void insert(std::string label, std::vector<double> row);
};

EmbeddingTable load_embeddings(std::istream& in);

// Initial graph-node vectors. Labels missing from the table are imputed from
// a seeded uniform(-0.05, 0.05) draw keyed by (seed, label), cached so that
// repeated lookups agree, and recorded for audit.
class NodeInitSource {
 public:
  NodeInitSource(const EmbeddingTable& table, uint64_t seed)
      : table_(&table), seed_(seed) {}

  const std::vector<double>& get(const std::string& label);
  size_t dimension() const { return table_->dimension; }
  const std::vector<std::string>& imputed_labels() const { return imputed_; }

 private:
  const EmbeddingTable* table_;
  uint64_t seed_;
  std::unordered_map<std::string, std::vector<double>> cache_;
  std::vector<std::string> imputed_;
};

// Round-trip serializers (formats identical to what the parsers accept).
std::string serialize_lexicon(const SememeInventory& inventory,
                              const Lexicon& lexicon);
std::string serialize_triples(const SememeInventory& inventory,
                              const std::vector<RelationTriple>& triples);

}  // namespace sememelm
