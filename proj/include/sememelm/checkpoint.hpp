#pragma once

#include <string>

#include <json.hpp>

#include "sememelm/model.hpp"

namespace sememelm {

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kBundleVersion = 1;

// Versioned JSON checkpoint: config snapshot, seed, and the parameter
// sections "gat", "textenc" (with the vocabulary) and "projections", each
// array stored row-major with its shape. Save -> load -> save is
// byte-identical; versions above the current one are rejected.
nlohmann::ordered_json checkpoint_to_json(const RelationModel& model);
RelationModel checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const RelationModel& model, const std::string& path);
// Compact binary container (CBOR of the same document behind a magic
// header). JSON stays the normative format; loading sniffs the header.
void save_checkpoint_binary(const RelationModel& model,
                            const std::string& path);
RelationModel load_checkpoint(const std::string& path);

// Graph bundle: inventory, lexicon and triples in one versioned JSON file;
// the graph itself is rebuilt deterministically on load.
nlohmann::ordered_json bundle_to_json(const SememeInventory& inventory,
                                      const Lexicon& lexicon,
                                      const std::vector<RelationTriple>& triples);
void save_bundle(const SememeInventory& inventory, const Lexicon& lexicon,
                 const std::vector<RelationTriple>& triples,
                 const std::string& path);
// Fills inventory/lexicon/triples of an existing context (graph and node
// init still need finalize()).
void load_bundle_into(GraphContext& context, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace sememelm
