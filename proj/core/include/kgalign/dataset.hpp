#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgalign/graph.hpp"

namespace kgalign {

/// Raw identifiers and display names as read from the id files, kept for
/// reporting only; all computation uses the dense 0-based indices.
struct RawIdMaps {
  std::vector<std::int64_t> entity_raw_1, entity_raw_2;
  std::vector<std::string> entity_name_1, entity_name_2;
  std::vector<std::int64_t> relation_raw_1, relation_raw_2;
  std::vector<std::string> relation_name_1, relation_name_2;
};

struct LoadedDataset {
  KnowledgeGraph g1, g2;
  std::vector<EntityPair> ref_pairs;  // all aligned pairs, dense indices
  RawIdMaps ids;
  std::vector<std::string> warnings;
};

// Reads the tab-separated layout: ent_ids_{1,2}, rel_ids_{1,2},
// triples_{1,2}, ref_ent_ids. Raw ids are re-mapped to dense 0-based indices
// in file order. Missing files, malformed lines (with line number) and
// references to unknown raw ids raise DataError. An empty ref file loads
// with a warning.
LoadedDataset load_dataset(const std::filesystem::path& dir);

// load_dataset followed by split_seeds over the reference pairs.
GraphPair split_reference(const LoadedDataset& data, double train_fraction,
                          std::uint64_t rng_seed);

// Writes the same layout back (identity raw ids when maps is null). Used by
// the synthetic generator and for debug dumps.
void write_dataset(const std::filesystem::path& dir, const KnowledgeGraph& g1,
                   const KnowledgeGraph& g2, const std::vector<EntityPair>& all_pairs,
                   const RawIdMaps* maps = nullptr);

}  // namespace kgalign
