#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgalign/encoder.hpp"

namespace kgalign {

/// Everything needed to rebuild the model around a saved ParameterSet.
struct CheckpointMeta {
  EncoderConfig encoder;
  Index n1 = 0, n2 = 0;                      // entity counts per graph
  Index rel1 = 0, rel2 = 0;                  // effective relation counts
  Index rel1_forward = 0, rel2_forward = 0;  // original relation counts
  double train_fraction = 0.3;               // reference split used at training
  std::uint64_t split_seed = 0;
  std::vector<std::int64_t> relation_raw_1, relation_raw_2;
  std::vector<std::string> relation_name_1, relation_name_2;
};

struct Checkpoint {
  ParameterSet params;
  CheckpointMeta meta;
};

// Directory layout: manifest.json (array names, shapes, dtype "f32le", model
// meta) plus one raw little-endian float32 file per array, row-major.
// save(load(dir)) reproduces the files bit-exactly.
void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params,
                     const CheckpointMeta& meta);

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace kgalign
