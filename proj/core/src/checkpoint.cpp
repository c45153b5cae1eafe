#include "kgalign/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "json.hpp"
#include "kgalign/errors.hpp"

namespace kgalign {

namespace {

using nlohmann::json;

void write_f32le(const std::filesystem::path& file, const double* data, std::size_t count) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint array: " + file.string());
  std::vector<unsigned char> bytes(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(data[i]));
    bytes[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
    bytes[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    bytes[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    bytes[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void read_f32le(const std::filesystem::path& file, double* data, std::size_t count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("missing checkpoint array file: " + file.string());
  std::vector<unsigned char> bytes(count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw DataError("checkpoint array truncated: " + file.string());
  char extra;
  if (in.read(&extra, 1))
    throw DataError("checkpoint array has trailing bytes: " + file.string());
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i + 0]) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    data[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
}

template <typename T>
T require(const json& j, const char* field) {
  if (!j.contains(field))
    throw DataError(std::string("checkpoint manifest: missing field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("checkpoint manifest: malformed field '") + field + "'");
  }
}

json array_entry(const char* name, Index rows, Index cols) {
  return json{{"name", name}, {"shape", {rows, cols}}, {"dtype", "f32le"},
              {"file", std::string(name) + ".bin"}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params,
                     const CheckpointMeta& meta) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "kgalign-checkpoint";
  manifest["version"] = 1;
  json arrays = json::array();
  arrays.push_back(array_entry("entity_embeddings", params.entities.rows(), params.entities.cols()));
  arrays.push_back(array_entry("relation_embeddings", params.relations.rows(), params.relations.cols()));
  arrays.push_back(array_entry("attention_vector", params.attention.size(), 1));
  arrays.push_back(array_entry("proxies", params.proxies.rows(), params.proxies.cols()));
  arrays.push_back(array_entry("gate_weight", params.gate_weight.rows(), params.gate_weight.cols()));
  arrays.push_back(array_entry("gate_bias", params.gate_bias.size(), 1));
  manifest["arrays"] = arrays;

  json enc;
  enc["dim"] = meta.encoder.dim;
  enc["depth"] = meta.encoder.depth;
  enc["proxy_count"] = meta.encoder.proxy_count;
  enc["dropout_rate"] = meta.encoder.dropout_rate;
  enc["add_inverse"] = meta.encoder.add_inverse;
  enc["add_self"] = meta.encoder.add_self;
  enc["relational_attention"] = meta.encoder.relational_attention;
  enc["relational_projection"] = meta.encoder.relational_projection;
  enc["multi_hop"] = meta.encoder.multi_hop;
  enc["proxy_matching"] = meta.encoder.proxy_matching;
  manifest["encoder"] = enc;

  json model;
  model["entities_g1"] = meta.n1;
  model["entities_g2"] = meta.n2;
  model["relations_g1"] = meta.rel1;
  model["relations_g2"] = meta.rel2;
  model["relations_g1_forward"] = meta.rel1_forward;
  model["relations_g2_forward"] = meta.rel2_forward;
  model["train_fraction"] = meta.train_fraction;
  model["split_seed"] = meta.split_seed;
  model["relation_raw_1"] = meta.relation_raw_1;
  model["relation_raw_2"] = meta.relation_raw_2;
  model["relation_name_1"] = meta.relation_name_1;
  model["relation_name_2"] = meta.relation_name_2;
  manifest["model"] = model;

  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';

  write_f32le(dir / "entity_embeddings.bin", params.entities.data(),
              static_cast<std::size_t>(params.entities.size()));
  write_f32le(dir / "relation_embeddings.bin", params.relations.data(),
              static_cast<std::size_t>(params.relations.size()));
  write_f32le(dir / "attention_vector.bin", params.attention.data(),
              static_cast<std::size_t>(params.attention.size()));
  write_f32le(dir / "proxies.bin", params.proxies.data(),
              static_cast<std::size_t>(params.proxies.size()));
  write_f32le(dir / "gate_weight.bin", params.gate_weight.data(),
              static_cast<std::size_t>(params.gate_weight.size()));
  write_f32le(dir / "gate_bias.bin", params.gate_bias.data(),
              static_cast<std::size_t>(params.gate_bias.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing checkpoint manifest: " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (require<std::string>(manifest, "format") != "kgalign-checkpoint")
    throw DataError("checkpoint manifest: malformed field 'format'");

  Checkpoint ckpt;
  const json enc = require<json>(manifest, "encoder");
  ckpt.meta.encoder.dim = require<Index>(enc, "dim");
  ckpt.meta.encoder.depth = require<Index>(enc, "depth");
  ckpt.meta.encoder.proxy_count = require<Index>(enc, "proxy_count");
  ckpt.meta.encoder.dropout_rate = require<double>(enc, "dropout_rate");
  ckpt.meta.encoder.add_inverse = require<bool>(enc, "add_inverse");
  ckpt.meta.encoder.add_self = require<bool>(enc, "add_self");
  ckpt.meta.encoder.relational_attention = require<bool>(enc, "relational_attention");
  ckpt.meta.encoder.relational_projection = require<bool>(enc, "relational_projection");
  ckpt.meta.encoder.multi_hop = require<bool>(enc, "multi_hop");
  ckpt.meta.encoder.proxy_matching = require<bool>(enc, "proxy_matching");

  const json model = require<json>(manifest, "model");
  ckpt.meta.n1 = require<Index>(model, "entities_g1");
  ckpt.meta.n2 = require<Index>(model, "entities_g2");
  ckpt.meta.rel1 = require<Index>(model, "relations_g1");
  ckpt.meta.rel2 = require<Index>(model, "relations_g2");
  ckpt.meta.rel1_forward = require<Index>(model, "relations_g1_forward");
  ckpt.meta.rel2_forward = require<Index>(model, "relations_g2_forward");
  ckpt.meta.train_fraction = require<double>(model, "train_fraction");
  ckpt.meta.split_seed = require<std::uint64_t>(model, "split_seed");
  ckpt.meta.relation_raw_1 = require<std::vector<std::int64_t>>(model, "relation_raw_1");
  ckpt.meta.relation_raw_2 = require<std::vector<std::int64_t>>(model, "relation_raw_2");
  ckpt.meta.relation_name_1 = require<std::vector<std::string>>(model, "relation_name_1");
  ckpt.meta.relation_name_2 = require<std::vector<std::string>>(model, "relation_name_2");

  struct Expected {
    const char* name;
    Index rows, cols;
  };
  const Index d = ckpt.meta.encoder.dim;
  const Index width = ckpt.meta.encoder.embed_width();
  const Expected expected[] = {
      {"entity_embeddings", ckpt.meta.n1 + ckpt.meta.n2, d},
      {"relation_embeddings", ckpt.meta.rel1 + ckpt.meta.rel2, d},
      {"attention_vector", d, 1},
      {"proxies", ckpt.meta.encoder.proxy_count, width},
      {"gate_weight", width, width},
      {"gate_bias", width, 1},
  };

  const json arrays = require<json>(manifest, "arrays");
  if (!arrays.is_array() || arrays.size() != std::size(expected))
    throw DataError("checkpoint manifest: malformed field 'arrays'");
  for (std::size_t i = 0; i < std::size(expected); ++i) {
    const json& entry = arrays.at(i);
    if (require<std::string>(entry, "name") != expected[i].name)
      throw DataError(std::string("checkpoint manifest: unexpected array order, wanted '") +
                      expected[i].name + "'");
    if (require<std::string>(entry, "dtype") != "f32le")
      throw DataError(std::string("checkpoint manifest: malformed field 'dtype' for ") +
                      expected[i].name);
    const auto shape = require<std::vector<Index>>(entry, "shape");
    if (shape.size() != 2 || shape[0] != expected[i].rows || shape[1] != expected[i].cols)
      throw DataError(std::string("checkpoint manifest: malformed field 'shape' for ") +
                      expected[i].name);
  }

  ParameterSet& p = ckpt.params;
  p.entities.resize(expected[0].rows, expected[0].cols);
  p.relations.resize(expected[1].rows, expected[1].cols);
  p.attention.resize(expected[2].rows);
  p.proxies.resize(expected[3].rows, expected[3].cols);
  p.gate_weight.resize(expected[4].rows, expected[4].cols);
  p.gate_bias.resize(expected[5].rows);

  read_f32le(dir / "entity_embeddings.bin", p.entities.data(),
             static_cast<std::size_t>(p.entities.size()));
  read_f32le(dir / "relation_embeddings.bin", p.relations.data(),
             static_cast<std::size_t>(p.relations.size()));
  read_f32le(dir / "attention_vector.bin", p.attention.data(),
             static_cast<std::size_t>(p.attention.size()));
  read_f32le(dir / "proxies.bin", p.proxies.data(), static_cast<std::size_t>(p.proxies.size()));
  read_f32le(dir / "gate_weight.bin", p.gate_weight.data(),
             static_cast<std::size_t>(p.gate_weight.size()));
  read_f32le(dir / "gate_bias.bin", p.gate_bias.data(),
             static_cast<std::size_t>(p.gate_bias.size()));
  return ckpt;
}

}  // namespace kgalign
