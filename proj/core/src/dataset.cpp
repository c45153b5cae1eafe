#include "kgalign/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "kgalign/errors.hpp"

namespace kgalign {
namespace {

std::ifstream open_or_throw(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open dataset file: " + file.string());
  return in;
}

std::int64_t parse_id(std::string_view field, const std::filesystem::path& file, long line) {
  std::int64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw DataError(file.filename().string() + ":" + std::to_string(line) +
                    ": malformed id '" + std::string(field) + "'");
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

struct IdTable {
  std::vector<std::int64_t> raw;
  std::vector<std::string> names;
  std::unordered_map<std::int64_t, Index> dense;
};

IdTable read_id_file(const std::filesystem::path& file) {
  IdTable table;
  std::ifstream in = open_or_throw(file);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.empty() || fields.size() > 2)
      throw DataError(file.filename().string() + ":" + std::to_string(lineno) +
                      ": expected '<raw_id>\\t<name>'");
    const std::int64_t raw = parse_id(fields[0], file, lineno);
    if (!table.dense.emplace(raw, static_cast<Index>(table.raw.size())).second)
      throw DataError(file.filename().string() + ":" + std::to_string(lineno) +
                      ": duplicate raw id " + std::to_string(raw));
    table.raw.push_back(raw);
    table.names.emplace_back(fields.size() == 2 ? std::string(fields[1]) : std::string());
  }
  return table;
}

Index lookup(const IdTable& table, std::int64_t raw, const std::filesystem::path& file,
             long line) {
  const auto it = table.dense.find(raw);
  if (it == table.dense.end())
    throw DataError(file.filename().string() + ":" + std::to_string(line) +
                    ": unknown raw id " + std::to_string(raw));
  return it->second;
}

std::vector<Triple> read_triples(const std::filesystem::path& file, const IdTable& entities,
                                 const IdTable& relations) {
  std::vector<Triple> triples;
  std::ifstream in = open_or_throw(file);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw DataError(file.filename().string() + ":" + std::to_string(lineno) +
                      ": expected '<head>\\t<relation>\\t<tail>'");
    Triple t;
    t.head = lookup(entities, parse_id(fields[0], file, lineno), file, lineno);
    t.relation = lookup(relations, parse_id(fields[1], file, lineno), file, lineno);
    t.tail = lookup(entities, parse_id(fields[2], file, lineno), file, lineno);
    triples.push_back(t);
  }
  return triples;
}

}  // namespace

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("dataset directory not found: " + dir.string());

  const IdTable ent1 = read_id_file(dir / "ent_ids_1");
  const IdTable ent2 = read_id_file(dir / "ent_ids_2");
  const IdTable rel1 = read_id_file(dir / "rel_ids_1");
  const IdTable rel2 = read_id_file(dir / "rel_ids_2");

  LoadedDataset data;
  data.g1.entity_count = static_cast<Index>(ent1.raw.size());
  data.g1.relation_count = static_cast<Index>(rel1.raw.size());
  data.g1.triples = read_triples(dir / "triples_1", ent1, rel1);
  data.g2.entity_count = static_cast<Index>(ent2.raw.size());
  data.g2.relation_count = static_cast<Index>(rel2.raw.size());
  data.g2.triples = read_triples(dir / "triples_2", ent2, rel2);

  const std::filesystem::path ref_file = dir / "ref_ent_ids";
  std::ifstream in = open_or_throw(ref_file);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2)
      throw DataError("ref_ent_ids:" + std::to_string(lineno) +
                      ": expected '<g1_raw_id>\\t<g2_raw_id>'");
    const Index a = lookup(ent1, parse_id(fields[0], ref_file, lineno), ref_file, lineno);
    const Index b = lookup(ent2, parse_id(fields[1], ref_file, lineno), ref_file, lineno);
    data.ref_pairs.emplace_back(a, b);
  }
  if (data.ref_pairs.empty())
    data.warnings.push_back("ref_ent_ids is empty: no aligned pairs loaded");

  data.ids.entity_raw_1 = ent1.raw;
  data.ids.entity_name_1 = ent1.names;
  data.ids.entity_raw_2 = ent2.raw;
  data.ids.entity_name_2 = ent2.names;
  data.ids.relation_raw_1 = rel1.raw;
  data.ids.relation_name_1 = rel1.names;
  data.ids.relation_raw_2 = rel2.raw;
  data.ids.relation_name_2 = rel2.names;

  data.g1.validate();
  data.g2.validate();
  return data;
}

GraphPair split_reference(const LoadedDataset& data, double train_fraction,
                          std::uint64_t rng_seed) {
  GraphPair pair;
  pair.g1 = data.g1;
  pair.g2 = data.g2;
  if (data.ref_pairs.empty()) {
    return pair;  // degenerate but loadable; caller decides whether to proceed
  }
  SeedSplit split = split_seeds(data.ref_pairs, train_fraction, rng_seed);
  pair.seed_pairs = std::move(split.train);
  pair.test_pairs = std::move(split.test);
  pair.validate();
  return pair;
}

void write_dataset(const std::filesystem::path& dir, const KnowledgeGraph& g1,
                   const KnowledgeGraph& g2, const std::vector<EntityPair>& all_pairs,
                   const RawIdMaps* maps) {
  std::filesystem::create_directories(dir);

  auto raw_of = [](const std::vector<std::int64_t>* raw, Index i) {
    return raw && !raw->empty() ? (*raw)[static_cast<std::size_t>(i)] : i;
  };
  auto name_of = [](const std::vector<std::string>* names, Index i) -> std::string {
    return names && !names->empty() ? (*names)[static_cast<std::size_t>(i)] : std::string();
  };

  auto write_ids = [&](const std::filesystem::path& file, Index count,
                       const std::vector<std::int64_t>* raw,
                       const std::vector<std::string>* names) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    for (Index i = 0; i < count; ++i)
      out << raw_of(raw, i) << '\t' << name_of(names, i) << '\n';
  };
  auto write_triples = [&](const std::filesystem::path& file, const KnowledgeGraph& g,
                           const std::vector<std::int64_t>* ent_raw,
                           const std::vector<std::int64_t>* rel_raw) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    for (const Triple& t : g.triples)
      out << raw_of(ent_raw, t.head) << '\t' << raw_of(rel_raw, t.relation) << '\t'
          << raw_of(ent_raw, t.tail) << '\n';
  };

  write_ids(dir / "ent_ids_1", g1.entity_count, maps ? &maps->entity_raw_1 : nullptr,
            maps ? &maps->entity_name_1 : nullptr);
  write_ids(dir / "ent_ids_2", g2.entity_count, maps ? &maps->entity_raw_2 : nullptr,
            maps ? &maps->entity_name_2 : nullptr);
  write_ids(dir / "rel_ids_1", g1.relation_count, maps ? &maps->relation_raw_1 : nullptr,
            maps ? &maps->relation_name_1 : nullptr);
  write_ids(dir / "rel_ids_2", g2.relation_count, maps ? &maps->relation_raw_2 : nullptr,
            maps ? &maps->relation_name_2 : nullptr);
  write_triples(dir / "triples_1", g1, maps ? &maps->entity_raw_1 : nullptr,
                maps ? &maps->relation_raw_1 : nullptr);
  write_triples(dir / "triples_2", g2, maps ? &maps->entity_raw_2 : nullptr,
                maps ? &maps->relation_raw_2 : nullptr);

  std::ofstream ref(dir / "ref_ent_ids");
  if (!ref) throw DataError("cannot write " + (dir / "ref_ent_ids").string());
  for (const auto& [a, b] : all_pairs)
    ref << raw_of(maps ? &maps->entity_raw_1 : nullptr, a) << '\t'
        << raw_of(maps ? &maps->entity_raw_2 : nullptr, b) << '\n';
}

}  // namespace kgalign
