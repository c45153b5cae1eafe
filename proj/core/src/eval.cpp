#include "kgalign/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "json.hpp"
#include "kgalign/errors.hpp"
#include "kgalign/parallel.hpp"

namespace kgalign {

namespace {
constexpr double kNormFloor = 1e-12;

double top_k_mean(std::vector<double>& values, Index k) {
  const auto kk = static_cast<std::ptrdiff_t>(k);
  std::nth_element(values.begin(), values.begin() + (kk - 1), values.end(),
                   std::greater<double>());
  double sum = 0.0;
  for (std::ptrdiff_t i = 0; i < kk; ++i) sum += values[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(k);
}
}  // namespace

SimilarityMatrix similarity_matrix(const Mat& embeddings, const std::vector<Index>& rows,
                                   const std::vector<Index>& cols, SimMetric metric,
                                   int threads) {
  SimilarityMatrix sim;
  sim.row_entities = rows;
  sim.col_entities = cols;
  const auto nr = static_cast<Index>(rows.size());
  const auto nc = static_cast<Index>(cols.size());
  Mat a(nr, embeddings.cols()), b(nc, embeddings.cols());
  for (Index i = 0; i < nr; ++i) a.row(i) = embeddings.row(rows[static_cast<std::size_t>(i)]);
  for (Index j = 0; j < nc; ++j) b.row(j) = embeddings.row(cols[static_cast<std::size_t>(j)]);

  if (metric == SimMetric::kCosine) {
    for (Index i = 0; i < nr; ++i) {
      const double n = a.row(i).norm();
      if (n >= kNormFloor) a.row(i) /= n;
      else a.row(i).setZero();
    }
    for (Index j = 0; j < nc; ++j) {
      const double n = b.row(j).norm();
      if (n >= kNormFloor) b.row(j) /= n;
      else b.row(j).setZero();
    }
  }

  sim.scores.resize(nr, nc);
  parallel_for(nr, threads, [&](Index begin, Index end) {
    if (metric == SimMetric::kCosine) {
      sim.scores.middleRows(begin, end - begin).noalias() =
          a.middleRows(begin, end - begin) * b.transpose();
    } else {
      const Vec bn = b.rowwise().squaredNorm();
      for (Index i = begin; i < end; ++i) {
        const double an = a.row(i).squaredNorm();
        sim.scores.row(i) =
            (2.0 * (a.row(i) * b.transpose()).array() - an - bn.transpose().array()).matrix();
      }
    }
  });
  return sim;
}

Mat csls_adjust(const Mat& scores, Index k, std::vector<std::string>* warnings) {
  if (k < 1) throw ConfigError("csls_adjust: k must be >= 1");
  const Index nr = scores.rows();
  const Index nc = scores.cols();
  Index kr = k, kc = k;
  if (kr > nc) {
    kr = nc;
    if (warnings) warnings->push_back("csls: row neighborhood clamped to " + std::to_string(nc));
  }
  if (kc > nr) {
    kc = nr;
    if (warnings)
      warnings->push_back("csls: column neighborhood clamped to " + std::to_string(nr));
  }

  Vec row_mean(nr), col_mean(nc);
  std::vector<double> buffer;
  for (Index i = 0; i < nr; ++i) {
    buffer.assign(scores.row(i).begin(), scores.row(i).end());
    row_mean(i) = top_k_mean(buffer, kr);
  }
  for (Index j = 0; j < nc; ++j) {
    buffer.resize(static_cast<std::size_t>(nr));
    for (Index i = 0; i < nr; ++i) buffer[static_cast<std::size_t>(i)] = scores(i, j);
    col_mean(j) = top_k_mean(buffer, kc);
  }
  Mat adjusted = 2.0 * scores;
  adjusted.colwise() -= row_mean;
  adjusted.rowwise() -= col_mean.transpose();
  return adjusted;
}

SimilarityMatrix csls_adjust(const SimilarityMatrix& sim, Index k,
                             std::vector<std::string>* warnings) {
  SimilarityMatrix out;
  out.row_entities = sim.row_entities;
  out.col_entities = sim.col_entities;
  out.scores = csls_adjust(sim.scores, k, warnings);
  return out;
}

std::vector<Index> ranks_of_truth(const SimilarityMatrix& sim,
                                  const std::vector<EntityPair>& truth) {
  std::unordered_map<Index, Index> col_of;
  for (std::size_t j = 0; j < sim.col_entities.size(); ++j)
    col_of[sim.col_entities[j]] = static_cast<Index>(j);
  std::unordered_map<Index, Index> truth_of;
  for (const auto& [src, dst] : truth) truth_of[src] = dst;

  std::vector<Index> ranks(sim.row_entities.size());
  for (std::size_t i = 0; i < sim.row_entities.size(); ++i) {
    const auto t = truth_of.find(sim.row_entities[i]);
    if (t == truth_of.end())
      throw DataError("ranks_of_truth: row entity " + std::to_string(sim.row_entities[i]) +
                      " lacks a ground-truth pair");
    const auto c = col_of.find(t->second);
    if (c == col_of.end())
      throw DataError("ranks_of_truth: true counterpart " + std::to_string(t->second) +
                      " is not among the candidates");
    const Index col = c->second;
    const double score = sim.scores(static_cast<Index>(i), col);
    Index rank = 1;
    for (Index j = 0; j < sim.scores.cols(); ++j) {
      if (j == col) continue;
      if (sim.scores(static_cast<Index>(i), j) >= score) ++rank;  // pessimistic ties
    }
    ranks[i] = rank;
  }
  return ranks;
}

double EvalReport::hits_at(Index k) const {
  for (const auto& [kk, v] : hits)
    if (kk == k) return v;
  throw ConfigError("EvalReport: Hits@" + std::to_string(k) + " was not computed");
}

EvalReport rank_metrics(const SimilarityMatrix& sim, const std::vector<EntityPair>& truth,
                        const std::vector<Index>& k_list) {
  EvalReport report;
  const std::vector<Index> ranks = ranks_of_truth(sim, truth);
  report.test_count = static_cast<Index>(ranks.size());
  const double n = std::max<double>(1.0, static_cast<double>(ranks.size()));

  std::vector<Index> ks = k_list;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (const Index k : ks) {
    Index hit = 0;
    for (const Index r : ranks)
      if (r <= k) ++hit;
    report.hits.emplace_back(k, static_cast<double>(hit) / n);
  }
  double reciprocal = 0.0;
  for (const Index r : ranks) reciprocal += 1.0 / static_cast<double>(r);
  report.mrr = reciprocal / n;
  return report;
}

std::string to_json(const EvalReport& report) {
  nlohmann::json j;
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& [k, v] : report.hits) hits[std::to_string(k)] = v;
  j["hits"] = hits;
  j["mrr"] = report.mrr;
  j["test_pairs"] = report.test_count;
  if (!report.degree_buckets.empty()) {
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& b : report.degree_buckets)
      buckets.push_back({{"degree", b.label}, {"count", b.count}, {"hits1", b.hits1}});
    j["degree_buckets"] = buckets;
  }
  j["runtime_seconds"] = report.runtime_seconds;
  return j.dump(2);
}

void degree_breakdown(EvalReport& report, const std::vector<Index>& ranks,
                      const std::vector<Index>& source_degrees) {
  if (ranks.size() != source_degrees.size())
    throw ConfigError("degree_breakdown: ranks and degrees must align");
  constexpr Index kBuckets = 6;
  std::vector<Index> count(kBuckets, 0), hit(kBuckets, 0);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const Index deg = std::clamp<Index>(source_degrees[i], 1, kBuckets);
    const auto b = static_cast<std::size_t>(deg - 1);
    ++count[b];
    if (ranks[i] == 1) ++hit[b];
  }
  report.degree_buckets.clear();
  for (Index b = 0; b < kBuckets; ++b) {
    DegreeBucket bucket;
    bucket.label = b + 1 < kBuckets ? std::to_string(b + 1) : std::to_string(kBuckets) + "+";
    bucket.count = count[static_cast<std::size_t>(b)];
    bucket.hits1 = bucket.count > 0 ? static_cast<double>(hit[static_cast<std::size_t>(b)]) /
                                          static_cast<double>(bucket.count)
                                    : 0.0;
    report.degree_buckets.push_back(std::move(bucket));
  }
}

}  // namespace kgalign
