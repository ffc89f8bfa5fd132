#pragma once

// Evaluation harnesses: semantic textual similarity scored by Spearman
// correlation, retrieval scored by nDCG@10 against graded qrels, clustering
// scored by V-measure over k-means labels, and the cognitive-load
// interpretability measure over embedded sentence pairs. Metric values are
// reported x100.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"
#include "ldir/kmeans.hpp"
#include "ldir/relative.hpp"
#include "ldir/store.hpp"
#include "ldir/vector.hpp"

namespace ldir {

// ---- datasets

struct StsPair {
  std::string text_a;
  std::string text_b;
  double gold = 0.0;
};

struct StsDataset {
  std::string name;
  std::vector<StsPair> pairs;
};

struct RetrievalDataset {
  std::string name;
  Corpus docs;
  Corpus queries;
  // query id -> (doc id -> relevance grade >= 0)
  std::map<std::string, std::map<std::string, int>> qrels;
};

struct ClusteringItem {
  std::string text;
  std::string label;
};

struct ClusteringDataset {
  std::string name;
  std::vector<ClusteringItem> items;

  std::size_t distinct_labels() const {
    std::map<std::string, int> seen;
    for (const ClusteringItem& item : items) seen[item.label] = 1;
    return seen.size();
  }
};

// TSV: text_a <tab> text_b <tab> gold_score, UTF-8, no header.
inline StsDataset load_sts_tsv(const std::string& path, std::string name = "") {
  StsDataset ds;
  ds.name = name.empty() ? path : std::move(name);
  const std::string bytes = detail::read_file_bytes(path);
  std::istringstream in(bytes);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected three tab-separated columns");
    }
    StsPair pair;
    pair.text_a = line.substr(0, t1);
    pair.text_b = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string gold = line.substr(t2 + 1);
    char* end = nullptr;
    pair.gold = std::strtod(gold.c_str(), &end);
    if (end == gold.c_str() || *end != '\0' || !std::isfinite(pair.gold)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad gold score '" + gold + "'");
    }
    ds.pairs.push_back(std::move(pair));
  }
  if (ds.pairs.size() < 2) {
    throw DegenerateInput("sts dataset '" + ds.name + "' needs at least 2 pairs");
  }
  return ds;
}

// Docs and queries are JSON-lines {"id","text"}; qrels is TSV
// query_id <tab> doc_id <tab> grade with integer grades >= 0.
inline RetrievalDataset load_retrieval(const std::string& docs_path,
                                       const std::string& queries_path,
                                       const std::string& qrels_path,
                                       std::string name = "") {
  RetrievalDataset ds;
  ds.name = name.empty() ? qrels_path : std::move(name);
  ds.docs = load_corpus(docs_path);
  ds.queries = load_corpus(queries_path);

  std::map<std::string, int> doc_ids;
  for (const TextRecord& d : ds.docs) doc_ids[d.id] = 1;
  std::map<std::string, int> query_ids;
  for (const TextRecord& q : ds.queries) query_ids[q.id] = 1;

  const std::string bytes = detail::read_file_bytes(qrels_path);
  std::istringstream in(bytes);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ParseError(qrels_path + ":" + std::to_string(lineno) + ": expected three tab-separated columns");
    }
    const std::string qid = line.substr(0, t1);
    const std::string did = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string grade_str = line.substr(t2 + 1);
    char* end = nullptr;
    const long grade = std::strtol(grade_str.c_str(), &end, 10);
    if (end == grade_str.c_str() || *end != '\0' || grade < 0) {
      throw ParseError(qrels_path + ":" + std::to_string(lineno) + ": bad grade '" + grade_str + "'");
    }
    if (!query_ids.count(qid)) {
      throw ParseError(qrels_path + ":" + std::to_string(lineno) + ": unknown query id '" + qid + "'");
    }
    if (!doc_ids.count(did)) {
      throw ParseError(qrels_path + ":" + std::to_string(lineno) + ": unknown doc id '" + did + "'");
    }
    ds.qrels[qid][did] = static_cast<int>(grade);
  }
  return ds;
}

// JSON-lines {"text","label"}.
inline ClusteringDataset load_clustering_jsonl(const std::string& path,
                                               std::string name = "") {
  ClusteringDataset ds;
  ds.name = name.empty() ? path : std::move(name);
  const std::string bytes = detail::read_file_bytes(path);
  std::istringstream in(bytes);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": blank line");
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("label")) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected object with text and label");
    }
    ds.items.push_back({obj.at("text").get<std::string>(), obj.at("label").get<std::string>()});
  }
  if (ds.items.empty()) throw DegenerateInput("clustering dataset '" + ds.name + "' is empty");
  if (ds.distinct_labels() < 2) {
    throw DegenerateInput("clustering dataset '" + ds.name + "' needs at least 2 distinct labels");
  }
  return ds;
}

// ---- rank correlation

// Average (fractional) ranks, 1-based; ties share the mean of their ranks.
inline std::vector<double> fractional_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  std::vector<double> ranks(xs.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation of fractional ranks.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw LengthMismatch("spearman: " + std::to_string(xs.size()) + " vs " +
                         std::to_string(ys.size()));
  }
  if (xs.size() < 2) throw DegenerateInput("spearman: need at least 2 observations");
  const bool xs_const = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
  const bool ys_const = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
  if (xs_const || ys_const) {
    throw DegenerateInput("spearman: an input is constant");
  }
  const std::vector<double> rx = fractional_ranks(xs);
  const std::vector<double> ry = fractional_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---- ranking quality

// Exponential-gain nDCG truncated at rank k; the ideal ranking comes from the
// relevance-sorted qrels. Returns 0 when the query has no relevant documents.
inline double ndcg_at_k(const std::vector<std::string>& ranked_doc_ids,
                        const std::map<std::string, int>& qrels_for_query,
                        std::size_t k = 10) {
  if (k < 1) throw InvalidK("ndcg_at_k: k must be >= 1");
  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked_doc_ids.size());
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = qrels_for_query.find(ranked_doc_ids[i]);
    if (it == qrels_for_query.end() || it->second <= 0) continue;
    dcg += (std::exp2(static_cast<double>(it->second)) - 1.0) /
           std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> grades;
  grades.reserve(qrels_for_query.size());
  for (const auto& [doc, grade] : qrels_for_query) grades.push_back(grade);
  std::sort(grades.begin(), grades.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    if (grades[i] <= 0) break;
    idcg += (std::exp2(static_cast<double>(grades[i])) - 1.0) /
            std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

// ---- clustering agreement

// Homogeneity/completeness from contingency-table entropies (nats).
template <typename GoldLabel, typename PredLabel>
double v_measure(const std::vector<GoldLabel>& gold, const std::vector<PredLabel>& pred) {
  if (gold.size() != pred.size()) {
    throw LengthMismatch("v_measure: " + std::to_string(gold.size()) + " vs " +
                         std::to_string(pred.size()));
  }
  if (gold.empty()) throw EmptyInput("v_measure: no labels");

  std::map<GoldLabel, std::size_t> gold_index;
  std::map<PredLabel, std::size_t> pred_index;
  std::vector<std::size_t> g(gold.size()), p(pred.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    g[i] = gold_index.emplace(gold[i], gold_index.size()).first->second;
    p[i] = pred_index.emplace(pred[i], pred_index.size()).first->second;
  }
  const std::size_t nc = gold_index.size();
  const std::size_t nk = pred_index.size();
  std::vector<double> class_count(nc, 0.0), cluster_count(nk, 0.0);
  std::vector<double> joint(nc * nk, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    class_count[g[i]] += 1.0;
    cluster_count[p[i]] += 1.0;
    joint[g[i] * nk + p[i]] += 1.0;
  }
  const double total = static_cast<double>(gold.size());

  auto entropy = [&](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) h -= (c / total) * std::log(c / total);
    }
    return h;
  };
  const double h_class = entropy(class_count);
  const double h_cluster = entropy(cluster_count);

  double h_class_given_cluster = 0.0;
  double h_cluster_given_class = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t k = 0; k < nk; ++k) {
      const double n_ck = joint[c * nk + k];
      if (n_ck == 0.0) continue;
      h_class_given_cluster -= (n_ck / total) * std::log(n_ck / cluster_count[k]);
      h_cluster_given_class -= (n_ck / total) * std::log(n_ck / class_count[c]);
    }
  }
  const double homogeneity = h_class == 0.0 ? 1.0 : 1.0 - h_class_given_cluster / h_class;
  const double completeness = h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_class / h_cluster;
  if (homogeneity + completeness == 0.0) return 0.0;
  return 2.0 * homogeneity * completeness / (homogeneity + completeness);
}

// ---- harnesses

// Maps a batch of texts to their embedding rows, in input order. Must be
// deterministic within a run.
using EmbedFn = std::function<Matrix(const std::vector<TextRecord>&)>;

struct EvalReport {
  std::string task;
  std::string dataset;
  std::map<std::string, double> values;
  nlohmann::json config;  // effective run configuration echo

  nlohmann::json to_json() const {
    nlohmann::json out;
    out["task"] = task;
    out["dataset"] = dataset;
    out["values"] = values;
    out["config"] = config.is_null() ? nlohmann::json::object() : config;
    return out;
  }

  void print_table(std::ostream& os) const {
    os << std::left << std::setw(16) << "task" << std::setw(28) << "dataset"
       << std::setw(24) << "metric" << std::right << std::setw(14) << "value" << '\n';
    for (const auto& [metric, value] : values) {
      os << std::left << std::setw(16) << task << std::setw(28) << dataset
         << std::setw(24) << metric << std::right << std::setw(14) << std::fixed
         << std::setprecision(4) << value << '\n';
    }
  }
};

inline EvalReport eval_sts(const StsDataset& dataset, const EmbedFn& embed_fn) {
  if (dataset.pairs.size() < 2) throw DegenerateInput("eval_sts: need at least 2 pairs");
  std::vector<TextRecord> left, right;
  left.reserve(dataset.pairs.size());
  right.reserve(dataset.pairs.size());
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    left.push_back({"a" + std::to_string(i), dataset.pairs[i].text_a});
    right.push_back({"b" + std::to_string(i), dataset.pairs[i].text_b});
  }
  const Matrix emb_a = embed_fn(left);
  const Matrix emb_b = embed_fn(right);

  std::vector<double> predictions(dataset.pairs.size());
  std::vector<double> golds(dataset.pairs.size());
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    predictions[i] = cosine_similarity(emb_a.row(i), emb_b.row(i));
    golds[i] = dataset.pairs[i].gold;
  }

  EvalReport report;
  report.task = "sts";
  report.dataset = dataset.name;
  report.values["spearman_x100"] = spearman(predictions, golds) * 100.0;
  report.values["pairs"] = static_cast<double>(dataset.pairs.size());
  return report;
}

// Docs and queries are embedded with the same function; docs are ranked per
// query by cosine over the embeddings, ties broken by doc id. The reported
// value is the mean nDCG@k x100 over queries that have qrels.
inline EvalReport eval_retrieval(const RetrievalDataset& dataset, const EmbedFn& embed_fn,
                                 std::size_t k = 10) {
  if (dataset.qrels.empty()) throw EmptyQrels("retrieval dataset '" + dataset.name + "'");
  if (dataset.docs.empty()) throw EmptyInput("retrieval dataset has no docs");
  if (dataset.queries.empty()) throw EmptyInput("retrieval dataset has no queries");

  const Matrix doc_emb = embed_fn(dataset.docs);
  const Matrix query_emb = embed_fn(dataset.queries);

  double total = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t q = 0; q < dataset.queries.size(); ++q) {
    const auto qit = dataset.qrels.find(dataset.queries[q].id);
    if (qit == dataset.qrels.end()) continue;
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(dataset.docs.size());
    for (std::size_t d = 0; d < dataset.docs.size(); ++d) {
      scored.emplace_back(cosine_similarity(query_emb.row(q), doc_emb.row(d)), d);
    }
    std::sort(scored.begin(), scored.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return dataset.docs[a.second].id < dataset.docs[b.second].id;
              });
    std::vector<std::string> ranked;
    ranked.reserve(scored.size());
    for (const auto& [score, d] : scored) ranked.push_back(dataset.docs[d].id);
    total += ndcg_at_k(ranked, qit->second, k);
    ++evaluated;
  }
  if (evaluated == 0) throw EmptyQrels("no query in '" + dataset.name + "' has qrels");

  EvalReport report;
  report.task = "retrieval";
  report.dataset = dataset.name;
  report.values["ndcg_x100"] = total / static_cast<double>(evaluated) * 100.0;
  report.values["ndcg_k"] = static_cast<double>(k);
  report.values["queries"] = static_cast<double>(evaluated);
  return report;
}

// k-means with k = number of distinct gold labels, scored by V-measure x100.
inline EvalReport eval_clustering(const ClusteringDataset& dataset, const EmbedFn& embed_fn,
                                  std::uint64_t seed) {
  if (dataset.distinct_labels() < 2) {
    throw DegenerateInput("eval_clustering: need at least 2 distinct labels");
  }
  std::vector<TextRecord> records;
  std::vector<std::string> gold;
  records.reserve(dataset.items.size());
  gold.reserve(dataset.items.size());
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    records.push_back({"c" + std::to_string(i), dataset.items[i].text});
    gold.push_back(dataset.items[i].label);
  }
  const Matrix emb = embed_fn(records);
  const KmeansResult km = kmeans(emb, dataset.distinct_labels(), seed, /*restarts=*/10);

  EvalReport report;
  report.task = "clustering";
  report.dataset = dataset.name;
  report.values["v_measure_x100"] = v_measure(gold, km.labels) * 100.0;
  report.values["clusters"] = static_cast<double>(dataset.distinct_labels());
  report.values["items"] = static_cast<double>(dataset.items.size());
  return report;
}

// Embeds both sides of each sentence pair and reports the top-k cognitive
// load (mean and integer-rounded) plus the dense inner-product variant, which
// is advisory only.
inline EvalReport eval_cognitive_load(const StsDataset& dataset, const EmbedFn& embed_fn,
                                      std::size_t k = 25) {
  std::vector<TextRecord> left, right;
  left.reserve(dataset.pairs.size());
  right.reserve(dataset.pairs.size());
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    left.push_back({"a" + std::to_string(i), dataset.pairs[i].text_a});
    right.push_back({"b" + std::to_string(i), dataset.pairs[i].text_b});
  }
  const Matrix emb_a = embed_fn(left);
  const Matrix emb_b = embed_fn(right);
  const CognitiveLoad load = cognitive_load_rows(emb_a, emb_b, k);

  EvalReport report;
  report.task = "cognitive_load";
  report.dataset = dataset.name;
  report.values["mean"] = load.mean;
  report.values["rounded"] = static_cast<double>(load.rounded);
  report.values["dense_mean"] = cognitive_load_dense_rows(emb_a, emb_b);
  report.values["top_k"] = static_cast<double>(k);
  return report;
}

}  // namespace ldir
