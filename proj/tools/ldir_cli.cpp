// Command-line front end: anchor sampling, relative embedding, evaluation,
// inspection, and store conversion, wired for reproducible batch runs.
//
// Exit codes: 0 success, 2 configuration error, 3 provider error,
// 4 I/O or format error, 1 unexpected failure.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldir/ldir.hpp"

namespace {

using nlohmann::json;

struct SampleAnchorsArgs {
  std::string corpus;
  std::string provider;
  std::string method = "fps";
  std::size_t n = 500;
  std::uint64_t seed = 42;
  std::string bucket = "all";
  std::string fps_start = "centroid";
  bool no_normalize = false;
  std::string out;
};

struct EmbedArgs {
  std::string anchors;
  std::string provider;
  std::string input;
  std::string metric = "cosine";
  std::size_t metric_k = 25;
  std::string format = "auto";
  std::string out;
  std::vector<std::string> fine_grained;
};

struct EvalArgs {
  std::string task;
  std::string anchors;
  std::string provider;
  std::string metric = "cosine";
  std::size_t metric_k = 25;
  std::string dataset;
  std::string docs;
  std::string queries;
  std::string qrels;
  std::string name;
  std::size_t ndcg_k = 10;
  std::size_t k = 25;
  std::uint64_t seed = 42;
  std::string report;
};

struct InspectArgs {
  std::string anchors;
  std::string provider;
  std::vector<std::string> texts;
  std::string input;
  std::size_t top = 5;
  std::string metric = "cosine";
  std::size_t metric_k = 25;
};

struct StoreArgs {
  std::string input;
  std::string out;
};

void print_config(const json& echo) { std::cout << "config: " << echo.dump() << "\n"; }

ldir::Relatedness parse_metric(const std::string& name, std::size_t k) {
  ldir::Relatedness metric;
  metric.kind = ldir::parse_rel_kind(name);
  metric.binarize_k = k;
  return metric;
}

// ---- sample-anchors

int cmd_sample_anchors(const SampleAnchorsArgs& args) {
  const ldir::Corpus corpus = ldir::load_corpus(args.corpus);
  const auto provider = ldir::make_provider(args.provider);
  const ldir::SampleMethod method = ldir::parse_sample_method(args.method);
  const ldir::LengthBucket bucket = ldir::parse_length_bucket(args.bucket);
  ldir::FpsStart::Rule rule;
  if (args.fps_start == "centroid") {
    rule = ldir::FpsStart::Rule::centroid_farthest;
  } else if (args.fps_start == "seeded") {
    rule = ldir::FpsStart::Rule::seeded;
  } else {
    throw ldir::ConfigError("--fps-start must be centroid or seeded");
  }

  const ldir::AnchorSet set = ldir::build_anchor_set(
      corpus, *provider, method, args.n, args.seed, bucket, !args.no_normalize, rule);
  ldir::save_anchor_set(set, args.out);

  // Pairwise Euclidean spread in the geometry the sampler used.
  const ldir::Matrix pts = set.normalized_sampling
                               ? ldir::detail::normalized_rows(set.vectors)
                               : set.vectors;
  std::vector<double> dists;
  dists.reserve(set.n() * (set.n() - 1) / 2);
  for (std::size_t i = 0; i < set.n(); ++i) {
    for (std::size_t j = i + 1; j < set.n(); ++j) {
      dists.push_back(std::sqrt(ldir::detail::dist2(pts.row(i), pts.row(j))));
    }
  }
  std::sort(dists.begin(), dists.end());
  double min_dist = 0.0, median = 0.0;
  if (!dists.empty()) {
    min_dist = dists.front();
    median = dists.size() % 2 == 1
                 ? dists[dists.size() / 2]
                 : 0.5 * (dists[dists.size() / 2 - 1] + dists[dists.size() / 2]);
  }

  std::cout << "anchors: " << set.n() << "\n"
            << "method: " << ldir::to_string(set.method) << "\n"
            << "bucket: " << ldir::to_string(set.bucket) << "\n"
            << "dim: " << set.dim() << "\n"
            << "min_pairwise_distance: " << min_dist << "\n"
            << "median_pairwise_distance: " << median << "\n"
            << "anchor_set_id: " << set.id << "\n"
            << "wrote: " << args.out << "\n";

  json echo;
  echo["command"] = "sample-anchors";
  echo["corpus"] = args.corpus;
  echo["provider"] = args.provider;
  echo["method"] = args.method;
  echo["n"] = args.n;
  echo["seed"] = args.seed;
  echo["bucket"] = args.bucket;
  echo["fps_start"] = args.fps_start;
  echo["normalize"] = !args.no_normalize;
  echo["out"] = args.out;
  print_config(echo);
  return 0;
}

// ---- embed

struct FineGrainedBundle {
  std::vector<ldir::AnchorSet> sets;
  std::vector<std::unique_ptr<ldir::EmbeddingProvider>> providers;
  std::vector<ldir::FineGrainedPart> parts;
};

FineGrainedBundle load_fine_grained(const std::vector<std::string>& specs) {
  FineGrainedBundle bundle;
  bundle.sets.reserve(specs.size());
  bundle.providers.reserve(specs.size());
  for (const std::string& spec : specs) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos) {
      throw ldir::ConfigError("--fine-grained expects <anchors-file>:<provider-spec>, got '" +
                              spec + "'");
    }
    bundle.sets.push_back(ldir::load_anchor_set(spec.substr(0, colon)));
    bundle.providers.push_back(ldir::make_provider(spec.substr(colon + 1)));
  }
  for (std::size_t i = 0; i < bundle.sets.size(); ++i) {
    bundle.parts.push_back({&bundle.sets[i], bundle.providers[i].get()});
  }
  return bundle;
}

int cmd_embed(const EmbedArgs& args) {
  const ldir::Corpus input = ldir::load_corpus(args.input);
  const ldir::Relatedness metric = parse_metric(args.metric, args.metric_k);

  ldir::Matrix scores;
  if (!args.fine_grained.empty()) {
    const FineGrainedBundle bundle = load_fine_grained(args.fine_grained);
    scores = ldir::embed_corpus_fine_grained(input, bundle.parts, metric);
  } else {
    if (args.anchors.empty() || args.provider.empty()) {
      throw ldir::ConfigError("embed requires --anchors and --provider (or --fine-grained)");
    }
    const ldir::AnchorSet set = ldir::load_anchor_set(args.anchors);
    const auto provider = ldir::make_provider(args.provider);
    scores = ldir::embed_corpus_relative(input, set, *provider, metric);
  }

  std::vector<std::string> ids;
  ids.reserve(input.size());
  for (const auto& r : input) ids.push_back(r.id);

  std::string format = args.format;
  if (format == "auto") {
    format = args.out.ends_with(".bin") || args.out.ends_with(".ldir") ? "binary" : "jsonl";
  }
  if (format == "binary") {
    ldir::write_embedding_dump_binary(args.out, ids, scores);
  } else if (format == "jsonl") {
    ldir::write_embedding_dump_jsonl(args.out, ids, scores);
  } else {
    throw ldir::ConfigError("--format must be auto, jsonl, or binary");
  }

  std::cout << "embedded: " << scores.rows() << " texts x " << scores.cols()
            << " dims\n"
            << "wrote: " << args.out << "\n";

  json echo;
  echo["command"] = "embed";
  echo["input"] = args.input;
  echo["anchors"] = args.anchors;
  echo["provider"] = args.provider;
  echo["fine_grained"] = args.fine_grained;
  echo["metric"] = args.metric;
  echo["metric_k"] = args.metric_k;
  echo["format"] = format;
  echo["out"] = args.out;
  print_config(echo);
  return 0;
}

// ---- eval

int cmd_eval(const EvalArgs& args) {
  const ldir::Relatedness metric = parse_metric(args.metric, args.metric_k);
  if (args.anchors.empty() || args.provider.empty()) {
    throw ldir::ConfigError("eval requires --anchors and --provider");
  }
  const ldir::AnchorSet set = ldir::load_anchor_set(args.anchors);
  const auto provider = ldir::make_provider(args.provider);

  const ldir::EmbedFn embed_fn = [&](const std::vector<ldir::TextRecord>& texts) {
    return ldir::embed_corpus_relative(texts, set, *provider, metric);
  };

  ldir::EvalReport report;
  if (args.task == "sts") {
    if (args.dataset.empty()) throw ldir::ConfigError("sts task requires --dataset");
    report = ldir::eval_sts(ldir::load_sts_tsv(args.dataset, args.name), embed_fn);
  } else if (args.task == "retrieval") {
    if (args.docs.empty() || args.queries.empty() || args.qrels.empty()) {
      throw ldir::ConfigError("retrieval task requires --docs, --queries, and --qrels");
    }
    report = ldir::eval_retrieval(
        ldir::load_retrieval(args.docs, args.queries, args.qrels, args.name), embed_fn,
        args.ndcg_k);
  } else if (args.task == "clustering") {
    if (args.dataset.empty()) throw ldir::ConfigError("clustering task requires --dataset");
    report = ldir::eval_clustering(ldir::load_clustering_jsonl(args.dataset, args.name),
                                   embed_fn, args.seed);
  } else if (args.task == "cognitive-load") {
    if (args.dataset.empty()) throw ldir::ConfigError("cognitive-load task requires --dataset");
    report = ldir::eval_cognitive_load(ldir::load_sts_tsv(args.dataset, args.name),
                                       embed_fn, args.k);
  } else {
    throw ldir::ConfigError("--task must be sts, retrieval, clustering, or cognitive-load");
  }

  json echo;
  echo["command"] = "eval";
  echo["task"] = args.task;
  echo["dataset"] = args.dataset;
  echo["docs"] = args.docs;
  echo["queries"] = args.queries;
  echo["qrels"] = args.qrels;
  echo["anchors"] = args.anchors;
  echo["anchor_set_id"] = set.id;
  echo["anchor_method"] = ldir::to_string(set.method);
  echo["anchor_bucket"] = ldir::to_string(set.bucket);
  echo["anchor_seed"] = set.seed;
  echo["anchor_n"] = set.n();
  echo["encoder_fingerprint"] = set.encoder.fingerprint();
  echo["provider"] = args.provider;
  echo["metric"] = args.metric;
  echo["metric_k"] = args.metric_k;
  echo["ndcg_k"] = args.ndcg_k;
  echo["k"] = args.k;
  echo["seed"] = args.seed;
  report.config = echo;

  report.print_table(std::cout);
  const std::string report_json = report.to_json().dump();
  std::cout << "report: " << report_json << "\n";
  if (!args.report.empty()) {
    ldir::detail::write_file_bytes(args.report, report_json + "\n");
    std::cout << "wrote: " << args.report << "\n";
  }
  print_config(echo);
  return 0;
}

// ---- inspect

int cmd_inspect(const InspectArgs& args) {
  const ldir::AnchorSet set = ldir::load_anchor_set(args.anchors);
  const auto provider = ldir::make_provider(args.provider);
  const ldir::Relatedness metric = parse_metric(args.metric, args.metric_k);

  std::vector<ldir::TextRecord> inputs;
  if (!args.input.empty()) {
    for (const auto& r : ldir::load_corpus(args.input)) inputs.push_back(r);
  }
  for (std::size_t i = 0; i < args.texts.size(); ++i) {
    inputs.push_back({"text" + std::to_string(i + 1), args.texts[i]});
  }
  if (inputs.empty()) throw ldir::ConfigError("inspect requires --text or --input");

  const std::size_t top = std::min(args.top, set.n());
  const ldir::Matrix scores = ldir::embed_corpus_relative(inputs, set, *provider, metric);

  char buf[32];
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::cout << "text " << inputs[i].id << ": \"" << inputs[i].text << "\"\n";
    auto row = scores.row(i);
    std::vector<std::size_t> order(set.n());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (row[a] != row[b]) return most_related_first(metric, row[a], row[b]);
      return a < b;
    });
    for (std::size_t r = 0; r < top; ++r) {
      const std::size_t dim = order[r];
      std::snprintf(buf, sizeof(buf), "%.4f", row[dim]);
      std::cout << "  [" << dim << "] " << buf << "  " << set.records[dim].text << "\n";
    }
  }

  json echo;
  echo["command"] = "inspect";
  echo["anchors"] = args.anchors;
  echo["anchor_set_id"] = set.id;
  echo["provider"] = args.provider;
  echo["metric"] = args.metric;
  echo["metric_k"] = args.metric_k;
  echo["top"] = top;
  echo["inputs"] = inputs.size();
  print_config(echo);
  return 0;
}

// ---- store

int cmd_store(const StoreArgs& args) {
  const std::string bytes = ldir::detail::read_file_bytes(args.input);
  const bool from_binary = ldir::looks_like_binary_store(bytes);
  const ldir::VectorStore store = from_binary
                                      ? ldir::parse_binary_store(bytes, args.input)
                                      : ldir::parse_jsonl_store(bytes, args.input);
  if (from_binary) {
    ldir::write_jsonl_store(args.out, store);
  } else {
    ldir::write_binary_store(args.out, store);
  }

  std::cout << "converted: " << store.count() << " records ("
            << (from_binary ? "binary -> jsonl" : "jsonl -> binary") << ")\n"
            << "wrote: " << args.out << "\n";

  json echo;
  echo["command"] = "store";
  echo["input"] = args.input;
  echo["out"] = args.out;
  echo["direction"] = from_binary ? "to-jsonl" : "to-binary";
  print_config(echo);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldir: low-dimensional interpretable text embeddings from anchor relatedness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; command-line flags override file values");

  SampleAnchorsArgs sample_args;
  CLI::App* sample = app.add_subcommand(
      "sample-anchors", "Select anchor texts from a corpus and write an anchor-set file");
  sample->add_option("--corpus", sample_args.corpus, "Corpus JSON-lines file")->required();
  sample->add_option("--provider", sample_args.provider,
                     "Provider spec kind:key=value,... (e.g. hashed:dim=128,seed=7)")
      ->required();
  sample->add_option("--method", sample_args.method, "fps | uniform | kmeans");
  sample->add_option("--n", sample_args.n, "Number of anchors (default 500)");
  sample->add_option("--seed", sample_args.seed, "Sampling seed (default 42)");
  sample->add_option("--bucket", sample_args.bucket, "short | medium | long | all");
  sample->add_option("--fps-start", sample_args.fps_start, "centroid | seeded");
  sample->add_flag("--no-normalize", sample_args.no_normalize,
                   "Sample on raw encoder outputs instead of L2-normalized ones");
  sample->add_option("--out", sample_args.out, "Output anchor-set file")->required();

  EmbedArgs embed_args;
  CLI::App* embed = app.add_subcommand("embed", "Embed texts against an anchor set");
  embed->add_option("--anchors", embed_args.anchors, "Anchor-set file");
  embed->add_option("--provider", embed_args.provider, "Provider spec");
  embed->add_option("--input", embed_args.input, "Input texts (JSON-lines or anchor file)")
      ->required();
  embed->add_option("--metric", embed_args.metric, "Relatedness metric (default cosine)");
  embed->add_option("--metric-k", embed_args.metric_k,
                    "Top-k for binary relatedness metrics (default 25)");
  embed->add_option("--format", embed_args.format, "auto | jsonl | binary");
  embed->add_option("--out", embed_args.out, "Output embeddings file")->required();
  embed->add_option("--fine-grained", embed_args.fine_grained,
                    "Repeatable <anchors-file>:<provider-spec> pairs; segments are concatenated");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Run an evaluation task end to end");
  eval->add_option("--task", eval_args.task, "sts | retrieval | clustering | cognitive-load")
      ->required();
  eval->add_option("--anchors", eval_args.anchors, "Anchor-set file")->required();
  eval->add_option("--provider", eval_args.provider, "Provider spec")->required();
  eval->add_option("--metric", eval_args.metric, "Relatedness metric (default cosine)");
  eval->add_option("--metric-k", eval_args.metric_k, "Top-k for binary relatedness metrics");
  eval->add_option("--dataset", eval_args.dataset,
                   "STS/cognitive-load TSV or clustering JSON-lines file");
  eval->add_option("--docs", eval_args.docs, "Retrieval docs JSON-lines");
  eval->add_option("--queries", eval_args.queries, "Retrieval queries JSON-lines");
  eval->add_option("--qrels", eval_args.qrels, "Retrieval qrels TSV");
  eval->add_option("--name", eval_args.name, "Dataset display name");
  eval->add_option("--ndcg-k", eval_args.ndcg_k, "nDCG cutoff (default 10)");
  eval->add_option("--k", eval_args.k, "Cognitive-load top-k (default 25)");
  eval->add_option("--seed", eval_args.seed, "Clustering seed (default 42)");
  eval->add_option("--report", eval_args.report, "Write the JSON report here");

  InspectArgs inspect_args;
  CLI::App* inspect = app.add_subcommand(
      "inspect", "Show the most related anchors per input text (traceability view)");
  inspect->add_option("--anchors", inspect_args.anchors, "Anchor-set file")->required();
  inspect->add_option("--provider", inspect_args.provider, "Provider spec")->required();
  inspect->add_option("--text", inspect_args.texts, "Input text (repeatable)");
  inspect->add_option("--input", inspect_args.input, "Input texts file");
  inspect->add_option("--top", inspect_args.top, "Rows per text (default 5)");
  inspect->add_option("--metric", inspect_args.metric, "Relatedness metric");
  inspect->add_option("--metric-k", inspect_args.metric_k, "Top-k for binary metrics");

  StoreArgs store_args;
  CLI::App* store = app.add_subcommand(
      "store", "Convert a vector store between JSON-lines and the binary format");
  store->add_option("--input", store_args.input, "Input store file")->required();
  store->add_option("--out", store_args.out, "Output store file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sample->parsed()) return cmd_sample_anchors(sample_args);
    if (embed->parsed()) return cmd_embed(embed_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (inspect->parsed()) return cmd_inspect(inspect_args);
    if (store->parsed()) return cmd_store(store_args);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ldir::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ldir::ProviderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ldir::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
