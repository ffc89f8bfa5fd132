#include <gtest/gtest.h>

#include <random>

#include "ldir/anchors.hpp"
#include "ldir/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ldir;

namespace {

TEST(Spearman, KnownValues) {
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
  // Tie case: ranks of xs are [1, 2.5, 2.5, 4] -> rho = 3/sqrt(10).
  const std::vector<double> xs{1, 2, 2, 4};
  const std::vector<double> ys{1, 3, 2, 4};
  EXPECT_NEAR(spearman(xs, ys), 0.9486832980505138, 1e-12);
  EXPECT_NEAR(spearman(xs, ys), oracle::rank_pearson(xs, ys), 1e-12);
}

TEST(Spearman, Guards) {
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1}), LengthMismatch);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), DegenerateInput);
  EXPECT_THROW(spearman(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}),
               DegenerateInput);
  EXPECT_THROW(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}),
               DegenerateInput);
}

TEST(Spearman, MatchesOracleOnRandomTies) {
  std::mt19937 gen(307);
  std::uniform_int_distribution<int> coarse(0, 6);  // heavy ties
  std::uniform_int_distribution<int> length(2, 50);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = length(gen);
    std::vector<double> xs(n), ys(n);
    bool ok = false;
    while (!ok) {
      for (int i = 0; i < n; ++i) {
        xs[i] = coarse(gen);
        ys[i] = coarse(gen);
      }
      ok = !std::equal(xs.begin() + 1, xs.end(), xs.begin()) &&
           !std::equal(ys.begin() + 1, ys.end(), ys.begin());
    }
    EXPECT_NEAR(spearman(xs, ys), oracle::rank_pearson(xs, ys), 1e-12);
  }
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  std::mt19937 gen(311);
  std::uniform_real_distribution<double> dist(-5, 5);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> xs(20), ys(20);
    for (int i = 0; i < 20; ++i) {
      xs[i] = dist(gen);
      ys[i] = dist(gen);
    }
    const double base = spearman(xs, ys);
    std::vector<double> warped(xs);
    for (double& x : warped) x = std::exp(0.3 * x) + 7.0;  // strictly increasing
    EXPECT_NEAR(spearman(warped, ys), base, 1e-12);
  }
}

TEST(Ndcg, KnownValues) {
  EXPECT_DOUBLE_EQ(ndcg_at_k({"d1", "d2"}, {{"d1", 1}}), 1.0);
  EXPECT_NEAR(ndcg_at_k({"d2", "d1", "d3"}, {{"d1", 1}}), 0.6309, 1e-4);
  EXPECT_DOUBLE_EQ(ndcg_at_k({"d1", "d2"}, {{"d1", 0}, {"d2", 0}}), 0.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k({"d1"}, {}), 0.0);
  EXPECT_THROW(ndcg_at_k({"d1"}, {{"d1", 1}}, 0), InvalidK);
}

TEST(Ndcg, InvariantBeyondRankK) {
  std::mt19937 gen(313);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::string> ranked;
    std::map<std::string, int> qrels;
    for (int d = 0; d < 20; ++d) {
      ranked.push_back("d" + std::to_string(d));
      if (gen() % 3 == 0) qrels["d" + std::to_string(d)] = 1 + static_cast<int>(gen() % 3);
    }
    const double base = ndcg_at_k(ranked, qrels, 10);
    std::shuffle(ranked.begin() + 10, ranked.end(), gen);
    EXPECT_DOUBLE_EQ(ndcg_at_k(ranked, qrels, 10), base);
  }
}

TEST(Ndcg, MatchesOracleOnRandomInstances) {
  std::mt19937 gen(317);
  for (int rep = 0; rep < 1000; ++rep) {
    const int docs = 1 + static_cast<int>(gen() % 50);
    std::vector<std::string> ranked;
    for (int d = 0; d < docs; ++d) ranked.push_back("d" + std::to_string(d));
    std::shuffle(ranked.begin(), ranked.end(), gen);
    std::map<std::string, int> qrels;
    for (int d = 0; d < docs; ++d) {
      if (gen() % 2 == 0) qrels["d" + std::to_string(d)] = static_cast<int>(gen() % 4);
    }
    const std::size_t k = 1 + gen() % 15;
    EXPECT_NEAR(ndcg_at_k(ranked, qrels, k), oracle::ndcg(ranked, qrels, k), 1e-12);
  }
}

TEST(VMeasure, KnownValues) {
  const std::vector<std::string> gold{"a", "a", "b", "b"};
  EXPECT_DOUBLE_EQ(v_measure(gold, std::vector<std::string>{"x", "x", "y", "y"}), 1.0);
  EXPECT_DOUBLE_EQ(v_measure(gold, std::vector<std::string>{"x", "x", "x", "x"}), 0.0);
  EXPECT_DOUBLE_EQ(v_measure(gold, gold), 1.0);

  // Six-item contingency case, hand-checked against the entropy tables.
  const std::vector<std::string> gold6{"a", "a", "a", "b", "b", "b"};
  const std::vector<std::string> pred6{"0", "0", "1", "1", "2", "2"};
  EXPECT_NEAR(v_measure(gold6, pred6), 0.5158, 1e-4);
  EXPECT_NEAR(v_measure(gold6, pred6), oracle::vmeasure(gold6, pred6), 1e-12);

  EXPECT_THROW(v_measure(gold, std::vector<std::string>{"x"}), LengthMismatch);
}

TEST(VMeasure, MixedLabelTypes) {
  const std::vector<std::string> gold{"a", "a", "b", "b"};
  const std::vector<std::size_t> pred{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(v_measure(gold, pred), 1.0);
}

TEST(VMeasure, MatchesOracleUnderLabelPermutations) {
  std::mt19937 gen(331);
  const std::vector<std::string> names{"p", "q", "r", "s", "t"};
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 2 + static_cast<int>(gen() % 48);
    std::vector<std::string> gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = names[gen() % 3];
      pred[i] = names[gen() % 4];
    }
    const double v = v_measure(gold, pred);
    EXPECT_NEAR(v, oracle::vmeasure(gold, pred), 1e-12);
    // Renaming predicted labels does not change the score.
    std::vector<std::string> renamed(pred);
    for (auto& label : renamed) label = "relabeled-" + label;
    EXPECT_NEAR(v_measure(gold, renamed), v, 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
  }
}

TEST(Kmeans, SeparatedBlobsAreRecovered) {
  std::mt19937_64 gen(337);
  Matrix pts(40, 2);
  std::vector<int> truth(40);
  for (int i = 0; i < 40; ++i) {
    const bool second = i >= 20;
    truth[i] = second;
    pts.row(i)[0] = (second ? 10.0 : -10.0) + uniform01(gen);
    pts.row(i)[1] = uniform01(gen);
  }
  const KmeansResult km = kmeans(pts, 2, 5);
  for (int i = 1; i < 40; ++i) {
    EXPECT_EQ(km.labels[i] == km.labels[0], truth[i] == truth[0]);
  }
}

TEST(Kmeans, EdgeCasesAndDeterminism) {
  std::mt19937_64 gen(347);
  const Matrix pts = testutil::random_matrix(15, 3, gen);
  const KmeansResult all = kmeans(pts, 15, 1);
  EXPECT_EQ(all.inertia, 0.0);

  const KmeansResult a = kmeans(pts, 4, 9);
  const KmeansResult b = kmeans(pts, 4, 9);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.inertia, b.inertia);

  EXPECT_THROW(kmeans(pts, 0, 1), InvalidK);
  EXPECT_THROW(kmeans(pts, 16, 1), InvalidK);
}

TEST(Kmeans, RandomInputsKeepInertiaMonotone) {
  // The implementation throws logic_error if any Lloyd iteration increases
  // inertia; exercising random inputs checks the invariant stays silent.
  std::mt19937_64 gen(349);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix pts = testutil::random_matrix(50 + gen() % 100, 2 + gen() % 6, gen);
    const std::size_t k = 1 + gen() % 8;
    EXPECT_NO_THROW(kmeans(pts, std::min(k, pts.rows()), rep));
  }
}

// ---- harnesses with the hashed provider

struct Harness : ::testing::Test {
  void SetUp() override {
    enc = std::make_unique<HashedEncoder>(64, 7);
    std::mt19937_64 gen(353);
    pool = testutil::random_corpus(40, 60, 8, gen);
    set = build_anchor_set(pool, *enc, SampleMethod::fps, 12, 42);
    embed_fn = [this](const std::vector<TextRecord>& texts) {
      return embed_corpus_relative(texts, set, *enc);
    };
  }

  std::unique_ptr<HashedEncoder> enc;
  Corpus pool;
  AnchorSet set;
  EmbedFn embed_fn;
};

TEST_F(Harness, StsSelfConsistentDatasetScoresHundred) {
  std::mt19937_64 gen(359);
  StsDataset ds;
  ds.name = "self-consistent";
  Corpus texts = testutil::random_corpus(60, 60, 8, gen, "s");
  for (std::size_t i = 0; i + 1 < texts.size(); i += 2) {
    ds.pairs.push_back({texts[i].text, texts[i + 1].text, 0.0});
  }
  // Gold scores recomputed independently from the same embeddings.
  for (auto& pair : ds.pairs) {
    const Matrix a = embed_fn({{"x", pair.text_a}});
    const Matrix b = embed_fn({{"y", pair.text_b}});
    pair.gold = cosine_similarity(a.row(0), b.row(0));
  }
  const EvalReport report = eval_sts(ds, embed_fn);
  EXPECT_DOUBLE_EQ(report.values.at("spearman_x100"), 100.0);

  for (auto& pair : ds.pairs) pair.gold = -pair.gold;
  EXPECT_DOUBLE_EQ(eval_sts(ds, embed_fn).values.at("spearman_x100"), -100.0);
}

TEST_F(Harness, StsMatchesNotebookOracle) {
  std::mt19937_64 gen(367);
  StsDataset ds;
  ds.name = "oracle";
  const Corpus texts = testutil::random_corpus(100, 40, 6, gen, "o");
  for (int i = 0; i < 50; ++i) {
    ds.pairs.push_back({texts[2 * i].text, texts[2 * i + 1].text,
                        static_cast<double>(uniform_below(gen, 6))});
  }
  const EvalReport report = eval_sts(ds, embed_fn);

  // Independent recomputation: embed, cosine, midranks, Pearson.
  std::vector<double> predictions, golds;
  for (const auto& pair : ds.pairs) {
    const Matrix a = embed_corpus_relative({{"p", pair.text_a}}, set, *enc);
    const Matrix b = embed_corpus_relative({{"q", pair.text_b}}, set, *enc);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < set.n(); ++j) {
      dot += a.row(0)[j] * b.row(0)[j];
      na += a.row(0)[j] * a.row(0)[j];
      nb += b.row(0)[j] * b.row(0)[j];
    }
    predictions.push_back(dot / std::sqrt(na * nb));
    golds.push_back(pair.gold);
  }
  EXPECT_NEAR(report.values.at("spearman_x100"),
              oracle::rank_pearson(predictions, golds) * 100.0, 1e-9);
}

TEST_F(Harness, RetrievalSelfRetrievalScoresHundred) {
  RetrievalDataset ds;
  ds.name = "self";
  std::mt19937_64 gen(373);
  ds.docs = testutil::random_corpus(20, 80, 8, gen, "d");
  for (int q = 0; q < 5; ++q) {
    ds.queries.push_back({"q" + std::to_string(q), ds.docs[q].text});
    ds.qrels["q" + std::to_string(q)]["d" + std::to_string(q)] = 1;
  }
  const EvalReport report = eval_retrieval(ds, embed_fn);
  EXPECT_DOUBLE_EQ(report.values.at("ndcg_x100"), 100.0);
}

TEST_F(Harness, RetrievalMatchesExhaustiveOracle) {
  std::mt19937_64 gen(379);
  RetrievalDataset ds;
  ds.name = "oracle";
  ds.docs = testutil::random_corpus(20, 30, 6, gen, "d");
  ds.queries = testutil::random_corpus(5, 30, 5, gen, "q");
  for (int q = 0; q < 5; ++q) {
    for (int d = 0; d < 20; ++d) {
      if (gen() % 4 == 0) {
        ds.qrels["q" + std::to_string(q)]["d" + std::to_string(d)] =
            static_cast<int>(gen() % 3);
      }
    }
  }
  const EvalReport report = eval_retrieval(ds, embed_fn);

  // Brute force: score all pairs, sort, average the per-query oracle nDCG.
  const Matrix doc_emb = embed_fn(ds.docs);
  const Matrix query_emb = embed_fn(ds.queries);
  double total = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t q = 0; q < ds.queries.size(); ++q) {
    auto it = ds.qrels.find(ds.queries[q].id);
    if (it == ds.qrels.end()) continue;
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t d = 0; d < ds.docs.size(); ++d) {
      scored.push_back({cosine_similarity(query_emb.row(q), doc_emb.row(d)), ds.docs[d].id});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<std::string> ranked;
    for (const auto& [score, id] : scored) ranked.push_back(id);
    total += oracle::ndcg(ranked, it->second, 10);
    ++evaluated;
  }
  EXPECT_NEAR(report.values.at("ndcg_x100"), total / evaluated * 100.0, 1e-12);
}

TEST_F(Harness, RetrievalRequiresQrels) {
  RetrievalDataset ds;
  ds.name = "empty";
  ds.docs = {{"d0", "alpha"}, {"d1", "beta"}};
  ds.queries = {{"q0", "alpha"}};
  EXPECT_THROW(eval_retrieval(ds, embed_fn), EmptyQrels);
}

TEST_F(Harness, ClusteringRecoversTokenDisjointTopics) {
  // Anchors must come from the corpus under evaluation for the relatedness
  // scores to carry signal.
  std::mt19937_64 gen(383);
  const Corpus topics = testutil::topic_corpus(30, 20, 12, gen);
  const AnchorSet topic_set = build_anchor_set(topics, *enc, SampleMethod::fps, 15, 42);
  const EmbedFn topic_fn = [&](const std::vector<TextRecord>& texts) {
    return embed_corpus_relative(texts, topic_set, *enc);
  };
  ClusteringDataset ds;
  ds.name = "topics";
  for (const auto& r : topics) {
    ds.items.push_back({r.text, r.id.substr(0, r.id.find('-'))});
  }
  const EvalReport report = eval_clustering(ds, topic_fn, 42);
  EXPECT_GE(report.values.at("v_measure_x100"), 95.0);

  // Identical texts per label cluster perfectly.
  ClusteringDataset exact;
  exact.name = "exact";
  for (int i = 0; i < 10; ++i) {
    exact.items.push_back({pool[0].text, "r"});
    exact.items.push_back({pool[1].text, "b"});
  }
  EXPECT_DOUBLE_EQ(eval_clustering(exact, embed_fn, 1).values.at("v_measure_x100"), 100.0);
}

TEST(CognitiveLoadHarness, IdenticalPairsGiveK) {
  HashedEncoder enc(64, 7);
  std::mt19937_64 gen(389);
  const Corpus pool = testutil::random_corpus(50, 60, 8, gen);
  const AnchorSet set = build_anchor_set(pool, enc, SampleMethod::fps, 30, 42);
  const EmbedFn embed_fn = [&](const std::vector<TextRecord>& texts) {
    return embed_corpus_relative(texts, set, enc);
  };
  StsDataset ds;
  ds.name = "identical";
  for (int i = 0; i < 8; ++i) {
    ds.pairs.push_back({pool[i].text, pool[i].text, 1.0});
  }
  const EvalReport report = eval_cognitive_load(ds, embed_fn, 25);
  EXPECT_DOUBLE_EQ(report.values.at("mean"), 25.0);
  EXPECT_DOUBLE_EQ(report.values.at("rounded"), 25.0);
}

// ---- dataset loaders

TEST(Loaders, StsTsv) {
  testutil::TempDir dir;
  const std::string path = dir.file("sts.tsv");
  testutil::write_file(path, "left text\tright text\t3.5\nsecond a\tsecond b\t0.25\n");
  const StsDataset ds = load_sts_tsv(path, "demo");
  ASSERT_EQ(ds.pairs.size(), 2u);
  EXPECT_EQ(ds.pairs[0].text_a, "left text");
  EXPECT_EQ(ds.pairs[1].gold, 0.25);
  EXPECT_EQ(ds.name, "demo");

  const std::string bad = dir.file("bad.tsv");
  testutil::write_file(bad, "only two\tcolumns\n1 2 3\n");
  EXPECT_THROW(load_sts_tsv(bad), ParseError);
  const std::string bad_gold = dir.file("badgold.tsv");
  testutil::write_file(bad_gold, "a\tb\tnot-a-number\na\tb\t1\n");
  EXPECT_THROW(load_sts_tsv(bad_gold), ParseError);
}

TEST(Loaders, RetrievalValidatesQrelIds) {
  testutil::TempDir dir;
  const std::string docs = dir.file("docs.jsonl");
  const std::string queries = dir.file("queries.jsonl");
  const std::string qrels = dir.file("qrels.tsv");
  testutil::write_file(docs, "{\"id\":\"d1\",\"text\":\"alpha\"}\n");
  testutil::write_file(queries, "{\"id\":\"q1\",\"text\":\"alpha\"}\n");
  testutil::write_file(qrels, "q1\td1\t1\n");
  const RetrievalDataset ds = load_retrieval(docs, queries, qrels);
  EXPECT_EQ(ds.qrels.at("q1").at("d1"), 1);

  testutil::write_file(qrels, "q1\tmissing\t1\n");
  EXPECT_THROW(load_retrieval(docs, queries, qrels), ParseError);
  testutil::write_file(qrels, "nosuch\td1\t1\n");
  EXPECT_THROW(load_retrieval(docs, queries, qrels), ParseError);
  testutil::write_file(qrels, "q1\td1\t-2\n");
  EXPECT_THROW(load_retrieval(docs, queries, qrels), ParseError);
}

TEST(Loaders, ClusteringNeedsTwoLabels) {
  testutil::TempDir dir;
  const std::string path = dir.file("clus.jsonl");
  testutil::write_file(path,
                       "{\"text\":\"a\",\"label\":\"x\"}\n"
                       "{\"text\":\"b\",\"label\":\"y\"}\n");
  EXPECT_EQ(load_clustering_jsonl(path).items.size(), 2u);

  testutil::write_file(path, "{\"text\":\"a\",\"label\":\"x\"}\n");
  EXPECT_THROW(load_clustering_jsonl(path), DegenerateInput);
}

}  // namespace
