#include <gtest/gtest.h>

#include <json.hpp>

#include "ldir/anchors.hpp"
#include "ldir/eval.hpp"
#include "ldir/relative.hpp"
#include "ldir/store.hpp"
#include "test_util.hpp"

using namespace ldir;
using nlohmann::json;
using testutil::run_cli;
using testutil::TempDir;

namespace {

json parse_tagged_line(const std::string& output, const std::string& tag) {
  const std::string needle = tag + ": ";
  const std::size_t pos = output.find(needle);
  if (pos == std::string::npos) throw std::runtime_error(tag + " line not found");
  const std::size_t end = output.find('\n', pos);
  return json::parse(output.substr(pos + needle.size(), end - pos - needle.size()));
}

struct CliFixture : ::testing::Test {
  void SetUp() override {
    std::mt19937_64 gen(401);
    corpus = testutil::topic_corpus(10, 20, 8, gen);
    corpus_path = dir.file("corpus.jsonl");
    testutil::write_file(corpus_path, testutil::corpus_jsonl(corpus));
  }

  TempDir dir;
  Corpus corpus;
  std::string corpus_path;
  const std::string provider = "hashed:dim=64,seed=7";
};

TEST_F(CliFixture, SampleAnchorsIsByteReproducible) {
  const std::string cmd = "sample-anchors --corpus " + corpus_path + " --provider " +
                          provider + " --method fps --n 6 --seed 42 --out ";
  const auto first = run_cli(cmd + dir.file("a1.bin"), dir);
  ASSERT_EQ(first.exit_code, 0) << first.output;
  const auto second = run_cli(cmd + dir.file("a2.bin"), dir);
  ASSERT_EQ(second.exit_code, 0) << second.output;
  EXPECT_EQ(testutil::read_file(dir.file("a1.bin")), testutil::read_file(dir.file("a2.bin")));

  EXPECT_NE(first.output.find("anchors: 6"), std::string::npos);
  EXPECT_NE(first.output.find("method: fps"), std::string::npos);
  EXPECT_NE(first.output.find("bucket: all"), std::string::npos);
  EXPECT_NE(first.output.find("min_pairwise_distance:"), std::string::npos);
  EXPECT_NE(first.output.find("median_pairwise_distance:"), std::string::npos);
  const json echo = parse_tagged_line(first.output, "config");
  EXPECT_EQ(echo.at("n"), 6);
  EXPECT_EQ(echo.at("seed"), 42);
  EXPECT_EQ(echo.at("provider"), provider);
}

TEST_F(CliFixture, SampleAnchorsGuardsTooSmallCorpus) {
  const auto result = run_cli("sample-anchors --corpus " + corpus_path + " --provider " +
                                  provider + " --n 200 --out " + dir.file("a.bin"),
                              dir);
  EXPECT_EQ(result.exit_code, 2);
  EXPECT_NE(result.output.find("corpus too small"), std::string::npos);
}

TEST_F(CliFixture, EmbedAnchorFileYieldsUnitDiagonal) {
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 5 --out " + anchors,
                    dir)
                .exit_code,
            0);
  const std::string dump = dir.file("emb.jsonl");
  const auto result = run_cli("embed --anchors " + anchors + " --provider " + provider +
                                  " --input " + anchors + " --out " + dump,
                              dir);
  ASSERT_EQ(result.exit_code, 0) << result.output;

  std::istringstream lines(testutil::read_file(dump));
  std::string line;
  std::size_t row = 0;
  while (std::getline(lines, line)) {
    const json obj = json::parse(line);
    const auto scores = obj.at("scores").get<std::vector<double>>();
    ASSERT_EQ(scores.size(), 5u);
    EXPECT_NEAR(scores[row], 1.0, 1e-6);  // f32 storage precision
    ++row;
  }
  EXPECT_EQ(row, 5u);
}

TEST_F(CliFixture, EmbedRejectsMismatchedProvider) {
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 5 --out " + anchors,
                    dir)
                .exit_code,
            0);
  const auto result = run_cli("embed --anchors " + anchors +
                                  " --provider hashed:dim=64,seed=99 --input " + corpus_path +
                                  " --out " + dir.file("emb.jsonl"),
                              dir);
  EXPECT_EQ(result.exit_code, 2);
  EXPECT_NE(result.output.find("encoder mismatch"), std::string::npos);
}

TEST_F(CliFixture, FineGrainedConcatenatesWidths) {
  const std::string a1 = dir.file("a1.bin");
  const std::string a2 = dir.file("a2.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path +
                        " --provider hashed:dim=32,seed=1 --n 4 --out " + a1,
                    dir)
                .exit_code,
            0);
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path +
                        " --provider hashed:dim=32,seed=2 --n 3 --out " + a2,
                    dir)
                .exit_code,
            0);
  const std::string dump = dir.file("fine.jsonl");
  const auto result = run_cli("embed --input " + corpus_path + " --fine-grained " + a1 +
                                  ":hashed:dim=32,seed=1 --fine-grained " + a2 +
                                  ":hashed:dim=32,seed=2 --out " + dump,
                              dir);
  ASSERT_EQ(result.exit_code, 0) << result.output;
  std::istringstream lines(testutil::read_file(dump));
  std::string line;
  ASSERT_TRUE(static_cast<bool>(std::getline(lines, line)));
  EXPECT_EQ(json::parse(line).at("scores").size(), 7u);
}

TEST_F(CliFixture, EvalStsSelfConsistentScoresHundred) {
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 8 --out " + anchors,
                    dir)
                .exit_code,
            0);

  // Gold scores equal the pipeline's own cosine predictions by construction.
  const AnchorSet set = load_anchor_set(anchors);
  HashedEncoder enc(64, 7);
  std::string tsv;
  for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
    const Matrix a = embed_corpus_relative({corpus[i]}, set, enc);
    const Matrix b = embed_corpus_relative({corpus[i + 1]}, set, enc);
    tsv += corpus[i].text + "\t" + corpus[i + 1].text + "\t" +
           std::to_string(cosine_similarity(a.row(0), b.row(0))) + "\n";
  }
  const std::string sts_path = dir.file("sts.tsv");
  testutil::write_file(sts_path, tsv);

  const std::string report_path = dir.file("report.json");
  const auto result = run_cli("eval --task sts --anchors " + anchors + " --provider " +
                                  provider + " --dataset " + sts_path + " --name demo" +
                                  " --report " + report_path,
                              dir);
  ASSERT_EQ(result.exit_code, 0) << result.output;

  const json report = json::parse(testutil::read_file(report_path));
  EXPECT_EQ(report.at("task"), "sts");
  EXPECT_EQ(report.at("dataset"), "demo");
  EXPECT_DOUBLE_EQ(report.at("values").at("spearman_x100").get<double>(), 100.0);
  EXPECT_EQ(report.at("config").at("anchor_set_id"), set.id);
  EXPECT_EQ(report.at("config").at("metric"), "cosine");
  // Table goes to stdout alongside the JSON.
  EXPECT_NE(result.output.find("spearman_x100"), std::string::npos);
}

TEST_F(CliFixture, EvalRetrievalMatchesLibraryValue) {
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 10 --out " + anchors,
                    dir)
                .exit_code,
            0);

  // 20-doc / 5-query synthetic set with scattered graded qrels.
  std::mt19937_64 gen(431);
  std::string docs_jsonl, queries_jsonl, qrels_tsv;
  for (int d = 0; d < 20; ++d) {
    docs_jsonl += "{\"id\":\"d" + std::to_string(d) + "\",\"text\":\"" + corpus[d].text + "\"}\n";
  }
  for (int q = 0; q < 5; ++q) {
    queries_jsonl +=
        "{\"id\":\"q" + std::to_string(q) + "\",\"text\":\"" + corpus[q + 3].text + "\"}\n";
    for (int d = 0; d < 20; ++d) {
      if (uniform_below(gen, 4) == 0) {
        qrels_tsv += "q" + std::to_string(q) + "\td" + std::to_string(d) + "\t" +
                     std::to_string(uniform_below(gen, 3)) + "\n";
      }
    }
  }
  const std::string docs = dir.file("docs.jsonl");
  const std::string queries = dir.file("queries.jsonl");
  const std::string qrels = dir.file("qrels.tsv");
  testutil::write_file(docs, docs_jsonl);
  testutil::write_file(queries, queries_jsonl);
  testutil::write_file(qrels, qrels_tsv);

  const auto result = run_cli("eval --task retrieval --anchors " + anchors + " --provider " +
                                  provider + " --docs " + docs + " --queries " + queries +
                                  " --qrels " + qrels,
                              dir);
  ASSERT_EQ(result.exit_code, 0) << result.output;
  const json report = parse_tagged_line(result.output, "report");

  // The library harness run on the same inputs is the reference value.
  const AnchorSet set = load_anchor_set(anchors);
  HashedEncoder enc(64, 7);
  const EmbedFn embed_fn = [&](const std::vector<TextRecord>& texts) {
    return embed_corpus_relative(texts, set, enc);
  };
  const EvalReport expected = eval_retrieval(load_retrieval(docs, queries, qrels), embed_fn);
  EXPECT_DOUBLE_EQ(report.at("values").at("ndcg_x100").get<double>(),
                   expected.values.at("ndcg_x100"));
}

TEST_F(CliFixture, EvalCognitiveLoadOnIdenticalPairs) {
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 26 --out " + anchors,
                    dir)
                .exit_code,
            0);
  std::string tsv;
  for (int i = 0; i < 6; ++i) {
    tsv += corpus[i].text + "\t" + corpus[i].text + "\t5\n";
  }
  const std::string sts_path = dir.file("pairs.tsv");
  testutil::write_file(sts_path, tsv);
  const auto result = run_cli("eval --task cognitive-load --anchors " + anchors +
                                  " --provider " + provider + " --dataset " + sts_path +
                                  " --k 25",
                              dir);
  ASSERT_EQ(result.exit_code, 0) << result.output;
  const json report = parse_tagged_line(result.output, "report");
  EXPECT_DOUBLE_EQ(report.at("values").at("mean").get<double>(), 25.0);
  EXPECT_DOUBLE_EQ(report.at("values").at("rounded").get<double>(), 25.0);
}

TEST_F(CliFixture, InspectListsSelfAnchorFirst) {
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 6 --out " + anchors,
                    dir)
                .exit_code,
            0);
  const AnchorSet set = load_anchor_set(anchors);
  const std::string probe = set.records[3].text;
  const auto result = run_cli("inspect --anchors " + anchors + " --provider " + provider +
                                  " --text \"" + probe + "\" --top 2",
                              dir);
  ASSERT_EQ(result.exit_code, 0) << result.output;
  EXPECT_NE(result.output.find("[3] 1.0000"), std::string::npos) << result.output;

  // Exactly --top rows per text.
  std::size_t rows = 0;
  std::istringstream lines(result.output);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("  [", 0) == 0) ++rows;
  }
  EXPECT_EQ(rows, 2u);
}

TEST_F(CliFixture, StoreConversionRoundTripsByteExactly) {
  const std::string jsonl = dir.file("store.jsonl");
  testutil::write_file(jsonl,
                       "{\"id\":\"a\",\"text\":\"alpha beta\",\"vector\":[0.5,1.25]}\n"
                       "{\"id\":\"b\",\"text\":\"gamma\",\"vector\":[-3.5,0.125]}\n");
  const std::string bin1 = dir.file("store1.bin");
  ASSERT_EQ(run_cli("store --input " + jsonl + " --out " + bin1, dir).exit_code, 0);
  const std::string jsonl2 = dir.file("store2.jsonl");
  ASSERT_EQ(run_cli("store --input " + bin1 + " --out " + jsonl2, dir).exit_code, 0);
  const std::string bin2 = dir.file("store3.bin");
  ASSERT_EQ(run_cli("store --input " + jsonl2 + " --out " + bin2, dir).exit_code, 0);
  EXPECT_EQ(testutil::read_file(bin1), testutil::read_file(bin2));

  // Anchor-set files survive the same round trip with their metadata.
  const std::string anchors = dir.file("anchors.bin");
  ASSERT_EQ(run_cli("sample-anchors --corpus " + corpus_path + " --provider " + provider +
                        " --n 4 --out " + anchors,
                    dir)
                .exit_code,
            0);
  const std::string anchors_jsonl = dir.file("anchors.jsonl");
  ASSERT_EQ(run_cli("store --input " + anchors + " --out " + anchors_jsonl, dir).exit_code, 0);
  const std::string anchors_back = dir.file("anchors_back.bin");
  ASSERT_EQ(run_cli("store --input " + anchors_jsonl + " --out " + anchors_back, dir).exit_code,
            0);
  EXPECT_EQ(testutil::read_file(anchors), testutil::read_file(anchors_back));
}

TEST_F(CliFixture, ExitCodesByFailureClass) {
  // Missing input file -> I/O error.
  EXPECT_EQ(run_cli("store --input " + dir.file("nope.bin") + " --out " + dir.file("x"), dir)
                .exit_code,
            4);
  // Unknown flag -> configuration error.
  EXPECT_EQ(run_cli("sample-anchors --nonsense", dir).exit_code, 2);
  // Bad provider spec -> configuration error.
  EXPECT_EQ(run_cli("sample-anchors --corpus " + corpus_path +
                        " --provider martian:dim=3 --n 2 --out " + dir.file("a.bin"),
                    dir)
                .exit_code,
            2);
  // Unreachable HTTP provider -> provider error.
  const auto result = run_cli(
      "sample-anchors --corpus " + corpus_path +
          " --provider http:endpoint=http://127.0.0.1:1,dim=8,attempts=1,backoff_ms=1" +
          " --n 2 --out " + dir.file("a.bin"),
      dir);
  EXPECT_EQ(result.exit_code, 3);
  // Corrupt anchor file -> I/O error.
  const std::string broken = dir.file("broken.bin");
  testutil::write_file(broken, "LDIR\x01garbage");
  EXPECT_EQ(run_cli("embed --anchors " + broken + " --provider " + provider + " --input " +
                        corpus_path + " --out " + dir.file("e.jsonl"),
                    dir)
                .exit_code,
            4);
}

TEST_F(CliFixture, ConfigFileValuesAreOverriddenByFlags) {
  const std::string config = dir.file("run.ini");
  // Values containing commas must be quoted in the INI format.
  testutil::write_file(config,
                       "[sample-anchors]\n"
                       "corpus=" + corpus_path + "\n"
                       "provider=\"" + provider + "\"\n"
                       "n=5\n"
                       "out=" + dir.file("from-config.bin") + "\n");
  const auto from_file = run_cli("--config " + config + " sample-anchors", dir);
  ASSERT_EQ(from_file.exit_code, 0) << from_file.output;
  EXPECT_NE(from_file.output.find("anchors: 5"), std::string::npos);

  const auto overridden =
      run_cli("--config " + config + " sample-anchors --n 3 --out " + dir.file("flag.bin"), dir);
  ASSERT_EQ(overridden.exit_code, 0) << overridden.output;
  EXPECT_NE(overridden.output.find("anchors: 3"), std::string::npos);
  const json echo = parse_tagged_line(overridden.output, "config");
  EXPECT_EQ(echo.at("n"), 3);
}

}  // namespace
