#if FLOWGUARD_HAVE_CLI

#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "flowguard/csv.hpp"
#include "test_support.hpp"

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "flowguard");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = flowguard::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run({"gen", "--scenario", "AN1", "--seed", "7", "--duration", "600", "--rtus", "4", "--out-pcap",
                   p("train.pcap"), "--out-labels", p("train.csv")})
                  .code,
              0);
    ASSERT_EQ(run({"extract", "--pcap", p("train.pcap"), "--mode", "slotted", "--timespan", "60", "--out",
                   p("f.csv")})
                  .code,
              0);
  }
  std::string p(const std::string& name) const { return (dir / name).string(); }

  fgtest::TempDir dir;
};

}  // namespace

TEST_F(CliPipeline, TrainingCaptureClassifiesBenign) {
  for (const std::string algo : {"dbscan", "hdbscan"}) {
    std::vector<std::string> train{"train", "--features", p("f.csv"), "--algo", algo, "--out", p("m.json")};
    if (algo == "dbscan") train.insert(train.end(), {"--eps", "1.0", "--min-samples", "2"});
    else train.insert(train.end(), {"--min-cluster-size", "3", "--min-samples", "2"});
    const auto t = run(train);
    ASSERT_EQ(t.code, 0) << t.err;
    const auto c = run({"classify", "--model", p("m.json"), "--features", p("f.csv"), "--out", p("r.csv")});
    ASSERT_EQ(c.code, 0) << c.err;
    const auto table = flowguard::read_results_csv(p("r.csv"));
    ASSERT_FALSE(table.results.empty());
    // Noise points are dropped from the model, so only retained ones are guaranteed.
    const auto model = flowguard::load_model(p("m.json"));
    std::size_t benign = 0;
    for (const auto& r : table.results) benign += r.verdict == flowguard::Verdict::Benign;
    EXPECT_GE(benign, model.train_points().rows()) << algo;
    if (model.train_points().rows() == table.results.size()) {
      EXPECT_EQ(benign, table.results.size()) << algo;
    }
    if (algo == "hdbscan") {
      EXPECT_EQ(model.train_points().rows(), table.results.size());
    }
    EXPECT_NE(c.out.find("anomalies"), std::string::npos);
  }
}

TEST_F(CliPipeline, NoNoiseModelIsAllBenign) {
  ASSERT_EQ(run({"train", "--features", p("f.csv"), "--algo", "dbscan", "--eps", "1000", "--min-samples", "1",
                 "--out", p("m.json")})
                .code,
            0);
  ASSERT_EQ(run({"classify", "--model", p("m.json"), "--features", p("f.csv"), "--out", p("r.csv")}).code, 0);
  for (const auto& r : flowguard::read_results_csv(p("r.csv")).results) {
    EXPECT_EQ(r.verdict, flowguard::Verdict::Benign);
  }
}

TEST_F(CliPipeline, EvaluateAndTuneAndKdist) {
  ASSERT_EQ(run({"gen", "--scenario", "AN7.4", "--seed", "8", "--duration", "600", "--rtus", "4", "--out-pcap",
                 p("t.pcap"), "--out-labels", p("t.csv")})
                .code,
            0);
  ASSERT_EQ(run({"extract", "--pcap", p("t.pcap"), "--timespan", "60", "--out", p("tf.csv")}).code, 0);
  fgtest::spit(dir / "grid.json", R"({"min_cluster_size": [3, 5], "min_samples": [2, 3]})");
  const auto tune = run({"tune", "--features", p("f.csv"), "--algo", "hdbscan", "--score", "dbcv", "--grid",
                         p("grid.json"), "--out", p("tune.json"), "--csv", p("tune.csv")});
  ASSERT_EQ(tune.code, 0) << tune.err;
  EXPECT_NE(fgtest::slurp(dir / "tune.json").find("\"rows\""), std::string::npos);
  ASSERT_EQ(run({"train", "--features", p("f.csv"), "--algo", "hdbscan", "--min-cluster-size", "3", "--min-samples",
                 "2", "--out", p("m.json")})
                .code,
            0);
  ASSERT_EQ(run({"classify", "--model", p("m.json"), "--features", p("tf.csv"), "--out", p("r.csv")}).code, 0);
  const auto ev = run({"evaluate", "--results", p("r.csv"), "--labels", p("t.csv"), "--out", p("e.json"), "--table"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("f1"), std::string::npos);
  EXPECT_NE(ev.err.find("AN7.4"), std::string::npos);
  EXPECT_NE(fgtest::slurp(dir / "e.json").find("\"AN7.4\""), std::string::npos);

  const auto kd = run({"kdist", "--features", p("f.csv"), "--k", "4", "--out", p("k.csv")});
  ASSERT_EQ(kd.code, 0) << kd.err;
  EXPECT_EQ(fgtest::slurp(dir / "k.csv").rfind("rank,distance\n", 0), 0u);
}

TEST_F(CliPipeline, OutputsAreIdempotent) {
  auto twice = [&](std::vector<std::string> args, const std::string& file) {
    ASSERT_EQ(run(args).code, 0);
    const std::string first = fgtest::slurp(dir / file);
    ASSERT_EQ(run(args).code, 0);
    EXPECT_EQ(fgtest::slurp(dir / file), first) << args[0];
  };
  twice({"gen", "--scenario", "AN6", "--seed", "3", "--duration", "200", "--out-pcap", p("g.pcap"), "--out-labels",
         p("g.csv")},
        "g.pcap");
  twice({"extract", "--pcap", p("g.pcap"), "--mode", "windowed", "--timespan", "10", "--out", p("w.csv")}, "w.csv");
  twice({"train", "--features", p("f.csv"), "--algo", "dbscan", "--mpd", "--out", p("m.json")}, "m.json");
  twice({"classify", "--model", p("m.json"), "--features", p("w.csv"), "--out", p("r.csv")}, "r.csv");
  twice({"evaluate", "--results", p("r.csv"), "--labels", p("g.csv"), "--out", p("e.json")}, "e.json");
  fgtest::spit(dir / "grid.json", R"({"eps": [0.5, 1, 2], "min_samples": [2, 3], "max_parallel": 3})");
  twice({"tune", "--features", p("f.csv"), "--algo", "dbscan", "--grid", p("grid.json"), "--out", p("t.json")},
        "t.json");
}

TEST_F(CliPipeline, DimensionMismatchIsDataError) {
  std::istringstream lines(fgtest::slurp(dir / "f.csv"));
  std::string trimmed, line;
  while (std::getline(lines, line)) trimmed += line.substr(0, line.rfind(',')) + "\n";
  fgtest::spit(dir / "f33.csv", trimmed);
  ASSERT_EQ(run({"train", "--features", p("f.csv"), "--algo", "dbscan", "--eps", "1", "--out", p("m.json")}).code,
            0);
  const auto r = run({"classify", "--model", p("m.json"), "--features", p("f33.csv"), "--out", p("r.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("DimensionMismatch"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliPipeline, ConfigOverlay) {
  fgtest::spit(dir / "ok.toml", "[extract]\ntimespan = 30\nmode = \"windowed\"\n");
  const auto ok = run({"--config", p("ok.toml"), "extract", "--pcap", p("train.pcap"), "--out", p("c.csv")});
  EXPECT_EQ(ok.code, 0) << ok.err;
  ASSERT_EQ(run({"extract", "--pcap", p("train.pcap"), "--mode", "windowed", "--timespan", "30", "--out",
                 p("d.csv")})
                .code,
            0);
  EXPECT_EQ(fgtest::slurp(dir / "c.csv"), fgtest::slurp(dir / "d.csv"));
  // Flags take precedence over the file.
  ASSERT_EQ(run({"--config", p("ok.toml"), "extract", "--pcap", p("train.pcap"), "--mode", "slotted", "--timespan",
                 "60", "--out", p("e.csv")})
                .code,
            0);
  EXPECT_EQ(fgtest::slurp(dir / "e.csv"), fgtest::slurp(dir / "f.csv"));

  fgtest::spit(dir / "bad.toml", "[extract]\ntimespan = 30\nbogus = 1\n");
  const auto bad = run({"--config", p("bad.toml"), "extract", "--pcap", p("train.pcap"), "--out", p("c.csv")});
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, UsageErrors) {
  fgtest::TempDir dir;
  const std::string out = (dir / "x.csv").string();
  auto r = run({"extract", "--pcap", "whatever.pcap", "--timespan", "0", "--out", out});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("timespan"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"gen", "--scenario", "AN9", "--out-pcap", out, "--out-labels", out}).code, 1);
  EXPECT_EQ(run({"extract", "--pcap", "x", "--mode", "diagonal", "--out", out}).code, 1);
  EXPECT_EQ(run({"train", "--features", "x", "--algo", "dbscan", "--out", out}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MissingInputIsDataError) {
  fgtest::TempDir dir;
  const auto r = run({"extract", "--pcap", (dir / "nope.pcap").string(), "--out", (dir / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, BadMagicIsDataError) {
  fgtest::TempDir dir;
  fgtest::spit(dir / "junk.pcap", std::string(64, 'x'));
  const auto r = run({"extract", "--pcap", (dir / "junk.pcap").string(), "--out", (dir / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("BadMagic"), std::string::npos);
}

TEST(Cli, UnknownGridKeyIsUsageError) {
  fgtest::TempDir dir;
  fgtest::spit(dir / "g.json", R"({"eps": [1], "min_samples": [2], "colour": "red"})");
  fgtest::spit(dir / "f.csv", "");
  const auto r = run({"tune", "--features", (dir / "f.csv").string(), "--algo", "dbscan", "--grid",
                      (dir / "g.json").string(), "--out", (dir / "t.json").string()});
  EXPECT_EQ(r.code, 1);
}

#endif
