#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "support.hpp"

namespace eclipsehash {
namespace {

using testing::read_file;
using testing::ScratchDir;
using testing::write_file;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto r = run({"gen", "--dim", "6", "--records", "120", "--queries", "12", "--seed", "7",
                        "--out", prefix()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }

  std::string prefix() const { return (dir_ / "data").string(); }
  std::string records() const { return prefix() + ".records.fvecs"; }
  std::string queries() const { return prefix() + ".queries.fvecs"; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  ScratchDir dir_{"cli"};
};

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen", "--records", "0", "--seed", "1", "--out", "x"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen", "--out", "x"}).code, cli::kExitUsage);  // no --seed
}

TEST_F(CliTest, GenIsDeterministic) {
  const std::string first = read_file(records());
  ASSERT_EQ(run({"gen", "--dim", "6", "--records", "120", "--queries", "12", "--seed", "7", "--out",
                 path("again")})
                .code,
            cli::kExitOk);
  EXPECT_EQ(read_file(path("again.records.fvecs")), first);
  EXPECT_EQ(first.size(), 120U * (4 + 6 * 4));
}

TEST_F(CliTest, HashWritesCeilBitsOverSixtyFourWordsPerCode) {
  const auto r = run({"hash", "--method", "eh", "--c", "0", "--d", "32", "--bits", "1024", "--data",
                      records(), "--seed", "3", "--codes-out", path("c.bin")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(std::filesystem::file_size(path("c.bin")), 120U * 16 * 8);
  const auto meta = nlohmann::json::parse(read_file(path("c.bin.json")));
  EXPECT_EQ(meta["bits"], 1024);
  EXPECT_EQ(meta["count"], 120);
  EXPECT_EQ(meta["method"], "eh");

  ASSERT_EQ(run({"hash", "--method", "lh", "--bits", "65", "--data", records(), "--seed", "3",
                 "--codes-out", path("l.bin")})
                .code,
            cli::kExitOk);
  EXPECT_EQ(std::filesystem::file_size(path("l.bin")), 120U * 2 * 8);
}

TEST_F(CliTest, HashFlagMisuseIsAUsageError) {
  const std::vector<std::string> base{"--data", records(), "--codes-out", path("c.bin")};
  auto with = [&](std::vector<std::string> extra) {
    extra.insert(extra.begin(), "hash");
    extra.insert(extra.end(), base.begin(), base.end());
    return run(extra).code;
  };
  EXPECT_EQ(with({"--method", "lh", "--c", "0.5", "--seed", "1"}), cli::kExitUsage);
  EXPECT_EQ(with({"--method", "eh", "--c", "2", "--seed", "1"}), cli::kExitUsage);
  EXPECT_EQ(with({"--method", "eh"}), cli::kExitUsage);
  EXPECT_EQ(with({"--method", "nope", "--seed", "1"}), cli::kExitUsage);
}

TEST_F(CliTest, SavedFamilyReproducesCodes) {
  ASSERT_EQ(run({"hash", "--method", "eh", "--c", "-0.25", "--d", "2", "--bits", "100", "--data",
                 records(), "--seed", "11", "--family-out", path("f.bin"), "--codes-out",
                 path("a.bin")})
                .code,
            cli::kExitOk);
  const auto r = run({"hash", "--family", path("f.bin"), "--data", records(), "--codes-out",
                      path("b.bin")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(read_file(path("a.bin")), read_file(path("b.bin")));
  EXPECT_EQ(read_file(path("a.bin.json")), read_file(path("b.bin.json")));
  EXPECT_EQ(run({"hash", "--family", path("f.bin"), "--bits", "8", "--data", records(),
                 "--codes-out", path("x.bin")})
                .code,
            cli::kExitUsage);
}

TEST_F(CliTest, ThreadCountDoesNotChangeCodes) {
  ASSERT_EQ(run({"--threads", "1", "hash", "--method", "ah", "--bits", "300", "--data", records(),
                 "--seed", "5", "--codes-out", path("one.bin")})
                .code,
            cli::kExitOk);
  ASSERT_EQ(run({"--threads", "4", "hash", "--method", "ah", "--bits", "300", "--data", records(),
                 "--seed", "5", "--codes-out", path("four.bin")})
                .code,
            cli::kExitOk);
  EXPECT_EQ(read_file(path("one.bin")), read_file(path("four.bin")));
}

TEST_F(CliTest, DataErrorsExitTwo) {
  write_file(path("bad.fvecs"), "abc");
  EXPECT_EQ(run({"hash", "--method", "lh", "--data", path("bad.fvecs"), "--seed", "1",
                 "--codes-out", path("c.bin")})
                .code,
            cli::kExitData);
  EXPECT_EQ(run({"hash", "--method", "lh", "--data", path("missing.fvecs"), "--seed", "1",
                 "--codes-out", path("c.bin")})
                .code,
            cli::kExitData);
}

TEST_F(CliTest, SweepSingleCellMatchesEval) {
  for (const auto& [data, out] : {std::pair{records(), path("r.bin")}, {queries(), path("q.bin")}}) {
    ASSERT_EQ(run({"hash", "--method", "eh", "--c", "0.5", "--d", "1.5", "--bits", "64", "--data",
                   data, "--seed", "9", "--codes-out", out})
                  .code,
              cli::kExitOk);
  }
  const auto e = run({"eval", "--record-codes", path("r.bin"), "--query-codes", path("q.bin"),
                      "--records", records(), "--queries", queries(), "--k", "3", "--out",
                      path("eval.csv")});
  ASSERT_EQ(e.code, cli::kExitOk) << e.err;
  const auto s = run({"sweep", "--records", records(), "--queries", queries(), "--methods", "eh",
                      "--c-grid", "0.5", "--d-grid", "1.5", "--bits", "64", "--k", "3", "--seed",
                      "9", "--out", path("sweep.csv")});
  ASSERT_EQ(s.code, cli::kExitOk) << s.err;

  const auto eval_lines = lines(read_file(path("eval.csv")));
  const auto sweep_lines = lines(read_file(path("sweep.csv")));
  ASSERT_EQ(eval_lines.size(), 3U);
  EXPECT_EQ(eval_lines[0], "# eclipsehash v1");
  EXPECT_EQ(eval_lines[1], "method,c,d,B,k,seed,mean_recall");
  ASSERT_GE(sweep_lines.size(), 7U);
  EXPECT_EQ(sweep_lines[0], "# eclipsehash v1");
  EXPECT_EQ(sweep_lines[2], "method,c,d,B,k,seed,mean_recall");
  EXPECT_EQ(sweep_lines[3], eval_lines[2]);
  EXPECT_EQ(sweep_lines[4], "# optimum");
  EXPECT_EQ(sweep_lines[5], "c_opt,d_opt,mean_recall");
}

TEST_F(CliTest, EvalRejectsCodesFromDifferentFamilies) {
  ASSERT_EQ(run({"hash", "--method", "lh", "--bits", "64", "--data", records(), "--seed", "1",
                 "--codes-out", path("r.bin")})
                .code,
            cli::kExitOk);
  ASSERT_EQ(run({"hash", "--method", "lh", "--bits", "64", "--data", queries(), "--seed", "2",
                 "--codes-out", path("q.bin")})
                .code,
            cli::kExitOk);
  EXPECT_EQ(run({"eval", "--record-codes", path("r.bin"), "--query-codes", path("q.bin"),
                 "--records", records(), "--queries", queries()})
                .code,
            cli::kExitData);
}

TEST_F(CliTest, RatioCurveIsNondecreasing) {
  const auto r = run({"ratio", "--records", records(), "--d-grid", "log:0.1:20:40", "--out",
                      path("ratio.csv")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("d_star"), std::string::npos);
  double prev = -1.0;
  int rows = 0;
  for (const auto& line : lines(read_file(path("ratio.csv")))) {
    if (line.empty() || line[0] == '#' || line == "d,ratio") continue;
    const double value = std::stod(line.substr(line.find(',') + 1));
    EXPECT_GE(value, prev);
    prev = value;
    ++rows;
  }
  EXPECT_EQ(rows, 40);
}

TEST_F(CliTest, BenchWritesOneRowPerMethodAndLength) {
  const auto r = run({"bench", "--methods", "lh,eh", "--bits-list", "32,64", "--repeats", "3",
                      "--dim", "8", "--vectors", "50", "--seed", "1", "--out", path("b.csv")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  int rows = 0;
  for (const auto& line : lines(read_file(path("b.csv")))) {
    if (line.rfind("lh,", 0) == 0 || line.rfind("eh,", 0) == 0) ++rows;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(run({"bench", "--repeats", "2", "--seed", "1", "--out", path("b.csv")}).code,
            cli::kExitUsage);
}

TEST_F(CliTest, ConnectivityReportsSplitHypersphereCodes) {
  const auto hs = run({"connectivity", "--method", "hs", "--sphere", "-2:1", "--sphere", "2:1",
                       "--box", "-5,5", "--resolution", "512", "--euclidean", "--out",
                       path("conn.json")});
  ASSERT_EQ(hs.code, cli::kExitOk) << hs.err;
  const auto doc = nlohmann::json::parse(read_file(path("conn.json")));
  EXPECT_EQ(doc["components"]["00"], 3);

  const auto eh = run({"connectivity", "--method", "eh", "--dim", "2", "--bits", "5", "--seed",
                       "4", "--c", "0.2", "--d", "1.3", "--resolution", "256"});
  EXPECT_EQ(eh.code, cli::kExitOk) << eh.err;
  EXPECT_EQ(run({"connectivity", "--method", "eh", "--dim", "4", "--seed", "1"}).code,
            cli::kExitUsage);
}

}  // namespace
}  // namespace eclipsehash
