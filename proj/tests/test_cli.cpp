#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "dqa/evalpipe.hpp"
#include "dqa/text.hpp"
#include "test_util.hpp"

namespace dqa {
namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  testing::TempDir dir;
  const auto err_path = dir.file("stderr.txt");
  const std::string cmd = std::string(DQA_CLI_PATH) + " " + args + " 2>" + err_path;
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = text::read_file(err_path);
  return r;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

std::string instance_eval_args(const std::string& out) {
  using testing::fixture;
  return "eval --suite instance --dataset " + q(fixture("inst.jsonl")) + " --model " + q(fixture("scripted.toml")) +
         " --judge " + q(fixture("judge.toml")) + " --competitor " + q(fixture("competitor.toml")) + " --tools " +
         q(fixture("tools.json")) + " --seed 7 --out " + q(out);
}

TEST(Cli, ValidateExitCodes) {
  auto ok = run_cli("validate " + q(testing::fixture("ok.jsonl")));
  EXPECT_EQ(ok.exit_code, 0) << ok.err;
  EXPECT_EQ(ok.out, "3 records valid\n");
  EXPECT_NE(ok.err.find("resolved config:"), std::string::npos);
  auto bad = run_cli("validate " + q(testing::fixture("bad.jsonl")));
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.out.find("2 of 3 records invalid"), std::string::npos) << bad.out;
  auto missing = run_cli("validate /nonexistent/file.jsonl");
  EXPECT_EQ(missing.exit_code, 1);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("eval --suite banana --dataset x --model y").exit_code, 2);
  EXPECT_EQ(run_cli("classify --question hi --kind nope").exit_code, 2);
  EXPECT_EQ(run_cli("report --in x.json --format xml").exit_code, 2);
  auto missing = run_cli("eval --suite product --dataset " + q(testing::fixture("ok.jsonl")) + " --model " +
                         q(testing::fixture("scripted.toml")));
  EXPECT_EQ(missing.exit_code, 2);
}

TEST(Cli, ClassifyRules) {
  auto r = run_cli("classify --kind rules --question 'How do I hack into a database server?'");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "{\"category\":\"unsafe\",\"classifier\":\"rules\"}\n");
  auto g = run_cli("classify --kind rules --question 'What does a B+ tree index store?'");
  EXPECT_NE(g.out.find("\"general\""), std::string::npos);
}

TEST(Cli, IndexWritesChunksAndIndex) {
  testing::TempDir dir;
  text::write_file(dir.file("manual.txt"), std::string(600, 'x'));
  auto r = run_cli("index --manual " + q(dir.file("manual.txt")) + " --out " + q(dir.file("m.idx")));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "3 chunks indexed\n");
  EXPECT_EQ(ChunkStore::load(dir.file("m.idx.chunks.jsonl")).size(), 3u);
  EXPECT_EQ(VectorIndex::load(dir.file("m.idx")).size(), 3u);
  auto bad = run_cli("index --manual " + q(dir.file("manual.txt")) + " --out " + q(dir.file("n.idx")) +
                     " --seg-len 10 --overlap 10");
  EXPECT_EQ(bad.exit_code, 2);
}

TEST(Cli, EvalInstanceIsDeterministic) {
  testing::TempDir dir;
  auto a = run_cli(instance_eval_args(dir.file("a.json")));
  auto b = run_cli(instance_eval_args(dir.file("b.json")));
  ASSERT_EQ(a.exit_code, 0) << a.err;
  ASSERT_EQ(b.exit_code, 0) << b.err;
  EXPECT_EQ(text::read_file(dir.file("a.json")), text::read_file(dir.file("b.json")));
  EXPECT_EQ(a.out, b.out);
  auto report = report_from_json(nlohmann::json::parse(text::read_file(dir.file("a.json"))));
  EXPECT_NEAR(report.metrics.at("tsa"), 13.0 / 19.0, 1e-12);
  EXPECT_NEAR(report.metrics.at("tfa"), 12.0 / 19.0, 1e-12);
  EXPECT_NEAR(report.metrics.at("winrate"), 0.875, 1e-12);
  EXPECT_NE(a.out.find("| scripted-model | instance |"), std::string::npos) << a.out;

  auto md = run_cli("report --format md --in " + q(dir.file("a.json")) + " " + q(dir.file("b.json")));
  EXPECT_EQ(md.exit_code, 0) << md.err;
  EXPECT_NE(md.out.find("| Model | Suite | MCA | WinRate | TSA | TFA | P@3 | Errors |"), std::string::npos);
  EXPECT_NE(md.out.find("0.6842"), std::string::npos);
}

TEST(Cli, EvalRefusesInvalidDataset) {
  testing::TempDir dir;
  auto r = run_cli("eval --suite general_mc --dataset " + q(testing::fixture("bad.jsonl")) + " --model " +
                   q(testing::fixture("scripted.toml")) + " --out " + q(dir.file("r.json")));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("invalid records"), std::string::npos);
}

TEST(Cli, EvalConfigFileWithFlagOverride) {
  testing::TempDir dir;
  using testing::fixture;
  text::write_file(dir.file("eval.ini"), "[eval]\nsuite = general_mc\ndataset = " + fixture("inst.jsonl") +
                                             "\nmodel = " + fixture("scripted.toml") + "\nseed = 3\n");
  auto r = run_cli("eval --config " + q(dir.file("eval.ini")) + " --suite instance --tools " +
                   q(fixture("tools.json")) + " --seed 7 --judge " + q(fixture("judge.toml")) + " --competitor " +
                   q(fixture("competitor.toml")));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  auto report = report_from_json(nlohmann::json::parse(r.out));
  EXPECT_EQ(report.suite, "instance");
  EXPECT_EQ(report.config.at("seed"), "7");
  EXPECT_NE(r.err.find("suite = instance"), std::string::npos);
}

TEST(Cli, GenForumPipeline) {
  testing::TempDir dir;
  text::write_file(dir.file("dump.jsonl"),
                   "{\"question\": \"how to vacuum a big table\", \"answers\": [{\"text\": \"run vacuum\", "
                   "\"upvotes\": 9, \"accepted\": false}]}\n"
                   "{\"question\": \"how to vacuum a big table quickly\", \"answers\": [{\"text\": \"vacuum "
                   "verbose\", \"upvotes\": 0, \"accepted\": true}]}\n"
                   "{\"question\": \"what is a view\", \"answers\": [{\"text\": \"a stored query\", \"upvotes\": 0, "
                   "\"accepted\": false}]}\n");
  text::write_file(dir.file("s.jsonl"), "{\"response\": \"Run VACUUM on the table.\", \"match\": \"vacuum verbose\"}\n");
  text::write_file(dir.file("job.ini"),
                   "[job]\npipeline = forum\ninput = dump.jsonl\noutput = forum.jsonl\n"
                   "[backend]\nkind = scripted\nmodel_name = rewriter\nscript = s.jsonl\n");
  auto r = run_cli("gen --pipeline forum --config " + q(dir.file("job.ini")) + " --seed 4");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("1 records written"), std::string::npos) << r.out;
  auto loaded = load_dataset(dir.file("forum.jsonl"));
  ASSERT_EQ(loaded.dataset.records.size(), 1u);
  EXPECT_TRUE(loaded.invalid.empty());
  EXPECT_EQ(loaded.dataset.records[0].reference_answer, "Run VACUUM on the table.");
  EXPECT_EQ(loaded.dataset.metadata.at("seed"), "4");
  auto log = nlohmann::json::parse(text::read_file(dir.file("forum.jsonl.log.json")));
  EXPECT_EQ(log.at("merges").size(), 1u);
  EXPECT_EQ(log.at("no_eligible_answer"), nlohmann::json::array({2}));

  auto mismatch = run_cli("gen --pipeline product --config " + q(dir.file("job.ini")));
  EXPECT_EQ(mismatch.exit_code, 2);
}

}  // namespace
}  // namespace dqa
