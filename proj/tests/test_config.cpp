#include <gtest/gtest.h>

#include "dqa/config.hpp"
#include "dqa/error.hpp"
#include "dqa/text.hpp"
#include "test_util.hpp"

namespace dqa {
namespace {

TEST(ConfigFileTest, SectionsQuotesComments) {
  auto cfg = ConfigFile::parse(
      "# leading comment\n"
      "[backend]\n"
      "kind = \"remote\"\n"
      "; semicolon comment\n"
      "model_name = 'gpt'\n"
      "timeout_ms = 2500\n"
      "[eval]\n"
      "swap = yes\n"
      "ratio = 0.25\n",
      "/cfg");
  EXPECT_EQ(cfg.get("backend", "kind"), "remote");
  EXPECT_EQ(cfg.get("backend", "model_name"), "gpt");
  EXPECT_EQ(cfg.get_uint("backend", "timeout_ms"), 2500u);
  EXPECT_EQ(cfg.get_bool("eval", "swap"), true);
  EXPECT_EQ(cfg.get_double("eval", "ratio"), 0.25);
  EXPECT_FALSE(cfg.get("eval", "missing"));
  EXPECT_FALSE(cfg.get("nosection", "kind"));
  EXPECT_EQ(cfg.get_or("eval", "missing", "dflt"), "dflt");
  EXPECT_TRUE(cfg.has_section("eval"));
  EXPECT_FALSE(cfg.has_section("job"));
}

TEST(ConfigFileTest, BadValuesThrow) {
  auto cfg = ConfigFile::parse("[a]\nn = 12x\nb = maybe\nd = 1.5.2\n");
  EXPECT_THROW(cfg.get_uint("a", "n"), ParseError);
  EXPECT_THROW(cfg.get_bool("a", "b"), ParseError);
  EXPECT_THROW(cfg.get_double("a", "d"), ParseError);
  EXPECT_THROW(ConfigFile::parse("[a]\nno equals sign here\n"), ParseError);
}

TEST(ConfigFileTest, RelativePaths) {
  auto cfg = ConfigFile::parse("[job]\ninput = data/in.jsonl\nabs = /tmp/x\nempty = \n", "/base/dir");
  EXPECT_EQ(cfg.path("job", "input"), "/base/dir/data/in.jsonl");
  EXPECT_EQ(cfg.path("job", "abs"), "/tmp/x");
  EXPECT_EQ(cfg.path("job", "empty"), "");
}

TEST(Backend, ScriptedFromFixture) {
  auto b = load_backend(testing::fixture("scripted.toml"));
  EXPECT_EQ(b.kind, BackendKind::scripted);
  EXPECT_EQ(b.model_name, "scripted-model");
  EXPECT_EQ(b.script->size(), 23u);
  EXPECT_EQ(describe(b).at("script_entries"), "23");
}

TEST(Backend, RemoteSettings) {
  auto cfg = ConfigFile::parse(
      "[backend]\nkind = remote\nendpoint_url = http://127.0.0.1:9/v1/chat/completions\nmodel_name = m\n"
      "timeout_ms = 100\nmax_retries = 1\nbackoff_ms = 5\napi_key_env = MY_KEY\n");
  auto b = backend_from_config(cfg);
  EXPECT_EQ(b.kind, BackendKind::remote);
  EXPECT_EQ(b.timeout, std::chrono::milliseconds(100));
  EXPECT_EQ(b.max_retries, 1);
  EXPECT_EQ(b.api_key_env, "MY_KEY");
  auto d = describe(b);
  EXPECT_EQ(d.at("endpoint_url"), "http://127.0.0.1:9/v1/chat/completions");
  EXPECT_EQ(d.count("api_key"), 0u);
  EXPECT_THROW(backend_from_config(ConfigFile::parse("[backend]\nkind = remote\n")), ParseError);
  EXPECT_THROW(backend_from_config(ConfigFile::parse("[backend]\nkind = magic\n")), ParseError);
  EXPECT_THROW(backend_from_config(ConfigFile::parse("[other]\nx = 1\n")), ParseError);
}

TEST(Script, LoadWithMatchers) {
  testing::TempDir dir;
  text::write_file(dir.file("s.jsonl"), "{\"response\": \"A\", \"match\": \"first\"}\n\n{\"response\": \"B\"}\n");
  auto entries = load_script(dir.file("s.jsonl"));
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].matcher, "first");
  EXPECT_FALSE(entries[1].matcher);
  text::write_file(dir.file("bad.jsonl"), "{\"match\": \"x\"}\n");
  EXPECT_THROW(load_script(dir.file("bad.jsonl")), ParseError);
}

TEST(Job, FromConfig) {
  testing::TempDir dir;
  text::write_file(dir.file("s.jsonl"), "{\"response\": \"x\"}\n");
  text::write_file(dir.file("job.ini"),
                   "[job]\npipeline = forum\nseed = 9\ninput = dump.jsonl\noutput = out/forum.jsonl\n"
                   "[thresholds]\ndedup = 0.7\nhigh_upvotes = 3\n"
                   "[backend]\nkind = scripted\nscript = s.jsonl\n");
  auto job = job_from_config(ConfigFile::load(dir.file("job.ini")));
  EXPECT_EQ(job.pipeline, Pipeline::forum);
  EXPECT_EQ(job.seed, 9u);
  EXPECT_EQ(job.input_path, dir.file("dump.jsonl"));
  EXPECT_EQ(job.output_path, dir.file("out/forum.jsonl"));
  EXPECT_EQ(job.dedup_threshold, 0.7);
  EXPECT_EQ(job.high_upvotes, 3);
  EXPECT_EQ(job.n_max, 5u);
  EXPECT_THROW(job_from_config(ConfigFile::parse("[job]\npipeline = nope\n")), ParseError);
}

}  // namespace
}  // namespace dqa
