#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dqa/corpus.hpp"
#include "dqa/llm_gateway.hpp"
#include "dqa/pte.hpp"
#include "dqa/rag.hpp"
#include "dqa/tig.hpp"

namespace dqa {

inline constexpr std::string_view kToolInvocationFailure = "Tool Invocation Failure.";

struct Algorithm1Result {
  /// Scratchpad text the model produced, with ground-truth observations.
  std::string answer;
  std::size_t matched_prefix_len = 0;
  bool failed = false;
  /// Parsed model steps, matched ones first; the last may be the mismatch.
  std::vector<ParsedStep> steps;
  /// Tool names offered to the model, in prompt order.
  std::vector<std::string> slate;
  std::optional<std::string> final_answer;
};

/// Replays the record's ground-truth tool chain against the model. Each
/// step offers a slate of the chain's tools plus n_random distractors. A
/// matching action is answered with the recorded observation; the first
/// mismatch or unparseable step appends "Tool Invocation Failure." and
/// stops. A fully matched chain gets one more completion for the final
/// answer. Throws DomainError if the record has no tool chain.
Algorithm1Result algorithm1_generate(const BackendConfig& model, const QAPair& record, const ToolPool& pool,
                                     const TemplateStore& templates, std::uint64_t seed,
                                     std::size_t n_random = kDefaultRandomTools);

/// Length of the common prefix of the two action sequences.
std::size_t matched_prefix_length(std::span<const std::string> model_actions,
                                  std::span<const std::string> ground_truth_actions);

struct PrefixRun {
  std::size_t matched_prefix_len = 0;
  std::size_t chain_len = 0;
};

/// Sum of matched prefixes over sum of chain lengths.
double tsa(std::span<const PrefixRun> runs);

struct FormatRun {
  /// Judge results for the steps judged, in order.
  std::vector<bool> verdicts;
  std::size_t chain_len = 0;
  /// The judge failed on this run; it is left out of both sums.
  bool judge_error = false;
};

/// Leading true verdicts over chain lengths, skipping judge-error runs.
/// Throws DomainError when no run remains.
double tfa(std::span<const FormatRun> runs);

/// Wins over wins plus losses; nullopt when every verdict is a tie.
std::optional<double> winrate(std::span<const Verdict> verdicts);

/// The letter a model output counts as: the trimmed output when it is a
/// single A-D letter, otherwise "others".
std::string mc_letter(std::string_view model_output);

struct McAnswer {
  std::string output;
  char gold = 'A';
};

/// Fraction of outputs that are exactly the gold letter after trimming.
double mca(std::span<const McAnswer> answers);

enum class Suite { general_mc, general_subjective, product, instance };

std::string_view to_string(Suite s);
std::optional<Suite> parse_suite(std::string_view s);

struct EvalConfig {
  std::uint64_t seed = 0;
  /// Records evaluated in parallel. Scripted backends are only
  /// reproducible with 1.
  std::size_t jobs = 1;
  bool swap_judging = false;
  std::size_t n_random_tools = kDefaultRandomTools;
  /// Defaults to the built-in set.
  const TemplateStore* templates = nullptr;
  /// Defaults to the common tools.
  const ToolPool* tools = nullptr;
  /// Labelled chunk texts for the product suite.
  const ChunkStore* chunks = nullptr;
  /// When both are set, the product suite also reports P@3 of the question.
  const VectorIndex* index = nullptr;
  const Embedder* embedder = nullptr;
};

struct EvalBackends {
  const BackendConfig* model = nullptr;
  const BackendConfig* competitor = nullptr;
  const BackendConfig* judge = nullptr;
};

struct RecordRow {
  std::string id;
  /// ok, error, judge_error or skipped.
  std::string status = "ok";
  std::string error;
  std::string answer;
  std::optional<std::string> competitor_answer;
  std::optional<Verdict> verdict;
  std::optional<std::string> mc_letter;
  std::optional<bool> correct;
  std::optional<std::size_t> matched_prefix_len;
  std::optional<std::size_t> chain_len;
  std::optional<bool> failed;
  std::optional<std::vector<bool>> format_verdicts;
  std::optional<std::vector<std::string>> slate;
  std::optional<std::vector<std::string>> retrieved;
};

struct EvalReport {
  std::string suite;
  /// Only metrics the suite defines and could compute.
  std::map<std::string, double> metrics;
  std::map<std::string, std::size_t> counts;
  std::vector<RecordRow> records;
  /// model, competitor, judge, seed, template_version.
  std::map<std::string, std::string> config;
};

/// Evaluates every record of the suite's category. Per-record backend
/// failures are recorded and skipped. Throws DomainError when a backend the
/// suite needs is missing.
EvalReport run_suite(const Dataset& dataset, Suite suite, const EvalBackends& backends,
                     const EvalConfig& config = {});

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// One row per (model, suite) with a column per metric.
std::string reports_to_markdown(std::span<const EvalReport> reports);

/// Seed for record `index` of a run seeded with `base`.
std::uint64_t record_seed(std::uint64_t base, std::size_t index);

}  // namespace dqa
