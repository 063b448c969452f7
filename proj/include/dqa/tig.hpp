#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dqa/instance.hpp"
#include "dqa/llm_gateway.hpp"
#include "dqa/pte.hpp"

namespace dqa {

/// The six common tool types plus imagined generalization tools.
enum class ToolKind { schema, selection, resource, workload, status, tuning, generalization };

std::string_view to_string(ToolKind k);
std::optional<ToolKind> parse_tool_kind(std::string_view s);

using ToolOutput = std::variant<ResultSet, std::string>;
using ToolExecutor = std::function<ToolOutput(std::string_view action_input, const SimulatedInstance&)>;

struct ToolSpec {
  std::string name;
  ToolKind kind = ToolKind::generalization;
  std::string description;
  std::string input_format;
  ToolExecutor executor;
};

/// Executor for one of the six common kinds, reading the instance fixture.
ToolExecutor builtin_executor(ToolKind kind);

/// Executor answering from a fixed input -> observation map.
ToolExecutor canned_executor(std::map<std::string, std::string> responses, std::string fallback);

class ToolPool {
 public:
  ToolPool() = default;

  /// Throws IntegrityError on a duplicate name.
  void add(ToolSpec tool);
  /// Exact, case-sensitive name match.
  const ToolSpec* find(std::string_view name) const;

  const std::vector<ToolSpec>& tools() const { return tools_; }
  std::size_t size() const { return tools_.size(); }
  std::vector<std::string> names() const;

  /// Schema, Selection, Resource, Workload, Status and Tuning.
  static ToolPool common();

  /// JSON list of {name, kind, description, input_format, binding}, where
  /// binding is a common kind name or "canned" (with "responses" and
  /// "default_response").
  static ToolPool from_json(const nlohmann::json& j);
  static ToolPool load(const std::string& path);

 private:
  std::vector<ToolSpec> tools_;
};

/// One "- <name>: <description>. Input: <input_format>" line per tool.
std::string render_tool_listing(const ToolPool& pool);

/// One model turn: either a tool call or the final answer.
struct ParsedStep {
  enum class Kind { tool, final_answer };

  Kind kind = Kind::tool;
  std::string thought;
  std::string action;
  std::string action_input;
  std::string final_answer;

  bool is_final() const { return kind == Kind::final_answer; }
  bool operator==(const ParsedStep&) const = default;
};

/// Reads labelled lines (Thought / Action / Action_Input / Final_Answer).
/// A label continues until the next label line; values are trimmed and one
/// trailing ';' is dropped. Unlabelled leading text counts as the thought.
/// Parsing stops after the first complete step. Throws ParseError for an
/// Action without Action_Input, an empty Action, or no step at all.
ParsedStep parse_cot_step(std::string_view model_output);

/// Canonical rendering accepted by parse_cot_step.
std::string format_cot_step(const ParsedStep& step);

struct CotStep {
  std::string thought;
  std::string action;
  std::string action_input;
  std::optional<std::string> observation;

  bool operator==(const CotStep&) const = default;
};

enum class Termination { final_answer, failure, step_limit };

std::string_view to_string(Termination t);

struct CotTrace {
  std::vector<CotStep> steps;
  std::optional<std::string> final_answer;
  Termination terminated_by = Termination::failure;
  /// Raw model output that failed to parse, when terminated_by is failure.
  std::optional<std::string> failure_output;
  std::string failure_reason;

  bool operator==(const CotTrace&) const = default;
};

nlohmann::ordered_json trace_to_json(const CotTrace& trace);
CotTrace trace_from_json(const nlohmann::json& j);

/// Thought/Action/Action_Input/Observation lines for every step, then the
/// Final_Answer line when present.
std::string format_trace(const CotTrace& trace);

/// Never throws: unknown names yield "Tool not found: <name>" and executor
/// faults yield "Error: <message>".
ToolOutput dispatch_tool_raw(const ToolPool& pool, std::string_view action,
                             std::string_view action_input, const SimulatedInstance& instance);

std::string dispatch_tool(const ToolPool& pool, std::string_view action,
                          std::string_view action_input, const SimulatedInstance& instance);

inline constexpr std::size_t kDefaultMaxObservationLines = 50;

/// Tables become Markdown pipe tables. Text longer than max_lines keeps only
/// lines containing a relevance term (case-insensitive); if still too long
/// it is cut to max_lines followed by an elision marker.
std::string postprocess_tool_output(const ToolOutput& raw,
                                    std::span<const std::string> relevance_terms,
                                    std::size_t max_lines = kDefaultMaxObservationLines);

struct AgentOptions {
  std::size_t max_steps = 8;
  std::size_t max_observation_lines = kDefaultMaxObservationLines;
  int max_tokens = 1024;
  double temperature = 0.0;
  /// Worked examples placed before the question when non-empty.
  std::string few_shot_examples;
  const TemplateStore* templates = nullptr;
};

/// Text of the instance prompt for one turn of the loop.
std::string render_agent_prompt(const TemplateStore& templates, std::string_view question,
                                const ToolPool& slate, std::string_view scratchpad,
                                std::string_view few_shot_examples = {});

/// ReAct loop. Each completion is stopped at "Observation:"; tool steps are
/// dispatched and their post-processed output appended to the scratchpad.
/// At most max_steps completions are made.
CotTrace run_agent_loop(const BackendConfig& backend, std::string_view question, const ToolPool& pool,
                        const SimulatedInstance& instance, const AgentOptions& options = {});

/// Ground-truth tools plus n_random distinct other pool tools, shuffled
/// deterministically by seed. Throws DomainError if the pool is too small.
ToolPool sample_tool_slate(std::span<const ToolSpec> ground_truth, const ToolPool& pool,
                           std::size_t n_random, std::uint64_t seed);

inline constexpr std::size_t kDefaultRandomTools = 4;

bool judge_tool_format(const BackendConfig& judge, const ToolSpec& tool, std::string_view action_input,
                       const TemplateStore& templates = default_templates());

}  // namespace dqa
