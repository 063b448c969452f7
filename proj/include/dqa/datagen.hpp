#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dqa/corpus.hpp"
#include "dqa/error.hpp"
#include "dqa/instance.hpp"
#include "dqa/llm_gateway.hpp"
#include "dqa/pte.hpp"
#include "dqa/rag.hpp"
#include "dqa/tig.hpp"

namespace dqa {

// Forum pipeline

struct ForumAnswer {
  std::string text;
  int upvotes = 0;
  bool accepted = false;

  bool operator==(const ForumAnswer&) const = default;
};

struct RawForumItem {
  std::string question;
  std::vector<ForumAnswer> answers;

  bool operator==(const RawForumItem&) const = default;
};

/// JSONL of {question, answers: [{text, upvotes, accepted}]}.
std::vector<RawForumItem> parse_forum_dump(std::string_view contents);
std::vector<RawForumItem> load_forum_dump(const std::string& path);

/// Unigram F1 over lowercased whitespace tokens, counted as multisets.
double rouge1(std::string_view a, std::string_view b);

inline constexpr double kDefaultDedupThreshold = 0.8;
inline constexpr int kDefaultHighUpvotes = 5;

struct MergeLogEntry {
  std::size_t merged = 0;
  std::size_t representative = 0;
  double score = 0.0;
};

struct DedupResult {
  /// Retained representatives with their pooled eligible answers.
  std::vector<RawForumItem> items;
  /// Input index of each retained item.
  std::vector<std::size_t> kept;
  std::vector<MergeLogEntry> merges;
  /// Representatives dropped for lack of an accepted or high-upvote answer.
  std::vector<std::size_t> no_eligible_answer;
};

/// Greedy clustering in input order. An item scoring >= threshold against a
/// representative joins the best-scoring one (earliest on ties).
DedupResult filter_dedup(std::span<const RawForumItem> items, double threshold = kDefaultDedupThreshold,
                         int high_upvotes = kDefaultHighUpvotes);

/// Throws DomainError on an empty answer.
std::string rewrite_answer(const BackendConfig& backend, std::string_view question, std::string_view raw_answer,
                           const TemplateStore& templates = default_templates());

// Product pipeline

inline constexpr std::size_t kDefaultTokenBudget = 8000;

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Whitespace-delimited word count.
std::size_t count_words(std::string_view text);

struct SegmentationResult {
  std::vector<std::string> segments;
  std::vector<std::string> warnings;
};

/// Packs whole blank-line separated paragraphs while the count stays within
/// budget. Each segment is the source text from its first to its last
/// paragraph.
SegmentationResult segment_manual(const Document& doc, std::size_t token_budget = kDefaultTokenBudget,
                                  const TokenCounter& counter = count_words);

struct StageLog {
  std::string stage;
  std::string prompt;
  std::string output;

  bool operator==(const StageLog&) const = default;
};

struct ProductQaResult {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<StageLog> log;
};

/// Items of a bulleted ("- ", "* ") or numbered ("1. ", "1) ") list.
/// Unmarked lines continue the previous item; text before the first marker
/// is ignored.
std::vector<std::string> parse_list_items(std::string_view output);

/// Key points, then questions, then answers, each stage fed the previous
/// one's items. Throws GenerationError naming a stage that yields no items.
ProductQaResult generate_product_qa(const BackendConfig& backend, std::string_view segment, std::size_t n_max,
                                   const TemplateStore& templates = default_templates());

inline constexpr double kDefaultLabelThreshold = 0.8;

struct AnnotationResult {
  std::vector<QAPair> records;
  /// Input indices of pairs no chunk matched.
  std::vector<std::size_t> unlabeled;
};

/// Labels each pair with every chunk whose similarity to the question or
/// the answer reaches the threshold. Unlabeled pairs are not emitted.
AnnotationResult annotate_retrieval_labels(std::span<const std::pair<std::string, std::string>> pairs,
                                           const VectorIndex& index, const Embedder& embedder,
                                           double threshold = kDefaultLabelThreshold,
                                           std::string_view id_prefix = "product");

// Instance pipeline

struct InstanceQuestion {
  std::string question;
  std::vector<std::string> tools;

  bool multi_tool() const { return tools.size() >= 2; }
  bool operator==(const InstanceQuestion&) const = default;
};

/// List items with an optional trailing "[tools: A, B]" tag. Untagged items
/// are attributed to default_tool.
std::vector<InstanceQuestion> parse_instance_questions(std::string_view output, std::string_view default_tool);

/// Every multi-tool question plus as many single-tool ones as keep the
/// multi-tool fraction >= min_fraction, at most n in total, input order kept.
std::vector<InstanceQuestion> select_multi_tool(std::span<const InstanceQuestion> batch, std::size_t n,
                                                double min_fraction);

class InstanceConstraintError : public ConstraintError {
 public:
  InstanceConstraintError(const std::string& what, std::vector<InstanceQuestion> partial)
      : ConstraintError(what), partial_(std::move(partial)) {}
  const std::vector<InstanceQuestion>& partial() const { return partial_; }

 private:
  std::vector<InstanceQuestion> partial_;
};

inline constexpr double kDefaultMultiToolMin = 0.5;
inline constexpr std::size_t kDefaultQuestionRounds = 3;

/// Asks for n questions about `tool`, retrying up to max_rounds while no
/// multi-tool question has appeared. Throws InstanceConstraintError with the
/// questions gathered so far when the constraint cannot be met.
std::vector<InstanceQuestion> generate_instance_questions(
    const BackendConfig& backend, const ToolSpec& tool, const ToolPool& pool,
    std::span<const std::string> few_shots, std::size_t n, double multi_tool_min = kDefaultMultiToolMin,
    std::size_t max_rounds = kDefaultQuestionRounds, const TemplateStore& templates = default_templates());

struct InstanceAnswer {
  CotTrace trace;
  bool flagged = false;
  std::vector<std::string> flag_reasons;
};

/// Runs the agent loop with the answer cases as worked examples. Failed,
/// step-limited or incomplete traces (an expected tool never used) are
/// flagged for manual review.
InstanceAnswer generate_instance_answers(const BackendConfig& backend, std::string_view question,
                                         std::span<const std::string> expected_tools, const ToolPool& pool,
                                         const SimulatedInstance& instance,
                                         std::span<const std::string> answer_cases, AgentOptions options = {});

struct PolishedRecord {
  CotTrace trace;
  std::vector<std::size_t> rewritten_steps;
  /// Set for generalization tools.
  std::optional<std::string> format_summary;
};

/// Checks each step's Action_Input against its tool's format; a reply other
/// than "OK" replaces the input. Generalization tools also get a format
/// summary.
PolishedRecord polish_answer(const BackendConfig& backend, const CotTrace& trace, const ToolSpec& tool,
                             const ToolPool& pool, const TemplateStore& templates = default_templates());

/// Instance QAPair whose tool chain and reference answer come from the trace.
QAPair instance_record(std::string id, std::string_view question, const CotTrace& trace);

// Jobs

enum class Pipeline { forum, product, instance };

std::string_view to_string(Pipeline p);
std::optional<Pipeline> parse_pipeline(std::string_view s);

struct GenerationJob {
  Pipeline pipeline = Pipeline::forum;
  BackendConfig backend;
  std::uint64_t seed = 0;
  /// Forum dump (forum) or manual text (product).
  std::string input_path;
  std::string output_path;
  std::string templates_dir;

  double dedup_threshold = kDefaultDedupThreshold;
  int high_upvotes = kDefaultHighUpvotes;

  std::size_t token_budget = kDefaultTokenBudget;
  std::size_t n_max = 5;
  double label_threshold = kDefaultLabelThreshold;
  /// Written next to the product output when non-empty.
  std::string chunks_path;
  std::string index_path;

  double multi_tool_min = kDefaultMultiToolMin;
  std::size_t questions_per_tool = 4;
  std::size_t question_rounds = kDefaultQuestionRounds;
  /// Tool pool JSON; the common tools when empty.
  std::string tools_path;
  /// Instance fixture JSON; the demo instance when empty.
  std::string instance_path;
  /// One exemplar question per line.
  std::string few_shot_questions_path;
  /// Worked COT answers separated by blank lines.
  std::string answer_cases_path;

  /// Throws DomainError on out-of-range settings or missing inputs.
  void validate() const;
};

struct GenerationOutcome {
  Dataset dataset;
  /// Per-stage records: prompts, outputs, merges, flags.
  nlohmann::ordered_json log;
};

GenerationOutcome run_generation_job(const GenerationJob& job);

}  // namespace dqa
