#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/corpus.hpp"

namespace dqa {

/// Routing templates selected by question category.
enum class TemplateId { general, product, instance, irrelevant };

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view s);
/// unsafe questions share the refusal template with irrelevant ones.
TemplateId template_for(QuestionCategory category);

/// Downstream modules a rendered template activates.
enum class Trigger { rag, tig };

std::string_view to_string(Trigger t);

using SlotBinding = std::map<std::string, std::string>;

struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<Trigger> triggers;
};

/// Distinct {{slot}} names in order of first appearance.
std::vector<std::string> slot_names(std::string_view body);

/// Substitutes every {{slot}} in a single left-to-right pass. Bound values
/// are never rescanned, so a "{{" inside a question survives literally.
/// Throws RenderError when a slot is unbound or a binding has no slot.
std::string render(const PromptTemplate& tmpl, const SlotBinding& bindings);

/// Named prompt templates: the four routing templates plus the auxiliary
/// prompts used for judging, classification and dataset generation.
class TemplateStore {
 public:
  /// Built-in English set.
  static TemplateStore builtin();

  /// Built-in set overlaid with every *.tmpl file in `dir`.
  static TemplateStore load_directory(const std::string& dir);

  /// Parses "#template <name> triggers=<a,b>" followed by the body.
  static PromptTemplate parse_file(std::string_view contents);

  /// Replaces any template of the same name. Routing templates are checked
  /// against their slot and trigger requirements (RenderError if violated).
  void add(PromptTemplate tmpl);

  const PromptTemplate& get(std::string_view name) const;
  const PromptTemplate& get(TemplateId id) const { return get(to_string(id)); }
  bool contains(std::string_view name) const;

  std::string render(std::string_view name, const SlotBinding& bindings) const;
  std::string render(TemplateId id, const SlotBinding& bindings) const {
    return render(to_string(id), bindings);
  }

  std::set<Trigger> triggers(TemplateId id) const { return get(id).triggers; }

  /// Content hash of all templates, recorded in evaluation reports.
  std::string version() const;

  std::vector<std::string> names() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

/// Throws RenderError if a routing template breaks its invariants.
void check_routing_template(const PromptTemplate& tmpl);

namespace prompts {
// Names of the auxiliary templates.
inline constexpr std::string_view kJudgePair = "judge_pair";
inline constexpr std::string_view kJudgeToolFormat = "judge_tool_format";
inline constexpr std::string_view kClassify = "classify";
inline constexpr std::string_view kClassifySafety = "classify_safety";
inline constexpr std::string_view kClassifyTopic = "classify_topic";
inline constexpr std::string_view kMultipleChoice = "multiple_choice";
inline constexpr std::string_view kRewriteAnswer = "rewrite_answer";
inline constexpr std::string_view kProductKeyPoints = "product_key_points";
inline constexpr std::string_view kProductQuestions = "product_questions";
inline constexpr std::string_view kProductAnswers = "product_answers";
inline constexpr std::string_view kInstanceQuestions = "instance_questions";
inline constexpr std::string_view kPolishCheck = "polish_check";
inline constexpr std::string_view kPolishSummarize = "polish_summarize";
}  // namespace prompts

}  // namespace dqa
