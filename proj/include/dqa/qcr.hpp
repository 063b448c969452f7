#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dqa/corpus.hpp"
#include "dqa/llm_gateway.hpp"

namespace dqa {

enum class ClassifierKind { llm_prompt, remote_flat, remote_hierarchical, rules };

std::string_view to_string(ClassifierKind k);
std::optional<ClassifierKind> parse_classifier_kind(std::string_view s);

struct RoutingDecision {
  QuestionCategory category = QuestionCategory::irrelevant;
  ClassifierKind classifier_kind = ClassifierKind::rules;
  std::optional<double> confidence;
  /// Set when the classifier output could not be mapped and the decision
  /// fell back to irrelevant.
  std::optional<std::string> warning;
};

/// Maps a classifier label ("instance-specific", "DB general", ...) onto a
/// category. Case-insensitive; a trailing period is ignored.
std::optional<QuestionCategory> map_label(std::string_view label);

/// External classifier service: POST {"question": ...} -> {"label": ...}.
struct RemoteClassifier {
  std::string endpoint_url;
  ClassifierKind kind = ClassifierKind::remote_flat;
  std::chrono::milliseconds timeout{10000};
};

struct Rule {
  QuestionCategory category;
  std::vector<std::string> keywords;
};

/// Ordered keyword rules; the first rule with a keyword hit wins.
class Ruleset {
 public:
  Ruleset() = default;
  explicit Ruleset(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  /// Lines of "<category>: kw, kw"; '#' starts a comment line.
  static Ruleset parse(std::string_view contents);
  static Ruleset load(const std::string& path);
  /// Ruleset shipped in data/rules/default.rules, compiled in.
  static const Ruleset& builtin();

  /// A keyword hits when it occurs case-insensitively at a word start.
  std::optional<QuestionCategory> match(std::string_view question) const;

  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
};

using Classifier = std::variant<BackendConfig, RemoteClassifier, Ruleset>;

RoutingDecision classify_llm(const BackendConfig& backend, std::string_view question,
                             const TemplateStore& templates = default_templates());
RoutingDecision classify_remote(const RemoteClassifier& service, std::string_view question);
RoutingDecision classify_rules(const Ruleset& rules, std::string_view question);

/// Dispatches on the classifier alternative. Throws DomainError for an empty
/// question and ServiceError / TransportError when a remote call fails.
RoutingDecision classify(std::string_view question, const Classifier& classifier);

/// A hierarchy stage is answered either by an LLM prompt or a remote service.
using StageBackend = std::variant<BackendConfig, RemoteClassifier>;

/// Stage 1 separates safe from unsafe; unsafe questions stop there. Safe
/// questions go to the four-way stage 2.
RoutingDecision hierarchical_classify(std::string_view question, const StageBackend& safety,
                                      const StageBackend& topic,
                                      const TemplateStore& templates = default_templates());

/// counts[gold][predicted], indexed by QuestionCategory.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 5>, 5> counts{};

  std::uint64_t& at(QuestionCategory gold, QuestionCategory pred) {
    return counts[static_cast<std::size_t>(gold)][static_cast<std::size_t>(pred)];
  }
  std::uint64_t at(QuestionCategory gold, QuestionCategory pred) const {
    return counts[static_cast<std::size_t>(gold)][static_cast<std::size_t>(pred)];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;
};

struct ClassificationMetrics {
  ConfusionMatrix matrix;
  double accuracy = 0.0;
  /// Every category is present; classes with a zero denominator score 0.
  std::map<QuestionCategory, double> f1;
};

/// Accuracy is trace/total. precision(i) is taken over row i and recall(i)
/// over column i. Throws DomainError on empty input.
ClassificationMetrics confusion_metrics(
    std::span<const std::pair<QuestionCategory, QuestionCategory>> gold_pred);

}  // namespace dqa
