#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dqa {

/// Routing categories. The set is closed.
enum class QuestionCategory { general, product, instance, irrelevant, unsafe };

inline constexpr QuestionCategory kAllCategories[] = {
    QuestionCategory::general, QuestionCategory::product, QuestionCategory::instance,
    QuestionCategory::irrelevant, QuestionCategory::unsafe};

std::string_view to_string(QuestionCategory c);
std::optional<QuestionCategory> parse_category(std::string_view s);

enum class Language { en, zh };

std::string_view to_string(Language l);
std::optional<Language> parse_language(std::string_view s);

/// One ground-truth tool invocation with its recorded observation, so that
/// evaluation can replay the chain without a live database.
struct ToolCall {
  std::string tool;
  std::string action_input;
  std::string observation;

  bool operator==(const ToolCall&) const = default;
};

struct QAPair {
  std::string id;
  Language lang = Language::en;
  QuestionCategory category = QuestionCategory::general;
  std::string question;
  std::string reference_answer;
  std::string source;
  std::optional<std::vector<std::string>> retrieval_labels;
  std::optional<std::vector<ToolCall>> tool_chain;
  std::optional<std::map<std::string, std::string>> choices;
  std::optional<std::string> gold_letter;
  /// Fields not defined by the schema, kept so that save(load(f)) keeps them.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const QAPair&) const = default;
};

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
};

struct Dataset {
  std::vector<QAPair> records;
  std::map<std::string, std::string> metadata;

  bool operator==(const Dataset&) const = default;
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Returns every violated record invariant; an empty result means valid.
std::vector<Violation> validate_record(const QAPair& record);

struct RecordViolations {
  std::size_t line = 0;
  std::string id;
  std::vector<Violation> violations;
};

struct LoadResult {
  Dataset dataset;
  /// Records that parsed but broke an invariant, with 1-based line numbers.
  std::vector<RecordViolations> invalid;
};

nlohmann::ordered_json record_to_json(const QAPair& record);
/// Throws ParseError on a schema mismatch (wrong types, unknown category).
QAPair record_from_json(const nlohmann::json& j);

/// Reads a JSONL corpus. Blank lines are skipped. A first line of the form
/// {"_meta": {...}} carries dataset metadata.
LoadResult load_dataset(const std::string& path);
LoadResult parse_dataset(std::string_view contents);

std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::string& path);

}  // namespace dqa
