#include "dqa/corpus.hpp"

#include <unordered_map>

#include "dqa/error.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

constexpr const char* kKnownFields[] = {"id",       "lang",       "category",
                                        "question", "reference_answer", "source",
                                        "retrieval_labels", "tool_chain", "choices",
                                        "gold_letter"};

bool is_known_field(const std::string& key) {
  for (const char* k : kKnownFields) {
    if (key == k) return true;
  }
  return false;
}

std::string require_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(QuestionCategory c) {
  switch (c) {
    case QuestionCategory::general: return "general";
    case QuestionCategory::product: return "product";
    case QuestionCategory::instance: return "instance";
    case QuestionCategory::irrelevant: return "irrelevant";
    case QuestionCategory::unsafe: return "unsafe";
  }
  return "irrelevant";
}

std::optional<QuestionCategory> parse_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Language l) { return l == Language::zh ? "zh" : "en"; }

std::optional<Language> parse_language(std::string_view s) {
  if (s == "en") return Language::en;
  if (s == "zh") return Language::zh;
  return std::nullopt;
}

std::vector<Violation> validate_record(const QAPair& r) {
  std::vector<Violation> out;
  if (r.id.empty()) out.push_back({"id", "missing id"});
  if (text::trim(r.question).empty()) out.push_back({"question", "missing question"});
  if (r.category == QuestionCategory::product &&
      (!r.retrieval_labels || r.retrieval_labels->empty())) {
    out.push_back({"retrieval_labels", "missing retrieval labels"});
  }
  if (r.category == QuestionCategory::instance && (!r.tool_chain || r.tool_chain->empty())) {
    out.push_back({"tool_chain", "missing tool chain"});
  }
  if (r.tool_chain) {
    for (std::size_t i = 0; i < r.tool_chain->size(); ++i) {
      if ((*r.tool_chain)[i].tool.empty()) {
        out.push_back({"tool_chain", "tool chain entry " + std::to_string(i) + " has no tool"});
      }
    }
  }
  if (r.gold_letter && (!r.choices || !r.choices->contains(*r.gold_letter))) {
    out.push_back({"gold_letter", "gold letter '" + *r.gold_letter + "' is not a choice"});
  }
  return out;
}

nlohmann::ordered_json record_to_json(const QAPair& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["lang"] = std::string(to_string(r.lang));
  j["category"] = std::string(to_string(r.category));
  j["question"] = r.question;
  j["reference_answer"] = r.reference_answer;
  j["source"] = r.source;
  if (r.retrieval_labels) j["retrieval_labels"] = *r.retrieval_labels;
  if (r.tool_chain) {
    auto chain = nlohmann::ordered_json::array();
    for (const auto& call : *r.tool_chain) {
      chain.push_back({{"tool", call.tool},
                       {"action_input", call.action_input},
                       {"observation", call.observation}});
    }
    j["tool_chain"] = std::move(chain);
  }
  if (r.choices) {
    auto choices = nlohmann::ordered_json::object();
    for (const auto& [letter, body] : *r.choices) choices[letter] = body;
    j["choices"] = std::move(choices);
  }
  if (r.gold_letter) j["gold_letter"] = *r.gold_letter;
  for (const auto& [key, value] : r.extra.items()) j[key] = value;
  return j;
}

QAPair record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  QAPair r;
  r.id = require_string(j, "id");
  auto lang = require_string(j, "lang");
  if (lang.empty()) lang = "en";
  auto parsed_lang = parse_language(lang);
  if (!parsed_lang) throw ParseError("unknown lang '" + lang + "'");
  r.lang = *parsed_lang;
  auto category = require_string(j, "category");
  auto parsed_cat = parse_category(category);
  if (!parsed_cat) throw ParseError("unknown category '" + category + "'");
  r.category = *parsed_cat;
  r.question = require_string(j, "question");
  r.reference_answer = require_string(j, "reference_answer");
  r.source = require_string(j, "source");

  try {
    if (auto it = j.find("retrieval_labels"); it != j.end() && !it->is_null()) {
      r.retrieval_labels = it->get<std::vector<std::string>>();
    }
    if (auto it = j.find("tool_chain"); it != j.end() && !it->is_null()) {
      std::vector<ToolCall> chain;
      for (const auto& e : *it) {
        chain.push_back({e.at("tool").get<std::string>(),
                         e.value("action_input", std::string{}),
                         e.value("observation", std::string{})});
      }
      r.tool_chain = std::move(chain);
    }
    if (auto it = j.find("choices"); it != j.end() && !it->is_null()) {
      r.choices = it->get<std::map<std::string, std::string>>();
    }
    if (auto it = j.find("gold_letter"); it != j.end() && !it->is_null()) {
      r.gold_letter = it->get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema mismatch: ") + e.what());
  }

  for (const auto& [key, value] : j.items()) {
    if (!is_known_field(key)) r.extra[key] = value;
  }
  return r;
}

LoadResult parse_dataset(std::string_view contents) {
  LoadResult result;
  std::unordered_map<std::string, std::size_t> first_line_of;
  auto lines = text::split_lines(contents);
  bool seen_record = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (text::trim(lines[i]).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!seen_record && j.is_object() && j.size() == 1 && j.contains("_meta")) {
      try {
        result.dataset.metadata = j["_meta"].get<std::map<std::string, std::string>>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(line_no) + ": bad metadata: " + e.what());
      }
      seen_record = true;
      continue;
    }
    seen_record = true;
    QAPair record;
    try {
      record = record_from_json(j);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.id.empty()) {
      auto [it, inserted] = first_line_of.emplace(record.id, line_no);
      if (!inserted) {
        throw IntegrityError("duplicate id '" + record.id + "' on lines " +
                             std::to_string(it->second) + " and " + std::to_string(line_no));
      }
    }
    auto violations = validate_record(record);
    if (!violations.empty()) {
      result.invalid.push_back({line_no, record.id, std::move(violations)});
    }
    result.dataset.records.push_back(std::move(record));
  }
  return result;
}

LoadResult load_dataset(const std::string& path) { return parse_dataset(text::read_file(path)); }

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  if (!dataset.metadata.empty()) {
    nlohmann::ordered_json meta;
    meta["_meta"] = dataset.metadata;
    out += meta.dump();
    out += '\n';
  }
  for (const auto& r : dataset.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  text::write_file(path, serialize_dataset(dataset));
}

}  // namespace dqa
