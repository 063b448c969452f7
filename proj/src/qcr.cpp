#include "dqa/qcr.hpp"

#include <cctype>

#include "dqa/error.hpp"
#include "dqa/http.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

// Mirrors data/rules/default.rules.
constexpr std::string_view kBuiltinRules =
    "unsafe: hack into, steal, bypass authentication, sql injection attack, ddos, malware, "
    "ransomware, exploit vulnerability, crack password, dump credentials\n"
    "instance: my database, our database, this instance, my instance, our instance, slow query, "
    "running slow, cpu usage, memory usage, disk io, deadlock, lock wait, my table, our table, "
    "in production, workload, knob, tune, tuning\n"
    "product: postgresql, postgres, opengauss, gaussdb, mysql, oracle, sql server, sqlite, "
    "mongodb, redis, snowflake, gs_, pg_, install, configure, configuration parameter, version\n"
    "general: database, sql, index, transaction, normalization, normal form, join, query, schema, "
    "primary key, foreign key, acid, e-r, entity-relationship, b+ tree, isolation level, "
    "concurrency control, relational, table, view, trigger, stored procedure\n";

std::string normalize_label(std::string_view label) {
  auto t = text::trim(label);
  while (!t.empty() && (t.back() == '.' || t.back() == '"' || t.back() == '\'')) t.remove_suffix(1);
  while (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.remove_prefix(1);
  std::string out = text::to_lower_ascii(text::trim(t));
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

bool word_start_hit(std::string_view haystack_lower, std::string_view keyword_lower) {
  if (keyword_lower.empty()) return false;
  std::size_t pos = haystack_lower.find(keyword_lower);
  while (pos != std::string_view::npos) {
    if (pos == 0 || !std::isalnum(static_cast<unsigned char>(haystack_lower[pos - 1]))) return true;
    pos = haystack_lower.find(keyword_lower, pos + 1);
  }
  return false;
}

RoutingDecision from_label(std::string_view label, ClassifierKind kind) {
  RoutingDecision d;
  d.classifier_kind = kind;
  if (auto c = map_label(label)) {
    d.category = *c;
  } else {
    d.category = QuestionCategory::irrelevant;
    d.warning = "unmappable classifier label \"" + std::string(label) + "\"; routed to irrelevant";
  }
  return d;
}

std::string require_question(std::string_view question) {
  if (text::trim(question).empty()) throw DomainError("cannot classify an empty question");
  return std::string(question);
}

struct RemoteLabel {
  std::string label;
  std::optional<double> confidence;
};

RemoteLabel call_remote(const RemoteClassifier& service, std::string_view question) {
  auto j = http::post_json_expect_ok(service.endpoint_url, {{"question", std::string(question)}},
                                     service.timeout);
  RemoteLabel out;
  try {
    out.label = j.at("label").get<std::string>();
    if (auto it = j.find("confidence"); it != j.end() && it->is_number()) {
      out.confidence = it->get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError("classifier service reply lacks a string label: " + std::string(e.what()));
  }
  return out;
}

// Raw label text from one hierarchy stage.
RemoteLabel stage_label(const StageBackend& stage, std::string_view template_name,
                        std::string_view question, const TemplateStore& templates) {
  if (const auto* backend = std::get_if<BackendConfig>(&stage)) {
    auto prompt = templates.render(template_name, {{"Q", std::string(question)}});
    auto req = user_request(std::move(prompt));
    req.max_tokens = 16;
    return {complete(*backend, req), std::nullopt};
  }
  return call_remote(std::get<RemoteClassifier>(stage), question);
}

ClassifierKind stage_kind(const StageBackend& stage) {
  return std::holds_alternative<BackendConfig>(stage) ? ClassifierKind::llm_prompt
                                                      : ClassifierKind::remote_hierarchical;
}

}  // namespace

std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::llm_prompt: return "llm_prompt";
    case ClassifierKind::remote_flat: return "remote_flat";
    case ClassifierKind::remote_hierarchical: return "remote_hierarchical";
    case ClassifierKind::rules: return "rules";
  }
  return "rules";
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view s) {
  for (auto k : {ClassifierKind::llm_prompt, ClassifierKind::remote_flat,
                 ClassifierKind::remote_hierarchical, ClassifierKind::rules}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<QuestionCategory> map_label(std::string_view label) {
  static const std::map<std::string, QuestionCategory, std::less<>> kVocabulary = {
      {"general", QuestionCategory::general},
      {"db general", QuestionCategory::general},
      {"db-general", QuestionCategory::general},
      {"general database", QuestionCategory::general},
      {"general-database", QuestionCategory::general},
      {"product", QuestionCategory::product},
      {"product-specific", QuestionCategory::product},
      {"product specific", QuestionCategory::product},
      {"instance", QuestionCategory::instance},
      {"instance-specific", QuestionCategory::instance},
      {"instance specific", QuestionCategory::instance},
      {"irrelevant", QuestionCategory::irrelevant},
      {"safe but irrelevant", QuestionCategory::irrelevant},
      {"db-irrelevant", QuestionCategory::irrelevant},
      {"other", QuestionCategory::irrelevant},
      {"others", QuestionCategory::irrelevant},
      {"unsafe", QuestionCategory::unsafe},
  };
  auto it = kVocabulary.find(normalize_label(label));
  if (it == kVocabulary.end()) return std::nullopt;
  return it->second;
}

Ruleset Ruleset::parse(std::string_view contents) {
  std::vector<Rule> rules;
  auto lines = text::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("rules line " + std::to_string(i + 1) + ": expected '<category>: keywords'");
    }
    auto cat_name = text::trim(line.substr(0, colon));
    auto cat = parse_category(cat_name);
    if (!cat) {
      throw ParseError("rules line " + std::to_string(i + 1) + ": unknown category '" +
                       std::string(cat_name) + "'");
    }
    Rule rule{*cat, {}};
    std::string_view rest = line.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t comma = rest.find(',', start);
      auto kw = text::trim(rest.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - start));
      if (!kw.empty()) rule.keywords.push_back(text::to_lower_ascii(kw));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rules.push_back(std::move(rule));
  }
  return Ruleset(std::move(rules));
}

Ruleset Ruleset::load(const std::string& path) { return parse(text::read_file(path)); }

const Ruleset& Ruleset::builtin() {
  static const Ruleset rules = parse(kBuiltinRules);
  return rules;
}

std::optional<QuestionCategory> Ruleset::match(std::string_view question) const {
  auto lowered = text::to_lower_ascii(question);
  for (const auto& rule : rules_) {
    for (const auto& kw : rule.keywords) {
      if (word_start_hit(lowered, kw)) return rule.category;
    }
  }
  return std::nullopt;
}

RoutingDecision classify_llm(const BackendConfig& backend, std::string_view question,
                             const TemplateStore& templates) {
  auto prompt = templates.render(prompts::kClassify, {{"Q", require_question(question)}});
  auto req = user_request(std::move(prompt));
  req.max_tokens = 16;
  return from_label(complete(backend, req), ClassifierKind::llm_prompt);
}

RoutingDecision classify_remote(const RemoteClassifier& service, std::string_view question) {
  auto reply = call_remote(service, require_question(question));
  auto d = from_label(reply.label, service.kind);
  d.confidence = reply.confidence;
  return d;
}

RoutingDecision classify_rules(const Ruleset& rules, std::string_view question) {
  require_question(question);
  RoutingDecision d;
  d.classifier_kind = ClassifierKind::rules;
  d.category = rules.match(question).value_or(QuestionCategory::irrelevant);
  return d;
}

RoutingDecision classify(std::string_view question, const Classifier& classifier) {
  return std::visit(
      [&](const auto& c) -> RoutingDecision {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BackendConfig>) {
          return classify_llm(c, question);
        } else if constexpr (std::is_same_v<T, RemoteClassifier>) {
          return classify_remote(c, question);
        } else {
          return classify_rules(c, question);
        }
      },
      classifier);
}

RoutingDecision hierarchical_classify(std::string_view question, const StageBackend& safety,
                                      const StageBackend& topic, const TemplateStore& templates) {
  auto q = require_question(question);
  auto first = stage_label(safety, prompts::kClassifySafety, q, templates);
  auto safety_label = normalize_label(first.label);

  RoutingDecision d;
  d.classifier_kind = stage_kind(safety);
  if (safety_label == "unsafe") {
    d.category = QuestionCategory::unsafe;
    d.confidence = first.confidence;
    return d;
  }
  if (safety_label != "safe") {
    d.category = QuestionCategory::irrelevant;
    d.warning = "unmappable safety label \"" + first.label + "\"; routed to irrelevant";
    return d;
  }

  auto second = stage_label(topic, prompts::kClassifyTopic, q, templates);
  d = from_label(second.label, stage_kind(topic));
  d.confidence = second.confidence;
  if (d.category == QuestionCategory::unsafe) {
    d.category = QuestionCategory::irrelevant;
    d.warning = "topic stage answered unsafe for a question stage 1 judged safe; routed to irrelevant";
  }
  return d;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

ClassificationMetrics confusion_metrics(
    std::span<const std::pair<QuestionCategory, QuestionCategory>> gold_pred) {
  if (gold_pred.empty()) throw DomainError("confusion_metrics needs at least one pair");
  ClassificationMetrics out;
  for (const auto& [gold, pred] : gold_pred) ++out.matrix.at(gold, pred);
  out.accuracy = static_cast<double>(out.matrix.trace()) / static_cast<double>(out.matrix.total());

  for (auto c : kAllCategories) {
    const auto i = static_cast<std::size_t>(c);
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      row += out.matrix.counts[i][j];
      col += out.matrix.counts[j][i];
    }
    const double hit = static_cast<double>(out.matrix.counts[i][i]);
    if (row == 0 || col == 0 || hit == 0.0) {
      out.f1[c] = 0.0;
      continue;
    }
    const double precision = hit / static_cast<double>(row);
    const double recall = hit / static_cast<double>(col);
    out.f1[c] = 2.0 * precision * recall / (precision + recall);
  }
  return out;
}

}  // namespace dqa
