#include "dqa/pte.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>

#include "dqa/error.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

constexpr std::string_view kGeneral =
    R"(You are an expert in the field of general database issues, which do not involve specific database instances.
Do not allow any fabrications to be added to the answer. Please provide a specific and detailed response, for example, including the exact commands or code needed by the user.

Question:{{Q}})";

constexpr std::string_view kProduct =
    R"(You are an expert in the field of database issues, which are related to specific databases. Answer questions in a concise and professional manner based on the information in "Knowledge", which is from database documents. Do not allow any fabrications to be added to the answer.

Question: {{Q}} ; Knowledge:{{K}})";

constexpr std::string_view kInstance =
    R"(You are an expert in the specific database instance and capable of using tools to extract information from that database. Your responses should draw on your expertise in the database field and provide specific solutions.

The tools you can use:
{{T}}

Use the following format:

Question: ...;
Thought: ...;
Action: ...;
Action_Input: ...;
Observation: ...;
...;
Final_Answer: ...

Question: {{Q}}

{{Agent_Scratchpad}})";

constexpr std::string_view kIrrelevant =
    R"(You are a friendly, LLM-based database Q&A system, and you can only answer questions related to databases. When users ask questions unrelated to databases, please kindly refuse to answer and explain the reason.

Question: {{Q}})";

constexpr std::string_view kJudgePairBody =
    R"(You are an impartial judge of answers to database questions. Compare the two candidate answers against the ground truth answer. Treat the ground truth as correct: any response that contradicts the facts in the ground truth is a loser. Otherwise prefer the answer that is more accurate and more helpful.

Question: {{QUESTION}}

Ground truth: {{GROUND_TRUTH}}

Answer A: {{ANSWER_A}}

Answer B: {{ANSWER_B}}

Output exactly one token: A if answer A is better, B if answer B is better, or TIE if they are equally good.)";

constexpr std::string_view kJudgeToolFormatBody =
    R"(You are an expert adjudicator of database tool calls. Decide whether the tool input below meets the tool's declared input format.

Tool: {{TOOL_NAME}}
Required input format: {{TOOL_FORMAT}}
Action_Input: {{ACTION_INPUT}}

Answer with exactly one word: YES if the input meets the format requirements, NO otherwise.)";

constexpr std::string_view kClassifyBody =
    R"(Classify the user question into exactly one of these categories:
general: general database knowledge that does not involve a specific product or instance
product-specific: the usage of a particular database product
instance-specific: a particular running database instance, such as fault diagnosis, tuning or data analysis
unsafe: harmful or unsafe requests
irrelevant: anything not related to databases

Reply with the category label only.

Question: {{Q}})";

constexpr std::string_view kClassifySafetyBody =
    R"(Decide whether the user question is safe to answer. Reply with exactly one word: safe or unsafe.

Question: {{Q}})";

constexpr std::string_view kClassifyTopicBody =
    R"(Classify the user question into exactly one of these categories:
general: general database knowledge that does not involve a specific product or instance
product-specific: the usage of a particular database product
instance-specific: a particular running database instance, such as fault diagnosis, tuning or data analysis
irrelevant: anything not related to databases

Reply with the category label only.

Question: {{Q}})";

constexpr std::string_view kMultipleChoiceBody =
    R"({{Q}}
{{CHOICES}}
Answer with exactly one letter (A, B, C or D) and nothing else.)";

constexpr std::string_view kRewriteAnswerBody =
    R"(Below is a question from a database forum together with its accepted answer. Rewrite the answer and convert it to a "detailed, professional and friendly" writing style. Keep every fact of the original answer and do not add fabricated information.

Question: {{Q}}

Original answer: {{ANSWER}}

Rewritten answer:)";

constexpr std::string_view kProductKeyPointsBody =
    R"(Read the following segment of a database product manual and summarize the document segment's key points. Write each key point on its own line starting with "- ".

Document segment:
{{SEGMENT}})";

constexpr std::string_view kProductQuestionsBody =
    R"(Document segment:
{{SEGMENT}}

Key points:
{{KEY_POINTS}}

For each key point, write one question that can be answered based on the document segment. Write each question on its own line starting with "- ", in the same order as the key points.)";

constexpr std::string_view kProductAnswersBody =
    R"(Document segment:
{{SEGMENT}}

Questions:
{{QUESTIONS}}

For each question, produce a detailed, user-friendly answer based only on the document segment. Start each answer with "- " and keep the order of the questions. An answer may continue on the following lines.)";

constexpr std::string_view kInstanceQuestionsBody =
    R"(You are writing questions for a database assistant that can call tools on a live database instance.

Target tool: {{TOOL_NAME}}: {{TOOL_DESCRIPTION}}. Input: {{TOOL_FORMAT}}

Available tools:
{{TOOLS}}

Example questions that need a chain of several tools:
{{EXAMPLES}}

Write {{N}} new questions that can be solved with the target tool. Most of them should require invoking at least two DB tools in order. Put each question on its own line starting with "- " and end it with the tools it needs, written as [tools: ToolA, ToolB].)";

constexpr std::string_view kPolishCheckBody =
    R"(A tool call must follow the tool's input format exactly, otherwise the tool cannot be triggered. Examine the input below and make sure the format of the answer is correct.

Tool: {{TOOL_NAME}}
Required input format: {{TOOL_FORMAT}}
Action_Input: {{ACTION_INPUT}}

If the input already follows the format, reply OK. Otherwise reply with the corrected input only.)";

constexpr std::string_view kPolishSummarizeBody =
    R"(The tool below was used in the following reasoning trace. Summarize the tool's format: describe its expected input and the shape of its output in one or two sentences.

Tool: {{TOOL_NAME}}: {{TOOL_DESCRIPTION}}

Trace:
{{TRACE}})";

bool valid_slot_name(std::string_view name) {
  if (name.empty()) return false;
  auto ok_first = [](char c) { return c == '_' || std::isalpha(static_cast<unsigned char>(c)); };
  if (!ok_first(name[0])) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return c == '_' || std::isalnum(static_cast<unsigned char>(c));
  });
}

// Calls on_text for literal spans and on_slot for each {{name}}.
template <typename OnText, typename OnSlot>
void scan(std::string_view body, OnText on_text, OnSlot on_slot) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t open = body.find("{{", pos);
    if (open == std::string_view::npos) break;
    std::size_t close = body.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    std::string_view name = body.substr(open + 2, close - open - 2);
    if (!valid_slot_name(name)) {
      on_text(body.substr(pos, open + 2 - pos));
      pos = open + 2;
      continue;
    }
    on_text(body.substr(pos, open - pos));
    on_slot(name);
    pos = close + 2;
  }
  on_text(body.substr(pos));
}

std::set<Trigger> parse_triggers(std::string_view list) {
  std::set<Trigger> out;
  std::string item;
  auto flush = [&] {
    auto t = text::trim(item);
    if (t == "rag") {
      out.insert(Trigger::rag);
    } else if (t == "tig") {
      out.insert(Trigger::tig);
    } else if (!t.empty()) {
      throw ParseError("unknown trigger '" + std::string(t) + "'");
    }
    item.clear();
  };
  for (char c : list) {
    if (c == ',') {
      flush();
    } else {
      item += c;
    }
  }
  flush();
  return out;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::general: return "general";
    case TemplateId::product: return "product";
    case TemplateId::instance: return "instance";
    case TemplateId::irrelevant: return "irrelevant";
  }
  return "general";
}

std::optional<TemplateId> parse_template_id(std::string_view s) {
  for (auto id : {TemplateId::general, TemplateId::product, TemplateId::instance,
                  TemplateId::irrelevant}) {
    if (to_string(id) == s) return id;
  }
  return std::nullopt;
}

TemplateId template_for(QuestionCategory category) {
  switch (category) {
    case QuestionCategory::general: return TemplateId::general;
    case QuestionCategory::product: return TemplateId::product;
    case QuestionCategory::instance: return TemplateId::instance;
    case QuestionCategory::irrelevant:
    case QuestionCategory::unsafe: return TemplateId::irrelevant;
  }
  return TemplateId::irrelevant;
}

std::string_view to_string(Trigger t) { return t == Trigger::rag ? "rag" : "tig"; }

std::vector<std::string> slot_names(std::string_view body) {
  std::vector<std::string> out;
  scan(
      body, [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
      });
  return out;
}

std::string render(const PromptTemplate& tmpl, const SlotBinding& bindings) {
  auto slots = slot_names(tmpl.body);
  for (const auto& slot : slots) {
    if (!bindings.contains(slot)) {
      throw RenderError("template '" + tmpl.name + "': missing binding for slot {{" + slot + "}}");
    }
  }
  for (const auto& [name, value] : bindings) {
    if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
      throw RenderError("template '" + tmpl.name + "': binding '" + name + "' has no slot");
    }
  }
  std::string out;
  out.reserve(tmpl.body.size());
  scan(
      tmpl.body, [&](std::string_view literal) { out += literal; },
      [&](std::string_view name) { out += bindings.find(std::string(name))->second; });
  return out;
}

void check_routing_template(const PromptTemplate& tmpl) {
  auto id = parse_template_id(tmpl.name);
  if (!id) return;
  auto slots = slot_names(tmpl.body);
  auto has = [&](std::string_view s) { return std::find(slots.begin(), slots.end(), s) != slots.end(); };
  auto fail = [&](const std::string& why) {
    throw RenderError("routing template '" + tmpl.name + "' " + why);
  };
  if (!has("Q")) fail("lacks {{Q}}");
  switch (*id) {
    case TemplateId::product:
      if (!has("K")) fail("lacks {{K}}");
      if (tmpl.triggers != std::set<Trigger>{Trigger::rag}) fail("must trigger exactly rag");
      break;
    case TemplateId::instance:
      if (!has("T") || !has("Agent_Scratchpad")) fail("lacks {{T}} or {{Agent_Scratchpad}}");
      if (tmpl.triggers != std::set<Trigger>{Trigger::tig}) fail("must trigger exactly tig");
      break;
    case TemplateId::general:
    case TemplateId::irrelevant:
      if (!tmpl.triggers.empty()) fail("must not trigger any module");
      break;
  }
}

TemplateStore TemplateStore::builtin() {
  TemplateStore store;
  store.add({"general", std::string(kGeneral), {}});
  store.add({"product", std::string(kProduct), {Trigger::rag}});
  store.add({"instance", std::string(kInstance), {Trigger::tig}});
  store.add({"irrelevant", std::string(kIrrelevant), {}});
  store.add({std::string(prompts::kJudgePair), std::string(kJudgePairBody), {}});
  store.add({std::string(prompts::kJudgeToolFormat), std::string(kJudgeToolFormatBody), {}});
  store.add({std::string(prompts::kClassify), std::string(kClassifyBody), {}});
  store.add({std::string(prompts::kClassifySafety), std::string(kClassifySafetyBody), {}});
  store.add({std::string(prompts::kClassifyTopic), std::string(kClassifyTopicBody), {}});
  store.add({std::string(prompts::kMultipleChoice), std::string(kMultipleChoiceBody), {}});
  store.add({std::string(prompts::kRewriteAnswer), std::string(kRewriteAnswerBody), {}});
  store.add({std::string(prompts::kProductKeyPoints), std::string(kProductKeyPointsBody), {}});
  store.add({std::string(prompts::kProductQuestions), std::string(kProductQuestionsBody), {}});
  store.add({std::string(prompts::kProductAnswers), std::string(kProductAnswersBody), {}});
  store.add({std::string(prompts::kInstanceQuestions), std::string(kInstanceQuestionsBody), {}});
  store.add({std::string(prompts::kPolishCheck), std::string(kPolishCheckBody), {}});
  store.add({std::string(prompts::kPolishSummarize), std::string(kPolishSummarizeBody), {}});
  return store;
}

PromptTemplate TemplateStore::parse_file(std::string_view contents) {
  std::size_t nl = contents.find('\n');
  std::string_view header = contents.substr(0, nl);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  std::string_view body = nl == std::string_view::npos ? std::string_view{} : contents.substr(nl + 1);
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  if (!body.empty() && body.back() == '\r') body.remove_suffix(1);

  auto fields = text::split_whitespace(header);
  if (fields.size() < 2 || fields[0] != "#template") {
    throw ParseError("template header must read '#template <name> [triggers=...]'");
  }
  PromptTemplate tmpl;
  tmpl.name = fields[1];
  for (std::size_t i = 2; i < fields.size(); ++i) {
    if (fields[i].rfind("triggers=", 0) == 0) {
      tmpl.triggers = parse_triggers(std::string_view(fields[i]).substr(9));
    } else {
      throw ParseError("unexpected template header field '" + fields[i] + "'");
    }
  }
  tmpl.body = std::string(body);
  return tmpl;
}

TemplateStore TemplateStore::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("template directory not found: " + dir);
  TemplateStore store = builtin();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      store.add(parse_file(text::read_file(f.string())));
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
  }
  return store;
}

void TemplateStore::add(PromptTemplate tmpl) {
  check_routing_template(tmpl);
  std::string name = tmpl.name;
  templates_.insert_or_assign(std::move(name), std::move(tmpl));
}

const PromptTemplate& TemplateStore::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw LookupError("unknown template '" + std::string(name) + "'");
  return it->second;
}

bool TemplateStore::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

std::string TemplateStore::render(std::string_view name, const SlotBinding& bindings) const {
  return dqa::render(get(name), bindings);
}

std::string TemplateStore::version() const {
  std::string all;
  for (const auto& [name, tmpl] : templates_) {
    all += name;
    all += '\0';
    for (auto t : tmpl.triggers) all += to_string(t);
    all += '\0';
    all += tmpl.body;
    all += '\0';
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", text::fnv1a_32(all));
  return std::string("tmpl-") + buf;
}

std::vector<std::string> TemplateStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

}  // namespace dqa
