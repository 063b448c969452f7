#include "dqa/tig.hpp"

#include <algorithm>
#include <random>
#include <regex>
#include <set>

#include "dqa/error.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

constexpr std::string_view kObservationMarker = "Observation:";

std::vector<std::string> split_list(std::string_view input) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : input) {
    if (c == ',' || c == ';' || c == '\n') {
      auto t = text::trim(cur);
      if (!t.empty()) out.emplace_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  auto t = text::trim(cur);
  if (!t.empty()) out.emplace_back(t);
  return out;
}

bool means_everything(std::string_view input) {
  auto t = text::to_lower_ascii(text::trim(input));
  return t.empty() || t == "*" || t == "all";
}

ToolOutput run_schema(std::string_view input, const SimulatedInstance& inst) {
  std::vector<const Table*> tables;
  if (means_everything(input)) {
    for (const auto& t : inst.tables) tables.push_back(&t);
  } else {
    for (const auto& name : split_list(input)) {
      const Table* t = inst.find_table(name);
      if (!t) throw LookupError("relation \"" + name + "\" does not exist");
      tables.push_back(t);
    }
  }
  ResultSet rs{{"table", "column", "type", "constraints"}, {}};
  for (const auto* t : tables) {
    for (const auto& c : t->columns) rs.rows.push_back({t->name, c.name, c.type, c.constraints});
  }
  return rs;
}

ToolOutput run_selection(std::string_view input, const SimulatedInstance& inst) {
  return execute_select(inst, input);
}

ToolOutput run_resource(std::string_view input, const SimulatedInstance& inst) {
  ResultSet rs{{"metric", "value"}, {}};
  auto wanted = split_list(input);
  for (const auto& [metric, value] : inst.resources) {
    bool keep = means_everything(input) ||
                std::any_of(wanted.begin(), wanted.end(),
                            [&](const std::string& w) { return text::contains_icase(metric, w); });
    if (keep) rs.rows.push_back({metric, value});
  }
  if (rs.rows.empty()) return "No resource metric matches \"" + std::string(text::trim(input)) + "\".";
  return rs;
}

ToolOutput run_workload(std::string_view input, const SimulatedInstance& inst) {
  auto t = text::trim(input);
  std::optional<double> min_ms;
  try {
    std::size_t used = 0;
    double v = std::stod(std::string(t), &used);
    if (used == t.size()) min_ms = v;
  } catch (const std::exception&) {
  }
  if (min_ms || t.empty() || text::contains_icase(t, "slow")) {
    std::vector<const SlowQuery*> qs;
    for (const auto& q : inst.slow_queries) {
      if (!min_ms || q.mean_ms >= *min_ms) qs.push_back(&q);
    }
    std::stable_sort(qs.begin(), qs.end(),
                     [](const SlowQuery* a, const SlowQuery* b) { return a->mean_ms > b->mean_ms; });
    ResultSet rs{{"query", "mean_ms", "calls"}, {}};
    for (const auto* q : qs) rs.rows.push_back({q->sql, format_number(q->mean_ms), std::to_string(q->calls)});
    return rs;
  }
  std::string out;
  for (const auto& line : inst.log_lines) {
    if (text::contains_icase(line, t)) {
      if (!out.empty()) out += '\n';
      out += line;
    }
  }
  if (out.empty()) return "No workload events match \"" + std::string(t) + "\".";
  return out;
}

ToolOutput run_status(std::string_view input, const SimulatedInstance& inst) {
  auto t = text::to_lower_ascii(text::trim(input));
  if (t == "indexes" || t == "index") {
    ResultSet rs{{"index", "table", "columns"}, {}};
    for (const auto& ix : inst.indexes) rs.rows.push_back({ix.name, ix.table, text::join(ix.columns, ", ")});
    return rs;
  }
  if (t == "views" || t == "view") {
    ResultSet rs{{"view"}, {}};
    for (const auto& v : inst.views) rs.rows.push_back({v});
    return rs;
  }
  ResultSet rs{{"knob", "setting"}, {}};
  if (t.empty() || t == "knobs" || t == "knob" || t == "all") {
    for (const auto& [k, v] : inst.knobs) rs.rows.push_back({k, v});
    return rs;
  }
  for (const auto& name : split_list(input)) {
    auto it = inst.knobs.find(text::to_lower_ascii(name));
    if (it == inst.knobs.end()) throw LookupError("unrecognized configuration parameter \"" + name + "\"");
    rs.rows.push_back({it->first, it->second});
  }
  return rs;
}

ToolOutput run_tuning(std::string_view input, const SimulatedInstance& inst) {
  auto name = std::string(text::trim(input));
  const Table* table = inst.find_table(name);
  if (!table) throw LookupError("relation \"" + name + "\" does not exist");

  std::set<std::string> indexed_leading;
  for (const auto& ix : inst.indexes) {
    if (text::to_lower_ascii(ix.table) == text::to_lower_ascii(table->name) && !ix.columns.empty()) {
      indexed_leading.insert(text::to_lower_ascii(ix.columns.front()));
    }
  }
  static const std::regex kFrom(R"(\bfrom\s+(\w+))", std::regex::icase);
  static const std::regex kPredicate(R"((\w+)\s*(=|<=|>=|<|>|\blike\b))", std::regex::icase);

  ResultSet rs{{"recommendation", "reason"}, {}};
  std::set<std::string> advised;
  for (const auto& q : inst.slow_queries) {
    std::smatch m;
    if (!std::regex_search(q.sql, m, kFrom) ||
        text::to_lower_ascii(m[1].str()) != text::to_lower_ascii(table->name)) {
      continue;
    }
    auto lowered = text::to_lower_ascii(q.sql);
    auto where = lowered.find(" where ");
    if (where == std::string::npos) continue;
    std::string pred = q.sql.substr(where + 7);
    for (std::sregex_iterator it(pred.begin(), pred.end(), kPredicate), end; it != end; ++it) {
      auto col = text::to_lower_ascii((*it)[1].str());
      if (table->column_index(col) == std::string::npos) continue;
      if (indexed_leading.contains(col) || !advised.insert(col).second) continue;
      rs.rows.push_back({"CREATE INDEX ON " + table->name + " (" + col + ");",
                         "slow query filters on " + col + " (mean " + format_number(q.mean_ms) + " ms)"});
    }
  }
  if (rs.rows.empty()) return "No index recommendations for " + table->name + ".";
  return rs;
}

std::string value_of(std::string_view raw) {
  auto t = text::trim(raw);
  if (!t.empty() && t.back() == ';') t = text::trim(t.substr(0, t.size() - 1));
  return std::string(t);
}

enum class Label { thought, action, action_input, observation, final_answer, question };

// Recognizes "<Label>:" at the start of a trimmed line.
std::optional<std::pair<Label, std::string_view>> label_of(std::string_view line) {
  static constexpr std::pair<std::string_view, Label> kLabels[] = {
      {"Action_Input", Label::action_input}, {"Action Input", Label::action_input},
      {"Final_Answer", Label::final_answer}, {"Final Answer", Label::final_answer},
      {"Observation", Label::observation},   {"Thought", Label::thought},
      {"Question", Label::question},         {"Action", Label::action},
  };
  auto t = line;
  while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
  for (const auto& [name, label] : kLabels) {
    if (text::starts_with_icase(t, name)) {
      auto rest = t.substr(name.size());
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      if (!rest.empty() && rest.front() == ':') return std::make_pair(label, rest.substr(1));
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ToolKind k) {
  switch (k) {
    case ToolKind::schema: return "schema";
    case ToolKind::selection: return "selection";
    case ToolKind::resource: return "resource";
    case ToolKind::workload: return "workload";
    case ToolKind::status: return "status";
    case ToolKind::tuning: return "tuning";
    case ToolKind::generalization: return "generalization";
  }
  return "generalization";
}

std::optional<ToolKind> parse_tool_kind(std::string_view s) {
  for (auto k : {ToolKind::schema, ToolKind::selection, ToolKind::resource, ToolKind::workload,
                 ToolKind::status, ToolKind::tuning, ToolKind::generalization}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

ToolExecutor builtin_executor(ToolKind kind) {
  switch (kind) {
    case ToolKind::schema: return run_schema;
    case ToolKind::selection: return run_selection;
    case ToolKind::resource: return run_resource;
    case ToolKind::workload: return run_workload;
    case ToolKind::status: return run_status;
    case ToolKind::tuning: return run_tuning;
    case ToolKind::generalization: break;
  }
  throw DomainError("generalization tools have no built-in executor");
}

ToolExecutor canned_executor(std::map<std::string, std::string> responses, std::string fallback) {
  return [responses = std::move(responses), fallback = std::move(fallback)](
             std::string_view input, const SimulatedInstance&) -> ToolOutput {
    auto it = responses.find(std::string(text::trim(input)));
    return it == responses.end() ? fallback : it->second;
  };
}

void ToolPool::add(ToolSpec tool) {
  if (find(tool.name)) throw IntegrityError("duplicate tool name '" + tool.name + "'");
  tools_.push_back(std::move(tool));
}

const ToolSpec* ToolPool::find(std::string_view name) const {
  for (const auto& t : tools_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::string> ToolPool::names() const {
  std::vector<std::string> out;
  for (const auto& t : tools_) out.push_back(t.name);
  return out;
}

ToolPool ToolPool::common() {
  ToolPool pool;
  pool.add({"Schema", ToolKind::schema, "Obtain database table structure, constraints, etc",
            "a table name, a comma-separated list of table names, or all", builtin_executor(ToolKind::schema)});
  pool.add({"Selection", ToolKind::selection,
            "Return SQL execution results of retrieving specific data from the database, computing data "
            "distribution, etc",
            "a single SQL query", builtin_executor(ToolKind::selection)});
  pool.add({"Resource", ToolKind::resource, "Obtain information about CPU usage, memory, disk IO, etc",
            "a comma-separated list of metric names such as cpu, memory, disk_io, or all",
            builtin_executor(ToolKind::resource)});
  pool.add({"Workload", ToolKind::workload, "Workload analysis, slow query identification, etc",
            "slow_queries, a minimum mean latency in milliseconds, or an event keyword to search the log",
            builtin_executor(ToolKind::workload)});
  pool.add({"Status", ToolKind::status,
            "Detailed information about the current indexes, views, knob settings, etc",
            "indexes, views, knobs, or a comma-separated list of knob names", builtin_executor(ToolKind::status)});
  pool.add({"Tuning", ToolKind::tuning,
            "Identify optimization opportunities by advising indexes, setting knobs, etc", "a single table name",
            builtin_executor(ToolKind::tuning)});
  return pool;
}

ToolPool ToolPool::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("tool pool must be a JSON array");
  ToolPool pool;
  try {
    for (const auto& e : j) {
      ToolSpec t;
      t.name = e.at("name").get<std::string>();
      auto kind = e.value("kind", std::string("generalization"));
      auto parsed = parse_tool_kind(kind);
      if (!parsed) throw ParseError("tool '" + t.name + "': unknown kind '" + kind + "'");
      t.kind = *parsed;
      t.description = e.value("description", std::string{});
      t.input_format = e.value("input_format", std::string{});
      auto binding = e.value("binding", t.kind == ToolKind::generalization ? std::string("canned") : kind);
      if (binding == "canned") {
        t.executor = canned_executor(e.value("responses", std::map<std::string, std::string>{}),
                                     e.value("default_response", std::string("(no output)")));
      } else {
        auto bound = parse_tool_kind(binding);
        if (!bound || *bound == ToolKind::generalization) {
          throw ParseError("tool '" + t.name + "': unknown binding '" + binding + "'");
        }
        t.executor = builtin_executor(*bound);
      }
      pool.add(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tool pool: ") + e.what());
  }
  return pool;
}

ToolPool ToolPool::load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(text::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string render_tool_listing(const ToolPool& pool) {
  std::string out;
  for (const auto& t : pool.tools()) {
    if (!out.empty()) out += '\n';
    out += "- " + t.name + ": " + t.description + ". Input: " + t.input_format;
  }
  return out;
}

ParsedStep parse_cot_step(std::string_view model_output) {
  struct Segment {
    std::optional<Label> label;
    std::string value;
  };
  std::vector<Segment> segments;
  for (const auto& line : text::split_lines(model_output)) {
    if (auto hit = label_of(line)) {
      segments.push_back({hit->first, std::string(hit->second)});
    } else if (segments.empty()) {
      segments.push_back({std::nullopt, line});
    } else {
      segments.back().value += '\n';
      segments.back().value += line;
    }
  }

  ParsedStep step;
  bool seen_action = false;
  for (const auto& seg : segments) {
    if (!seg.label) {
      step.thought = value_of(seg.value);
      continue;
    }
    switch (*seg.label) {
      case Label::thought:
        if (seen_action) throw ParseError("Action is not followed by Action_Input");
        step.thought = value_of(seg.value);
        break;
      case Label::action:
        if (seen_action) throw ParseError("Action is not followed by Action_Input");
        step.action = value_of(seg.value);
        if (step.action.empty()) throw ParseError("empty Action");
        seen_action = true;
        break;
      case Label::action_input:
        if (!seen_action) throw ParseError("Action_Input without a preceding Action");
        step.kind = ParsedStep::Kind::tool;
        step.action_input = value_of(seg.value);
        return step;
      case Label::final_answer:
        if (seen_action) throw ParseError("Action is not followed by Action_Input");
        step.kind = ParsedStep::Kind::final_answer;
        step.final_answer = value_of(seg.value);
        return step;
      case Label::observation:
      case Label::question:
        if (seen_action) throw ParseError("Action is not followed by Action_Input");
        break;
    }
  }
  if (seen_action) throw ParseError("Action is not followed by Action_Input");
  throw ParseError("output contains neither Action nor Final_Answer");
}

std::string format_cot_step(const ParsedStep& step) {
  std::string out;
  if (!step.thought.empty()) out += "Thought: " + step.thought + "\n";
  if (step.is_final()) {
    out += "Final_Answer: " + step.final_answer;
  } else {
    out += "Action: " + step.action + "\nAction_Input: " + step.action_input;
  }
  return out;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::final_answer: return "final_answer";
    case Termination::failure: return "failure";
    case Termination::step_limit: return "step_limit";
  }
  return "failure";
}

nlohmann::ordered_json trace_to_json(const CotTrace& trace) {
  nlohmann::ordered_json j;
  j["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : trace.steps) {
    nlohmann::ordered_json step;
    step["thought"] = s.thought;
    step["action"] = s.action;
    step["action_input"] = s.action_input;
    if (s.observation) step["observation"] = *s.observation;
    j["steps"].push_back(std::move(step));
  }
  if (trace.final_answer) j["final_answer"] = *trace.final_answer;
  j["terminated_by"] = std::string(to_string(trace.terminated_by));
  if (trace.failure_output) j["failure_output"] = *trace.failure_output;
  if (!trace.failure_reason.empty()) j["failure_reason"] = trace.failure_reason;
  return j;
}

CotTrace trace_from_json(const nlohmann::json& j) {
  CotTrace t;
  try {
    for (const auto& s : j.at("steps")) {
      CotStep step{s.value("thought", std::string{}), s.at("action").get<std::string>(),
                   s.value("action_input", std::string{}), std::nullopt};
      if (s.contains("observation")) step.observation = s["observation"].get<std::string>();
      t.steps.push_back(std::move(step));
    }
    if (j.contains("final_answer")) t.final_answer = j["final_answer"].get<std::string>();
    auto term = j.at("terminated_by").get<std::string>();
    if (term == "final_answer") {
      t.terminated_by = Termination::final_answer;
    } else if (term == "step_limit") {
      t.terminated_by = Termination::step_limit;
    } else if (term == "failure") {
      t.terminated_by = Termination::failure;
    } else {
      throw ParseError("unknown terminated_by '" + term + "'");
    }
    if (j.contains("failure_output")) t.failure_output = j["failure_output"].get<std::string>();
    t.failure_reason = j.value("failure_reason", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trace: ") + e.what());
  }
  return t;
}

std::string format_trace(const CotTrace& trace) {
  std::string out;
  for (const auto& s : trace.steps) {
    if (!s.thought.empty()) out += "Thought: " + s.thought + "\n";
    out += "Action: " + s.action + "\nAction_Input: " + s.action_input + "\n";
    if (s.observation) out += "Observation: " + *s.observation + "\n";
  }
  if (trace.final_answer) out += "Final_Answer: " + *trace.final_answer;
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

ToolOutput dispatch_tool_raw(const ToolPool& pool, std::string_view action, std::string_view action_input,
                             const SimulatedInstance& instance) {
  const ToolSpec* tool = pool.find(action);
  if (!tool) return "Tool not found: " + std::string(action);
  if (!tool->executor) return "Error: tool " + tool->name + " has no executor";
  try {
    return tool->executor(action_input, instance);
  } catch (const std::exception& e) {
    return std::string("Error: ") + e.what();
  }
}

std::string dispatch_tool(const ToolPool& pool, std::string_view action, std::string_view action_input,
                          const SimulatedInstance& instance) {
  return postprocess_tool_output(dispatch_tool_raw(pool, action, action_input, instance), {});
}

std::string postprocess_tool_output(const ToolOutput& raw, std::span<const std::string> relevance_terms,
                                    std::size_t max_lines) {
  if (const auto* rs = std::get_if<ResultSet>(&raw)) return to_markdown(*rs);
  const auto& body = std::get<std::string>(raw);
  auto lines = text::split_lines(body);
  if (lines.size() <= max_lines) return body;

  std::vector<std::string> kept;
  if (relevance_terms.empty()) {
    kept = std::move(lines);
  } else {
    for (auto& line : lines) {
      bool hit = std::any_of(relevance_terms.begin(), relevance_terms.end(),
                             [&](const std::string& term) { return text::contains_icase(line, term); });
      if (hit) kept.push_back(std::move(line));
    }
  }
  if (kept.size() > max_lines) {
    const std::size_t elided = kept.size() - max_lines;
    kept.resize(max_lines);
    kept.push_back("... [" + std::to_string(elided) + " more lines elided]");
  }
  return text::join(kept, "\n");
}

std::string render_agent_prompt(const TemplateStore& templates, std::string_view question,
                                const ToolPool& slate, std::string_view scratchpad,
                                std::string_view few_shot_examples) {
  SlotBinding bindings{{"T", render_tool_listing(slate)},
                       {"Q", std::string(question)},
                       {"Agent_Scratchpad", std::string(scratchpad)}};
  if (few_shot_examples.empty()) return templates.render(TemplateId::instance, bindings);

  PromptTemplate tmpl = templates.get(TemplateId::instance);
  constexpr std::string_view kAnchor = "Question: {{Q}}";
  auto pos = tmpl.body.rfind(kAnchor);
  if (pos == std::string::npos) pos = 0;
  tmpl.body.insert(pos, "Examples:\n{{Examples}}\n\n");
  bindings["Examples"] = std::string(few_shot_examples);
  return render(tmpl, bindings);
}

CotTrace run_agent_loop(const BackendConfig& backend, std::string_view question, const ToolPool& pool,
                        const SimulatedInstance& instance, const AgentOptions& options) {
  if (options.max_steps == 0) throw DomainError("max_steps must be at least 1");
  const TemplateStore& templates = options.templates ? *options.templates : default_templates();

  CotTrace trace;
  std::string scratchpad;
  for (std::size_t turn = 0; turn < options.max_steps; ++turn) {
    auto req = user_request(render_agent_prompt(templates, question, pool, scratchpad, options.few_shot_examples),
                            {std::string(kObservationMarker)});
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    auto output = complete(backend, req);

    ParsedStep step;
    try {
      step = parse_cot_step(output);
    } catch (const ParseError& e) {
      trace.terminated_by = Termination::failure;
      trace.failure_output = output;
      trace.failure_reason = e.what();
      return trace;
    }
    if (step.is_final()) {
      trace.final_answer = step.final_answer;
      trace.terminated_by = Termination::final_answer;
      return trace;
    }

    auto terms = text::split_whitespace(step.action_input);
    std::erase_if(terms, [](const std::string& t) { return t.size() < 3; });
    auto observation = postprocess_tool_output(
        dispatch_tool_raw(pool, step.action, step.action_input, instance), terms,
        options.max_observation_lines);

    scratchpad += format_cot_step(step);
    scratchpad += "\nObservation: " + observation + "\n";
    trace.steps.push_back({step.thought, step.action, step.action_input, observation});
  }
  trace.terminated_by = Termination::step_limit;
  return trace;
}

ToolPool sample_tool_slate(std::span<const ToolSpec> ground_truth, const ToolPool& pool, std::size_t n_random,
                           std::uint64_t seed) {
  std::set<std::string> truth_names;
  std::vector<const ToolSpec*> slate;
  for (const auto& t : ground_truth) {
    if (truth_names.insert(t.name).second) slate.push_back(&t);
  }
  std::vector<const ToolSpec*> candidates;
  for (const auto& t : pool.tools()) {
    if (!truth_names.contains(t.name)) candidates.push_back(&t);
  }
  if (candidates.size() < n_random) {
    throw DomainError("tool pool has " + std::to_string(candidates.size()) +
                      " tools outside the ground truth; cannot draw " + std::to_string(n_random));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  slate.insert(slate.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n_random));
  std::shuffle(slate.begin(), slate.end(), rng);

  ToolPool out;
  for (const auto* t : slate) out.add(*t);
  return out;
}

bool judge_tool_format(const BackendConfig& judge, const ToolSpec& tool, std::string_view action_input,
                       const TemplateStore& templates) {
  return judge_tool_format(judge, tool.name, tool.input_format, action_input, templates);
}

}  // namespace dqa
