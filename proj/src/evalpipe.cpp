#include "dqa/evalpipe.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "dqa/error.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

const std::vector<std::string> kObservationStop{"Observation:"};

ToolSpec spec_for(const ToolPool& pool, const std::string& name) {
  if (const auto* t = pool.find(name)) return *t;
  return ToolSpec{name, ToolKind::generalization, {}, {}, {}};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string render_choices(const std::map<std::string, std::string>& choices) {
  std::string out;
  for (const auto& [letter, body] : choices) {
    if (!out.empty()) out += '\n';
    out += letter + ". " + body;
  }
  return out;
}

Verdict judge(const EvalConfig& config, const BackendConfig& backend, const TemplateStore& templates,
              const QAPair& record, std::string_view a, std::string_view b) {
  return config.swap_judging
             ? judge_pair_swapped(backend, record.question, record.reference_answer, a, b, templates)
             : judge_pair(backend, record.question, record.reference_answer, a, b, templates);
}

bool in_suite(const QAPair& r, Suite suite) {
  switch (suite) {
    case Suite::general_mc: return r.category == QuestionCategory::general && r.gold_letter.has_value();
    case Suite::general_subjective: return r.category == QuestionCategory::general && !r.gold_letter;
    case Suite::product: return r.category == QuestionCategory::product;
    case Suite::instance: return r.category == QuestionCategory::instance;
  }
  return false;
}

struct SuiteContext {
  Suite suite;
  const EvalBackends& backends;
  const EvalConfig& config;
  const TemplateStore& templates;
  const ToolPool& tools;
};

void judge_row(const SuiteContext& ctx, const QAPair& record, RecordRow& row) {
  if (!ctx.backends.competitor || !ctx.backends.judge || !row.competitor_answer) return;
  try {
    row.verdict = judge(ctx.config, *ctx.backends.judge, ctx.templates, record, row.answer, *row.competitor_answer);
  } catch (const JudgeFormatError& e) {
    row.status = "judge_error";
    row.error = e.what();
  }
}

void eval_general_mc(const SuiteContext& ctx, const QAPair& record, RecordRow& row) {
  auto question = ctx.templates.render(prompts::kMultipleChoice,
                                       {{"Q", record.question}, {"CHOICES", render_choices(*record.choices)}});
  auto prompt = ctx.templates.render(TemplateId::general, {{"Q", question}});
  row.answer = complete(*ctx.backends.model, user_request(prompt));
  row.mc_letter = mc_letter(row.answer);
  row.correct = std::string(text::trim(row.answer)) == *record.gold_letter;
}

void eval_general_subjective(const SuiteContext& ctx, const QAPair& record, RecordRow& row) {
  auto prompt = ctx.templates.render(TemplateId::general, {{"Q", record.question}});
  row.answer = complete(*ctx.backends.model, user_request(prompt));
  row.competitor_answer = complete(*ctx.backends.competitor, user_request(prompt));
  judge_row(ctx, record, row);
}

void eval_product(const SuiteContext& ctx, const QAPair& record, RecordRow& row) {
  std::vector<std::string> knowledge;
  for (const auto& id : record.retrieval_labels.value_or(std::vector<std::string>{})) {
    const Chunk* chunk = ctx.config.chunks ? ctx.config.chunks->find(id) : nullptr;
    if (!chunk) throw LookupError("unknown chunk id '" + id + "'");
    knowledge.push_back(chunk->text);
  }
  if (ctx.config.index && ctx.config.embedder) {
    std::vector<std::string> ids;
    for (const auto& hit : retrieve(*ctx.config.index, record.question, *ctx.config.embedder)) {
      ids.push_back(hit.chunk_id);
    }
    row.retrieved = std::move(ids);
  }
  auto prompt = ctx.templates.render(TemplateId::product, {{"Q", record.question}, {"K", text::join(knowledge, "\n")}});
  row.answer = complete(*ctx.backends.model, user_request(prompt));
  row.competitor_answer = complete(*ctx.backends.competitor, user_request(prompt));
  judge_row(ctx, record, row);
}

void eval_instance(const SuiteContext& ctx, const QAPair& record, std::uint64_t seed, RecordRow& row) {
  auto run = algorithm1_generate(*ctx.backends.model, record, ctx.tools, ctx.templates, seed,
                                 ctx.config.n_random_tools);
  row.answer = run.answer;
  row.matched_prefix_len = run.matched_prefix_len;
  row.chain_len = record.tool_chain->size();
  row.failed = run.failed;
  row.slate = run.slate;

  if (ctx.backends.judge) {
    std::vector<bool> verdicts;
    try {
      for (std::size_t i = 0; i < run.matched_prefix_len; ++i) {
        const auto& step = run.steps[i];
        bool ok = judge_tool_format(*ctx.backends.judge, spec_for(ctx.tools, step.action), step.action_input,
                                    ctx.templates);
        verdicts.push_back(ok);
        if (!ok) break;
      }
      row.format_verdicts = std::move(verdicts);
    } catch (const JudgeFormatError& e) {
      row.status = "judge_error";
      row.error = e.what();
    } catch (const DomainError& e) {
      row.status = "judge_error";
      row.error = e.what();
    }
  }

  if (ctx.backends.competitor) {
    row.competitor_answer = algorithm1_generate(*ctx.backends.competitor, record, ctx.tools, ctx.templates, seed,
                                                ctx.config.n_random_tools)
                                .answer;
    if (row.status == "ok") judge_row(ctx, record, row);
  }
}

RecordRow eval_record(const SuiteContext& ctx, const QAPair& record, std::uint64_t seed) {
  RecordRow row;
  row.id = record.id;
  if (!in_suite(record, ctx.suite)) {
    row.status = "skipped";
    row.error = "category " + std::string(to_string(record.category)) + " is not part of suite " +
                std::string(to_string(ctx.suite));
    return row;
  }
  try {
    switch (ctx.suite) {
      case Suite::general_mc: eval_general_mc(ctx, record, row); break;
      case Suite::general_subjective: eval_general_subjective(ctx, record, row); break;
      case Suite::product: eval_product(ctx, record, row); break;
      case Suite::instance: eval_instance(ctx, record, seed, row); break;
    }
  } catch (const std::exception& e) {
    RecordRow failed;
    failed.id = record.id;
    failed.status = "error";
    failed.error = e.what();
    return failed;
  }
  return row;
}

template <typename T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

std::string format_metric(const EvalReport& r, const std::string& key) {
  auto it = r.metrics.find(key);
  if (it == r.metrics.end()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", it->second);
  return buf;
}

}  // namespace

Algorithm1Result algorithm1_generate(const BackendConfig& model, const QAPair& record, const ToolPool& pool,
                                     const TemplateStore& templates, std::uint64_t seed, std::size_t n_random) {
  if (!record.tool_chain || record.tool_chain->empty()) {
    throw DomainError("record '" + record.id + "' has no tool chain");
  }
  const auto& chain = *record.tool_chain;
  std::vector<ToolSpec> truth;
  for (const auto& call : chain) truth.push_back(spec_for(pool, call.tool));
  ToolPool slate = sample_tool_slate(truth, pool, n_random, seed);

  Algorithm1Result result;
  result.slate = slate.names();
  std::string& pad = result.answer;

  for (const auto& call : chain) {
    auto output = complete(model, user_request(render_agent_prompt(templates, record.question, slate, pad),
                                               kObservationStop));
    std::optional<ParsedStep> step;
    try {
      step = parse_cot_step(output);
    } catch (const ParseError&) {
    }
    if (step && !step->is_final() && step->action == call.tool) {
      pad += format_cot_step(*step) + "\nObservation: " + call.observation + "\n";
      result.steps.push_back(std::move(*step));
      ++result.matched_prefix_len;
      continue;
    }
    if (step) {
      pad += format_cot_step(*step);
      result.steps.push_back(std::move(*step));
    } else {
      pad += std::string(text::trim(output));
    }
    pad += "\n";
    pad += kToolInvocationFailure;
    result.failed = true;
    return result;
  }

  auto output = complete(model, user_request(render_agent_prompt(templates, record.question, slate, pad)));
  std::optional<ParsedStep> step;
  try {
    step = parse_cot_step(output);
  } catch (const ParseError&) {
  }
  if (step && step->is_final()) {
    pad += "Final_Answer: " + step->final_answer;
    result.final_answer = step->final_answer;
  } else {
    pad += std::string(text::trim(output));
  }
  return result;
}

std::size_t matched_prefix_length(std::span<const std::string> model_actions,
                                  std::span<const std::string> ground_truth_actions) {
  auto [a, b] = std::mismatch(model_actions.begin(), model_actions.end(), ground_truth_actions.begin(),
                              ground_truth_actions.end());
  return static_cast<std::size_t>(a - model_actions.begin());
}

double tsa(std::span<const PrefixRun> runs) {
  if (runs.empty()) throw DomainError("tsa of an empty run list");
  std::size_t matched = 0;
  std::size_t total = 0;
  for (const auto& r : runs) {
    if (r.chain_len == 0) throw DomainError("tsa: chain length must be at least 1");
    if (r.matched_prefix_len > r.chain_len) throw DomainError("tsa: matched prefix exceeds chain length");
    matched += r.matched_prefix_len;
    total += r.chain_len;
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

double tfa(std::span<const FormatRun> runs) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& r : runs) {
    if (r.judge_error) continue;
    if (r.chain_len == 0) throw DomainError("tfa: chain length must be at least 1");
    auto lead = static_cast<std::size_t>(std::find(r.verdicts.begin(), r.verdicts.end(), false) - r.verdicts.begin());
    if (lead > r.chain_len) throw DomainError("tfa: more verdicts than chain steps");
    correct += lead;
    total += r.chain_len;
  }
  if (total == 0) throw DomainError("tfa: no judged runs");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> winrate(std::span<const Verdict> verdicts) {
  auto wins = std::count(verdicts.begin(), verdicts.end(), Verdict::win);
  auto losses = std::count(verdicts.begin(), verdicts.end(), Verdict::lose);
  if (wins + losses == 0) return std::nullopt;
  return static_cast<double>(wins) / static_cast<double>(wins + losses);
}

std::string mc_letter(std::string_view model_output) {
  auto t = text::trim(model_output);
  if (t.size() == 1 && t[0] >= 'A' && t[0] <= 'D') return std::string(t);
  return "others";
}

double mca(std::span<const McAnswer> answers) {
  if (answers.empty()) throw DomainError("mca of an empty answer list");
  std::size_t correct = 0;
  for (const auto& a : answers) {
    if (a.gold < 'A' || a.gold > 'D') throw DomainError(std::string("gold letter must be A-D, got '") + a.gold + "'");
    if (mc_letter(a.output) == std::string(1, a.gold)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(answers.size());
}

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::general_mc: return "general_mc";
    case Suite::general_subjective: return "general_subjective";
    case Suite::product: return "product";
    case Suite::instance: return "instance";
  }
  return "general_mc";
}

std::optional<Suite> parse_suite(std::string_view s) {
  for (auto suite : {Suite::general_mc, Suite::general_subjective, Suite::product, Suite::instance}) {
    if (to_string(suite) == s) return suite;
  }
  return std::nullopt;
}

std::uint64_t record_seed(std::uint64_t base, std::size_t index) {
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(index)));
}

EvalReport run_suite(const Dataset& dataset, Suite suite, const EvalBackends& backends, const EvalConfig& config) {
  if (!backends.model) throw DomainError("a model backend is required");
  if ((suite == Suite::general_subjective || suite == Suite::product) &&
      (!backends.competitor || !backends.judge)) {
    throw DomainError("suite " + std::string(to_string(suite)) + " needs a competitor and a judge");
  }
  const TemplateStore& templates = config.templates ? *config.templates : default_templates();
  const ToolPool common = config.tools ? ToolPool{} : ToolPool::common();
  const ToolPool& tools = config.tools ? *config.tools : common;
  SuiteContext ctx{suite, backends, config, templates, tools};

  const auto& records = dataset.records;
  std::vector<RecordRow> rows(records.size());
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, std::max<std::size_t>(records.size(), 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) rows[i] = eval_record(ctx, records[i], record_seed(config.seed, i));
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
          rows[i] = eval_record(ctx, records[i], record_seed(config.seed, i));
        }
      });
    }
  }

  EvalReport report;
  report.suite = std::string(to_string(suite));
  report.config["suite"] = report.suite;
  report.config["model"] = backends.model->model_name;
  report.config["competitor"] = backends.competitor ? backends.competitor->model_name : "";
  report.config["judge"] = backends.judge ? backends.judge->model_name : "";
  report.config["seed"] = std::to_string(config.seed);
  report.config["template_version"] = templates.version();
  report.config["swap_judging"] = config.swap_judging ? "true" : "false";

  std::vector<McAnswer> mc;
  std::vector<Verdict> verdicts;
  std::vector<PrefixRun> prefixes;
  std::vector<FormatRun> formats;
  std::vector<RetrievalResult> retrieved;
  std::vector<std::set<std::string>> labels;
  std::size_t counted = 0, ok = 0, errors = 0, judge_errors = 0, skipped = 0;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto& rec = records[i];
    if (row.status == "skipped") {
      ++skipped;
      continue;
    }
    ++counted;
    if (row.status == "error") {
      ++errors;
      continue;
    }
    if (row.status == "judge_error") ++judge_errors;
    if (row.status == "ok") ++ok;
    if (row.correct) mc.push_back({row.answer, (*rec.gold_letter)[0]});
    if (row.verdict) verdicts.push_back(*row.verdict);
    if (row.matched_prefix_len) prefixes.push_back({*row.matched_prefix_len, *row.chain_len});
    if (row.chain_len && backends.judge) {
      formats.push_back({row.format_verdicts.value_or(std::vector<bool>{}), *row.chain_len, !row.format_verdicts});
    }
    if (row.retrieved) {
      RetrievalResult hits;
      for (const auto& id : *row.retrieved) hits.push_back({id, 0.0});
      retrieved.push_back(std::move(hits));
      const auto& l = rec.retrieval_labels.value_or(std::vector<std::string>{});
      labels.emplace_back(l.begin(), l.end());
    }
  }

  if (!mc.empty()) report.metrics["mca"] = mca(mc);
  if (auto w = winrate(verdicts)) report.metrics["winrate"] = *w;
  if (!prefixes.empty()) report.metrics["tsa"] = tsa(prefixes);
  if (std::any_of(formats.begin(), formats.end(), [](const FormatRun& f) { return !f.judge_error; })) {
    report.metrics["tfa"] = tfa(formats);
  }
  if (!retrieved.empty()) report.metrics["p_at_3"] = p_at_3(retrieved, labels);

  report.counts = {{"records", counted}, {"ok", ok},           {"errors", errors},
                   {"judge_errors", judge_errors}, {"skipped", skipped}, {"judged", verdicts.size()}};
  report.records = std::move(rows);
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["suite"] = report.suite;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.metrics) j["metrics"][k] = v;
  j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.counts) j["counts"][k] = v;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) j["config"][k] = v;
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    nlohmann::ordered_json row;
    row["id"] = r.id;
    row["status"] = r.status;
    if (!r.error.empty()) row["error"] = r.error;
    row["answer"] = r.answer;
    if (r.competitor_answer) row["competitor_answer"] = *r.competitor_answer;
    if (r.verdict) row["verdict"] = std::string(to_string(*r.verdict));
    if (r.mc_letter) row["mc_letter"] = *r.mc_letter;
    if (r.correct) row["correct"] = *r.correct;
    if (r.matched_prefix_len) row["matched_prefix_len"] = *r.matched_prefix_len;
    if (r.chain_len) row["chain_len"] = *r.chain_len;
    if (r.failed) row["failed"] = *r.failed;
    if (r.format_verdicts) row["format_verdicts"] = *r.format_verdicts;
    if (r.slate) row["slate"] = *r.slate;
    if (r.retrieved) row["retrieved"] = *r.retrieved;
    j["records"].push_back(std::move(row));
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.suite = j.at("suite").get<std::string>();
    r.metrics = j.value("metrics", std::map<std::string, double>{});
    r.counts = j.value("counts", std::map<std::string, std::size_t>{});
    r.config = j.value("config", std::map<std::string, std::string>{});
    for (const auto& e : j.value("records", nlohmann::json::array())) {
      RecordRow row;
      row.id = e.at("id").get<std::string>();
      row.status = e.value("status", std::string("ok"));
      row.error = e.value("error", std::string{});
      row.answer = e.value("answer", std::string{});
      if (e.contains("competitor_answer")) row.competitor_answer = e["competitor_answer"].get<std::string>();
      if (e.contains("verdict")) {
        auto v = e["verdict"].get<std::string>();
        row.verdict = v == "win" ? Verdict::win : v == "lose" ? Verdict::lose : Verdict::tie;
      }
      if (e.contains("mc_letter")) row.mc_letter = e["mc_letter"].get<std::string>();
      if (e.contains("correct")) row.correct = e["correct"].get<bool>();
      if (e.contains("matched_prefix_len")) row.matched_prefix_len = e["matched_prefix_len"].get<std::size_t>();
      if (e.contains("chain_len")) row.chain_len = e["chain_len"].get<std::size_t>();
      if (e.contains("failed")) row.failed = e["failed"].get<bool>();
      if (e.contains("format_verdicts")) row.format_verdicts = e["format_verdicts"].get<std::vector<bool>>();
      if (e.contains("slate")) row.slate = e["slate"].get<std::vector<std::string>>();
      if (e.contains("retrieved")) row.retrieved = e["retrieved"].get<std::vector<std::string>>();
      r.records.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  for (const auto& [k, v] : r.metrics) {
    if (v < 0.0 || v > 1.0) throw ParseError("report: metric " + k + " outside [0,1]");
  }
  return r;
}

std::string reports_to_markdown(std::span<const EvalReport> reports) {
  static const std::pair<const char*, const char*> kColumns[] = {
      {"mca", "MCA"}, {"winrate", "WinRate"}, {"tsa", "TSA"}, {"tfa", "TFA"}, {"p_at_3", "P@3"}};
  std::string out = "| Model | Suite |";
  for (const auto& [key, title] : kColumns) out += std::string(" ") + title + " |";
  out += " Errors |\n|---|---|";
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out += "---|";
  out += "---|\n";
  for (const auto& r : reports) {
    auto model = r.config.count("model") ? r.config.at("model") : std::string("?");
    out += "| " + model + " | " + r.suite + " |";
    for (const auto& [key, title] : kColumns) out += " " + format_metric(r, key) + " |";
    auto errors = r.counts.count("errors") ? r.counts.at("errors") : 0;
    out += " " + std::to_string(errors) + " |\n";
  }
  return out;
}

}  // namespace dqa
