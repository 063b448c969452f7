#include "dqa/datagen.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "dqa/text.hpp"

namespace dqa {

namespace {

std::map<std::string, std::size_t> unigram_counts(std::string_view s) {
  std::map<std::string, std::size_t> counts;
  for (auto& tok : text::split_whitespace(text::to_lower_ascii(s))) ++counts[std::move(tok)];
  return counts;
}

bool eligible(const ForumAnswer& a, int high_upvotes) { return a.accepted || a.upvotes >= high_upvotes; }

std::string bullet_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += '\n';
    out += "- " + item;
  }
  return out;
}

// Length of a list marker at the start of `line`, or 0.
std::size_t marker_length(std::string_view line) {
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && line[1] == ' ') return 2;
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') return i + 2;
  return 0;
}

std::vector<std::string> read_nonempty_lines(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(text::read_file(path))) {
    auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> read_blocks(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (const auto& line : text::split_lines(text::read_file(path))) {
    if (text::trim(line).empty()) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      if (!cur.empty()) cur += '\n';
      cur += line;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

nlohmann::ordered_json stage_logs_json(const std::vector<StageLog>& logs) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& l : logs) out.push_back({{"stage", l.stage}, {"prompt", l.prompt}, {"output", l.output}});
  return out;
}

std::set<std::string> distinct_tools(const QAPair& r) {
  std::set<std::string> out;
  for (const auto& c : r.tool_chain.value_or(std::vector<ToolCall>{})) out.insert(c.tool);
  return out;
}

GenerationOutcome run_forum(const GenerationJob& job, const TemplateStore& templates) {
  auto items = load_forum_dump(job.input_path);
  auto dedup = filter_dedup(items, job.dedup_threshold, job.high_upvotes);

  GenerationOutcome out;
  out.log["input_items"] = items.size();
  out.log["merges"] = nlohmann::ordered_json::array();
  for (const auto& m : dedup.merges) {
    out.log["merges"].push_back({{"merged", m.merged}, {"representative", m.representative}, {"score", m.score}});
  }
  out.log["no_eligible_answer"] = dedup.no_eligible_answer;
  out.log["rewrites"] = nlohmann::ordered_json::array();

  for (std::size_t i = 0; i < dedup.items.size(); ++i) {
    const auto& item = dedup.items[i];
    auto best = std::max_element(item.answers.begin(), item.answers.end(), [](const auto& a, const auto& b) {
      return std::pair(a.accepted, a.upvotes) < std::pair(b.accepted, b.upvotes);
    });
    auto rewritten = rewrite_answer(job.backend, item.question, best->text, templates);
    QAPair r;
    r.id = "forum-" + std::to_string(i + 1);
    r.category = QuestionCategory::general;
    r.question = item.question;
    r.reference_answer = rewritten;
    r.source = "forum";
    out.dataset.records.push_back(std::move(r));
    out.log["rewrites"].push_back({{"input_index", dedup.kept[i]}, {"original", best->text}});
  }
  return out;
}

GenerationOutcome run_product(const GenerationJob& job, const TemplateStore& templates) {
  Document doc{std::filesystem::path(job.input_path).stem().string(), {}, text::read_file(job.input_path)};
  auto segmentation = segment_manual(doc, job.token_budget);
  auto chunks = segment_text(doc);
  TrigramEmbedder embedder;
  auto index = build_index(chunks, embedder);

  GenerationOutcome out;
  out.log["segments"] = segmentation.segments.size();
  out.log["warnings"] = segmentation.warnings;
  out.log["stages"] = nlohmann::ordered_json::array();

  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& segment : segmentation.segments) {
    auto qa = generate_product_qa(job.backend, segment, job.n_max, templates);
    out.log["stages"].push_back(stage_logs_json(qa.log));
    pairs.insert(pairs.end(), qa.pairs.begin(), qa.pairs.end());
  }
  auto annotated = annotate_retrieval_labels(pairs, index, embedder, job.label_threshold, doc.doc_id);
  out.log["unlabeled"] = annotated.unlabeled;
  for (auto& r : annotated.records) r.source = "manual:" + doc.doc_id;
  out.dataset.records = std::move(annotated.records);

  if (!job.chunks_path.empty()) {
    ChunkStore store;
    store.add_all(chunks);
    store.save(job.chunks_path);
  }
  if (!job.index_path.empty()) index.save(job.index_path);
  return out;
}

GenerationOutcome run_instance(const GenerationJob& job, const TemplateStore& templates) {
  ToolPool pool = job.tools_path.empty() ? ToolPool::common() : ToolPool::load(job.tools_path);
  SimulatedInstance inst =
      job.instance_path.empty() ? SimulatedInstance::demo() : SimulatedInstance::load(job.instance_path);
  auto exemplars = read_nonempty_lines(job.few_shot_questions_path);
  auto cases = read_blocks(job.answer_cases_path);
  std::mt19937_64 rng(job.seed);

  GenerationOutcome out;
  out.log["questions"] = nlohmann::ordered_json::array();
  out.log["flagged"] = nlohmann::ordered_json::array();
  AgentOptions agent;
  agent.templates = &templates;

  std::vector<QAPair> records;
  std::size_t next_id = 1;
  for (const auto& tool : pool.tools()) {
    std::vector<std::string> shots;
    std::sample(exemplars.begin(), exemplars.end(), std::back_inserter(shots), 3, rng);
    auto questions = generate_instance_questions(job.backend, tool, pool, shots, job.questions_per_tool,
                                                 job.multi_tool_min, job.question_rounds, templates);
    for (const auto& q : questions) {
      out.log["questions"].push_back({{"target", tool.name}, {"question", q.question}, {"tools", q.tools}});
      auto answer = generate_instance_answers(job.backend, q.question, q.tools, pool, inst, cases, agent);
      if (answer.flagged) {
        out.log["flagged"].push_back({{"question", q.question}, {"reasons", answer.flag_reasons}});
        continue;
      }
      auto polished = polish_answer(job.backend, answer.trace, tool, pool, templates);
      auto record = instance_record("instance-" + std::to_string(next_id++), q.question, polished.trace);
      if (polished.format_summary) record.extra["format_summary"] = *polished.format_summary;
      records.push_back(std::move(record));
    }
  }

  // Flagged answers can shift the mix, so the constraint is enforced again.
  std::vector<InstanceQuestion> shape;
  for (const auto& r : records) {
    auto tools = distinct_tools(r);
    shape.push_back({r.id, {tools.begin(), tools.end()}});
  }
  auto kept = select_multi_tool(shape, records.size(), job.multi_tool_min);
  std::set<std::string> kept_ids;
  for (const auto& k : kept) kept_ids.insert(k.question);
  std::erase_if(records, [&](const QAPair& r) { return !kept_ids.contains(r.id); });
  if (!records.empty() && kept.empty()) {
    throw ConstraintError("no multi-tool record survived answer generation");
  }
  out.dataset.records = std::move(records);
  return out;
}

}  // namespace

std::vector<RawForumItem> parse_forum_dump(std::string_view contents) {
  std::vector<RawForumItem> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(contents)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      RawForumItem item;
      item.question = j.at("question").get<std::string>();
      for (const auto& a : j.value("answers", nlohmann::json::array())) {
        item.answers.push_back(
            {a.at("text").get<std::string>(), a.value("upvotes", 0), a.value("accepted", false)});
      }
      out.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RawForumItem> load_forum_dump(const std::string& path) {
  return parse_forum_dump(text::read_file(path));
}

double rouge1(std::string_view a, std::string_view b) {
  auto ca = unigram_counts(a);
  auto cb = unigram_counts(b);
  std::size_t na = 0, nb = 0, overlap = 0;
  for (const auto& [tok, n] : ca) {
    na += n;
    if (auto it = cb.find(tok); it != cb.end()) overlap += std::min(n, it->second);
  }
  for (const auto& [tok, n] : cb) nb += n;
  if (na == 0 || nb == 0 || overlap == 0) return 0.0;
  // 2PR/(P+R) with P = o/na and R = o/nb reduces to 2o/(na+nb).
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(na + nb);
}

DedupResult filter_dedup(std::span<const RawForumItem> items, double threshold, int high_upvotes) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("dedup threshold must be in (0, 1]");
  std::vector<std::size_t> reps;
  std::vector<RawForumItem> pooled;
  DedupResult result;
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::optional<std::size_t> best;
    double best_score = -1.0;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      double s = rouge1(items[i].question, items[reps[r]].question);
      if (s >= threshold && s > best_score) {
        best = r;
        best_score = s;
      }
    }
    std::vector<ForumAnswer> answers;
    for (const auto& a : items[i].answers) {
      if (eligible(a, high_upvotes)) answers.push_back(a);
    }
    if (best) {
      result.merges.push_back({i, reps[*best], best_score});
      auto& target = pooled[*best].answers;
      target.insert(target.end(), answers.begin(), answers.end());
    } else {
      reps.push_back(i);
      pooled.push_back({items[i].question, std::move(answers)});
    }
  }
  for (std::size_t r = 0; r < reps.size(); ++r) {
    if (pooled[r].answers.empty()) {
      result.no_eligible_answer.push_back(reps[r]);
      continue;
    }
    result.kept.push_back(reps[r]);
    result.items.push_back(std::move(pooled[r]));
  }
  return result;
}

std::string rewrite_answer(const BackendConfig& backend, std::string_view question, std::string_view raw_answer,
                           const TemplateStore& templates) {
  if (text::trim(raw_answer).empty()) throw DomainError("cannot rewrite an empty answer");
  auto prompt = templates.render(prompts::kRewriteAnswer,
                                 {{"Q", std::string(question)}, {"ANSWER", std::string(raw_answer)}});
  return std::string(text::trim(complete(backend, user_request(prompt))));
}

std::size_t count_words(std::string_view s) { return text::split_whitespace(s).size(); }

SegmentationResult segment_manual(const Document& doc, std::size_t token_budget, const TokenCounter& counter) {
  if (token_budget == 0) throw DomainError("token budget must be positive");
  // Paragraphs as [begin, end) byte ranges of the body.
  std::vector<std::pair<std::size_t, std::size_t>> paras;
  const std::string& body = doc.body;
  std::size_t pos = 0;
  std::optional<std::size_t> start;
  std::size_t last_end = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    auto end = nl == std::string::npos ? body.size() : nl;
    bool blank = text::trim(std::string_view(body).substr(pos, end - pos)).empty();
    if (blank) {
      if (start) paras.emplace_back(*start, last_end);
      start.reset();
    } else {
      if (!start) start = pos;
      last_end = end;
      if (last_end > 0 && body[last_end - 1] == '\r') --last_end;
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  if (start) paras.emplace_back(*start, last_end);

  SegmentationResult result;
  std::optional<std::pair<std::size_t, std::size_t>> cur;
  std::size_t cur_tokens = 0;
  auto flush = [&] {
    if (cur) result.segments.push_back(body.substr(cur->first, cur->second - cur->first));
    cur.reset();
    cur_tokens = 0;
  };
  for (std::size_t p = 0; p < paras.size(); ++p) {
    auto [b, e] = paras[p];
    auto n = counter(std::string_view(body).substr(b, e - b));
    if (n > token_budget) {
      flush();
      result.segments.push_back(body.substr(b, e - b));
      result.warnings.push_back("paragraph " + std::to_string(p + 1) + " of " + doc.doc_id + " has " +
                                std::to_string(n) + " tokens, over the budget of " + std::to_string(token_budget));
      continue;
    }
    if (cur && cur_tokens + n > token_budget) flush();
    if (!cur) cur = std::pair(b, e);
    cur->second = e;
    cur_tokens += n;
  }
  flush();
  return result;
}

std::vector<std::string> parse_list_items(std::string_view output) {
  std::vector<std::string> items;
  bool open = false;
  for (const auto& raw : text::split_lines(output)) {
    auto line = text::trim(raw);
    if (line.empty()) continue;
    if (auto m = marker_length(line)) {
      items.emplace_back(text::trim(line.substr(m)));
      open = true;
    } else if (open) {
      items.back() += '\n';
      items.back() += line;
    }
  }
  std::erase_if(items, [](const std::string& s) { return s.empty(); });
  return items;
}

ProductQaResult generate_product_qa(const BackendConfig& backend, std::string_view segment, std::size_t n_max,
                                   const TemplateStore& templates) {
  if (text::trim(segment).empty()) throw DomainError("segment is empty");
  if (n_max == 0) throw DomainError("n_max must be at least 1");
  ProductQaResult result;
  auto stage = [&](std::string name, std::string_view tmpl, const SlotBinding& bindings) {
    auto prompt = templates.render(tmpl, bindings);
    auto output = complete(backend, user_request(prompt));
    result.log.push_back({name, prompt, output});
    auto items = parse_list_items(output);
    if (items.empty()) throw GenerationError("stage " + name + " produced no items");
    return items;
  };
  const std::string seg(segment);
  auto points = stage("key_points", prompts::kProductKeyPoints, {{"SEGMENT", seg}});
  auto questions = stage("questions", prompts::kProductQuestions, {{"SEGMENT", seg}, {"KEY_POINTS", bullet_list(points)}});
  auto answers = stage("answers", prompts::kProductAnswers, {{"SEGMENT", seg}, {"QUESTIONS", bullet_list(questions)}});
  const auto n = std::min({questions.size(), answers.size(), n_max});
  for (std::size_t i = 0; i < n; ++i) result.pairs.emplace_back(questions[i], answers[i]);
  return result;
}

AnnotationResult annotate_retrieval_labels(std::span<const std::pair<std::string, std::string>> pairs,
                                           const VectorIndex& index, const Embedder& embedder, double threshold,
                                           std::string_view id_prefix) {
  AnnotationResult result;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [q, a] = pairs[i];
    std::vector<std::string> labels;
    for (const auto& query : {q, a}) {
      for (const auto& hit : retrieve(index, query, embedder, index.size(), threshold)) {
        if (std::find(labels.begin(), labels.end(), hit.chunk_id) == labels.end()) labels.push_back(hit.chunk_id);
      }
    }
    if (labels.empty()) {
      result.unlabeled.push_back(i);
      continue;
    }
    QAPair r;
    r.id = std::string(id_prefix) + "-" + std::to_string(i + 1);
    r.category = QuestionCategory::product;
    r.question = q;
    r.reference_answer = a;
    r.source = "manual";
    r.retrieval_labels = std::move(labels);
    result.records.push_back(std::move(r));
  }
  return result;
}

std::vector<InstanceQuestion> parse_instance_questions(std::string_view output, std::string_view default_tool) {
  std::vector<InstanceQuestion> out;
  for (const auto& item : parse_list_items(output)) {
    InstanceQuestion q;
    auto lowered = text::to_lower_ascii(item);
    auto tag = lowered.rfind("[tools:");
    auto close = tag == std::string::npos ? std::string::npos : item.find(']', tag);
    if (close != std::string::npos) {
      for (const auto& name : text::split_whitespace(item.substr(tag + 7, close - tag - 7))) {
        std::string clean = name;
        while (!clean.empty() && clean.back() == ',') clean.pop_back();
        while (!clean.empty() && clean.front() == ',') clean.erase(clean.begin());
        if (!clean.empty() && std::find(q.tools.begin(), q.tools.end(), clean) == q.tools.end()) {
          q.tools.push_back(clean);
        }
      }
      q.question = std::string(text::trim(item.substr(0, tag)));
    } else {
      q.question = item;
    }
    if (q.tools.empty()) q.tools.emplace_back(default_tool);
    if (!q.question.empty()) out.push_back(std::move(q));
  }
  return out;
}

std::vector<InstanceQuestion> select_multi_tool(std::span<const InstanceQuestion> batch, std::size_t n,
                                                double min_fraction) {
  std::size_t multi = 0;
  for (const auto& q : batch) {
    if (q.multi_tool() && multi < n) ++multi;
  }
  std::size_t singles = 0;
  const std::size_t available = static_cast<std::size_t>(
      std::count_if(batch.begin(), batch.end(), [](const InstanceQuestion& q) { return !q.multi_tool(); }));
  while (singles < available && multi + singles + 1 <= n &&
         static_cast<double>(multi) >= min_fraction * static_cast<double>(multi + singles + 1)) {
    ++singles;
  }
  std::vector<InstanceQuestion> out;
  std::size_t m = 0, s = 0;
  for (const auto& q : batch) {
    if (q.multi_tool() ? m++ < multi : s++ < singles) out.push_back(q);
  }
  return out;
}

std::vector<InstanceQuestion> generate_instance_questions(const BackendConfig& backend, const ToolSpec& tool,
                                                          const ToolPool& pool, std::span<const std::string> few_shots,
                                                          std::size_t n, double multi_tool_min,
                                                          std::size_t max_rounds, const TemplateStore& templates) {
  if (n == 0) throw DomainError("n must be at least 1");
  if (multi_tool_min < 0.0 || multi_tool_min > 1.0) throw DomainError("multi_tool_min must be in [0, 1]");
  if (max_rounds == 0) throw DomainError("max_rounds must be at least 1");
  auto prompt = templates.render(prompts::kInstanceQuestions,
                                 {{"TOOL_NAME", tool.name},
                                  {"TOOL_DESCRIPTION", tool.description},
                                  {"TOOL_FORMAT", tool.input_format},
                                  {"TOOLS", render_tool_listing(pool)},
                                  {"EXAMPLES", bullet_list({few_shots.begin(), few_shots.end()})},
                                  {"N", std::to_string(n)}});
  std::vector<InstanceQuestion> gathered;
  std::vector<InstanceQuestion> selected;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    auto batch = parse_instance_questions(complete(backend, user_request(prompt)), tool.name);
    gathered.insert(gathered.end(), batch.begin(), batch.end());
    selected = select_multi_tool(gathered, n, multi_tool_min);
    bool satisfied = multi_tool_min == 0.0 ? !selected.empty()
                                           : std::any_of(selected.begin(), selected.end(),
                                                         [](const InstanceQuestion& q) { return q.multi_tool(); });
    if (satisfied) return selected;
  }
  throw InstanceConstraintError("no multi-tool question for " + tool.name + " after " + std::to_string(max_rounds) +
                                    " rounds",
                                std::move(gathered));
}

InstanceAnswer generate_instance_answers(const BackendConfig& backend, std::string_view question,
                                         std::span<const std::string> expected_tools, const ToolPool& pool,
                                         const SimulatedInstance& instance, std::span<const std::string> answer_cases,
                                         AgentOptions options) {
  if (answer_cases.empty()) throw DomainError("at least one answer case is required");
  options.few_shot_examples = text::join({answer_cases.begin(), answer_cases.end()}, "\n\n");
  InstanceAnswer out;
  out.trace = run_agent_loop(backend, question, pool, instance, options);
  if (out.trace.terminated_by != Termination::final_answer) {
    out.flag_reasons.push_back("terminated by " + std::string(to_string(out.trace.terminated_by)));
  }
  for (const auto& tool : expected_tools) {
    bool used = std::any_of(out.trace.steps.begin(), out.trace.steps.end(),
                            [&](const CotStep& s) { return s.action == tool; });
    if (!used) out.flag_reasons.push_back("expected tool " + tool + " unused");
  }
  out.flagged = !out.flag_reasons.empty();
  return out;
}

PolishedRecord polish_answer(const BackendConfig& backend, const CotTrace& trace, const ToolSpec& tool,
                             const ToolPool& pool, const TemplateStore& templates) {
  PolishedRecord out;
  out.trace = trace;
  for (std::size_t i = 0; i < out.trace.steps.size(); ++i) {
    auto& step = out.trace.steps[i];
    const ToolSpec* spec = step.action == tool.name ? &tool : pool.find(step.action);
    if (!spec || spec->input_format.empty()) continue;
    auto reply = complete(backend, user_request(templates.render(prompts::kPolishCheck,
                                                                 {{"TOOL_NAME", spec->name},
                                                                  {"TOOL_FORMAT", spec->input_format},
                                                                  {"ACTION_INPUT", step.action_input}})));
    auto verdict = text::to_upper_ascii(text::trim(reply));
    if (!verdict.empty() && verdict.back() == '.') verdict.pop_back();
    if (verdict == "OK") continue;
    step.action_input = std::string(text::trim(reply));
    out.rewritten_steps.push_back(i);
  }
  if (tool.kind == ToolKind::generalization) {
    auto reply = complete(backend, user_request(templates.render(prompts::kPolishSummarize,
                                                                 {{"TOOL_NAME", tool.name},
                                                                  {"TOOL_DESCRIPTION", tool.description},
                                                                  {"TRACE", format_trace(out.trace)}})));
    out.format_summary = std::string(text::trim(reply));
  }
  return out;
}

QAPair instance_record(std::string id, std::string_view question, const CotTrace& trace) {
  QAPair r;
  r.id = std::move(id);
  r.category = QuestionCategory::instance;
  r.question = std::string(question);
  r.reference_answer = format_trace(trace);
  r.source = "generated";
  std::vector<ToolCall> chain;
  for (const auto& s : trace.steps) chain.push_back({s.action, s.action_input, s.observation.value_or("")});
  r.tool_chain = std::move(chain);
  return r;
}

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::forum: return "forum";
    case Pipeline::product: return "product";
    case Pipeline::instance: return "instance";
  }
  return "forum";
}

std::optional<Pipeline> parse_pipeline(std::string_view s) {
  for (auto p : {Pipeline::forum, Pipeline::product, Pipeline::instance}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

void GenerationJob::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw DomainError(msg);
  };
  require(!output_path.empty(), "output path is required");
  require(dedup_threshold > 0.0 && dedup_threshold <= 1.0, "dedup threshold must be in (0, 1]");
  require(label_threshold > -1.0 && label_threshold <= 1.0, "label threshold must be in (-1, 1]");
  require(multi_tool_min >= 0.0 && multi_tool_min <= 1.0, "multi_tool_min must be in [0, 1]");
  require(token_budget > 0, "token budget must be positive");
  require(n_max > 0, "n_max must be positive");
  require(questions_per_tool > 0, "questions_per_tool must be positive");
  require(question_rounds > 0, "question_rounds must be positive");
  switch (pipeline) {
    case Pipeline::forum:
    case Pipeline::product: require(!input_path.empty(), "input path is required"); break;
    case Pipeline::instance:
      require(!few_shot_questions_path.empty(), "few_shot_questions path is required");
      require(!answer_cases_path.empty(), "answer_cases path is required");
      break;
  }
}

GenerationOutcome run_generation_job(const GenerationJob& job) {
  job.validate();
  TemplateStore templates =
      job.templates_dir.empty() ? TemplateStore::builtin() : TemplateStore::load_directory(job.templates_dir);
  GenerationOutcome out;
  switch (job.pipeline) {
    case Pipeline::forum: out = run_forum(job, templates); break;
    case Pipeline::product: out = run_product(job, templates); break;
    case Pipeline::instance: out = run_instance(job, templates); break;
  }
  out.log["pipeline"] = std::string(to_string(job.pipeline));
  out.log["seed"] = job.seed;
  out.log["template_version"] = templates.version();
  out.log["records"] = out.dataset.records.size();
  out.dataset.metadata["pipeline"] = std::string(to_string(job.pipeline));
  out.dataset.metadata["seed"] = std::to_string(job.seed);
  out.dataset.metadata["template_version"] = templates.version();
  for (const auto& r : out.dataset.records) {
    auto violations = validate_record(r);
    if (!violations.empty()) {
      throw IntegrityError("generated record " + r.id + " is invalid: " + violations.front().message);
    }
  }
  save_dataset(out.dataset, job.output_path);
  return out;
}

}  // namespace dqa
