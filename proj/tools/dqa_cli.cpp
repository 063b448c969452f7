#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dqa/config.hpp"
#include "dqa/corpus.hpp"
#include "dqa/datagen.hpp"
#include "dqa/error.hpp"
#include "dqa/evalpipe.hpp"
#include "dqa/instance.hpp"
#include "dqa/qcr.hpp"
#include "dqa/rag.hpp"
#include "dqa/text.hpp"
#include "dqa/tig.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_snapshot(const std::map<std::string, std::string>& snapshot) {
  std::cerr << "resolved config:\n";
  for (const auto& [k, v] : snapshot) std::cerr << "  " << k << " = " << v << "\n";
}

void add_backend(std::map<std::string, std::string>& snapshot, const std::string& prefix,
                 const dqa::BackendConfig& b) {
  for (const auto& [k, v] : dqa::describe(b)) snapshot[prefix + "." + k] = v;
}

// Value of a flag if given, else of the config key, else the fallback.
class Layered {
 public:
  Layered(const std::optional<dqa::ConfigFile>& file, std::string section)
      : file_(file), section_(std::move(section)) {}

  std::string str(const CLI::Option* opt, const std::string& flag_value, const std::string& key,
                  const std::string& fallback = "") const {
    if (opt->count() > 0) return flag_value;
    if (file_) {
      if (auto v = file_->path(section_, key)) return *v;
    }
    return fallback;
  }

  std::string plain(const CLI::Option* opt, const std::string& flag_value, const std::string& key,
                    const std::string& fallback = "") const {
    if (opt->count() > 0) return flag_value;
    if (file_) {
      if (auto v = file_->get(section_, key)) return *v;
    }
    return fallback;
  }

 private:
  const std::optional<dqa::ConfigFile>& file_;
  std::string section_;
};

std::uint64_t to_uint(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(what + " must be a non-negative integer, got '" + s + "'");
}

int cmd_validate(const std::string& path) {
  auto result = dqa::load_dataset(path);
  print_snapshot({{"dataset", path}});
  const auto total = result.dataset.records.size();
  if (result.invalid.empty()) {
    std::cout << total << " records valid\n";
    return kOk;
  }
  for (const auto& bad : result.invalid) {
    for (const auto& v : bad.violations) {
      std::cout << "line " << bad.line << " (" << (bad.id.empty() ? "<no id>" : bad.id) << "): " << v.field << ": "
                << v.message << "\n";
    }
  }
  std::cout << result.invalid.size() << " of " << total << " records invalid\n";
  return kFailure;
}

int cmd_index(const std::string& manual, const std::string& out, std::string chunks_out, std::size_t seg_len,
              std::size_t overlap) {
  if (chunks_out.empty()) chunks_out = out + ".chunks.jsonl";
  dqa::Document doc{std::filesystem::path(manual).stem().string(), {}, dqa::text::read_file(manual)};
  dqa::TrigramEmbedder embedder;
  print_snapshot({{"manual", manual},
                  {"out", out},
                  {"chunks", chunks_out},
                  {"seg_len", std::to_string(seg_len)},
                  {"overlap", std::to_string(overlap)},
                  {"embedder", embedder.name()}});
  if (overlap >= seg_len) throw UsageError("--overlap must be smaller than --seg-len");
  auto chunks = dqa::segment_text(doc, seg_len, overlap);
  auto index = dqa::build_index(chunks, embedder);
  index.save(out);
  dqa::ChunkStore store;
  store.add_all(chunks);
  store.save(chunks_out);
  std::cout << chunks.size() << " chunks indexed\n";
  return kOk;
}

dqa::StageBackend stage_backend(const std::string& spec) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) {
    return dqa::RemoteClassifier{spec, dqa::ClassifierKind::remote_hierarchical};
  }
  return dqa::load_backend(spec);
}

int cmd_classify(const std::string& question, const std::string& kind_name, const std::string& backend,
                 const std::string& endpoint, const std::string& rules, const std::string& safety,
                 const std::string& topic) {
  auto kind = dqa::parse_classifier_kind(kind_name);
  if (!kind) throw UsageError("unknown classifier kind '" + kind_name + "'");
  std::map<std::string, std::string> snapshot{{"kind", kind_name}};
  dqa::RoutingDecision decision;
  switch (*kind) {
    case dqa::ClassifierKind::rules: {
      snapshot["rules"] = rules.empty() ? "builtin" : rules;
      print_snapshot(snapshot);
      decision = dqa::classify(question, rules.empty() ? dqa::Ruleset::builtin() : dqa::Ruleset::load(rules));
      break;
    }
    case dqa::ClassifierKind::llm_prompt: {
      if (backend.empty()) throw UsageError("--kind llm_prompt needs --backend");
      auto b = dqa::load_backend(backend);
      add_backend(snapshot, "backend", b);
      print_snapshot(snapshot);
      decision = dqa::classify(question, b);
      break;
    }
    case dqa::ClassifierKind::remote_flat: {
      if (endpoint.empty()) throw UsageError("--kind remote_flat needs --endpoint");
      snapshot["endpoint"] = endpoint;
      print_snapshot(snapshot);
      decision = dqa::classify(question, dqa::RemoteClassifier{endpoint});
      break;
    }
    case dqa::ClassifierKind::remote_hierarchical: {
      if (safety.empty() || topic.empty()) throw UsageError("--kind remote_hierarchical needs --safety and --topic");
      snapshot["safety"] = safety;
      snapshot["topic"] = topic;
      print_snapshot(snapshot);
      decision = dqa::hierarchical_classify(question, stage_backend(safety), stage_backend(topic));
      break;
    }
  }
  nlohmann::ordered_json out;
  out["category"] = std::string(dqa::to_string(decision.category));
  out["classifier"] = std::string(dqa::to_string(decision.classifier_kind));
  if (decision.confidence) out["confidence"] = *decision.confidence;
  if (decision.warning) {
    out["warning"] = *decision.warning;
    std::cerr << "warning: " << *decision.warning << "\n";
  }
  std::cout << out.dump() << "\n";
  return kOk;
}

struct EvalFlags {
  std::string config, suite, dataset, model, judge, competitor, seed = "0", out, jobs = "1", tools, instance,
      chunks, index, templates, swap;
};

int cmd_eval(const EvalFlags& f, const CLI::App& sub) {
  std::optional<dqa::ConfigFile> file;
  if (!f.config.empty()) file = dqa::ConfigFile::load(f.config);
  Layered l(file, "eval");
  auto opt = [&](const char* name) { return sub.get_option(name); };

  const auto suite_name = l.plain(opt("--suite"), f.suite, "suite");
  auto suite = dqa::parse_suite(suite_name);
  if (!suite) throw UsageError("unknown suite '" + suite_name + "'");
  const auto dataset_path = l.str(opt("--dataset"), f.dataset, "dataset");
  const auto model_path = l.str(opt("--model"), f.model, "model");
  const auto judge_path = l.str(opt("--judge"), f.judge, "judge");
  const auto competitor_path = l.str(opt("--competitor"), f.competitor, "competitor");
  const auto out_path = l.str(opt("--out"), f.out, "out");
  const auto tools_path = l.str(opt("--tools"), f.tools, "tools");
  const auto instance_path = l.str(opt("--instance"), f.instance, "instance");
  const auto chunks_path = l.str(opt("--chunks"), f.chunks, "chunks");
  const auto index_path = l.str(opt("--index"), f.index, "index");
  const auto templates_dir = l.str(opt("--templates"), f.templates, "templates");
  const auto seed = to_uint(l.plain(opt("--seed"), f.seed, "seed", "0"), "--seed");
  const auto jobs = to_uint(l.plain(opt("--jobs"), f.jobs, "jobs", "1"), "--jobs");
  const auto swap = l.plain(opt("--swap"), f.swap, "swap", "false");

  if (dataset_path.empty()) throw UsageError("--dataset is required");
  if (model_path.empty()) throw UsageError("--model is required");
  const bool pairwise = *suite == dqa::Suite::general_subjective || *suite == dqa::Suite::product;
  if (pairwise && (judge_path.empty() || competitor_path.empty())) {
    throw UsageError("suite " + suite_name + " needs --judge and --competitor");
  }
  if (jobs == 0) throw UsageError("--jobs must be at least 1");
  if (swap != "true" && swap != "false") throw UsageError("--swap must be true or false");

  auto model = dqa::load_backend(model_path);
  std::optional<dqa::BackendConfig> judge, competitor;
  if (!judge_path.empty()) judge = dqa::load_backend(judge_path);
  if (!competitor_path.empty()) competitor = dqa::load_backend(competitor_path);
  auto templates = templates_dir.empty() ? dqa::TemplateStore::builtin()
                                         : dqa::TemplateStore::load_directory(templates_dir);
  auto tools = tools_path.empty() ? dqa::ToolPool::common() : dqa::ToolPool::load(tools_path);
  std::optional<dqa::ChunkStore> chunks;
  if (!chunks_path.empty()) chunks = dqa::ChunkStore::load(chunks_path);
  std::optional<dqa::VectorIndex> index;
  if (!index_path.empty()) index = dqa::VectorIndex::load(index_path);
  dqa::TrigramEmbedder embedder;

  std::map<std::string, std::string> snapshot{{"suite", suite_name},
                                              {"dataset", dataset_path},
                                              {"seed", std::to_string(seed)},
                                              {"jobs", std::to_string(jobs)},
                                              {"swap", swap},
                                              {"out", out_path.empty() ? "<stdout>" : out_path},
                                              {"templates", templates_dir.empty() ? "builtin" : templates_dir},
                                              {"template_version", templates.version()},
                                              {"tools", tools_path.empty() ? "common" : tools_path}};
  add_backend(snapshot, "model", model);
  if (judge) add_backend(snapshot, "judge", *judge);
  if (competitor) add_backend(snapshot, "competitor", *competitor);
  if (!chunks_path.empty()) snapshot["chunks"] = chunks_path;
  if (!index_path.empty()) snapshot["index"] = index_path;
  if (!instance_path.empty()) snapshot["instance"] = instance_path;
  print_snapshot(snapshot);

  auto loaded = dqa::load_dataset(dataset_path);
  if (!loaded.invalid.empty()) {
    for (const auto& bad : loaded.invalid) {
      std::cerr << "line " << bad.line << " (" << bad.id << "): " << bad.violations.front().message << "\n";
    }
    std::cerr << "dataset has " << loaded.invalid.size() << " invalid records\n";
    return kFailure;
  }

  dqa::EvalConfig config;
  config.seed = seed;
  config.jobs = jobs;
  config.swap_judging = swap == "true";
  config.templates = &templates;
  config.tools = &tools;
  config.chunks = chunks ? &*chunks : nullptr;
  config.index = index ? &*index : nullptr;
  config.embedder = &embedder;
  dqa::EvalBackends backends{&model, competitor ? &*competitor : nullptr, judge ? &*judge : nullptr};
  auto report = dqa::run_suite(loaded.dataset, *suite, backends, config);

  auto json = dqa::report_to_json(report).dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << json;
  } else {
    dqa::text::write_file(out_path, json);
    dqa::EvalReport one = report;
    std::cout << dqa::reports_to_markdown(std::span(&one, 1));
  }
  for (const auto& [k, v] : report.counts) std::cerr << k << ": " << v << "\n";
  return report.counts["records"] > 0 && report.counts["errors"] == report.counts["records"] ? kFailure : kOk;
}

int cmd_gen(const std::string& pipeline, const std::string& config_path, const CLI::Option* seed_opt,
            const std::string& seed, const CLI::Option* out_opt, const std::string& out) {
  auto file = dqa::ConfigFile::load(config_path);
  auto job = dqa::job_from_config(file);
  if (auto p = dqa::parse_pipeline(pipeline); !p) {
    throw UsageError("unknown pipeline '" + pipeline + "'");
  } else if (*p != job.pipeline) {
    throw UsageError("--pipeline " + pipeline + " does not match the config's pipeline " +
                     std::string(dqa::to_string(job.pipeline)));
  }
  if (seed_opt->count() > 0) job.seed = to_uint(seed, "--seed");
  if (out_opt->count() > 0) job.output_path = out;

  std::map<std::string, std::string> snapshot{{"pipeline", pipeline},
                                              {"config", config_path},
                                              {"seed", std::to_string(job.seed)},
                                              {"input", job.input_path},
                                              {"output", job.output_path}};
  add_backend(snapshot, "backend", job.backend);
  print_snapshot(snapshot);
  try {
    job.validate();
  } catch (const dqa::DomainError& e) {
    throw UsageError(e.what());
  }
  auto outcome = dqa::run_generation_job(job);
  dqa::text::write_file(job.output_path + ".log.json", outcome.log.dump(2) + "\n");
  std::cout << outcome.dataset.records.size() << " records written to " << job.output_path << "\n";
  return kOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format) {
  print_snapshot({{"in", dqa::text::join(inputs, ", ")}, {"format", format}});
  std::vector<dqa::EvalReport> reports;
  for (const auto& path : inputs) {
    try {
      reports.push_back(dqa::report_from_json(nlohmann::json::parse(dqa::text::read_file(path))));
    } catch (const nlohmann::json::parse_error& e) {
      throw dqa::ParseError(path + ": " + e.what());
    }
  }
  if (format == "md") {
    std::cout << dqa::reports_to_markdown(reports);
  } else {
    auto all = nlohmann::ordered_json::array();
    for (const auto& r : reports) all.push_back(dqa::report_to_json(r));
    std::cout << (all.size() == 1 ? all[0] : all).dump(2) << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Database question answering toolkit: validation, indexing, routing, evaluation, generation"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a JSONL corpus against the record invariants");
  validate->add_option("dataset", validate_path, "Corpus file")->required();

  std::string manual, index_out, chunks_out;
  std::size_t seg_len = dqa::kDefaultSegmentLength, overlap = dqa::kDefaultSegmentOverlap;
  auto* index = app.add_subcommand("index", "Chunk a manual and build a flat vector index");
  index->add_option("--manual", manual, "UTF-8 manual text")->required();
  index->add_option("--out", index_out, "Index file")->required();
  index->add_option("--chunks", chunks_out, "Chunk store (default <out>.chunks.jsonl)");
  index->add_option("--seg-len", seg_len, "Segment length in characters");
  index->add_option("--overlap", overlap, "Overlap in characters");

  std::string question, kind = "rules", cls_backend, endpoint, rules, safety, topic;
  auto* classify = app.add_subcommand("classify", "Route one question to a category");
  classify->add_option("--question", question, "Question text")->required();
  classify->add_option("--kind", kind, "llm_prompt, remote_flat, remote_hierarchical or rules")
      ->check(CLI::IsMember({"llm_prompt", "remote_flat", "remote_hierarchical", "rules"}));
  classify->add_option("--backend", cls_backend, "Backend config for llm_prompt");
  classify->add_option("--endpoint", endpoint, "Classifier service URL for remote_flat");
  classify->add_option("--rules", rules, "Rules file (default: built-in rules)");
  classify->add_option("--safety", safety, "Stage-1 service URL or backend config");
  classify->add_option("--topic", topic, "Stage-2 service URL or backend config");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Run an evaluation suite and write a report");
  eval->add_option("--config", ef.config, "Config file with an [eval] section");
  eval->add_option("--suite", ef.suite, "general_mc, general_subjective, product or instance")
      ->check(CLI::IsMember({"general_mc", "general_subjective", "product", "instance"}));
  eval->add_option("--dataset", ef.dataset, "Corpus file");
  eval->add_option("--model", ef.model, "Backend config of the evaluated model");
  eval->add_option("--judge", ef.judge, "Backend config of the judge");
  eval->add_option("--competitor", ef.competitor, "Backend config of the competitor");
  eval->add_option("--seed", ef.seed, "Base seed");
  eval->add_option("--out", ef.out, "Report JSON path (default: stdout)");
  eval->add_option("--jobs", ef.jobs, "Records evaluated in parallel");
  eval->add_option("--tools", ef.tools, "Tool pool JSON (default: common tools)");
  eval->add_option("--instance", ef.instance, "Instance fixture JSON");
  eval->add_option("--chunks", ef.chunks, "Chunk store for the product suite");
  eval->add_option("--index", ef.index, "Vector index for P@3 in the product suite");
  eval->add_option("--templates", ef.templates, "Template directory");
  eval->add_option("--swap", ef.swap, "Judge both answer orders (true/false)");

  std::string pipeline, gen_config, gen_seed, gen_out;
  auto* gen = app.add_subcommand("gen", "Run a dataset generation pipeline");
  gen->add_option("--pipeline", pipeline, "forum, product or instance")
      ->required()
      ->check(CLI::IsMember({"forum", "product", "instance"}));
  gen->add_option("--config", gen_config, "Job config file")->required();
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Override the job seed");
  auto* gen_out_opt = gen->add_option("--out", gen_out, "Override the output path");

  std::vector<std::string> report_in;
  std::string format = "json";
  auto* report = app.add_subcommand("report", "Render one or more report files");
  report->add_option("--in", report_in, "Report JSON files")->required();
  report->add_option("--format", format, "json or md")->check(CLI::IsMember({"json", "md"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*index) return cmd_index(manual, index_out, chunks_out, seg_len, overlap);
    if (*classify) return cmd_classify(question, kind, cls_backend, endpoint, rules, safety, topic);
    if (*eval) return cmd_eval(ef, *eval);
    if (*gen) return cmd_gen(pipeline, gen_config, gen_seed_opt, gen_seed, gen_out_opt, gen_out);
    if (*report) return cmd_report(report_in, format);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
