#include "dqa/config.hpp"

#include <charconv>
#include <filesystem>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dqa/error.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

std::string unquote(std::string_view v) {
  auto t = text::trim(v);
  if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') || (t.front() == '\'' && t.back() == '\''))) {
    t = t.substr(1, t.size() - 2);
  }
  return std::string(t);
}

std::string resolve(const std::string& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_absolute() || base.empty()) return value;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view contents, std::string base_dir) {
  // Comments after '#' are not understood by the ini parser.
  std::string cleaned;
  for (const auto& line : text::split_lines(contents)) {
    auto t = text::trim(line);
    if (!t.empty() && t.front() == '#') continue;
    cleaned += line;
    cleaned += '\n';
  }
  boost::property_tree::ptree tree;
  std::istringstream in(cleaned);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ConfigFile cfg;
  cfg.base_dir_ = std::move(base_dir);
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      cfg.sections_[""][section] = unquote(body.data());
      continue;
    }
    for (const auto& [key, value] : body) cfg.sections_[section][key] = unquote(value.data());
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse(text::read_file(path), dir.empty() ? "." : dir);
}

std::optional<std::string> ConfigFile::get(std::string_view section, std::string_view key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(std::string(key));
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string ConfigFile::get_or(std::string_view section, std::string_view key, std::string fallback) const {
  return get(section, key).value_or(std::move(fallback));
}

std::optional<std::string> ConfigFile::path(std::string_view section, std::string_view key) const {
  auto v = get(section, key);
  if (!v || v->empty()) return v;
  return resolve(base_dir_, *v);
}

std::optional<std::uint64_t> ConfigFile::get_uint(std::string_view section, std::string_view key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ParseError("config: " + std::string(section) + "." + std::string(key) + " is not an unsigned integer");
  }
  return out;
}

std::optional<double> ConfigFile::get_double(std::string_view section, std::string_view key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw ParseError("config: " + std::string(section) + "." + std::string(key) + " is not a number");
}

std::optional<bool> ConfigFile::get_bool(std::string_view section, std::string_view key) const {
  auto v = get(section, key);
  if (!v) return std::nullopt;
  auto t = text::to_lower_ascii(*v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError("config: " + std::string(section) + "." + std::string(key) + " is not a boolean");
}

bool ConfigFile::has_section(std::string_view section) const { return sections_.find(section) != sections_.end(); }

std::vector<ScriptEntry> load_script(const std::string& path) {
  std::vector<ScriptEntry> entries;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(text::read_file(path))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ScriptEntry e;
      e.response = j.at("response").get<std::string>();
      if (j.contains("match")) e.matcher = j["match"].get<std::string>();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

BackendConfig backend_from_config(const ConfigFile& file, std::string_view section) {
  if (!file.has_section(section)) throw ParseError("config: missing [" + std::string(section) + "] section");
  auto kind = file.get_or(section, "kind", "scripted");
  BackendConfig cfg;
  if (kind == "scripted") {
    auto script = file.path(section, "script");
    if (!script || script->empty()) throw ParseError("config: scripted backend needs a script file");
    cfg = register_script(load_script(*script));
  } else if (kind == "remote") {
    auto url = file.get(section, "endpoint_url");
    if (!url || url->empty()) throw ParseError("config: remote backend needs endpoint_url");
    cfg = remote_backend(*url, file.get_or(section, "model_name", "default"),
                         file.get_uint(section, "max_in_flight").value_or(4));
  } else {
    throw ParseError("config: unknown backend kind '" + kind + "'");
  }
  if (auto v = file.get(section, "model_name")) cfg.model_name = *v;
  if (auto v = file.get_uint(section, "timeout_ms")) cfg.timeout = std::chrono::milliseconds(*v);
  if (auto v = file.get_uint(section, "max_retries")) cfg.max_retries = static_cast<int>(*v);
  if (auto v = file.get_uint(section, "backoff_ms")) cfg.backoff = std::chrono::milliseconds(*v);
  if (auto v = file.get(section, "api_key_env")) cfg.api_key_env = *v;
  return cfg;
}

BackendConfig load_backend(const std::string& path) { return backend_from_config(ConfigFile::load(path)); }

std::map<std::string, std::string> describe(const BackendConfig& b) {
  std::map<std::string, std::string> out{{"kind", std::string(to_string(b.kind))}, {"model_name", b.model_name}};
  if (b.kind == BackendKind::remote) {
    out["endpoint_url"] = b.endpoint_url.value_or("");
    out["timeout_ms"] = std::to_string(b.timeout.count());
    out["max_retries"] = std::to_string(b.max_retries);
    out["api_key_env"] = b.api_key_env;
  } else if (b.script) {
    out["script_entries"] = std::to_string(b.script->size());
  }
  return out;
}

GenerationJob job_from_config(const ConfigFile& file) {
  GenerationJob job;
  auto pipeline = file.get_or("job", "pipeline", "");
  auto parsed = parse_pipeline(pipeline);
  if (!parsed) throw ParseError("config: unknown pipeline '" + pipeline + "'");
  job.pipeline = *parsed;
  if (auto backend = file.path("job", "backend")) {
    job.backend = load_backend(*backend);
  } else {
    job.backend = backend_from_config(file);
  }
  job.seed = file.get_uint("job", "seed").value_or(0);
  job.input_path = file.path("job", "input").value_or("");
  job.output_path = file.path("job", "output").value_or("");
  job.templates_dir = file.path("job", "templates").value_or("");
  job.chunks_path = file.path("job", "chunks").value_or("");
  job.index_path = file.path("job", "index").value_or("");
  job.tools_path = file.path("job", "tools").value_or("");
  job.instance_path = file.path("job", "instance").value_or("");
  job.few_shot_questions_path = file.path("job", "few_shot_questions").value_or("");
  job.answer_cases_path = file.path("job", "answer_cases").value_or("");

  if (auto v = file.get_double("thresholds", "dedup")) job.dedup_threshold = *v;
  if (auto v = file.get_uint("thresholds", "high_upvotes")) job.high_upvotes = static_cast<int>(*v);
  if (auto v = file.get_uint("thresholds", "token_budget")) job.token_budget = *v;
  if (auto v = file.get_uint("thresholds", "n_max")) job.n_max = *v;
  if (auto v = file.get_double("thresholds", "label")) job.label_threshold = *v;
  if (auto v = file.get_double("thresholds", "multi_tool_min")) job.multi_tool_min = *v;
  if (auto v = file.get_uint("thresholds", "questions_per_tool")) job.questions_per_tool = *v;
  if (auto v = file.get_uint("thresholds", "question_rounds")) job.question_rounds = *v;
  return job;
}

}  // namespace dqa
