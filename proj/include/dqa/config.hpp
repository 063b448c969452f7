#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/datagen.hpp"
#include "dqa/llm_gateway.hpp"

namespace dqa {

/// Flat sectioned key-value file:
///   [section]
///   key = value
/// '#' and ';' start comment lines; values may be double-quoted.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view contents, std::string base_dir = ".");
  static ConfigFile load(const std::string& path);

  std::optional<std::string> get(std::string_view section, std::string_view key) const;
  std::string get_or(std::string_view section, std::string_view key, std::string fallback) const;
  /// Relative values resolve against the file's directory.
  std::optional<std::string> path(std::string_view section, std::string_view key) const;
  std::optional<std::uint64_t> get_uint(std::string_view section, std::string_view key) const;
  std::optional<double> get_double(std::string_view section, std::string_view key) const;
  std::optional<bool> get_bool(std::string_view section, std::string_view key) const;

  bool has_section(std::string_view section) const;
  const std::string& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::map<std::string, std::string>, std::less<>> sections_;
  std::string base_dir_;
};

/// JSONL of {"response": ..., "match": optional substring}.
std::vector<ScriptEntry> load_script(const std::string& path);

/// [backend] keys: kind (scripted|remote), model_name, endpoint_url,
/// timeout_ms, max_retries, backoff_ms, api_key_env, max_in_flight, script.
BackendConfig backend_from_config(const ConfigFile& file, std::string_view section = "backend");
BackendConfig load_backend(const std::string& path);

/// Resolved settings for the config snapshot (never includes secrets).
std::map<std::string, std::string> describe(const BackendConfig& backend);

/// [job] pipeline, seed, input, output, templates, chunks, index, tools,
/// instance, few_shot_questions, answer_cases, backend (file) and
/// [thresholds] dedup, high_upvotes, token_budget, n_max, label,
/// multi_tool_min, questions_per_tool, question_rounds. Without a backend
/// file the [backend] section of the same file is used.
GenerationJob job_from_config(const ConfigFile& file);

}  // namespace dqa
