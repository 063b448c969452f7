#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/pte.hpp"

namespace dqa {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::vector<std::string> stop_sequences;
};

/// Single user-message request, the shape every prompt in this library uses.
CompletionRequest user_request(std::string prompt, std::vector<std::string> stop = {});

/// Prompt text as seen by script matchers: message contents joined by '\n'.
std::string flatten_prompt(const CompletionRequest& request);

/// Cuts `text` at the earliest occurrence of any stop sequence.
std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stops);

struct ScriptEntry {
  /// When set, the prompt must contain this substring.
  std::optional<std::string> matcher;
  std::string response;
};

/// Ordered canned responses. Consumption is serialized so concurrent callers
/// each take a distinct entry.
class Script {
 public:
  explicit Script(std::vector<ScriptEntry> entries);

  std::string next(std::string_view prompt);
  std::size_t consumed() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<ScriptEntry> entries_;
  mutable std::mutex mutex_;
  std::size_t cursor_ = 0;
};

enum class BackendKind { remote, scripted };

std::string_view to_string(BackendKind k);

/// Bounds concurrent remote requests made through configs that share it.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t max_in_flight)
      : sem_(static_cast<std::ptrdiff_t>(max_in_flight == 0 ? 1 : max_in_flight)) {}
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<> sem_;
};

struct BackendConfig {
  BackendKind kind = BackendKind::scripted;
  std::optional<std::string> endpoint_url;
  std::string model_name = "scripted";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  /// First retry delay; doubles on each further attempt.
  std::chrono::milliseconds backoff{250};
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "DQA_API_KEY";
  std::shared_ptr<Script> script;
  std::shared_ptr<InFlightLimiter> limiter;
};

/// Scripted backend consuming `responses` in order. Throws DomainError on an
/// empty list.
BackendConfig register_script(std::vector<ScriptEntry> responses);
/// Convenience overload without matchers.
BackendConfig register_script(std::vector<std::string> responses);

BackendConfig remote_backend(std::string endpoint_url, std::string model_name,
                             std::size_t max_in_flight = 4);

/// Sends one completion request and returns the assistant text with stop
/// sequences applied. Remote backends retry transport failures, 429 and 5xx
/// up to max_retries times with exponential backoff.
std::string complete(const BackendConfig& backend, const CompletionRequest& request);

/// Outcome of a pairwise comparison from answer A's point of view.
enum class Verdict { win, tie, lose };

std::string_view to_string(Verdict v);
int score(Verdict v);
Verdict reversed(Verdict v);

/// Maps "A" / "B" / "TIE" (case-insensitive, surrounding whitespace and a
/// trailing period ignored). Anything else throws JudgeFormatError.
Verdict parse_verdict(std::string_view judge_output);

/// Built-in templates shared by the judge and classifier helpers.
const TemplateStore& default_templates();

Verdict judge_pair(const BackendConfig& judge, std::string_view question,
                   std::string_view ground_truth, std::string_view answer_a,
                   std::string_view answer_b,
                   const TemplateStore& templates = default_templates());

/// Judges (a, b) and (b, a); agreement yields the verdict, disagreement a tie.
Verdict judge_pair_swapped(const BackendConfig& judge, std::string_view question,
                           std::string_view ground_truth, std::string_view answer_a,
                           std::string_view answer_b,
                           const TemplateStore& templates = default_templates());

/// True iff the judge answers YES. Throws DomainError when the tool has no
/// declared input format and JudgeFormatError on any non YES/NO reply.
bool judge_tool_format(const BackendConfig& judge, std::string_view tool_name,
                       std::string_view input_format, std::string_view action_input,
                       const TemplateStore& templates = default_templates());

}  // namespace dqa
