#include "dqa/llm_gateway.hpp"

#include <cstdlib>
#include <thread>

#include "dqa/error.hpp"
#include "dqa/http.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

std::string complete_remote(const BackendConfig& backend, const CompletionRequest& request) {
  if (!backend.endpoint_url) throw DomainError("remote backend without endpoint_url");

  nlohmann::json body;
  body["model"] = backend.model_name;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

  std::map<std::string, std::string> headers;
  if (const char* key = std::getenv(backend.api_key_env.c_str()); key && *key) {
    headers["Authorization"] = std::string("Bearer ") + key;
  }

  struct Slot {
    InFlightLimiter* limiter;
    explicit Slot(InFlightLimiter* l) : limiter(l) {
      if (limiter) limiter->acquire();
    }
    ~Slot() {
      if (limiter) limiter->release();
    }
  } slot(backend.limiter.get());

  std::string last_error;
  bool last_was_transport = false;
  for (int attempt = 0; attempt <= backend.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(backend.backoff * (1 << (attempt - 1)));
    http::Response res;
    try {
      res = http::post_json(*backend.endpoint_url, body, backend.timeout, headers);
    } catch (const TransportError& e) {
      last_error = e.what();
      last_was_transport = true;
      continue;
    }
    last_was_transport = false;
    if (res.status >= 200 && res.status < 300) {
      try {
        auto j = nlohmann::json::parse(res.body);
        auto content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        return apply_stop_sequences(std::move(content), request.stop_sequences);
      } catch (const nlohmann::json::exception& e) {
        throw ServiceError("malformed chat completion response: " + std::string(e.what()));
      }
    }
    last_error = "HTTP " + std::to_string(res.status);
    const bool transient = res.status == 429 || res.status >= 500;
    if (!transient) break;
  }
  if (last_was_transport) throw TransportError(last_error);
  throw ServiceError("chat completion failed after retries: " + last_error);
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(BackendKind k) { return k == BackendKind::remote ? "remote" : "scripted"; }

CompletionRequest user_request(std::string prompt, std::vector<std::string> stop) {
  CompletionRequest req;
  req.messages.push_back({Role::user, std::move(prompt)});
  req.stop_sequences = std::move(stop);
  return req;
}

std::string flatten_prompt(const CompletionRequest& request) {
  std::string out;
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (i) out += '\n';
    out += request.messages[i].content;
  }
  return out;
}

std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stops) {
  std::size_t cut = std::string::npos;
  for (const auto& s : stops) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  if (cut != std::string::npos) text.resize(cut);
  return text;
}

Script::Script(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {}

std::string Script::next(std::string_view prompt) {
  std::lock_guard lock(mutex_);
  if (cursor_ >= entries_.size()) {
    throw ScriptExhaustedError("script exhausted after " + std::to_string(entries_.size()) +
                               " responses");
  }
  const auto& entry = entries_[cursor_];
  if (entry.matcher && prompt.find(*entry.matcher) == std::string_view::npos) {
    throw ScriptMismatchError("script entry " + std::to_string(cursor_) + " expects \"" +
                              *entry.matcher + "\" in prompt: " + std::string(prompt));
  }
  ++cursor_;
  return entry.response;
}

std::size_t Script::consumed() const {
  std::lock_guard lock(mutex_);
  return cursor_;
}

BackendConfig register_script(std::vector<ScriptEntry> responses) {
  if (responses.empty()) throw DomainError("script must contain at least one response");
  BackendConfig cfg;
  cfg.kind = BackendKind::scripted;
  cfg.model_name = "scripted";
  cfg.script = std::make_shared<Script>(std::move(responses));
  return cfg;
}

BackendConfig register_script(std::vector<std::string> responses) {
  std::vector<ScriptEntry> entries;
  entries.reserve(responses.size());
  for (auto& r : responses) entries.push_back({std::nullopt, std::move(r)});
  return register_script(std::move(entries));
}

BackendConfig remote_backend(std::string endpoint_url, std::string model_name,
                             std::size_t max_in_flight) {
  BackendConfig cfg;
  cfg.kind = BackendKind::remote;
  cfg.endpoint_url = std::move(endpoint_url);
  cfg.model_name = std::move(model_name);
  cfg.limiter = std::make_shared<InFlightLimiter>(max_in_flight);
  return cfg;
}

std::string complete(const BackendConfig& backend, const CompletionRequest& request) {
  if (request.messages.empty()) throw DomainError("completion request without messages");
  for (const auto& m : request.messages) {
    if (m.role != Role::system && m.content.empty()) {
      throw DomainError("empty " + std::string(to_string(m.role)) + " message");
    }
  }
  switch (backend.kind) {
    case BackendKind::scripted: {
      if (!backend.script) throw DomainError("scripted backend without a script");
      return apply_stop_sequences(backend.script->next(flatten_prompt(request)),
                                  request.stop_sequences);
    }
    case BackendKind::remote: return complete_remote(backend, request);
  }
  throw DomainError("unknown backend kind");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::win: return "win";
    case Verdict::tie: return "tie";
    case Verdict::lose: return "lose";
  }
  return "tie";
}

int score(Verdict v) {
  switch (v) {
    case Verdict::win: return 1;
    case Verdict::tie: return 0;
    case Verdict::lose: return -1;
  }
  return 0;
}

Verdict reversed(Verdict v) {
  if (v == Verdict::win) return Verdict::lose;
  if (v == Verdict::lose) return Verdict::win;
  return Verdict::tie;
}

namespace {

std::string normalize_token(std::string_view out) {
  auto t = text::trim(out);
  if (!t.empty() && t.back() == '.') t.remove_suffix(1);
  return text::to_upper_ascii(text::trim(t));
}

}  // namespace

Verdict parse_verdict(std::string_view judge_output) {
  auto token = normalize_token(judge_output);
  if (token == "A") return Verdict::win;
  if (token == "B") return Verdict::lose;
  if (token == "TIE") return Verdict::tie;
  throw JudgeFormatError("judge output is not one of A, B, TIE: \"" + std::string(judge_output) + "\"");
}

const TemplateStore& default_templates() {
  static const TemplateStore store = TemplateStore::builtin();
  return store;
}

Verdict judge_pair(const BackendConfig& judge, std::string_view question,
                   std::string_view ground_truth, std::string_view answer_a,
                   std::string_view answer_b, const TemplateStore& templates) {
  if (question.empty() || ground_truth.empty() || answer_a.empty() || answer_b.empty()) {
    throw DomainError("judge_pair requires non-empty question, ground truth and answers");
  }
  auto prompt = templates.render(prompts::kJudgePair, {{"QUESTION", std::string(question)},
                                                       {"GROUND_TRUTH", std::string(ground_truth)},
                                                       {"ANSWER_A", std::string(answer_a)},
                                                       {"ANSWER_B", std::string(answer_b)}});
  auto req = user_request(std::move(prompt));
  req.max_tokens = 8;
  return parse_verdict(complete(judge, req));
}

Verdict judge_pair_swapped(const BackendConfig& judge, std::string_view question,
                           std::string_view ground_truth, std::string_view answer_a,
                           std::string_view answer_b, const TemplateStore& templates) {
  auto first = judge_pair(judge, question, ground_truth, answer_a, answer_b, templates);
  auto second = reversed(judge_pair(judge, question, ground_truth, answer_b, answer_a, templates));
  return first == second ? first : Verdict::tie;
}

bool judge_tool_format(const BackendConfig& judge, std::string_view tool_name,
                       std::string_view input_format, std::string_view action_input,
                       const TemplateStore& templates) {
  if (text::trim(input_format).empty()) {
    throw DomainError("tool '" + std::string(tool_name) + "' declares no input format");
  }
  auto prompt = templates.render(prompts::kJudgeToolFormat,
                                 {{"TOOL_NAME", std::string(tool_name)},
                                  {"TOOL_FORMAT", std::string(input_format)},
                                  {"ACTION_INPUT", std::string(action_input)}});
  auto req = user_request(std::move(prompt));
  req.max_tokens = 8;
  auto token = normalize_token(complete(judge, req));
  if (token == "YES") return true;
  if (token == "NO") return false;
  throw JudgeFormatError("tool-format judge output is not YES or NO: \"" + token + "\"");
}

}  // namespace dqa
