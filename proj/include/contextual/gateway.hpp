// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdlib>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "contextual/corpus.hpp"
#include "contextual/error.hpp"

namespace contextual {

/// Decoding parameters handed to the backend verbatim. Defaults follow the
/// pipeline's standard setting: 200-token budget at temperature 0.7.
struct GenerationConfig {
  int max_tokens = 200;
  double temperature = 0.7;
  std::string model_name = "mock";
  std::optional<std::int64_t> seed;

  void validate() const {
    if (max_tokens < 1) {
      throw Error(ErrorKind::invalid_config, "max_tokens must be >= 1");
    }
    if (temperature < 0.0) {
      throw Error(ErrorKind::invalid_config, "temperature must be >= 0");
    }
  }
};

/// What a backend returns for one call.
struct Completion {
  std::string text;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  int retries = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const std::string& prompt,
                              const GenerationConfig& cfg) = 0;
  virtual std::string name() const = 0;
};

/// One generated summary with timing. `latency_seconds` covers the backend
/// call only, never prompt construction.
struct SummaryRecord {
  std::string note_id;
  std::string prompt;
  std::string summary_text;
  double latency_seconds = 0.0;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int retry_count = 0;
  bool flagged_empty = false;
};

namespace detail {

inline void sleep_seconds(double seconds) {
  if (seconds <= 0.0) return;
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

/// The text of the prompt's final "Input:" section, i.e. the instance the
/// model is being asked to summarize.
inline std::string final_input_section(const std::string& prompt) {
  const std::string open = "Input:\n";
  std::size_t start = prompt.rfind(open);
  if (start == std::string::npos) return prompt;
  start += open.size();
  std::size_t end = prompt.find("\nSummary:", start);
  if (end == std::string::npos) end = prompt.size();
  return prompt.substr(start, end - start);
}

}  // namespace detail

/// Optional artificial cost model for hermetic efficiency experiments:
/// per-call delay plus a delay proportional to prompt token count.
struct MockCost {
  double fixed_delay_seconds = 0.0;
  double delay_per_prompt_token_seconds = 0.0;

  void apply(const std::string& prompt) const {
    if (fixed_delay_seconds <= 0.0 && delay_per_prompt_token_seconds <= 0.0) {
      return;
    }
    double total = fixed_delay_seconds;
    if (delay_per_prompt_token_seconds > 0.0) {
      total += delay_per_prompt_token_seconds *
               static_cast<double>(tokenize(prompt).size());
    }
    detail::sleep_seconds(total);
  }
};

/// Returns the first max_tokens tokens of the final Input section.
class ExtractiveMockBackend : public Backend {
 public:
  explicit ExtractiveMockBackend(MockCost cost = {}) : cost_(cost) {}

  Completion complete(const std::string& prompt,
                      const GenerationConfig& cfg) override {
    cfg.validate();
    cost_.apply(prompt);
    TokenSequence tokens = tokenize(detail::final_input_section(prompt));
    std::size_t keep =
        std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(cfg.max_tokens));
    std::vector<std::string> head(tokens.tokens.begin(),
                                  tokens.tokens.begin() +
                                      static_cast<std::ptrdiff_t>(keep));
    return {detokenize(head), std::nullopt, std::nullopt, 0};
  }

  std::string name() const override { return "mock-extractive"; }

 private:
  MockCost cost_;
};

/// Always returns the same string.
class FixedMockBackend : public Backend {
 public:
  explicit FixedMockBackend(std::string text, MockCost cost = {})
      : text_(std::move(text)), cost_(cost) {}

  Completion complete(const std::string& prompt,
                      const GenerationConfig& cfg) override {
    cfg.validate();
    cost_.apply(prompt);
    return {text_, std::nullopt, std::nullopt, 0};
  }

  std::string name() const override { return "mock-fixed"; }

 private:
  std::string text_;
  MockCost cost_;
};

/// Consumes a queue of canned responses in order; errors when exhausted.
class ScriptedMockBackend : public Backend {
 public:
  explicit ScriptedMockBackend(std::vector<std::string> script)
      : script_(script.begin(), script.end()) {}

  Completion complete(const std::string&, const GenerationConfig& cfg) override {
    cfg.validate();
    std::lock_guard<std::mutex> lock(mutex_);
    if (script_.empty()) {
      throw Error(ErrorKind::script_exhausted, "scripted mock has no responses left");
    }
    std::string text = std::move(script_.front());
    script_.pop_front();
    return {std::move(text), std::nullopt, std::nullopt, 0};
  }

  std::string name() const override { return "mock-scripted"; }

 private:
  std::mutex mutex_;
  std::deque<std::string> script_;
};

enum class MockKind { extractive, fixed, scripted };

struct MockParams {
  std::string fixed_text = "ok";
  std::vector<std::string> script;
  MockCost cost;
};

inline std::shared_ptr<Backend> make_mock(MockKind kind,
                                          const MockParams& params = {}) {
  switch (kind) {
    case MockKind::extractive:
      return std::make_shared<ExtractiveMockBackend>(params.cost);
    case MockKind::fixed:
      return std::make_shared<FixedMockBackend>(params.fixed_text, params.cost);
    case MockKind::scripted:
      return std::make_shared<ScriptedMockBackend>(params.script);
  }
  throw Error(ErrorKind::invalid_config, "unknown mock kind");
}

/// OpenAI-compatible chat-completions client. Retries connection errors,
/// 429, and 5xx with exponential backoff; other 4xx surface immediately.
struct HttpBackendConfig {
  std::string base_url = "http://localhost:8000";
  std::string api_key;
  int max_retries = 3;
  double backoff_initial_seconds = 0.25;
  double timeout_seconds = 30.0;
};

inline HttpBackendConfig http_config_from_env() {
  HttpBackendConfig cfg;
  if (const char* base = std::getenv("CONTEXTUAL_API_BASE")) {
    if (*base) cfg.base_url = base;
  }
  if (const char* key = std::getenv("CONTEXTUAL_API_KEY")) cfg.api_key = key;
  return cfg;
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg = http_config_from_env())
      : cfg_(std::move(cfg)) {
    split_base_url();
  }

  Completion complete(const std::string& prompt,
                      const GenerationConfig& cfg) override {
    cfg.validate();
    nlohmann::ordered_json body;
    body["model"] = cfg.model_name;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", prompt}}});
    body["max_tokens"] = cfg.max_tokens;
    body["temperature"] = cfg.temperature;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    }

    int attempt = 0;
    while (true) {
      httplib::Client client(host_);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::duration<double>(cfg_.timeout_seconds)));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::duration<double>(cfg_.timeout_seconds)));
      auto res = client.Post(path_.c_str(), headers, payload, "application/json");

      if (!res) {
        bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                         res.error() == httplib::Error::Read ||
                         res.error() == httplib::Error::Write;
        if (attempt < cfg_.max_retries) {
          backoff(attempt++);
          continue;
        }
        if (timed_out) {
          throw Error(ErrorKind::timeout,
                      "no response from " + cfg_.base_url + " after " +
                          std::to_string(attempt + 1) + " attempts");
        }
        throw Error(ErrorKind::backend_unreachable,
                    cfg_.base_url + ": " + httplib::to_string(res.error()));
      }

      if (res->status == 429 || res->status >= 500) {
        if (attempt < cfg_.max_retries) {
          backoff(attempt++);
          continue;
        }
        if (res->status == 429) {
          throw Error(ErrorKind::rate_limited,
                      "still rate limited after " +
                          std::to_string(attempt + 1) + " attempts",
                      res->status);
        }
        throw Error(ErrorKind::http_status,
                    "status " + std::to_string(res->status) + ": " +
                        excerpt(res->body),
                    res->status);
      }
      if (res->status != 200) {
        throw Error(ErrorKind::http_status,
                    "status " + std::to_string(res->status) + ": " +
                        excerpt(res->body),
                    res->status);
      }
      return parse_completion(res->body, attempt);
    }
  }

  std::string name() const override { return "http:" + cfg_.base_url; }

 private:
  void split_base_url() {
    std::string url = cfg_.base_url;
    std::size_t scheme = url.find("://");
    std::size_t path_start =
        url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      host_ = url;
      path_ = "/v1/chat/completions";
    } else {
      host_ = url.substr(0, path_start);
      std::string prefix = url.substr(path_start);
      while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
      path_ = prefix + "/v1/chat/completions";
    }
  }

  void backoff(int attempt) const {
    detail::sleep_seconds(cfg_.backoff_initial_seconds *
                          static_cast<double>(1 << attempt));
  }

  static std::string excerpt(const std::string& body) {
    return body.size() <= 200 ? body : body.substr(0, 200) + "...";
  }

  static Completion parse_completion(const std::string& body, int retries) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& err) {
      throw Error(ErrorKind::malformed_response,
                  std::string(err.what()) + "; body: " + excerpt(body));
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() ||
        !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content")) {
      throw Error(ErrorKind::malformed_response,
                  "missing choices[0].message.content; body: " + excerpt(body));
    }
    Completion completion;
    completion.text = doc["choices"][0]["message"]["content"].get<std::string>();
    completion.retries = retries;
    if (doc.contains("usage") && doc["usage"].is_object()) {
      const auto& usage = doc["usage"];
      if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number()) {
        completion.prompt_tokens = usage["prompt_tokens"].get<int>();
      }
      if (usage.contains("completion_tokens") &&
          usage["completion_tokens"].is_number()) {
        completion.completion_tokens = usage["completion_tokens"].get<int>();
      }
    }
    return completion;
  }

  HttpBackendConfig cfg_;
  std::string host_;
  std::string path_;
};

/// Sends one prompt and times the backend call. Token counts come from the
/// backend when reported, otherwise from the rule tokenizer.
inline SummaryRecord generate(const std::string& prompt,
                              const GenerationConfig& cfg, Backend& backend) {
  cfg.validate();
  SummaryRecord record;
  record.prompt = prompt;
  auto start = std::chrono::steady_clock::now();
  Completion completion = backend.complete(prompt, cfg);
  auto stop = std::chrono::steady_clock::now();
  record.latency_seconds = std::chrono::duration<double>(stop - start).count();
  record.summary_text = std::move(completion.text);
  record.retry_count = completion.retries;
  record.flagged_empty = record.summary_text.empty();
  record.prompt_tokens = completion.prompt_tokens
                             ? *completion.prompt_tokens
                             : static_cast<int>(tokenize(prompt).size());
  record.completion_tokens =
      completion.completion_tokens
          ? *completion.completion_tokens
          : static_cast<int>(tokenize(record.summary_text).size());
  return record;
}

/// 1-5 ratings on the three judging axes.
struct JudgeScores {
  int main_ideas = 0;
  int coherence = 0;
  int factuality = 0;
  double average = 0.0;

  bool operator==(const JudgeScores&) const = default;
};

namespace detail {

inline std::string judge_prompt(const std::string& reference,
                                const std::string& candidate) {
  std::string out =
      "You are evaluating a generated clinical summary against a reference "
      "summary.\nRate the generated summary on each criterion from 1 (poor) "
      "to 5 (excellent).\nRespond with three lines in this exact format:\n"
      "main_ideas: <score>\ncoherence: <score>\nfactuality: <score>\n\n"
      "Reference summary:\n";
  out += reference;
  out += "\n\nGenerated summary:\n";
  out += candidate;
  out += "\n";
  return out;
}

/// All standalone integers in [1, 5], in order of appearance.
inline std::vector<std::pair<std::size_t, int>> scan_scores(
    const std::string& text) {
  std::vector<std::pair<std::size_t, int>> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      if (j - i == 1) {
        int value = text[i] - '0';
        if (value >= 1 && value <= 5) found.emplace_back(i, value);
      }
      i = j;
    } else {
      ++i;
    }
  }
  return found;
}

inline std::optional<int> labeled_score(
    const std::string& lowered,
    const std::vector<std::pair<std::size_t, int>>& scores,
    std::string_view label) {
  std::size_t pos = lowered.find(label);
  if (pos == std::string::npos) return std::nullopt;
  for (const auto& [offset, value] : scores) {
    if (offset > pos) return value;
  }
  return std::nullopt;
}

}  // namespace detail

/// Asks the backend to rate candidate vs. reference and parses the three
/// scores. Tolerates labeled or bare-integer responses; anything without
/// three in-range scores raises UnparseableJudgeOutput with the raw text.
inline JudgeScores judge(const std::string& reference,
                         const std::string& candidate,
                         const GenerationConfig& cfg, Backend& backend) {
  if (reference.empty() || candidate.empty()) {
    throw Error(ErrorKind::empty_input,
                "judge requires non-empty reference and candidate");
  }
  Completion completion =
      backend.complete(detail::judge_prompt(reference, candidate), cfg);
  const std::string& raw = completion.text;
  auto scores = detail::scan_scores(raw);

  std::string lowered;
  lowered.reserve(raw.size());
  for (char c : raw) {
    lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::optional<int> main_ideas = detail::labeled_score(lowered, scores, "main");
  std::optional<int> coherence = detail::labeled_score(lowered, scores, "coheren");
  std::optional<int> factuality = detail::labeled_score(lowered, scores, "factual");

  JudgeScores result;
  if (main_ideas && coherence && factuality) {
    result.main_ideas = *main_ideas;
    result.coherence = *coherence;
    result.factuality = *factuality;
  } else if (scores.size() >= 3) {
    result.main_ideas = scores[0].second;
    result.coherence = scores[1].second;
    result.factuality = scores[2].second;
  } else {
    throw Error(ErrorKind::unparseable_judge_output,
                "could not find three 1-5 scores in: " + raw);
  }
  result.average =
      (result.main_ideas + result.coherence + result.factuality) / 3.0;
  return result;
}

}  // namespace contextual
