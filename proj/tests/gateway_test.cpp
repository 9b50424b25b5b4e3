// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#include "contextual/gateway.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "test_support.hpp"

namespace {

using namespace contextual;
using testsupport::ScriptedHttpServer;

GenerationConfig quick_config() {
  GenerationConfig cfg;
  cfg.max_tokens = 8;
  cfg.temperature = 0.7;
  cfg.model_name = "test-model";
  return cfg;
}

HttpBackendConfig stub_config(const ScriptedHttpServer& server) {
  HttpBackendConfig cfg;
  cfg.base_url = server.base_url();
  cfg.api_key = "test-key";
  cfg.backoff_initial_seconds = 0.01;
  cfg.timeout_seconds = 5.0;
  return cfg;
}

TEST(Mocks, ExtractiveTakesFirstTokensOfFinalInput) {
  ExtractiveMockBackend backend;
  GenerationConfig cfg = quick_config();
  cfg.max_tokens = 3;
  std::string prompt =
      "Summarize.\n\nInput:\nold example here\nSummary:\nprior\n"
      "Input:\nalpha beta gamma delta epsilon\nSummary:\n";
  Completion completion = backend.complete(prompt, cfg);
  EXPECT_EQ(completion.text, "alpha beta gamma");
}

TEST(Mocks, ExtractiveRespectsMaxTokensExactly) {
  ExtractiveMockBackend backend;
  GenerationConfig cfg = quick_config();
  cfg.max_tokens = 100;
  std::string prompt = "Input:\none two three\nSummary:\n";
  EXPECT_EQ(backend.complete(prompt, cfg).text, "one two three");
  cfg.max_tokens = 2;
  EXPECT_EQ(backend.complete(prompt, cfg).text, "one two");
}

TEST(Mocks, FixedAlwaysReturnsSameText) {
  FixedMockBackend backend("ok");
  GenerationConfig cfg = quick_config();
  EXPECT_EQ(backend.complete("a", cfg).text, "ok");
  EXPECT_EQ(backend.complete("b", cfg).text, "ok");
}

TEST(Mocks, ScriptedConsumesInOrderThenErrors) {
  ScriptedMockBackend backend({"a", "b"});
  GenerationConfig cfg = quick_config();
  EXPECT_EQ(backend.complete("x", cfg).text, "a");
  EXPECT_EQ(backend.complete("x", cfg).text, "b");
  try {
    backend.complete("x", cfg);
    FAIL() << "expected ScriptExhausted";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::script_exhausted);
  }
}

TEST(Mocks, FactoryBuildsEachKind) {
  MockParams params;
  params.fixed_text = "f";
  params.script = {"s"};
  EXPECT_EQ(make_mock(MockKind::extractive, params)->name(), "mock-extractive");
  EXPECT_EQ(make_mock(MockKind::fixed, params)->name(), "mock-fixed");
  EXPECT_EQ(make_mock(MockKind::scripted, params)->name(), "mock-scripted");
}

TEST(Generate, DeterministicWithMock) {
  ExtractiveMockBackend backend;
  GenerationConfig cfg = quick_config();
  std::string prompt = "Input:\nfever and chills today\nSummary:\n";
  SummaryRecord a = generate(prompt, cfg, backend);
  SummaryRecord b = generate(prompt, cfg, backend);
  EXPECT_EQ(a.summary_text, b.summary_text);
  EXPECT_EQ(a.prompt_tokens, b.prompt_tokens);
  EXPECT_EQ(a.prompt, prompt);
  EXPECT_GE(a.latency_seconds, 0.0);
}

TEST(Generate, TokenCountsFromRuleTokenizerForMocks) {
  FixedMockBackend backend("two words");
  GenerationConfig cfg = quick_config();
  std::string prompt = "Input:\na b c\nSummary:\n";
  SummaryRecord rec = generate(prompt, cfg, backend);
  EXPECT_EQ(rec.prompt_tokens, static_cast<int>(tokenize(prompt).size()));
  EXPECT_EQ(rec.completion_tokens, 2);
  EXPECT_FALSE(rec.flagged_empty);
}

TEST(Generate, EmptyCompletionFlagged) {
  FixedMockBackend backend("");
  SummaryRecord rec = generate("Input:\nx\nSummary:\n", quick_config(), backend);
  EXPECT_TRUE(rec.flagged_empty);
  EXPECT_EQ(rec.summary_text, "");
}

TEST(HttpBackend, SendsWellFormedChatCompletionsRequest) {
  ScriptedHttpServer server({{200, ScriptedHttpServer::ok_body("hello")}});
  HttpBackend backend(stub_config(server));
  GenerationConfig cfg = quick_config();
  cfg.max_tokens = 123;
  cfg.temperature = 0.25;
  SummaryRecord rec = generate("the prompt", cfg, backend);
  EXPECT_EQ(rec.summary_text, "hello");
  EXPECT_EQ(rec.prompt_tokens, 12);      // from usage
  EXPECT_EQ(rec.completion_tokens, 7);   // from usage
  ASSERT_EQ(server.request_count(), 1u);
  auto req = server.requests()[0];
  EXPECT_EQ(req.path, "/v1/chat/completions");
  EXPECT_EQ(req.get_header_value("Authorization"), "Bearer test-key");
  nlohmann::json body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["max_tokens"], 123);
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.25);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "the prompt");
}

TEST(HttpBackend, RetriesRateLimitThenSucceeds) {
  ScriptedHttpServer server({{429, "slow down"},
                             {429, "slow down"},
                             {429, "slow down"},
                             {200, ScriptedHttpServer::ok_body("done")}});
  HttpBackend backend(stub_config(server));
  SummaryRecord rec = generate("p", quick_config(), backend);
  EXPECT_EQ(rec.summary_text, "done");
  EXPECT_EQ(rec.retry_count, 3);
  EXPECT_EQ(server.request_count(), 4u);
}

TEST(HttpBackend, RateLimitExhaustedSurfaces) {
  ScriptedHttpServer server({{429, "slow down"}});
  HttpBackend backend(stub_config(server));
  try {
    backend.complete("p", quick_config());
    FAIL() << "expected RateLimited";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::rate_limited);
  }
  EXPECT_EQ(server.request_count(), 4u);  // initial + 3 retries
}

TEST(HttpBackend, ServerErrorRetriedThenSurfaced) {
  ScriptedHttpServer server({{500, "boom"}});
  HttpBackend backend(stub_config(server));
  try {
    backend.complete("p", quick_config());
    FAIL() << "expected HttpStatus";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::http_status);
    EXPECT_EQ(err.detail(), 500);
  }
  EXPECT_EQ(server.request_count(), 4u);
}

TEST(HttpBackend, UnauthorizedSurfacesImmediately) {
  ScriptedHttpServer server({{401, "who are you"}});
  HttpBackend backend(stub_config(server));
  try {
    backend.complete("p", quick_config());
    FAIL() << "expected HttpStatus";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::http_status);
    EXPECT_EQ(err.detail(), 401);
  }
  EXPECT_EQ(server.request_count(), 1u);  // no retries on plain 4xx
}

TEST(HttpBackend, MalformedBodySurfaces) {
  ScriptedHttpServer server({{200, "not json"}});
  HttpBackend backend(stub_config(server));
  try {
    backend.complete("p", quick_config());
    FAIL() << "expected MalformedResponse";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::malformed_response);
  }
}

TEST(HttpBackend, MissingChoicesSurfaces) {
  ScriptedHttpServer server({{200, R"({"object":"chat.completion"})"}});
  HttpBackend backend(stub_config(server));
  EXPECT_THROW(backend.complete("p", quick_config()), Error);
}

TEST(HttpBackend, UnreachableHostSurfaces) {
  HttpBackendConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";  // nothing listens here
  cfg.backoff_initial_seconds = 0.005;
  cfg.timeout_seconds = 1.0;
  HttpBackend backend(cfg);
  try {
    backend.complete("p", quick_config());
    FAIL() << "expected BackendUnreachable";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::backend_unreachable);
  }
}

TEST(Judge, PlainTripleParses) {
  ScriptedMockBackend backend({"5 5 5"});
  JudgeScores scores = judge("ref", "cand", quick_config(), backend);
  EXPECT_EQ(scores.main_ideas, 5);
  EXPECT_EQ(scores.coherence, 5);
  EXPECT_EQ(scores.factuality, 5);
  EXPECT_DOUBLE_EQ(scores.average, 5.0);
}

TEST(Judge, LabeledResponseParses) {
  ScriptedMockBackend backend({"main: 4\ncoherence: 3\nfactuality: 5"});
  JudgeScores scores = judge("ref", "cand", quick_config(), backend);
  EXPECT_EQ(scores.main_ideas, 4);
  EXPECT_EQ(scores.coherence, 3);
  EXPECT_EQ(scores.factuality, 5);
  EXPECT_DOUBLE_EQ(scores.average, 4.0);
}

TEST(Judge, LabelsOutOfOrderParse) {
  ScriptedMockBackend backend({"factuality: 2\nmain ideas: 4\ncoherence: 3"});
  JudgeScores scores = judge("ref", "cand", quick_config(), backend);
  EXPECT_EQ(scores.main_ideas, 4);
  EXPECT_EQ(scores.coherence, 3);
  EXPECT_EQ(scores.factuality, 2);
}

TEST(Judge, ProseWithoutScoresRejected) {
  ScriptedMockBackend backend({"great summary!"});
  try {
    judge("ref", "cand", quick_config(), backend);
    FAIL() << "expected UnparseableJudgeOutput";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::unparseable_judge_output);
    EXPECT_NE(std::string(err.what()).find("great summary!"), std::string::npos);
  }
}

TEST(Judge, EmptyInputsRejected) {
  ScriptedMockBackend backend({"5 5 5"});
  EXPECT_THROW(judge("", "cand", quick_config(), backend), Error);
  EXPECT_THROW(judge("ref", "", quick_config(), backend), Error);
}

TEST(Judge, PromptCarriesBothTexts) {
  // The judge prompt itself contains instruction digits like "1 (poor)" and
  // "5 (excellent)"; the parser must only look at the response.
  ScriptedMockBackend backend({"2 3 4"});
  JudgeScores scores = judge("the reference", "the candidate", quick_config(),
                             backend);
  EXPECT_EQ(scores.main_ideas, 2);
  EXPECT_EQ(scores.coherence, 3);
  EXPECT_EQ(scores.factuality, 4);
}

}  // namespace
