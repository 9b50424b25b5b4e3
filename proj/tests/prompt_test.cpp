// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#include "contextual/prompt.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace {

using namespace contextual;

TEST(BuildPrompt, ZeroShotGoldenLayout) {
  PromptSpec spec;
  spec.strategy = Strategy::zero_shot;
  spec.instruction = "Summarize.";
  spec.enriched_input = "x";
  EXPECT_EQ(build_prompt(spec), "Summarize.\n\nInput:\nx\nSummary:\n");
}

TEST(BuildPrompt, OneShotEmbedsExample) {
  PromptSpec spec;
  spec.strategy = Strategy::one_shot;
  spec.instruction = "Summarize.";
  spec.examples = {{"i", "example input", "example summary"}};
  spec.enriched_input = "query";
  EXPECT_EQ(build_prompt(spec),
            "Summarize.\n\n"
            "Input:\nexample input\nSummary:\nexample summary\n"
            "Input:\nquery\nSummary:\n");
}

TEST(BuildPrompt, FewShotKeepsExampleOrder) {
  PromptSpec spec;
  spec.strategy = Strategy::few_shot;
  spec.examples = default_examples();
  spec.enriched_input =
      "65-year-old female with severe COPD and 40-pack-year smoking history.\n"
      "Chief Complaint: Acute respiratory distress.";
  std::string prompt = build_prompt(spec);
  std::size_t oncology = prompt.find("metastatic breast cancer");
  std::size_t cardiology = prompt.find("acute myocardial infarction");
  std::size_t query = prompt.find("severe COPD");
  ASSERT_NE(oncology, std::string::npos);
  ASSERT_NE(cardiology, std::string::npos);
  ASSERT_NE(query, std::string::npos);
  EXPECT_LT(oncology, cardiology);
  EXPECT_LT(cardiology, query);
}

TEST(BuildPrompt, StrategyCardinalityEnforced) {
  PromptSpec spec;
  spec.strategy = Strategy::few_shot;
  spec.examples = {{"i", "in", "out"}};  // only one
  spec.enriched_input = "x";
  try {
    build_prompt(spec);
    FAIL() << "expected InvariantViolation";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::invariant_violation);
  }

  spec.strategy = Strategy::zero_shot;
  EXPECT_THROW(build_prompt(spec), Error);

  spec.strategy = Strategy::one_shot;
  spec.examples = {{"i", "a", "b"}, {"i", "c", "d"}};
  EXPECT_THROW(build_prompt(spec), Error);
}

TEST(BuildPrompt, EmptyExampleFieldRejected) {
  PromptSpec spec;
  spec.strategy = Strategy::one_shot;
  spec.examples = {{"", "in", "out"}};
  spec.enriched_input = "x";
  EXPECT_THROW(build_prompt(spec), Error);
}

TEST(BuildPrompt, InjectiveOnInput) {
  PromptSpec spec;
  spec.strategy = Strategy::zero_shot;
  spec.instruction = "Summarize.";
  spec.enriched_input = "alpha";
  std::string a = build_prompt(spec);
  spec.enriched_input = "beta";
  EXPECT_NE(a, build_prompt(spec));
}

TEST(DefaultExamples, TwoBundledExemplars) {
  const auto& examples = default_examples();
  ASSERT_EQ(examples.size(), 2u);
  EXPECT_NE(examples[0].target_summary.find("morphine PCA"), std::string::npos);
  EXPECT_NE(examples[1].target_summary.find("percutaneous coronary intervention"),
            std::string::npos);
  EXPECT_EQ(&examples, &default_examples());  // stable fixture
}

TEST(LoadExamples, FileMatchesBundledDefaults) {
  auto loaded =
      load_examples(testsupport::fixture("exemplars_table7.json").string());
  EXPECT_EQ(loaded, default_examples());
}

TEST(LoadExamples, RejectsMissingFields) {
  auto dir = testsupport::scratch_dir("exemplars_bad");
  write_file((dir / "e.json").string(), R"([{"instruction":"i","input":"x"}])");
  try {
    load_examples((dir / "e.json").string());
    FAIL() << "expected FormatError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::format_error);
  }
}

}  // namespace
