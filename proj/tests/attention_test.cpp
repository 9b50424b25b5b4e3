// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#include "contextual/attention.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "test_support.hpp"

namespace {

using namespace contextual;

TEST(AttentionTensor, ValidJsonLoads) {
  auto dir = testsupport::scratch_dir("attn_json");
  write_file((dir / "t.json").string(),
             R"({"layers":1,"heads":1,"seq_len":2,)"
             R"("weights":[[[[1,0],[0.5,0.5]]]]})");
  AttentionTensor tensor = load_attention((dir / "t.json").string());
  EXPECT_EQ(tensor.num_layers, 1u);
  EXPECT_EQ(tensor.num_heads, 1u);
  EXPECT_EQ(tensor.seq_len, 2u);
  EXPECT_FLOAT_EQ(tensor.at(0, 0, 1, 0), 0.5f);
}

TEST(AttentionTensor, RowSumViolationRejected) {
  auto dir = testsupport::scratch_dir("attn_badrow");
  write_file((dir / "t.json").string(),
             R"({"layers":1,"heads":1,"seq_len":2,)"
             R"("weights":[[[[1,0],[0.5,0.6]]]]})");
  try {
    load_attention((dir / "t.json").string());
    FAIL() << "expected InvariantViolation";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::invariant_violation);
    EXPECT_NE(std::string(err.what()).find("sums to"), std::string::npos);
  }
}

TEST(AttentionTensor, ShapeMismatchRejected) {
  auto dir = testsupport::scratch_dir("attn_badshape");
  write_file((dir / "t.json").string(),
             R"({"layers":2,"heads":1,"seq_len":2,)"
             R"("weights":[[[[1,0],[0.5,0.5]]]]})");
  try {
    load_attention((dir / "t.json").string());
    FAIL() << "expected FormatError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::format_error);
  }
}

TEST(AttentionTensor, BinaryRoundTripIsBitwiseEqual) {
  std::mt19937_64 rng(11);
  AttentionTensor tensor = testsupport::random_tensor(rng, 2, 2, 5);
  auto dir = testsupport::scratch_dir("attn_bin");
  save_attention(tensor, (dir / "t.attn").string(), TensorFormat::binary);
  AttentionTensor loaded = load_attention((dir / "t.attn").string());
  ASSERT_EQ(loaded.weights.size(), tensor.weights.size());
  for (std::size_t i = 0; i < tensor.weights.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(loaded.weights[i]),
              std::bit_cast<std::uint32_t>(tensor.weights[i]));
  }
}

TEST(AttentionTensor, TruncatedBinaryRejected) {
  auto dir = testsupport::scratch_dir("attn_trunc");
  write_file((dir / "t.attn").string(), std::string("ATTN\x01\x00\x00", 7));
  try {
    load_attention((dir / "t.attn").string());
    FAIL() << "expected FormatError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::format_error);
  }
}

TEST(ComputeAttention, SingleTokenIsAllOne) {
  TokenSequence seq = tokenize("fever");
  MiniTransformerConfig cfg{2, 2, 8, 1, true};
  AttentionTensor tensor = compute_attention(seq, cfg);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t h = 0; h < 2; ++h) {
      EXPECT_FLOAT_EQ(tensor.at(l, h, 0, 0), 1.0f);
    }
  }
}

TEST(ComputeAttention, EmptySequenceRejected) {
  TokenSequence seq = tokenize("");
  MiniTransformerConfig cfg;
  try {
    compute_attention(seq, cfg);
    FAIL() << "expected EmptySequence";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::empty_sequence);
  }
}

TEST(ComputeAttention, DeterministicAcrossRuns) {
  TokenSequence seq = testsupport::synthetic_sequence(10);
  MiniTransformerConfig cfg{3, 2, 16, 99, true};
  AttentionTensor a = compute_attention(seq, cfg);
  AttentionTensor b = compute_attention(seq, cfg);
  EXPECT_EQ(a.weights, b.weights);
}

TEST(ComputeAttention, SeedChangesTensor) {
  TokenSequence seq = testsupport::synthetic_sequence(6);
  MiniTransformerConfig a_cfg{2, 2, 16, 1, true};
  MiniTransformerConfig b_cfg{2, 2, 16, 2, true};
  EXPECT_NE(compute_attention(seq, a_cfg).weights,
            compute_attention(seq, b_cfg).weights);
}

TEST(ComputeAttention, RowsStochasticAndNonUniform) {
  TokenSequence seq = testsupport::synthetic_sequence(8);
  MiniTransformerConfig cfg{2, 2, 32, 42, true};
  AttentionTensor tensor = compute_attention(seq, cfg);
  tensor.validate();  // row sums within 1e-5
  float lo = 2.0f, hi = -1.0f;
  for (float w : tensor.weights) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  EXPECT_GT(hi - lo, 1e-3f);
}

TEST(ComputeAttention, CausalMaskZeroesUpperTriangle) {
  TokenSequence seq = testsupport::synthetic_sequence(7);
  MiniTransformerConfig cfg{2, 2, 16, 5, true};
  AttentionTensor tensor = compute_attention(seq, cfg);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = i + 1; j < 7; ++j) {
          EXPECT_EQ(tensor.at(l, h, i, j), 0.0f);
        }
      }
    }
  }
}

TEST(ComputeAttention, NonCausalUsesFullRow) {
  TokenSequence seq = testsupport::synthetic_sequence(5);
  MiniTransformerConfig cfg{1, 1, 8, 3, false};
  AttentionTensor tensor = compute_attention(seq, cfg);
  tensor.validate();
  bool upper_nonzero = false;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) {
      if (tensor.at(0, 0, i, j) > 0.0f) upper_nonzero = true;
    }
  }
  EXPECT_TRUE(upper_nonzero);
}

TEST(ComputeAttention, InvalidConfigRejected) {
  TokenSequence seq = testsupport::synthetic_sequence(3);
  MiniTransformerConfig cfg{1, 3, 8, 0, true};  // 8 % 3 != 0
  try {
    compute_attention(seq, cfg);
    FAIL() << "expected InvalidConfig";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::invalid_config);
  }
}

TEST(ComputeAttention, JsonRoundTripValidates) {
  TokenSequence seq = testsupport::synthetic_sequence(4);
  MiniTransformerConfig cfg{1, 2, 8, 17, true};
  AttentionTensor tensor = compute_attention(seq, cfg);
  auto dir = testsupport::scratch_dir("attn_json_rt");
  save_attention(tensor, (dir / "t.json").string(), TensorFormat::json);
  AttentionTensor loaded = load_attention((dir / "t.json").string());
  EXPECT_EQ(loaded.num_layers, tensor.num_layers);
  EXPECT_EQ(loaded.seq_len, tensor.seq_len);
  for (std::size_t i = 0; i < tensor.weights.size(); ++i) {
    EXPECT_NEAR(loaded.weights[i], tensor.weights[i], 1e-6f);
  }
}

}  // namespace
