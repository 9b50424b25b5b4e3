// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "contextual/attention.hpp"
#include "contextual/corpus.hpp"
#include "contextual/error.hpp"

namespace contextual {

enum class ScoringMode { received, literal };

inline const char* to_string(ScoringMode mode) {
  return mode == ScoringMode::received ? "received" : "literal";
}

inline ScoringMode scoring_mode_from_string(const std::string& name) {
  if (name == "received") return ScoringMode::received;
  if (name == "literal") return ScoringMode::literal;
  throw Error(ErrorKind::invalid_config, "unknown scoring mode: " + name);
}

/// Token-filter knobs: retention ratio r in (0, 1], layer-blend alpha in
/// [0, 1], and the importance direction.
///
/// `literal` scores a token by the mean attention it pays (the row mean),
/// which is constant on row-stochastic input and useless for ranking; it is
/// kept behind this switch for the degeneracy regression test. `received`
/// (default) scores by the mean attention a token receives (column mean).
struct FilterConfig {
  double retention_ratio = 1.0;
  double alpha = 0.5;
  ScoringMode scoring_mode = ScoringMode::received;

  void validate() const {
    if (!(retention_ratio > 0.0 && retention_ratio <= 1.0)) {
      throw Error(ErrorKind::invalid_retention,
                  "retention_ratio must be in (0, 1], got " +
                      std::to_string(retention_ratio));
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw Error(ErrorKind::invalid_alpha,
                  "alpha must be in [0, 1], got " + std::to_string(alpha));
    }
  }
};

/// Per-token importance, index-aligned with the token sequence.
using ImportanceScores = std::vector<double>;

/// The filtered note: retained tokens in original order plus provenance.
struct ReducedNote {
  std::vector<std::string> tokens;
  std::vector<std::size_t> positions;
  std::string source_note_id;
  FilterConfig config;
  std::size_t original_len = 0;
};

/// w_l = alpha + (1 - alpha) * l / L for l = 1..L. Non-decreasing, and the
/// top layer always gets weight 1.
inline std::vector<double> layer_weights(std::int64_t num_layers, double alpha) {
  if (num_layers < 1) {
    throw Error(ErrorKind::invalid_layer_count,
                "layer count must be >= 1, got " + std::to_string(num_layers));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::invalid_alpha,
                "alpha must be in [0, 1], got " + std::to_string(alpha));
  }
  std::vector<double> weights(static_cast<std::size_t>(num_layers));
  for (std::int64_t l = 1; l <= num_layers; ++l) {
    weights[static_cast<std::size_t>(l - 1)] =
        alpha + (1.0 - alpha) * static_cast<double>(l) /
                    static_cast<double>(num_layers);
  }
  return weights;
}

/// Mean over heads of layer `layer` (1-based); row-major n x n in doubles.
inline std::vector<double> average_heads(const AttentionTensor& tensor,
                                         std::size_t layer) {
  if (layer < 1 || layer > tensor.num_layers) {
    throw Error(ErrorKind::layer_out_of_range,
                "layer " + std::to_string(layer) + " not in [1, " +
                    std::to_string(tensor.num_layers) + "]");
  }
  const std::size_t n = tensor.seq_len;
  std::vector<double> mean(n * n, 0.0);
  for (std::size_t h = 0; h < tensor.num_heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        mean[i * n + j] += tensor.at(layer - 1, h, i, j);
      }
    }
  }
  const double inv_heads = 1.0 / static_cast<double>(tensor.num_heads);
  for (double& value : mean) value *= inv_heads;
  return mean;
}

/// I_i = sum_l w_l * (1/n) * sum_j A_l[i][j]   (literal, row mean)
///     = sum_l w_l * (1/n) * sum_j A_l[j][i]   (received, column mean)
inline ImportanceScores compute_importance(const AttentionTensor& tensor,
                                           const FilterConfig& config) {
  config.validate();
  if (tensor.seq_len < 1) {
    throw Error(ErrorKind::shape_mismatch, "tensor has zero sequence length");
  }
  const std::size_t n = tensor.seq_len;
  std::vector<double> weights =
      layer_weights(static_cast<std::int64_t>(tensor.num_layers), config.alpha);
  ImportanceScores scores(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t l = 0; l < tensor.num_layers; ++l) {
    std::vector<double> mean = average_heads(tensor, l + 1);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      if (config.scoring_mode == ScoringMode::literal) {
        for (std::size_t j = 0; j < n; ++j) acc += mean[i * n + j];
      } else {
        for (std::size_t j = 0; j < n; ++j) acc += mean[j * n + i];
      }
      scores[i] += weights[l] * acc * inv_n;
    }
  }
  return scores;
}

/// k = max(1, floor(r * n)); a note never filters down to nothing.
inline std::size_t retained_count(double retention_ratio, std::size_t n) {
  std::size_t k = static_cast<std::size_t>(
      std::floor(retention_ratio * static_cast<double>(n)));
  return std::max<std::size_t>(1, k);
}

/// Picks the k highest-importance tokens (ties go to the smaller original
/// position) and emits them in original order.
inline ReducedNote select_tokens(const ImportanceScores& scores,
                                 const TokenSequence& seq,
                                 const FilterConfig& config,
                                 const std::string& note_id = "") {
  config.validate();
  if (scores.size() != seq.size()) {
    throw Error(ErrorKind::length_mismatch,
                "scores length " + std::to_string(scores.size()) +
                    " != sequence length " + std::to_string(seq.size()));
  }
  const std::size_t n = seq.size();
  if (n == 0) {
    throw Error(ErrorKind::length_mismatch, "cannot select from empty sequence");
  }
  const std::size_t k = retained_count(config.retention_ratio, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<std::size_t> selected(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(selected.begin(), selected.end());

  ReducedNote reduced;
  reduced.source_note_id = note_id;
  reduced.config = config;
  reduced.original_len = n;
  reduced.tokens.reserve(k);
  reduced.positions.reserve(k);
  for (std::size_t idx : selected) {
    reduced.tokens.push_back(seq.tokens[idx]);
    reduced.positions.push_back(seq.positions[idx]);
  }
  return reduced;
}

/// Retained tokens joined by single spaces, original order.
inline std::string reconstruct(const ReducedNote& reduced) {
  return detokenize(reduced.tokens);
}

/// End-to-end filter: importance scoring followed by constrained selection.
inline ReducedNote filter_note(const TokenSequence& seq,
                               const AttentionTensor& tensor,
                               const FilterConfig& config,
                               const std::string& note_id = "") {
  if (tensor.seq_len != seq.size()) {
    throw Error(ErrorKind::shape_mismatch,
                "tensor seq_len " + std::to_string(tensor.seq_len) +
                    " != token count " + std::to_string(seq.size()));
  }
  ImportanceScores scores = compute_importance(tensor, config);
  return select_tokens(scores, seq, config, note_id);
}

}  // namespace contextual
