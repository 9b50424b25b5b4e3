// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contextual/corpus.hpp"
#include "contextual/error.hpp"
#include "contextual/io.hpp"
#include "contextual/rng.hpp"

namespace contextual {

/// Per-layer, per-head attention weights, shape L x H x n x n, row-major.
/// Every (layer, head, row) slice is a probability distribution over keys.
struct AttentionTensor {
  std::size_t num_layers = 0;
  std::size_t num_heads = 0;
  std::size_t seq_len = 0;
  std::vector<float> weights;  // [layer][head][row][col]

  std::size_t index(std::size_t l, std::size_t h, std::size_t i,
                    std::size_t j) const {
    return ((l * num_heads + h) * seq_len + i) * seq_len + j;
  }
  float at(std::size_t l, std::size_t h, std::size_t i, std::size_t j) const {
    return weights[index(l, h, i, j)];
  }

  static constexpr double kRowSumTolerance = 1e-5;

  void validate() const {
    if (num_layers < 1 || num_heads < 1 || seq_len < 1) {
      throw Error(ErrorKind::format_error, "tensor dimensions must be >= 1");
    }
    if (weights.size() != num_layers * num_heads * seq_len * seq_len) {
      throw Error(ErrorKind::format_error, "weight count does not match shape");
    }
    for (std::size_t l = 0; l < num_layers; ++l) {
      for (std::size_t h = 0; h < num_heads; ++h) {
        for (std::size_t i = 0; i < seq_len; ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < seq_len; ++j) {
            float w = at(l, h, i, j);
            if (!(w >= 0.0f && w <= 1.0f)) {
              throw Error(ErrorKind::invariant_violation,
                          "entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") of layer " +
                              std::to_string(l) + ", head " +
                              std::to_string(h) + " is outside [0, 1]");
            }
            sum += w;
          }
          if (std::abs(sum - 1.0) > kRowSumTolerance) {
            throw Error(ErrorKind::invariant_violation,
                        "row " + std::to_string(i) + " of layer " +
                            std::to_string(l) + ", head " +
                            std::to_string(h) + " sums to " +
                            std::to_string(sum));
          }
        }
      }
    }
  }
};

namespace detail {

inline constexpr char kAttnMagic[4] = {'A', 'T', 'T', 'N'};

inline void put_u32le(std::string& out, std::uint32_t value) {
  out.push_back(static_cast<char>(value & 0xFF));
  out.push_back(static_cast<char>((value >> 8) & 0xFF));
  out.push_back(static_cast<char>((value >> 16) & 0xFF));
  out.push_back(static_cast<char>((value >> 24) & 0xFF));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

enum class TensorFormat { json, binary };

inline void save_attention(const AttentionTensor& tensor,
                           const std::string& path,
                           TensorFormat format = TensorFormat::binary) {
  if (format == TensorFormat::binary) {
    std::string out;
    out.reserve(16 + tensor.weights.size() * 4);
    out.append(detail::kAttnMagic, 4);
    detail::put_u32le(out, static_cast<std::uint32_t>(tensor.num_layers));
    detail::put_u32le(out, static_cast<std::uint32_t>(tensor.num_heads));
    detail::put_u32le(out, static_cast<std::uint32_t>(tensor.seq_len));
    for (float w : tensor.weights) {
      std::uint32_t bits;
      std::memcpy(&bits, &w, 4);
      detail::put_u32le(out, bits);
    }
    write_file(path, out);
    return;
  }
  ordered_json doc;
  doc["layers"] = tensor.num_layers;
  doc["heads"] = tensor.num_heads;
  doc["seq_len"] = tensor.seq_len;
  ordered_json layers = ordered_json::array();
  for (std::size_t l = 0; l < tensor.num_layers; ++l) {
    ordered_json heads = ordered_json::array();
    for (std::size_t h = 0; h < tensor.num_heads; ++h) {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < tensor.seq_len; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < tensor.seq_len; ++j) {
          row.push_back(tensor.at(l, h, i, j));
        }
        rows.push_back(std::move(row));
      }
      heads.push_back(std::move(rows));
    }
    layers.push_back(std::move(heads));
  }
  doc["weights"] = std::move(layers);
  write_file(path, doc.dump());
}

/// Loads either format; binary files start with the "ATTN" magic. The loaded
/// tensor is validated, so a malformed or non-stochastic file never escapes.
inline AttentionTensor load_attention(const std::string& path) {
  std::string contents = read_file(path);
  AttentionTensor tensor;
  if (contents.size() >= 4 &&
      std::memcmp(contents.data(), detail::kAttnMagic, 4) == 0) {
    if (contents.size() < 16) {
      throw Error(ErrorKind::format_error, "binary tensor truncated header");
    }
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(contents.data());
    tensor.num_layers = detail::get_u32le(p + 4);
    tensor.num_heads = detail::get_u32le(p + 8);
    tensor.seq_len = detail::get_u32le(p + 12);
    std::size_t count =
        tensor.num_layers * tensor.num_heads * tensor.seq_len * tensor.seq_len;
    if (contents.size() != 16 + count * 4) {
      throw Error(ErrorKind::format_error,
                  "binary tensor payload size does not match header");
    }
    tensor.weights.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = detail::get_u32le(p + 16 + i * 4);
      std::memcpy(&tensor.weights[i], &bits, 4);
    }
  } else {
    ordered_json doc;
    try {
      doc = ordered_json::parse(contents);
    } catch (const ordered_json::exception& err) {
      throw Error(ErrorKind::format_error, err.what());
    }
    if (!doc.is_object() || !doc.contains("layers") || !doc.contains("heads") ||
        !doc.contains("seq_len") || !doc.contains("weights")) {
      throw Error(ErrorKind::format_error,
                  "tensor JSON must have layers/heads/seq_len/weights");
    }
    tensor.num_layers = doc["layers"].get<std::size_t>();
    tensor.num_heads = doc["heads"].get<std::size_t>();
    tensor.seq_len = doc["seq_len"].get<std::size_t>();
    const auto& layers = doc["weights"];
    if (!layers.is_array() || layers.size() != tensor.num_layers) {
      throw Error(ErrorKind::format_error, "weights layer count mismatch");
    }
    tensor.weights.reserve(tensor.num_layers * tensor.num_heads *
                           tensor.seq_len * tensor.seq_len);
    for (const auto& heads : layers) {
      if (!heads.is_array() || heads.size() != tensor.num_heads) {
        throw Error(ErrorKind::format_error, "weights head count mismatch");
      }
      for (const auto& rows : heads) {
        if (!rows.is_array() || rows.size() != tensor.seq_len) {
          throw Error(ErrorKind::format_error, "weights row count mismatch");
        }
        for (const auto& row : rows) {
          if (!row.is_array() || row.size() != tensor.seq_len) {
            throw Error(ErrorKind::format_error, "weights column count mismatch");
          }
          for (const auto& value : row) {
            if (!value.is_number()) {
              throw Error(ErrorKind::format_error, "weight is not a number");
            }
            tensor.weights.push_back(value.get<float>());
          }
        }
      }
    }
  }
  tensor.validate();
  return tensor;
}

/// Configuration of the built-in deterministic miniature transformer used
/// when no externally extracted attention is supplied.
struct MiniTransformerConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t model_dim = 32;
  std::uint64_t seed = 42;
  bool causal = true;

  void validate() const {
    if (num_layers < 1 || num_heads < 1 || model_dim < 1) {
      throw Error(ErrorKind::invalid_config,
                  "mini-transformer dimensions must be >= 1");
    }
    if (model_dim % num_heads != 0) {
      throw Error(ErrorKind::invalid_config,
                  "model_dim must be divisible by num_heads");
    }
  }
};

namespace detail {

// Projection weights are pseudorandom per (seed, layer, head, projection),
// scaled by 1/sqrt(model_dim) to keep logits at a sane magnitude.
inline std::vector<double> projection_matrix(const MiniTransformerConfig& cfg,
                                             std::size_t layer, std::size_t head,
                                             std::size_t which,
                                             std::size_t head_dim) {
  KeyedStream stream({cfg.seed, 0x57A77ULL, layer, head, which});
  std::vector<double> w(cfg.model_dim * head_dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
  for (double& value : w) value = stream.next_pm1() * scale;
  return w;
}

}  // namespace detail

/// Runs the miniature transformer over `seq` and returns every layer's
/// per-head attention matrix. Pure function of (seq, cfg): embeddings are
/// keyed by (seed, vocab_id, position), and all arithmetic is double
/// precision before the float snapshot.
inline AttentionTensor compute_attention(const TokenSequence& seq,
                                         const MiniTransformerConfig& cfg) {
  cfg.validate();
  const std::size_t n = seq.size();
  if (n == 0) throw Error(ErrorKind::empty_sequence, "no tokens to attend over");
  const std::size_t dim = cfg.model_dim;
  const std::size_t head_dim = dim / cfg.num_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<double> x(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    KeyedStream stream({cfg.seed, 0xE3B0ULL, seq.vocab_ids[i],
                        static_cast<std::uint64_t>(seq.positions[i])});
    for (std::size_t c = 0; c < dim; ++c) x[i * dim + c] = stream.next_pm1();
  }

  AttentionTensor tensor;
  tensor.num_layers = cfg.num_layers;
  tensor.num_heads = cfg.num_heads;
  tensor.seq_len = n;
  tensor.weights.assign(cfg.num_layers * cfg.num_heads * n * n, 0.0f);

  std::vector<double> next(n * dim);
  std::vector<double> q(n * head_dim), k(n * head_dim), v(n * head_dim);
  std::vector<double> attn(n * n);

  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      auto wq = detail::projection_matrix(cfg, l, h, 0, head_dim);
      auto wk = detail::projection_matrix(cfg, l, h, 1, head_dim);
      auto wv = detail::projection_matrix(cfg, l, h, 2, head_dim);
      auto project = [&](const std::vector<double>& w, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < head_dim; ++c) {
            double acc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
              acc += x[i * dim + d] * w[d * head_dim + c];
            }
            out[i * head_dim + c] = acc;
          }
        }
      };
      project(wq, q);
      project(wk, k);
      project(wv, v);

      for (std::size_t i = 0; i < n; ++i) {
        std::size_t limit = cfg.causal ? i + 1 : n;
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < limit; ++j) {
          double logit = 0.0;
          for (std::size_t c = 0; c < head_dim; ++c) {
            logit += q[i * head_dim + c] * k[j * head_dim + c];
          }
          logit *= inv_sqrt_dh;
          attn[i * n + j] = logit;
          if (logit > max_logit) max_logit = logit;
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < limit; ++j) {
          attn[i * n + j] = std::exp(attn[i * n + j] - max_logit);
          denom += attn[i * n + j];
        }
        for (std::size_t j = 0; j < limit; ++j) {
          attn[i * n + j] /= denom;
        }
        for (std::size_t j = limit; j < n; ++j) attn[i * n + j] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          tensor.weights[tensor.index(l, h, i, j)] =
              static_cast<float>(attn[i * n + j]);
        }
        // Head output feeds the next layer's input slice.
        for (std::size_t c = 0; c < head_dim; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < limit; ++j) {
            acc += attn[i * n + j] * v[j * head_dim + c];
          }
          next[i * dim + h * head_dim + c] = acc;
        }
      }
    }
    x = next;
  }
  return tensor;
}

}  // namespace contextual
