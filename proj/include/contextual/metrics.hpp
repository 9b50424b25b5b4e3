// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contextual/corpus.hpp"
#include "contextual/error.hpp"
#include "contextual/gateway.hpp"
#include "contextual/rng.hpp"

namespace contextual {

using Tokens = std::vector<std::string>;

/// Metric-side tokenization: the rule tokenizer, lowercased.
inline Tokens metric_tokens(std::string_view text) {
  TokenSequence seq = tokenize(text);
  for (std::string& token : seq.tokens) {
    for (char& c : token) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return std::move(seq.tokens);
}

namespace detail {

inline constexpr double kBleuEpsilon = 1e-9;

inline std::map<std::string, int> ngram_counts(const Tokens& tokens, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + static_cast<std::size_t>(j)];
    }
    counts[key]++;
  }
  return counts;
}

}  // namespace detail

/// Sentence-level BLEU-n: modified n-gram precision with clipping times the
/// brevity penalty min(1, exp(1 - r/c)), r = closest reference length.
/// Zero-match precision is smoothed to 1e-9 so scores stay reproducible.
inline double bleu_n(const Tokens& candidate,
                     const std::vector<Tokens>& references, int n) {
  if (n < 1 || n > 2) {
    throw Error(ErrorKind::invalid_argument, "bleu_n supports n in {1, 2}");
  }
  if (references.empty()) {
    throw Error(ErrorKind::empty_references, "bleu_n needs >= 1 reference");
  }
  if (candidate.empty()) return 0.0;

  const std::size_t c = candidate.size();
  std::size_t r = references[0].size();
  for (const Tokens& ref : references) {
    std::size_t diff_new = ref.size() > c ? ref.size() - c : c - ref.size();
    std::size_t diff_old = r > c ? r - c : c - r;
    if (diff_new < diff_old || (diff_new == diff_old && ref.size() < r)) {
      r = ref.size();
    }
  }

  std::map<std::string, int> cand_counts = detail::ngram_counts(candidate, n);
  std::map<std::string, int> max_ref_counts;
  for (const Tokens& ref : references) {
    for (const auto& [gram, count] : detail::ngram_counts(ref, n)) {
      max_ref_counts[gram] = std::max(max_ref_counts[gram], count);
    }
  }
  long long total = 0;
  long long clipped = 0;
  for (const auto& [gram, count] : cand_counts) {
    total += count;
    auto it = max_ref_counts.find(gram);
    if (it != max_ref_counts.end()) clipped += std::min(count, it->second);
  }
  if (total == 0) return 0.0;
  double precision = static_cast<double>(clipped) / static_cast<double>(total);
  if (precision == 0.0) precision = detail::kBleuEpsilon;
  double brevity = 1.0;
  if (c < r) {
    brevity = std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  }
  return precision * brevity;
}

namespace detail {

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

}  // namespace detail

/// ROUGE-L as a balanced F-measure (beta = 1) over the LCS.
inline double rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  std::size_t lcs = detail::lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  double precision = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  double recall = static_cast<double>(lcs) / static_cast<double>(reference.size());
  return 2.0 * precision * recall / (precision + recall);
}

/// Token -> vector provider for the embedding-based metrics.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& token) const = 0;
};

/// Hermetic default: pseudorandom unit vectors keyed by the token's stable
/// vocab id. No model files, identical across platforms.
class HashedEmbedder : public Embedder {
 public:
  explicit HashedEmbedder(std::size_t dim = 64, std::uint64_t seed = 0x5EEDULL)
      : dim_(dim), seed_(seed) {}

  std::vector<double> embed(const std::string& token) const override {
    KeyedStream stream({seed_, stable_vocab_id(token)});
    std::vector<double> vec(dim_);
    double norm_sq = 0.0;
    for (double& value : vec) {
      value = stream.next_pm1();
      norm_sq += value * value;
    }
    if (norm_sq > 0.0) {
      double inv = 1.0 / std::sqrt(norm_sq);
      for (double& value : vec) value *= inv;
    }
    return vec;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// File-backed provider (JSON object token -> [floats]) so externally
/// computed encoder embeddings can be dropped in. Unknown tokens fall back
/// to the hashed provider, keeping the embedder total.
class FileEmbedder : public Embedder {
 public:
  FileEmbedder(const std::string& path, std::size_t fallback_dim = 64,
               std::uint64_t fallback_seed = 0x5EEDULL)
      : fallback_(fallback_dim, fallback_seed) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& err) {
      throw Error(ErrorKind::format_error, err.what());
    }
    if (!doc.is_object()) {
      throw Error(ErrorKind::format_error, "embedding file must be a JSON object");
    }
    for (const auto& item : doc.items()) {
      if (!item.value().is_array()) {
        throw Error(ErrorKind::format_error,
                    "embedding for " + item.key() + " must be an array");
      }
      vectors_[item.key()] = item.value().get<std::vector<double>>();
    }
  }

  std::vector<double> embed(const std::string& token) const override {
    auto it = vectors_.find(token);
    if (it != vectors_.end()) return it->second;
    return fallback_.embed(token);
  }

 private:
  std::map<std::string, std::vector<double>> vectors_;
  HashedEmbedder fallback_;
};

namespace detail {

// cosine via dot(u,v) / sqrt(dot(u,u) * dot(v,v)); identical vectors give
// exactly 1.0 (sqrt(x*x) == x in round-to-nearest).
inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double uv = 0.0, uu = 0.0, vv = 0.0;
  std::size_t n = std::min(u.size(), v.size());
  for (std::size_t i = 0; i < n; ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  double denom = std::sqrt(uu * vv);
  if (denom == 0.0) return 0.0;
  return uv / denom;
}

inline std::vector<std::vector<double>> embed_all(const Tokens& tokens,
                                                  const Embedder& embedder) {
  std::map<std::string, std::vector<double>> cache;
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const std::string& token : tokens) {
    auto it = cache.find(token);
    if (it == cache.end()) {
      it = cache.emplace(token, embedder.embed(token)).first;
    }
    out.push_back(it->second);
  }
  return out;
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace detail

struct EmbedScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy max-cosine matching over token embeddings; raw cosines are mapped
/// to [0, 1] by (1 + x) / 2 before the harmonic mean. Identity inputs score
/// exactly 1.0; orthogonal one-token texts score 0.5.
inline EmbedScore embed_score(const Tokens& candidate, const Tokens& reference,
                              const Embedder& embedder) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorKind::empty_input, "embed_score needs non-empty inputs");
  }
  auto cand_vecs = detail::embed_all(candidate, embedder);
  auto ref_vecs = detail::embed_all(reference, embedder);

  auto greedy = [](const std::vector<std::vector<double>>& from,
                   const std::vector<std::vector<double>>& to) {
    double sum = 0.0;
    for (const auto& u : from) {
      double best = -1.0;
      for (const auto& v : to) best = std::max(best, detail::cosine(u, v));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };

  EmbedScore score;
  score.precision = detail::clamp01((1.0 + greedy(cand_vecs, ref_vecs)) / 2.0);
  score.recall = detail::clamp01((1.0 + greedy(ref_vecs, cand_vecs)) / 2.0);
  double denom = score.precision + score.recall;
  score.f1 = denom == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / denom;
  return score;
}

/// Cosine of mean-pooled token embeddings; reports how much of the original
/// representation the reduced text retains.
inline double similarity(const Tokens& original, const Tokens& reduced,
                         const Embedder& embedder) {
  if (original.empty() || reduced.empty()) {
    throw Error(ErrorKind::empty_input, "similarity needs non-empty inputs");
  }
  auto pool = [&](const Tokens& tokens) {
    auto vecs = detail::embed_all(tokens, embedder);
    std::vector<double> mean(vecs[0].size(), 0.0);
    for (const auto& vec : vecs) {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += vec[i];
    }
    for (double& value : mean) value /= static_cast<double>(vecs.size());
    return mean;
  };
  return detail::cosine(pool(original), pool(reduced));
}

/// Per-note metric row.
struct NoteMetrics {
  std::string note_id;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double rouge_l = 0.0;
  double embed_p = 0.0;
  double embed_r = 0.0;
  double embed_f1 = 0.0;
  std::optional<JudgeScores> judge;
};

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Corpus-level report: per-note rows plus mean / population-std for every
/// metric. `notes` carries the pinned-variant documentation that heads every
/// serialized report.
struct MetricReport {
  std::vector<NoteMetrics> per_note;
  MetricStat bleu1, bleu2, rouge_l, embed_p, embed_r, embed_f1;
  std::optional<MetricStat> judge_main_ideas, judge_coherence, judge_factuality,
      judge_average;
  std::vector<std::string> notes;
};

inline const std::vector<std::string>& metric_variant_notes() {
  static const std::vector<std::string> kNotes = {
      "BLEU: sentence-level per-n modified precision with clipping, brevity "
      "penalty min(1, exp(1 - r/c)), add-epsilon (1e-9) smoothing on zero "
      "matches",
      "ROUGE-L: LCS F-measure with beta = 1",
      "embed_p/embed_r/embed_f1: greedy cosine matching over pluggable token "
      "embeddings, affine-mapped (1 + cos) / 2; not comparable to scores from "
      "a pretrained encoder",
      "metric tokenization: rule-based tokenizer, lowercased",
  };
  return kNotes;
}

namespace detail {

inline MetricStat stat_of(const std::vector<double>& values) {
  MetricStat stat;
  if (values.empty()) return stat;
  double sum = 0.0;
  for (double v : values) sum += v;
  stat.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - stat.mean) * (v - stat.mean);
  stat.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return stat;
}

}  // namespace detail

/// Population mean/std over the rows; permutation-invariant.
inline MetricReport aggregate(std::vector<NoteMetrics> per_note) {
  MetricReport report;
  auto column = [&](auto getter) {
    std::vector<double> values;
    values.reserve(per_note.size());
    for (const NoteMetrics& row : per_note) values.push_back(getter(row));
    return detail::stat_of(values);
  };
  report.bleu1 = column([](const NoteMetrics& r) { return r.bleu1; });
  report.bleu2 = column([](const NoteMetrics& r) { return r.bleu2; });
  report.rouge_l = column([](const NoteMetrics& r) { return r.rouge_l; });
  report.embed_p = column([](const NoteMetrics& r) { return r.embed_p; });
  report.embed_r = column([](const NoteMetrics& r) { return r.embed_r; });
  report.embed_f1 = column([](const NoteMetrics& r) { return r.embed_f1; });

  std::vector<double> main_ideas, coherence, factuality, average;
  for (const NoteMetrics& row : per_note) {
    if (row.judge) {
      main_ideas.push_back(row.judge->main_ideas);
      coherence.push_back(row.judge->coherence);
      factuality.push_back(row.judge->factuality);
      average.push_back(row.judge->average);
    }
  }
  if (!main_ideas.empty()) {
    report.judge_main_ideas = detail::stat_of(main_ideas);
    report.judge_coherence = detail::stat_of(coherence);
    report.judge_factuality = detail::stat_of(factuality);
    report.judge_average = detail::stat_of(average);
  }
  report.per_note = std::move(per_note);
  report.notes = metric_variant_notes();
  return report;
}

/// Throughput and latency statistics over a batch of summary records.
struct EfficiencyReport {
  double throughput = 0.0;
  double latency_mean = 0.0;
  double latency_std = 0.0;
  double wall_time = 0.0;
  std::size_t count = 0;
};

inline EfficiencyReport efficiency(const std::vector<SummaryRecord>& records,
                                   double wall_time) {
  if (records.empty()) {
    throw Error(ErrorKind::empty_records, "no summary records");
  }
  if (!(wall_time > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "wall_time must be > 0");
  }
  std::vector<double> latencies;
  latencies.reserve(records.size());
  for (const SummaryRecord& rec : records) latencies.push_back(rec.latency_seconds);
  MetricStat stat = detail::stat_of(latencies);
  EfficiencyReport report;
  report.count = records.size();
  report.wall_time = wall_time;
  report.throughput = static_cast<double>(records.size()) / wall_time;
  report.latency_mean = stat.mean;
  report.latency_std = stat.stddev;
  return report;
}

namespace detail {

inline std::string format_cell(const MetricStat& stat, double scale) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.2f ± %.2f", stat.mean * scale,
                stat.stddev * scale);
  return buffer;
}

}  // namespace detail

inline ordered_json metric_report_to_json(const MetricReport& report) {
  ordered_json doc;
  doc["notes"] = report.notes;
  ordered_json stats;
  auto put = [&](const char* name, const MetricStat& stat) {
    stats[name] = {{"mean", stat.mean}, {"std", stat.stddev}};
  };
  put("bleu1", report.bleu1);
  put("bleu2", report.bleu2);
  put("rouge_l", report.rouge_l);
  put("embed_p", report.embed_p);
  put("embed_r", report.embed_r);
  put("embed_f1", report.embed_f1);
  if (report.judge_average) {
    put("judge_main_ideas", *report.judge_main_ideas);
    put("judge_coherence", *report.judge_coherence);
    put("judge_factuality", *report.judge_factuality);
    put("judge_average", *report.judge_average);
  }
  doc["metrics"] = std::move(stats);
  ordered_json rows = ordered_json::array();
  for (const NoteMetrics& row : report.per_note) {
    ordered_json item;
    item["note_id"] = row.note_id;
    item["bleu1"] = row.bleu1;
    item["bleu2"] = row.bleu2;
    item["rouge_l"] = row.rouge_l;
    item["embed_p"] = row.embed_p;
    item["embed_r"] = row.embed_r;
    item["embed_f1"] = row.embed_f1;
    if (row.judge) {
      item["judge"] = {{"main_ideas", row.judge->main_ideas},
                       {"coherence", row.judge->coherence},
                       {"factuality", row.judge->factuality},
                       {"average", row.judge->average}};
    }
    rows.push_back(std::move(item));
  }
  doc["per_note"] = std::move(rows);
  return doc;
}

/// Human-readable table in the "mean ± std" style, scaled x100 for the
/// lexical/semantic metrics (judge scores keep their 1-5 scale).
inline std::string render_table(const MetricReport& report) {
  std::string out;
  for (const std::string& note : report.notes) out += "# " + note + "\n";
  out += "metric       mean ± std (x100)\n";
  auto line = [&](const char* name, const MetricStat& stat, double scale) {
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "%-12s %s\n", name,
                  detail::format_cell(stat, scale).c_str());
    out += buffer;
  };
  line("BLEU-1", report.bleu1, 100.0);
  line("BLEU-2", report.bleu2, 100.0);
  line("ROUGE-L", report.rouge_l, 100.0);
  line("Embed-P", report.embed_p, 100.0);
  line("Embed-R", report.embed_r, 100.0);
  line("Embed-F1", report.embed_f1, 100.0);
  if (report.judge_average) {
    line("Main Ideas", *report.judge_main_ideas, 1.0);
    line("Coherence", *report.judge_coherence, 1.0);
    line("Factuality", *report.judge_factuality, 1.0);
    line("Judge Avg", *report.judge_average, 1.0);
  }
  return out;
}

}  // namespace contextual
