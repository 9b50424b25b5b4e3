// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "contextual/attention.hpp"
#include "contextual/corpus.hpp"
#include "contextual/error.hpp"
#include "contextual/gateway.hpp"
#include "contextual/knowledge_graph.hpp"
#include "contextual/metrics.hpp"
#include "contextual/prompt.hpp"
#include "contextual/token_filter.hpp"

namespace contextual {

inline constexpr int kRunReportSchemaId = 1;

enum class Variant { vanilla, cptf_only, contextual };

inline const char* to_string(Variant variant) {
  switch (variant) {
    case Variant::vanilla: return "vanilla";
    case Variant::cptf_only: return "cptf_only";
    case Variant::contextual: return "contextual";
  }
  return "unknown";
}

inline Variant variant_from_string(const std::string& name) {
  if (name == "vanilla") return Variant::vanilla;
  if (name == "cptf_only") return Variant::cptf_only;
  if (name == "contextual") return Variant::contextual;
  throw Error(ErrorKind::invalid_config, "unknown variant: " + name);
}

enum class BackendKind { mock_extractive, mock_fixed, http };

inline const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::mock_extractive: return "mock-extractive";
    case BackendKind::mock_fixed: return "mock-fixed";
    case BackendKind::http: return "http";
  }
  return "unknown";
}

inline BackendKind backend_kind_from_string(const std::string& name) {
  if (name == "mock-extractive") return BackendKind::mock_extractive;
  if (name == "mock-fixed") return BackendKind::mock_fixed;
  if (name == "http") return BackendKind::http;
  throw Error(ErrorKind::invalid_config, "unknown backend: " + name);
}

/// Everything one experiment needs. Serializable to/from a single JSON file;
/// "${VAR}" in string values interpolates environment variables at load time
/// (the raw text is what gets snapshotted into reports, so secrets never
/// leak into run artifacts).
struct RunConfig {
  std::string notes_path;
  std::optional<std::string> annotations_path;
  std::optional<std::string> graph_path;
  std::optional<std::string> attention_dir;
  std::optional<std::string> exemplars_path;
  std::optional<std::string> embeddings_path;

  Variant variant = Variant::contextual;
  Strategy strategy = Strategy::few_shot;
  BackendKind backend = BackendKind::mock_extractive;
  FilterConfig filter;
  GenerationConfig generation;
  MiniTransformerConfig attention;
  std::string instruction{kDefaultInstruction};
  std::size_t hops = 1;
  int parallelism = 1;
  bool judge = false;

  std::string mock_fixed_text = "ok";
  MockCost mock_cost;

  std::size_t embed_dim = 64;
  std::uint64_t embed_seed = 0x5EEDULL;

  std::optional<std::string> out_dir;

  std::vector<double> sweep_temperatures;
  std::vector<int> sweep_max_tokens;
  std::vector<double> sweep_alphas;

  /// The raw JSON this config was loaded from, pre-interpolation; empty for
  /// configs built programmatically.
  ordered_json raw_snapshot;

  void validate() const {
    if (notes_path.empty()) {
      throw Error(ErrorKind::invalid_config, "notes path is required");
    }
    filter.validate();
    generation.validate();
    attention.validate();
    if (parallelism < 1) {
      throw Error(ErrorKind::invalid_config, "parallelism must be >= 1");
    }
    if (hops < 1) {
      throw Error(ErrorKind::invalid_config, "hops must be >= 1");
    }
  }
};

namespace detail {

inline std::string interpolate_env(const std::string& value) {
  std::string out;
  std::size_t i = 0;
  while (i < value.size()) {
    if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
      std::size_t close = value.find('}', i + 2);
      if (close != std::string::npos) {
        std::string name = value.substr(i + 2, close - i - 2);
        const char* env = std::getenv(name.c_str());
        out += env ? env : "";
        i = close + 1;
        continue;
      }
    }
    out.push_back(value[i++]);
  }
  return out;
}

inline std::string resolve_path(const std::string& raw,
                                const std::filesystem::path& base) {
  std::filesystem::path p(raw);
  if (p.is_absolute() || base.empty()) return raw;
  return (base / p).string();
}

}  // namespace detail

/// Builds a RunConfig from the parsed JSON document. Relative paths resolve
/// against `base_dir` (normally the config file's directory).
inline RunConfig run_config_from_json(const ordered_json& doc,
                                      const std::filesystem::path& base_dir = {}) {
  if (!doc.is_object()) {
    throw Error(ErrorKind::invalid_config, "config must be a JSON object");
  }
  RunConfig cfg;
  cfg.raw_snapshot = doc;
  auto get_string = [&](const char* key) -> std::optional<std::string> {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    if (!doc[key].is_string()) {
      throw Error(ErrorKind::invalid_config, std::string(key) + " must be a string");
    }
    return detail::interpolate_env(doc[key].get<std::string>());
  };
  auto get_path = [&](const char* key) -> std::optional<std::string> {
    auto value = get_string(key);
    if (!value) return std::nullopt;
    return detail::resolve_path(*value, base_dir);
  };

  if (auto notes = get_path("notes")) cfg.notes_path = *notes;
  cfg.annotations_path = get_path("annotations");
  cfg.graph_path = get_path("graph");
  cfg.attention_dir = get_path("attention_dir");
  cfg.exemplars_path = get_path("exemplars");
  cfg.embeddings_path = get_path("embeddings");
  cfg.out_dir = get_path("out_dir");

  if (auto variant = get_string("variant")) cfg.variant = variant_from_string(*variant);
  if (auto strategy = get_string("strategy")) {
    cfg.strategy = strategy_from_string(*strategy);
  }
  if (auto backend = get_string("backend")) {
    cfg.backend = backend_kind_from_string(*backend);
  }
  if (auto instruction = get_string("instruction")) cfg.instruction = *instruction;

  if (doc.contains("filter")) {
    const auto& f = doc["filter"];
    if (f.contains("retention_ratio")) {
      cfg.filter.retention_ratio = f["retention_ratio"].get<double>();
    }
    if (f.contains("alpha")) cfg.filter.alpha = f["alpha"].get<double>();
    if (f.contains("mode")) {
      cfg.filter.scoring_mode =
          scoring_mode_from_string(f["mode"].get<std::string>());
    }
  }
  if (doc.contains("generation")) {
    const auto& g = doc["generation"];
    if (g.contains("max_tokens")) cfg.generation.max_tokens = g["max_tokens"].get<int>();
    if (g.contains("temperature")) {
      cfg.generation.temperature = g["temperature"].get<double>();
    }
    if (g.contains("model_name")) {
      cfg.generation.model_name = g["model_name"].get<std::string>();
    }
    if (g.contains("seed") && !g["seed"].is_null()) {
      cfg.generation.seed = g["seed"].get<std::int64_t>();
    }
  }
  if (doc.contains("attention")) {
    const auto& a = doc["attention"];
    if (a.contains("layers")) cfg.attention.num_layers = a["layers"].get<std::size_t>();
    if (a.contains("heads")) cfg.attention.num_heads = a["heads"].get<std::size_t>();
    if (a.contains("model_dim")) {
      cfg.attention.model_dim = a["model_dim"].get<std::size_t>();
    }
    if (a.contains("seed")) cfg.attention.seed = a["seed"].get<std::uint64_t>();
    if (a.contains("causal")) cfg.attention.causal = a["causal"].get<bool>();
  }
  if (doc.contains("mock")) {
    const auto& m = doc["mock"];
    if (m.contains("fixed_text")) {
      cfg.mock_fixed_text = m["fixed_text"].get<std::string>();
    }
    if (m.contains("fixed_delay_ms")) {
      cfg.mock_cost.fixed_delay_seconds = m["fixed_delay_ms"].get<double>() / 1000.0;
    }
    if (m.contains("delay_per_prompt_token_ms")) {
      cfg.mock_cost.delay_per_prompt_token_seconds =
          m["delay_per_prompt_token_ms"].get<double>() / 1000.0;
    }
  }
  if (doc.contains("embedding")) {
    const auto& e = doc["embedding"];
    if (e.contains("dim")) cfg.embed_dim = e["dim"].get<std::size_t>();
    if (e.contains("seed")) cfg.embed_seed = e["seed"].get<std::uint64_t>();
  }
  if (doc.contains("hops")) cfg.hops = doc["hops"].get<std::size_t>();
  if (doc.contains("parallelism")) cfg.parallelism = doc["parallelism"].get<int>();
  if (doc.contains("judge")) cfg.judge = doc["judge"].get<bool>();
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    if (s.contains("temperatures")) {
      cfg.sweep_temperatures = s["temperatures"].get<std::vector<double>>();
    }
    if (s.contains("max_tokens")) {
      cfg.sweep_max_tokens = s["max_tokens"].get<std::vector<int>>();
    }
    if (s.contains("alphas")) {
      cfg.sweep_alphas = s["alphas"].get<std::vector<double>>();
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const ordered_json::exception& err) {
    throw Error(ErrorKind::invalid_config, err.what());
  }
  return run_config_from_json(doc,
                              std::filesystem::path(path).parent_path());
}

struct NoteFailure {
  std::string note_id;
  std::string error;
};

/// One end-to-end run. Wall-clock data lives only in the timing section of
/// the serialized report so deterministic reruns compare byte-identically.
struct RunReport {
  int schema_id = kRunReportSchemaId;
  ordered_json config;
  std::vector<SummaryRecord> summaries;
  MetricReport metrics;
  std::optional<EfficiencyReport> eff;
  std::vector<NoteFailure> failures;
  double wall_time = 0.0;
  int parallelism = 1;
};

namespace detail {

inline std::shared_ptr<Backend> make_backend(const RunConfig& cfg) {
  switch (cfg.backend) {
    case BackendKind::mock_extractive:
      return std::make_shared<ExtractiveMockBackend>(cfg.mock_cost);
    case BackendKind::mock_fixed:
      return std::make_shared<FixedMockBackend>(cfg.mock_fixed_text, cfg.mock_cost);
    case BackendKind::http:
      return std::make_shared<HttpBackend>(http_config_from_env());
  }
  throw Error(ErrorKind::invalid_config, "unknown backend kind");
}

inline AttentionTensor note_attention(const RunConfig& cfg,
                                      const ClinicalNote& note,
                                      const TokenSequence& seq) {
  if (cfg.attention_dir) {
    std::filesystem::path dir(*cfg.attention_dir);
    std::filesystem::path binary = dir / (note.note_id + ".attn");
    if (std::filesystem::exists(binary)) return load_attention(binary.string());
    std::filesystem::path json_path = dir / (note.note_id + ".json");
    if (std::filesystem::exists(json_path)) {
      return load_attention(json_path.string());
    }
    throw Error(ErrorKind::file_not_found,
                "no attention file for note " + note.note_id + " under " +
                    *cfg.attention_dir);
  }
  return compute_attention(seq, cfg.attention);
}

/// Runs fn(0..count-1) on up to `parallelism` workers. fn must not throw.
inline void run_indexed(std::size_t count, int parallelism,
                        const std::function<void(std::size_t)>& fn) {
  if (parallelism <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), count);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (std::thread& thread : threads) thread.join();
}

}  // namespace detail

/// Builds the text to summarize for one note under the configured variant:
/// vanilla keeps the flattened note, cptf_only filters it, contextual
/// filters and appends the patient's retrieved context.
inline std::string prepare_input(const RunConfig& cfg, const ClinicalNote& note,
                                 const KnowledgeGraph& graph,
                                 ReducedNote* reduced_out = nullptr) {
  std::string full_text = flatten_note(note);
  if (cfg.variant == Variant::vanilla) return full_text;
  TokenSequence seq = tokenize(full_text);
  AttentionTensor tensor = detail::note_attention(cfg, note, seq);
  ReducedNote reduced = filter_note(seq, tensor, cfg.filter, note.note_id);
  if (reduced_out) *reduced_out = reduced;
  if (cfg.variant == Variant::cptf_only) return reconstruct(reduced);
  ContextBundle bundle = retrieve_context(graph, note.patient_id, cfg.hops);
  return enrich(reduced, bundle);
}

/// Executes the full pipeline over the corpus. Notes are processed in
/// note_id order with per-note failure isolation; results are merged in the
/// same deterministic order regardless of worker completion.
inline RunReport run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  std::vector<ClinicalNote> notes = load_corpus(cfg.notes_path);
  std::sort(notes.begin(), notes.end(),
            [](const ClinicalNote& a, const ClinicalNote& b) {
              return a.note_id < b.note_id;
            });

  KnowledgeGraph graph;
  if (cfg.variant == Variant::contextual) {
    if (cfg.graph_path) {
      graph = load_graph(*cfg.graph_path);
    } else if (cfg.annotations_path) {
      graph = build_graph(load_annotations(*cfg.annotations_path));
    }
  }

  std::vector<FewShotExample> exemplars =
      cfg.exemplars_path ? load_examples(*cfg.exemplars_path) : default_examples();
  std::vector<FewShotExample> selected;
  switch (cfg.strategy) {
    case Strategy::zero_shot:
      break;
    case Strategy::one_shot:
      if (exemplars.empty()) {
        throw Error(ErrorKind::invalid_config, "one_shot needs an exemplar");
      }
      selected.assign(exemplars.begin(), exemplars.begin() + 1);
      break;
    case Strategy::few_shot:
      if (exemplars.size() < 2) {
        throw Error(ErrorKind::invalid_config, "few_shot needs >= 2 exemplars");
      }
      selected = exemplars;
      break;
  }

  std::unique_ptr<Embedder> embedder;
  if (cfg.embeddings_path) {
    embedder = std::make_unique<FileEmbedder>(*cfg.embeddings_path,
                                              cfg.embed_dim, cfg.embed_seed);
  } else {
    embedder = std::make_unique<HashedEmbedder>(cfg.embed_dim, cfg.embed_seed);
  }
  std::shared_ptr<Backend> backend = detail::make_backend(cfg);

  struct Slot {
    std::optional<SummaryRecord> record;
    std::optional<NoteMetrics> metrics;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(notes.size());

  auto start = std::chrono::steady_clock::now();
  detail::run_indexed(notes.size(), cfg.parallelism, [&](std::size_t i) {
    const ClinicalNote& note = notes[i];
    try {
      std::string input_text = prepare_input(cfg, note, graph);
      PromptSpec spec{cfg.strategy, cfg.instruction, selected, input_text};
      SummaryRecord record = generate(build_prompt(spec), cfg.generation, *backend);
      record.note_id = note.note_id;
      if (note.reference_summary) {
        NoteMetrics row;
        row.note_id = note.note_id;
        Tokens cand = metric_tokens(record.summary_text);
        Tokens ref = metric_tokens(*note.reference_summary);
        row.bleu1 = bleu_n(cand, {ref}, 1);
        row.bleu2 = bleu_n(cand, {ref}, 2);
        row.rouge_l = rouge_l(cand, ref);
        if (!cand.empty() && !ref.empty()) {
          EmbedScore es = embed_score(cand, ref, *embedder);
          row.embed_p = es.precision;
          row.embed_r = es.recall;
          row.embed_f1 = es.f1;
        }
        if (cfg.judge && !record.summary_text.empty()) {
          row.judge = judge(*note.reference_summary, record.summary_text,
                            cfg.generation, *backend);
        }
        slots[i].metrics = std::move(row);
      }
      slots[i].record = std::move(record);
    } catch (const std::exception& err) {
      slots[i].error = err.what();
    }
  });
  auto stop = std::chrono::steady_clock::now();

  RunReport report;
  report.config = cfg.raw_snapshot;
  report.parallelism = cfg.parallelism;
  report.wall_time = std::chrono::duration<double>(stop - start).count();
  std::vector<NoteMetrics> rows;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (slots[i].error) {
      report.failures.push_back({notes[i].note_id, *slots[i].error});
      continue;
    }
    report.summaries.push_back(std::move(*slots[i].record));
    if (slots[i].metrics) rows.push_back(std::move(*slots[i].metrics));
  }
  report.metrics = aggregate(std::move(rows));
  if (!report.summaries.empty() && report.wall_time > 0.0) {
    report.eff = efficiency(report.summaries, report.wall_time);
  }
  return report;
}

/// Deterministic portion of the report; reruns with mock backends and fixed
/// seeds must match byte for byte.
inline ordered_json report_results_json(const RunReport& report) {
  ordered_json doc;
  doc["schema_id"] = report.schema_id;
  doc["config"] = report.config.is_null() ? ordered_json::object()
                                          : report.config;
  ordered_json results;
  results["parallelism"] = report.parallelism;
  ordered_json summaries = ordered_json::array();
  for (const SummaryRecord& rec : report.summaries) {
    ordered_json item;
    item["note_id"] = rec.note_id;
    item["prompt"] = rec.prompt;
    item["summary_text"] = rec.summary_text;
    item["prompt_tokens"] = rec.prompt_tokens;
    item["completion_tokens"] = rec.completion_tokens;
    item["retry_count"] = rec.retry_count;
    item["flagged_empty"] = rec.flagged_empty;
    summaries.push_back(std::move(item));
  }
  results["summaries"] = std::move(summaries);
  results["metrics"] = metric_report_to_json(report.metrics);
  ordered_json failures = ordered_json::array();
  for (const NoteFailure& failure : report.failures) {
    failures.push_back({{"note_id", failure.note_id}, {"error", failure.error}});
  }
  results["failures"] = std::move(failures);
  doc["results"] = std::move(results);
  return doc;
}

/// Full report: deterministic results plus the segregated timing section.
inline ordered_json report_to_json(const RunReport& report) {
  ordered_json doc = report_results_json(report);
  ordered_json timing;
  timing["wall_time_seconds"] = report.wall_time;
  if (report.eff) {
    timing["throughput"] = report.eff->throughput;
    timing["latency_mean"] = report.eff->latency_mean;
    timing["latency_std"] = report.eff->latency_std;
    timing["count"] = report.eff->count;
  }
  ordered_json per_note = ordered_json::object();
  for (const SummaryRecord& rec : report.summaries) {
    per_note[rec.note_id] = rec.latency_seconds;
  }
  timing["per_note_latency_seconds"] = std::move(per_note);
  doc["timing"] = std::move(timing);
  return doc;
}

/// One cell of a sweep grid.
struct SweepCell {
  double temperature = 0.0;
  int max_tokens = 0;
  double alpha = 0.0;
  std::optional<RunReport> report;
  std::optional<std::string> error;
};

/// Cartesian product over the non-empty sweep dimensions; a dimension left
/// unset sweeps over just the base config value. Cells fail in isolation.
inline std::vector<SweepCell> run_sweep(const RunConfig& base) {
  bool has_sweep = !base.sweep_temperatures.empty() ||
                   !base.sweep_max_tokens.empty() || !base.sweep_alphas.empty();
  if (!has_sweep) {
    throw Error(ErrorKind::invalid_config,
                "sweep requires at least one non-empty sweep list");
  }
  std::vector<double> temps = base.sweep_temperatures.empty()
                                  ? std::vector<double>{base.generation.temperature}
                                  : base.sweep_temperatures;
  std::vector<int> token_limits = base.sweep_max_tokens.empty()
                                      ? std::vector<int>{base.generation.max_tokens}
                                      : base.sweep_max_tokens;
  std::vector<double> alphas = base.sweep_alphas.empty()
                                   ? std::vector<double>{base.filter.alpha}
                                   : base.sweep_alphas;
  std::vector<SweepCell> cells;
  for (double temp : temps) {
    for (int limit : token_limits) {
      for (double alpha : alphas) {
        SweepCell cell;
        cell.temperature = temp;
        cell.max_tokens = limit;
        cell.alpha = alpha;
        RunConfig cfg = base;
        cfg.generation.temperature = temp;
        cfg.generation.max_tokens = limit;
        cfg.filter.alpha = alpha;
        cfg.sweep_temperatures.clear();
        cfg.sweep_max_tokens.clear();
        cfg.sweep_alphas.clear();
        try {
          cell.report = run_pipeline(cfg);
        } catch (const std::exception& err) {
          cell.error = err.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

/// Consolidated CSV matrix, one row per sweep cell.
inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out =
      "temperature,max_tokens,alpha,status,bleu1_mean,bleu1_std,bleu2_mean,"
      "bleu2_std,rouge_l_mean,rouge_l_std,embed_p_mean,embed_p_std,"
      "embed_r_mean,embed_r_std,embed_f1_mean,embed_f1_std,throughput,"
      "latency_mean,count,failures\n";
  char buffer[512];
  for (const SweepCell& cell : cells) {
    if (cell.report) {
      const RunReport& report = *cell.report;
      std::snprintf(
          buffer, sizeof(buffer),
          "%g,%d,%g,ok,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
          "%.6f,%.6f,%.6f,%zu,%zu\n",
          cell.temperature, cell.max_tokens, cell.alpha,
          report.metrics.bleu1.mean, report.metrics.bleu1.stddev,
          report.metrics.bleu2.mean, report.metrics.bleu2.stddev,
          report.metrics.rouge_l.mean, report.metrics.rouge_l.stddev,
          report.metrics.embed_p.mean, report.metrics.embed_p.stddev,
          report.metrics.embed_r.mean, report.metrics.embed_r.stddev,
          report.metrics.embed_f1.mean, report.metrics.embed_f1.stddev,
          report.eff ? report.eff->throughput : 0.0,
          report.eff ? report.eff->latency_mean : 0.0,
          report.summaries.size(), report.failures.size());
      out += buffer;
    } else {
      std::string error = cell.error ? *cell.error : "unknown";
      for (char& c : error) {
        if (c == ',' || c == '\n') c = ';';
      }
      std::snprintf(buffer, sizeof(buffer), "%g,%d,%g,error:%s%s",
                    cell.temperature, cell.max_tokens, cell.alpha,
                    error.c_str(),
                    ",,,,,,,,,,,,,,,,\n");
      out += buffer;
    }
  }
  return out;
}

/// Metric selection for `evaluate_files`.
struct EvalOptions {
  std::set<std::string> metrics{"bleu1", "bleu2", "rouge_l", "embed"};
  std::shared_ptr<Backend> judge_backend;
  GenerationConfig judge_config;
  std::size_t embed_dim = 64;
  std::uint64_t embed_seed = 0x5EEDULL;
  std::optional<std::string> embeddings_path;
};

namespace detail {

/// Reads a {note_id, summary} JSONL file; also accepts full note records,
/// falling back to reference_summary then text.
inline std::map<std::string, std::string> load_summary_map(
    const std::string& path) {
  std::map<std::string, std::string> out;
  std::vector<std::string> lines = read_lines(path);
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      ordered_json doc = ordered_json::parse(lines[i]);
      std::string id = doc.at("note_id").get<std::string>();
      std::string text;
      if (doc.contains("summary")) {
        text = doc["summary"].get<std::string>();
      } else if (doc.contains("summary_text")) {
        text = doc["summary_text"].get<std::string>();
      } else if (doc.contains("reference_summary")) {
        text = doc["reference_summary"].get<std::string>();
      } else if (doc.contains("text")) {
        text = doc["text"].get<std::string>();
      } else {
        throw Error(ErrorKind::parse_error, "no summary field");
      }
      out[id] = std::move(text);
    } catch (const std::exception& err) {
      problems.push_back("line " + std::to_string(i + 1) + ": " + err.what());
    }
  }
  if (!problems.empty()) {
    std::string message;
    for (const std::string& problem : problems) {
      if (!message.empty()) message += "; ";
      message += problem;
    }
    throw Error(ErrorKind::parse_error, message);
  }
  return out;
}

}  // namespace detail

/// Scores predictions against references matched by note_id. Any id present
/// on one side only is an error, reported by name.
inline MetricReport evaluate_files(const std::string& predictions_path,
                                   const std::string& references_path,
                                   const EvalOptions& options = {}) {
  auto predictions = detail::load_summary_map(predictions_path);
  auto references = detail::load_summary_map(references_path);
  std::vector<std::string> unmatched;
  for (const auto& [id, text] : predictions) {
    if (!references.count(id)) unmatched.push_back("prediction " + id);
  }
  for (const auto& [id, text] : references) {
    if (!predictions.count(id)) unmatched.push_back("reference " + id);
  }
  if (!unmatched.empty()) {
    std::string message = "unmatched note_ids:";
    for (const std::string& name : unmatched) message += " " + name;
    throw Error(ErrorKind::id_mismatch, message);
  }

  std::unique_ptr<Embedder> embedder;
  if (options.embeddings_path) {
    embedder = std::make_unique<FileEmbedder>(*options.embeddings_path,
                                              options.embed_dim,
                                              options.embed_seed);
  } else {
    embedder = std::make_unique<HashedEmbedder>(options.embed_dim,
                                                options.embed_seed);
  }

  std::vector<NoteMetrics> rows;
  for (const auto& [id, candidate_text] : predictions) {
    const std::string& reference_text = references[id];
    NoteMetrics row;
    row.note_id = id;
    Tokens cand = metric_tokens(candidate_text);
    Tokens ref = metric_tokens(reference_text);
    if (options.metrics.count("bleu1")) row.bleu1 = bleu_n(cand, {ref}, 1);
    if (options.metrics.count("bleu2")) row.bleu2 = bleu_n(cand, {ref}, 2);
    if (options.metrics.count("rouge_l")) row.rouge_l = rouge_l(cand, ref);
    if (options.metrics.count("embed") && !cand.empty() && !ref.empty()) {
      EmbedScore es = embed_score(cand, ref, *embedder);
      row.embed_p = es.precision;
      row.embed_r = es.recall;
      row.embed_f1 = es.f1;
    }
    if (options.judge_backend && !candidate_text.empty() &&
        !reference_text.empty()) {
      row.judge = judge(reference_text, candidate_text, options.judge_config,
                        *options.judge_backend);
    }
    rows.push_back(std::move(row));
  }
  return aggregate(std::move(rows));
}

/// Reduced-note JSONL record emitted by the filter command.
inline ordered_json reduced_note_to_json(const ReducedNote& reduced) {
  ordered_json doc;
  doc["note_id"] = reduced.source_note_id;
  doc["original_len"] = reduced.original_len;
  doc["retention_ratio"] = reduced.config.retention_ratio;
  doc["alpha"] = reduced.config.alpha;
  doc["mode"] = to_string(reduced.config.scoring_mode);
  doc["compression_ratio"] =
      reduced.original_len == 0
          ? 0.0
          : static_cast<double>(reduced.tokens.size()) /
                static_cast<double>(reduced.original_len);
  doc["tokens"] = reduced.tokens;
  doc["positions"] = reduced.positions;
  doc["text"] = reconstruct(reduced);
  return doc;
}

}  // namespace contextual
