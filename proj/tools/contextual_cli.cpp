// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: filter | kg (build|query|export) | run | sweep |
// eval. See README.md for the config schema and file formats.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "contextual/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace contextual;

struct FilterArgs {
  std::string notes;
  std::string out;
  double retention = 0.5;
  double alpha = 0.5;
  std::string mode = "received";
  std::string attention_dir;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t model_dim = 32;
  std::uint64_t seed = 42;
};

int cmd_filter(const FilterArgs& args) {
  std::vector<ClinicalNote> notes = load_corpus(args.notes);
  FilterConfig filter{args.retention, args.alpha,
                      scoring_mode_from_string(args.mode)};
  filter.validate();
  MiniTransformerConfig mini{args.layers, args.heads, args.model_dim,
                             args.seed, true};

  std::string out;
  int failures = 0;
  for (const ClinicalNote& note : notes) {
    try {
      TokenSequence seq = tokenize(flatten_note(note));
      AttentionTensor tensor;
      if (!args.attention_dir.empty()) {
        fs::path dir(args.attention_dir);
        fs::path binary = dir / (note.note_id + ".attn");
        fs::path json_path = dir / (note.note_id + ".json");
        tensor = load_attention(
            fs::exists(binary) ? binary.string() : json_path.string());
      } else {
        tensor = compute_attention(seq, mini);
      }
      ReducedNote reduced = filter_note(seq, tensor, filter, note.note_id);
      out += reduced_note_to_json(reduced).dump();
      out.push_back('\n');
      std::fprintf(stderr, "%s: %zu -> %zu tokens (%.3f)\n",
                   note.note_id.c_str(), reduced.original_len,
                   reduced.tokens.size(),
                   static_cast<double>(reduced.tokens.size()) /
                       static_cast<double>(reduced.original_len));
    } catch (const std::exception& err) {
      ++failures;
      std::fprintf(stderr, "%s: FAILED: %s\n", note.note_id.c_str(), err.what());
    }
  }
  write_file(args.out, out);
  return failures == 0 ? 0 : 1;
}

int cmd_run(const std::string& config_path,
            const std::optional<std::string>& out_dir,
            const std::optional<std::string>& variant,
            const std::optional<std::string>& backend,
            const std::optional<double>& retention,
            const std::optional<double>& alpha,
            const std::optional<std::string>& mode,
            const std::optional<int>& parallelism) {
  RunConfig cfg = load_run_config(config_path);
  if (variant) cfg.variant = variant_from_string(*variant);
  if (backend) cfg.backend = backend_kind_from_string(*backend);
  if (retention) cfg.filter.retention_ratio = *retention;
  if (alpha) cfg.filter.alpha = *alpha;
  if (mode) cfg.filter.scoring_mode = scoring_mode_from_string(*mode);
  if (parallelism) cfg.parallelism = *parallelism;
  if (out_dir) cfg.out_dir = *out_dir;
  cfg.validate();

  RunReport report = run_pipeline(cfg);
  std::string serialized = report_to_json(report).dump(2) + "\n";
  if (cfg.out_dir) {
    fs::create_directories(*cfg.out_dir);
    write_file((fs::path(*cfg.out_dir) / "run_report.json").string(), serialized);
  } else {
    std::cout << serialized;
  }
  std::cerr << render_table(report.metrics);
  if (report.eff) {
    std::fprintf(stderr,
                 "throughput   %.3f summaries/s\nlatency      %.4f ± %.4f s\n",
                 report.eff->throughput, report.eff->latency_mean,
                 report.eff->latency_std);
  }
  for (const NoteFailure& failure : report.failures) {
    std::fprintf(stderr, "FAILED %s: %s\n", failure.note_id.c_str(),
                 failure.error.c_str());
  }
  return report.failures.empty() ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_run_config(config_path);
  cfg.validate();
  std::vector<SweepCell> cells = run_sweep(cfg);
  fs::create_directories(out_dir);
  int failures = 0;
  for (const SweepCell& cell : cells) {
    char name[128];
    std::snprintf(name, sizeof(name), "run_t%g_m%d_a%g.json", cell.temperature,
                  cell.max_tokens, cell.alpha);
    if (cell.report) {
      write_file((fs::path(out_dir) / name).string(),
                 report_to_json(*cell.report).dump(2) + "\n");
      failures += static_cast<int>(cell.report->failures.size());
    } else {
      ++failures;
      std::fprintf(stderr, "cell %s FAILED: %s\n", name,
                   cell.error ? cell.error->c_str() : "unknown");
    }
  }
  write_file((fs::path(out_dir) / "sweep.csv").string(), sweep_csv(cells));
  std::fprintf(stderr, "%zu cells -> %s/sweep.csv\n", cells.size(),
               out_dir.c_str());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-guided clinical summarization pipeline"};
  app.require_subcommand(1);

  // filter
  FilterArgs filter_args;
  CLI::App* filter = app.add_subcommand(
      "filter", "reduce notes with attention-based token filtering");
  filter->add_option("--notes", filter_args.notes, "notes JSONL")->required();
  filter->add_option("--out", filter_args.out, "reduced-notes JSONL")->required();
  filter->add_option("--retention", filter_args.retention, "retention ratio r");
  filter->add_option("--alpha", filter_args.alpha, "layer weight alpha");
  filter->add_option("--mode", filter_args.mode, "received|literal");
  filter->add_option("--attention-dir", filter_args.attention_dir,
                     "directory of per-note .attn/.json tensors");
  filter->add_option("--layers", filter_args.layers, "mini-transformer layers");
  filter->add_option("--heads", filter_args.heads, "mini-transformer heads");
  filter->add_option("--model-dim", filter_args.model_dim, "mini-transformer dim");
  filter->add_option("--seed", filter_args.seed, "mini-transformer seed");

  // kg build | query | export
  CLI::App* kg = app.add_subcommand("kg", "knowledge graph operations");
  kg->require_subcommand(1);
  std::string kg_annotations, kg_graph, kg_out, kg_patient;
  std::size_t kg_hops = 1;
  bool kg_json = false;
  CLI::App* kg_build =
      kg->add_subcommand("build", "build a graph from annotation JSONL");
  kg_build->add_option("--annotations", kg_annotations, "annotation JSONL")
      ->required();
  kg_build->add_option("--out", kg_out, "graph JSON")->required();
  CLI::App* kg_query =
      kg->add_subcommand("query", "retrieve a patient's context");
  kg_query->add_option("--graph", kg_graph, "graph JSON")->required();
  kg_query->add_option("--patient", kg_patient, "patient id")->required();
  kg_query->add_option("--hops", kg_hops, "neighborhood depth");
  kg_query->add_flag("--json", kg_json, "emit entries as JSON");
  CLI::App* kg_export = kg->add_subcommand("export", "export the graph as DOT");
  kg_export->add_option("--graph", kg_graph, "graph JSON")->required();
  kg_export->add_option("--out", kg_out, "DOT file")->required();

  // run
  std::string run_config;
  std::optional<std::string> run_out, run_variant, run_backend, run_mode;
  std::optional<double> run_retention, run_alpha;
  std::optional<int> run_parallelism;
  CLI::App* run = app.add_subcommand("run", "full pipeline over a corpus");
  run->add_option("--config", run_config, "run config JSON")->required();
  run->add_option("--out", run_out, "output directory");
  run->add_option("--variant", run_variant, "vanilla|cptf_only|contextual");
  run->add_option("--backend", run_backend, "mock-extractive|mock-fixed|http");
  run->add_option("--retention", run_retention, "retention ratio r");
  run->add_option("--alpha", run_alpha, "layer weight alpha");
  run->add_option("--mode", run_mode, "received|literal");
  run->add_option("--parallelism", run_parallelism, "worker count");

  // sweep
  std::string sweep_config, sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "temperature/token/alpha grid");
  sweep->add_option("--config", sweep_config, "config JSON with sweep lists")
      ->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();

  // eval
  std::string eval_predictions, eval_references, eval_metrics_list;
  std::optional<std::string> eval_out, eval_judge_backend, eval_judge_text;
  CLI::App* eval = app.add_subcommand("eval", "score predictions vs references");
  eval->add_option("--predictions", eval_predictions, "predictions JSONL")
      ->required();
  eval->add_option("--references", eval_references, "references JSONL")
      ->required();
  eval->add_option("--metrics", eval_metrics_list,
                   "comma-separated subset of bleu1,bleu2,rouge_l,embed");
  eval->add_option("--out", eval_out, "write report JSON here");
  eval->add_option("--judge-backend", eval_judge_backend,
                   "http|mock-fixed to enable the judge pass");
  eval->add_option("--judge-text", eval_judge_text,
                   "fixed response for the mock-fixed judge");

  CLI11_PARSE(app, argc, argv);

  try {
    if (filter->parsed()) return cmd_filter(filter_args);
    if (kg->parsed()) {
      if (kg_build->parsed()) {
        KnowledgeGraph graph = build_graph(load_annotations(kg_annotations));
        if (graph.nodes().empty()) {
          std::cerr << "warning: empty annotation set, graph is empty\n";
        }
        save_graph(graph, kg_out);
        return 0;
      }
      if (kg_query->parsed()) {
        KnowledgeGraph graph = load_graph(kg_graph);
        ContextBundle bundle = retrieve_context(graph, kg_patient, kg_hops);
        if (kg_json) {
          ordered_json entries = ordered_json::array();
          for (const ContextEntry& entry : bundle.entries) {
            entries.push_back({{"entity", entry.entity_label},
                               {"rel", to_string(entry.rel)},
                               {"neighbor", entry.neighbor_label}});
          }
          std::cout << entries.dump(2) << "\n";
        } else {
          for (const ContextEntry& entry : bundle.entries) {
            std::cout << entry.entity_label << " --" << to_string(entry.rel)
                      << "--> " << entry.neighbor_label << "\n";
          }
        }
        return 0;
      }
      if (kg_export->parsed()) {
        export_dot(load_graph(kg_graph), kg_out);
        return 0;
      }
    }
    if (run->parsed()) {
      return cmd_run(run_config, run_out, run_variant, run_backend,
                     run_retention, run_alpha, run_mode, run_parallelism);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_out);
    if (eval->parsed()) {
      EvalOptions options;
      if (!eval_metrics_list.empty()) {
        options.metrics.clear();
        std::size_t start = 0;
        while (start <= eval_metrics_list.size()) {
          std::size_t comma = eval_metrics_list.find(',', start);
          std::string name = eval_metrics_list.substr(
              start, comma == std::string::npos ? std::string::npos
                                                : comma - start);
          if (!name.empty()) options.metrics.insert(name);
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      if (eval_judge_backend) {
        if (*eval_judge_backend == "http") {
          options.judge_backend = std::make_shared<HttpBackend>();
        } else if (*eval_judge_backend == "mock-fixed") {
          options.judge_backend = std::make_shared<FixedMockBackend>(
              eval_judge_text.value_or("main_ideas: 3\ncoherence: 3\nfactuality: 3"));
        } else {
          throw Error(ErrorKind::invalid_config,
                      "judge backend must be http or mock-fixed");
        }
      }
      MetricReport report = evaluate_files(eval_predictions, eval_references,
                                           options);
      std::string serialized = metric_report_to_json(report).dump(2) + "\n";
      if (eval_out) {
        write_file(*eval_out, serialized);
      } else {
        std::cout << serialized;
      }
      std::cerr << render_table(report);
      return 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
