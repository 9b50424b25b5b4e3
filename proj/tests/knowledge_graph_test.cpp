// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#include "contextual/knowledge_graph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"

namespace {

using namespace contextual;

// Edge-scan oracle: every entry of a 1-hop bundle is an edge whose src is
// the patient, sorted the same way the implementation sorts.
ContextBundle scan_oracle(const KnowledgeGraph& graph,
                          const std::string& patient_id) {
  ContextBundle bundle;
  bundle.patient_id = patient_id;
  for (const KgEdge& edge : graph.edges()) {
    if (edge.src != patient_id) continue;
    bundle.entries.push_back({graph.node(edge.src)->label, edge.rel,
                              graph.node(edge.dst)->label});
  }
  std::sort(bundle.entries.begin(), bundle.entries.end(),
            [](const ContextEntry& a, const ContextEntry& b) {
              return std::tuple(std::string(to_string(a.rel)), a.neighbor_label,
                                a.entity_label) <
                     std::tuple(std::string(to_string(b.rel)), b.neighbor_label,
                                b.entity_label);
            });
  return bundle;
}

std::vector<AnnotationRecord> random_annotations(std::mt19937_64& rng,
                                                 std::size_t patients,
                                                 std::size_t count) {
  static const char* kTypes[] = {"problem", "test", "treatment"};
  std::uniform_int_distribution<std::size_t> patient_dist(0, patients - 1);
  std::uniform_int_distribution<std::size_t> type_dist(0, 2);
  std::uniform_int_distribution<std::size_t> entity_dist(0, 59);
  std::vector<AnnotationRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    records.push_back({"P" + std::to_string(patient_dist(rng)),
                       "entity " + std::to_string(entity_dist(rng)),
                       kTypes[type_dist(rng)],
                       {0, 0}});
  }
  return records;
}

TEST(BuildGraph, CountsFromSimpleAnnotations) {
  std::vector<AnnotationRecord> records = {
      {"P1", "sepsis", "problem", {0, 6}},
      {"P1", "blood culture", "test", {10, 23}},
  };
  KnowledgeGraph graph = build_graph(records);
  EXPECT_EQ(graph.nodes().size(), 3u);
  EXPECT_EQ(graph.edges().size(), 2u);
  auto counts = graph.node_counts();
  EXPECT_EQ(counts[NodeType::patient], 1u);
  EXPECT_EQ(counts[NodeType::problem], 1u);
  EXPECT_EQ(counts[NodeType::test], 1u);
  bool has_problem = false, underwent = false;
  for (const KgEdge& edge : graph.edges()) {
    has_problem |= edge.rel == Relation::has_problem;
    underwent |= edge.rel == Relation::underwent_test;
  }
  EXPECT_TRUE(has_problem);
  EXPECT_TRUE(underwent);
}

TEST(BuildGraph, DuplicatesCollapse) {
  std::vector<AnnotationRecord> records = {
      {"P1", "sepsis", "problem", {0, 6}},
      {"P1", "Sepsis", "problem", {9, 15}},
      {"P1", "sepsis", "problem", {0, 6}},
  };
  KnowledgeGraph graph = build_graph(records);
  EXPECT_EQ(graph.nodes().size(), 2u);
  EXPECT_EQ(graph.edges().size(), 1u);
}

TEST(BuildGraph, IdempotentAndOrderInvariant) {
  std::mt19937_64 rng(19);
  std::vector<AnnotationRecord> records = random_annotations(rng, 6, 60);
  KnowledgeGraph first = build_graph(records);
  KnowledgeGraph again = build_graph(records);
  EXPECT_TRUE(first == again);
  std::shuffle(records.begin(), records.end(), rng);
  KnowledgeGraph shuffled = build_graph(records);
  EXPECT_TRUE(first == shuffled);
  for (std::size_t p = 0; p < 6; ++p) {
    std::string id = "P" + std::to_string(p);
    EXPECT_EQ(retrieve_context(first, id), retrieve_context(shuffled, id));
  }
}

TEST(BuildGraph, UnknownTypeRejected) {
  std::vector<AnnotationRecord> records = {{"P1", "x", "procedure", {0, 0}}};
  try {
    build_graph(records);
    FAIL() << "expected UnknownEntityType";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::unknown_entity_type);
  }
}

TEST(BuildGraph, EntityOnlyTypesNotPatientLinkable) {
  std::vector<AnnotationRecord> records = {{"P1", "x", "medication", {0, 0}}};
  try {
    build_graph(records);
    FAIL() << "expected UnknownEntityType";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::unknown_entity_type);
  }
}

TEST(BuildGraph, EmptyAnnotationsYieldEmptyGraph) {
  KnowledgeGraph graph = build_graph({});
  EXPECT_TRUE(graph.nodes().empty());
  EXPECT_TRUE(graph.edges().empty());
}

TEST(BuildGraph, ScaleFixturePartitionSums) {
  // 100 patients with entities across all three categories; the node-type
  // partition must sum to the total node count.
  std::mt19937_64 rng(23);
  std::vector<AnnotationRecord> records = random_annotations(rng, 100, 1200);
  KnowledgeGraph graph = build_graph(records);
  auto counts = graph.node_counts();
  EXPECT_EQ(counts[NodeType::patient], 100u);
  std::size_t total = 0;
  for (const auto& [type, count] : counts) total += count;
  EXPECT_EQ(total, graph.nodes().size());
  EXPECT_GE(graph.edges().size(), graph.nodes().size() - 100);
}

TEST(Graph, EdgeTypeConsistencyEnforced) {
  KnowledgeGraph graph;
  graph.add_node({"P1", NodeType::patient, "P1"});
  graph.add_node({"problem:flu", NodeType::problem, "flu"});
  try {
    graph.add_edge("P1", "problem:flu", Relation::underwent_test);
    FAIL() << "expected InvariantViolation";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::invariant_violation);
  }
}

TEST(Graph, DanglingEdgeRejected) {
  KnowledgeGraph graph;
  graph.add_node({"P1", NodeType::patient, "P1"});
  try {
    graph.add_edge("P1", "problem:missing", Relation::has_problem);
    FAIL() << "expected ReferentialIntegrityError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::referential_integrity);
  }
}

TEST(Graph, EntityToEntityRelationsRepresentable) {
  KnowledgeGraph graph;
  graph.add_node({"diagnosis:uti", NodeType::diagnosis, "uti"});
  graph.add_node({"medication:ceftriaxone", NodeType::medication, "ceftriaxone"});
  graph.add_node({"treatment:iv therapy", NodeType::treatment, "iv therapy"});
  graph.add_edge("diagnosis:uti", "medication:ceftriaxone", Relation::r_dm);
  graph.add_edge("diagnosis:uti", "treatment:iv therapy", Relation::r_dt);
  graph.add_edge("medication:ceftriaxone", "treatment:iv therapy", Relation::r_mt);
  EXPECT_EQ(graph.edges().size(), 3u);
}

TEST(RetrieveContext, TwoEntriesSorted) {
  std::vector<AnnotationRecord> records = {
      {"P1", "sepsis", "problem", {0, 0}},
      {"P1", "blood culture", "test", {0, 0}},
  };
  KnowledgeGraph graph = build_graph(records);
  ContextBundle bundle = retrieve_context(graph, "P1");
  ASSERT_EQ(bundle.entries.size(), 2u);
  EXPECT_EQ(bundle.entries[0].rel, Relation::has_problem);
  EXPECT_EQ(bundle.entries[0].neighbor_label, "sepsis");
  EXPECT_EQ(bundle.entries[1].rel, Relation::underwent_test);
  EXPECT_EQ(bundle.entries[1].neighbor_label, "blood culture");
}

TEST(RetrieveContext, MissingPatientYieldsEmptyBundle) {
  KnowledgeGraph graph = build_graph({{"P1", "flu", "problem", {0, 0}}});
  ContextBundle bundle = retrieve_context(graph, "P404");
  EXPECT_TRUE(bundle.empty());
}

TEST(RetrieveContext, PatientWithNoEdges) {
  KnowledgeGraph graph;
  graph.add_node({"P1", NodeType::patient, "P1"});
  EXPECT_TRUE(retrieve_context(graph, "P1").empty());
}

TEST(RetrieveContext, InvalidHopsRejected) {
  KnowledgeGraph graph;
  try {
    retrieve_context(graph, "P1", 0);
    FAIL() << "expected InvalidHops";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::invalid_hops);
  }
}

TEST(RetrieveContext, MatchesEdgeScanOracleOnRandomGraphs) {
  std::mt19937_64 rng(29);
  for (int iter = 0; iter < 20; ++iter) {
    std::uniform_int_distribution<std::size_t> p_dist(1, 20);
    std::uniform_int_distribution<std::size_t> a_dist(0, 400);
    std::size_t patients = p_dist(rng);
    KnowledgeGraph graph =
        build_graph(random_annotations(rng, patients, a_dist(rng)));
    for (std::size_t p = 0; p < patients; ++p) {
      std::string id = "P" + std::to_string(p);
      EXPECT_EQ(retrieve_context(graph, id), scan_oracle(graph, id));
    }
  }
}

TEST(Enrich, EmptyContextIsReconstruction) {
  ReducedNote reduced;
  reduced.tokens = {"fever", "resolved"};
  reduced.positions = {0, 1};
  ContextBundle bundle;
  bundle.patient_id = "P1";
  EXPECT_EQ(enrich(reduced, bundle), "fever resolved");
}

TEST(Enrich, SingleEntryFormat) {
  ReducedNote reduced;
  reduced.tokens = {"fever"};
  reduced.positions = {0};
  ContextBundle bundle;
  bundle.patient_id = "P1";
  bundle.entries = {{"P1", Relation::has_problem, "sepsis"}};
  EXPECT_EQ(enrich(reduced, bundle),
            "fever\n=== PATIENT CONTEXT ===\nP1 --HAS_PROBLEM--> sepsis");
}

TEST(Enrich, TokenCountsAdd) {
  ReducedNote reduced;
  reduced.tokens = {"fever", "and", "chills"};
  reduced.positions = {0, 1, 2};
  ContextBundle bundle;
  bundle.patient_id = "P1";
  bundle.entries = {{"P1", Relation::has_problem, "sepsis"},
                    {"P1", Relation::underwent_test, "blood culture"}};
  std::size_t enriched_tokens = tokenize(enrich(reduced, bundle)).size();
  std::size_t separator_tokens = tokenize(std::string(kContextSeparator)).size();
  std::size_t context_tokens = 0;
  for (const ContextEntry& entry : bundle.entries) {
    context_tokens += tokenize(entry.entity_label + " --" +
                               to_string(entry.rel) + "--> " +
                               entry.neighbor_label)
                          .size();
  }
  EXPECT_EQ(enriched_tokens,
            reduced.tokens.size() + separator_tokens + context_tokens);
}

TEST(GraphIo, RoundTripPreservesGraph) {
  std::mt19937_64 rng(37);
  KnowledgeGraph graph = build_graph(random_annotations(rng, 8, 120));
  auto dir = testsupport::scratch_dir("kg_roundtrip");
  save_graph(graph, (dir / "g.json").string());
  KnowledgeGraph loaded = load_graph((dir / "g.json").string());
  EXPECT_TRUE(graph == loaded);
}

TEST(GraphIo, EmptyGraphRoundTrips) {
  KnowledgeGraph graph;
  auto dir = testsupport::scratch_dir("kg_empty");
  save_graph(graph, (dir / "g.json").string());
  EXPECT_TRUE(load_graph((dir / "g.json").string()) == graph);
}

TEST(GraphIo, DanglingEdgeInFileRejected) {
  auto dir = testsupport::scratch_dir("kg_dangling");
  write_file((dir / "g.json").string(),
             R"({"nodes":[{"id":"P1","type":"patient","label":"P1"}],)"
             R"("edges":[{"src":"P1","dst":"problem:x","rel":"HAS_PROBLEM"}]})");
  try {
    load_graph((dir / "g.json").string());
    FAIL() << "expected ReferentialIntegrityError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::referential_integrity);
  }
}

TEST(GraphIo, BadRelationRejected) {
  auto dir = testsupport::scratch_dir("kg_badrel");
  write_file((dir / "g.json").string(),
             R"({"nodes":[{"id":"P1","type":"patient","label":"P1"},)"
             R"({"id":"problem:x","type":"problem","label":"x"}],)"
             R"("edges":[{"src":"P1","dst":"problem:x","rel":"LINKED"}]})");
  try {
    load_graph((dir / "g.json").string());
    FAIL() << "expected FormatError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::format_error);
  }
}

TEST(ExportDot, ContainsNodesEdgesAndColors) {
  std::vector<AnnotationRecord> records = {
      {"P1", "sepsis", "problem", {0, 0}},
      {"P1", "blood culture", "test", {0, 0}},
      {"P1", "iv fluids", "treatment", {0, 0}},
  };
  KnowledgeGraph graph = build_graph(records);
  std::string dot = graph_to_dot(graph);
  EXPECT_NE(dot.find("\"P1\""), std::string::npos);
  EXPECT_NE(dot.find("->"), std::string::npos);
  EXPECT_NE(dot.find("fillcolor=red"), std::string::npos);
  EXPECT_NE(dot.find("fillcolor=yellow"), std::string::npos);
  EXPECT_NE(dot.find("fillcolor=green"), std::string::npos);
  EXPECT_NE(dot.find("fillcolor=blue"), std::string::npos);
  // one node line per node
  std::size_t node_lines = 0;
  for (std::size_t pos = dot.find("fillcolor="); pos != std::string::npos;
       pos = dot.find("fillcolor=", pos + 1)) {
    ++node_lines;
  }
  EXPECT_EQ(node_lines, graph.nodes().size());
}

TEST(LexiconExtract, LongestMatchWins) {
  ClinicalNote note;
  note.note_id = "n";
  note.patient_id = "P1";
  note.text = "Diagnosed with Klebsiella UTI today.";
  std::map<std::string, NodeType> lexicon = {
      {"UTI", NodeType::problem},
      {"Klebsiella UTI", NodeType::problem},
  };
  auto records = lexicon_extract(note, lexicon);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].entity, "klebsiella uti");
  EXPECT_EQ(records[0].span[0], 15u);
  EXPECT_EQ(records[0].span[1], 29u);
}

TEST(LexiconExtract, CaseInsensitiveAndBoundaries) {
  ClinicalNote note;
  note.note_id = "n";
  note.patient_id = "P1";
  note.text = "history of uti; scrutiny of results";
  std::map<std::string, NodeType> lexicon = {{"UTI", NodeType::problem}};
  auto records = lexicon_extract(note, lexicon);
  ASSERT_EQ(records.size(), 1u);  // "scrUTIny" must not match
  EXPECT_EQ(records[0].span[0], 11u);
}

TEST(LexiconExtract, EmptyNoteYieldsNothing) {
  ClinicalNote note;
  note.note_id = "n";
  note.patient_id = "P1";
  std::map<std::string, NodeType> lexicon = {{"x", NodeType::problem}};
  EXPECT_TRUE(lexicon_extract(note, lexicon).empty());
}

TEST(LexiconExtract, EmptyLexiconRejected) {
  ClinicalNote note;
  note.note_id = "n";
  note.patient_id = "P1";
  EXPECT_THROW(lexicon_extract(note, {}), Error);
}

TEST(LexiconExtract, WorkflowNoteFindsProstatitis) {
  auto notes = load_corpus(testsupport::fixture("appendix_e_note.jsonl").string());
  auto lexicon = load_lexicon(testsupport::fixture("lexicon.json").string());
  auto records = lexicon_extract(notes[0], lexicon);
  bool found = false;
  for (const AnnotationRecord& rec : records) {
    if (rec.entity == "prostatitis") found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Annotations, JsonlRoundTrip) {
  auto records =
      load_annotations(testsupport::fixture("annotations_20.jsonl").string());
  EXPECT_GE(records.size(), 60u);
  auto dir = testsupport::scratch_dir("ann_roundtrip");
  save_annotations(records, (dir / "a.jsonl").string());
  EXPECT_EQ(load_annotations((dir / "a.jsonl").string()), records);
}

}  // namespace
