// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "contextual/corpus.hpp"
#include "contextual/error.hpp"
#include "contextual/io.hpp"
#include "contextual/token_filter.hpp"

namespace contextual {

// Two schemas share the node/edge vocabulary: the patient-centric one
// (patient/problem/treatment/test with HAS_PROBLEM etc.), which the default
// pipeline populates, and the entity-to-entity one
// (diagnosis/medication/treatment with r_dm/r_dt/r_mt), which is
// representable but not produced by annotation ingestion.

enum class NodeType { patient, problem, treatment, test, medication, diagnosis };
enum class Relation {
  has_problem,
  underwent_test,
  was_treated_with,
  r_dm,
  r_dt,
  r_mt,
};

inline const char* to_string(NodeType type) {
  switch (type) {
    case NodeType::patient: return "patient";
    case NodeType::problem: return "problem";
    case NodeType::treatment: return "treatment";
    case NodeType::test: return "test";
    case NodeType::medication: return "medication";
    case NodeType::diagnosis: return "diagnosis";
  }
  return "unknown";
}

inline NodeType node_type_from_string(const std::string& name) {
  if (name == "patient") return NodeType::patient;
  if (name == "problem") return NodeType::problem;
  if (name == "treatment") return NodeType::treatment;
  if (name == "test") return NodeType::test;
  if (name == "medication") return NodeType::medication;
  if (name == "diagnosis") return NodeType::diagnosis;
  throw Error(ErrorKind::unknown_entity_type, name);
}

inline const char* to_string(Relation rel) {
  switch (rel) {
    case Relation::has_problem: return "HAS_PROBLEM";
    case Relation::underwent_test: return "UNDERWENT_TEST";
    case Relation::was_treated_with: return "WAS_TREATED_WITH";
    case Relation::r_dm: return "r_dm";
    case Relation::r_dt: return "r_dt";
    case Relation::r_mt: return "r_mt";
  }
  return "unknown";
}

inline Relation relation_from_string(const std::string& name) {
  if (name == "HAS_PROBLEM") return Relation::has_problem;
  if (name == "UNDERWENT_TEST") return Relation::underwent_test;
  if (name == "WAS_TREATED_WITH") return Relation::was_treated_with;
  if (name == "r_dm") return Relation::r_dm;
  if (name == "r_dt") return Relation::r_dt;
  if (name == "r_mt") return Relation::r_mt;
  throw Error(ErrorKind::format_error, "unknown relation: " + name);
}

/// Endpoint type contract per relation: (source type, destination type).
inline std::pair<NodeType, NodeType> relation_endpoints(Relation rel) {
  switch (rel) {
    case Relation::has_problem: return {NodeType::patient, NodeType::problem};
    case Relation::underwent_test: return {NodeType::patient, NodeType::test};
    case Relation::was_treated_with:
      return {NodeType::patient, NodeType::treatment};
    case Relation::r_dm: return {NodeType::diagnosis, NodeType::medication};
    case Relation::r_dt: return {NodeType::diagnosis, NodeType::treatment};
    case Relation::r_mt: return {NodeType::medication, NodeType::treatment};
  }
  throw Error(ErrorKind::format_error, "unknown relation");
}

struct KgNode {
  std::string node_id;
  NodeType node_type = NodeType::patient;
  std::string label;

  bool operator==(const KgNode&) const = default;
};

struct KgEdge {
  std::string src;
  std::string dst;
  Relation rel = Relation::has_problem;

  auto key() const { return std::tie(src, rel, dst); }
  bool operator==(const KgEdge& other) const { return key() == other.key(); }
  bool operator<(const KgEdge& other) const { return key() < other.key(); }
};

/// Typed graph with referential integrity enforced at every mutation.
/// Sorted internal containers make equal inputs produce identical graphs
/// regardless of insertion order.
class KnowledgeGraph {
 public:
  void add_node(KgNode node) {
    if (node.node_id.empty()) {
      throw Error(ErrorKind::invariant_violation, "node_id must be non-empty");
    }
    if (node.node_type != NodeType::patient && node.label.empty()) {
      throw Error(ErrorKind::invariant_violation,
                  "label must be non-empty for non-patient node " + node.node_id);
    }
    auto it = nodes_.find(node.node_id);
    if (it != nodes_.end()) {
      if (!(it->second == node)) {
        throw Error(ErrorKind::invariant_violation,
                    "conflicting redefinition of node " + node.node_id);
      }
      return;
    }
    nodes_.emplace(node.node_id, std::move(node));
  }

  void add_edge(const std::string& src, const std::string& dst, Relation rel) {
    auto src_it = nodes_.find(src);
    auto dst_it = nodes_.find(dst);
    if (src_it == nodes_.end() || dst_it == nodes_.end()) {
      throw Error(ErrorKind::referential_integrity,
                  "edge " + src + " -> " + dst + " references a missing node");
    }
    auto [want_src, want_dst] = relation_endpoints(rel);
    if (src_it->second.node_type != want_src ||
        dst_it->second.node_type != want_dst) {
      throw Error(ErrorKind::invariant_violation,
                  std::string(to_string(rel)) + " edge must link " +
                      to_string(want_src) + " -> " + to_string(want_dst));
    }
    KgEdge edge{src, dst, rel};
    if (edges_.insert(edge).second) {
      outgoing_[src].push_back(edge);
    }
  }

  const KgNode* node(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, KgNode>& nodes() const { return nodes_; }
  const std::set<KgEdge>& edges() const { return edges_; }

  const std::vector<KgEdge>& outgoing(const std::string& id) const {
    static const std::vector<KgEdge> kEmpty;
    auto it = outgoing_.find(id);
    return it == outgoing_.end() ? kEmpty : it->second;
  }

  std::map<NodeType, std::size_t> node_counts() const {
    std::map<NodeType, std::size_t> counts;
    for (const auto& [id, node] : nodes_) counts[node.node_type]++;
    return counts;
  }

  bool operator==(const KnowledgeGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::map<std::string, KgNode> nodes_;
  std::set<KgEdge> edges_;
  std::map<std::string, std::vector<KgEdge>> outgoing_;
};

/// One NER-style record: an entity of a given type seen for a patient.
struct AnnotationRecord {
  std::string patient_id;
  std::string entity;
  std::string type;
  std::array<std::size_t, 2> span{0, 0};

  bool operator==(const AnnotationRecord&) const = default;
};

/// Lowercase, trim, and collapse runs of whitespace so "Klebsiella  UTI"
/// and "klebsiella uti" land on the same node.
inline std::string normalize_label(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

/// Patient-centric graph construction from annotation records. Entity types
/// are the patient-linkable ones: problem, test, treatment.
inline KnowledgeGraph build_graph(const std::vector<AnnotationRecord>& records) {
  KnowledgeGraph graph;
  for (const AnnotationRecord& rec : records) {
    NodeType type = node_type_from_string(rec.type);
    Relation rel;
    switch (type) {
      case NodeType::problem: rel = Relation::has_problem; break;
      case NodeType::test: rel = Relation::underwent_test; break;
      case NodeType::treatment: rel = Relation::was_treated_with; break;
      default:
        throw Error(ErrorKind::unknown_entity_type,
                    std::string(rec.type) + " is not a patient-linkable type");
    }
    if (rec.patient_id.empty()) {
      throw Error(ErrorKind::invariant_violation,
                  "annotation has empty patient_id");
    }
    std::string label = normalize_label(rec.entity);
    if (label.empty()) {
      throw Error(ErrorKind::invariant_violation,
                  "annotation for " + rec.patient_id + " has empty entity");
    }
    graph.add_node({rec.patient_id, NodeType::patient, rec.patient_id});
    std::string entity_id = std::string(to_string(type)) + ":" + label;
    graph.add_node({entity_id, type, label});
    graph.add_edge(rec.patient_id, entity_id, rel);
  }
  return graph;
}

struct ContextEntry {
  std::string entity_label;
  Relation rel = Relation::has_problem;
  std::string neighbor_label;

  bool operator==(const ContextEntry&) const = default;
};

/// Patient-scoped context C(d): the edges reachable from the patient node.
struct ContextBundle {
  std::string patient_id;
  std::vector<ContextEntry> entries;

  bool empty() const { return entries.empty(); }
  bool operator==(const ContextBundle&) const = default;
};

/// Breadth-first neighborhood of the patient node, `hops` edges deep
/// (default and paper behavior: 1). A patient absent from the graph yields
/// an empty bundle; a note may reference a patient with no structured history.
inline ContextBundle retrieve_context(const KnowledgeGraph& graph,
                                      const std::string& patient_id,
                                      std::size_t hops = 1) {
  if (hops < 1) {
    throw Error(ErrorKind::invalid_hops, "hops must be >= 1");
  }
  ContextBundle bundle;
  bundle.patient_id = patient_id;
  if (!graph.node(patient_id)) return bundle;

  std::set<std::string> visited{patient_id};
  std::set<KgEdge> seen_edges;
  std::vector<std::string> frontier{patient_id};
  for (std::size_t depth = 0; depth < hops && !frontier.empty(); ++depth) {
    std::vector<std::string> next;
    for (const std::string& id : frontier) {
      for (const KgEdge& edge : graph.outgoing(id)) {
        if (!seen_edges.insert(edge).second) continue;
        bundle.entries.push_back({graph.node(edge.src)->label, edge.rel,
                                  graph.node(edge.dst)->label});
        if (visited.insert(edge.dst).second) next.push_back(edge.dst);
      }
    }
    frontier = std::move(next);
  }
  std::sort(bundle.entries.begin(), bundle.entries.end(),
            [](const ContextEntry& a, const ContextEntry& b) {
              return std::tuple(std::string_view(to_string(a.rel)),
                                std::string_view(a.neighbor_label),
                                std::string_view(a.entity_label)) <
                     std::tuple(std::string_view(to_string(b.rel)),
                                std::string_view(b.neighbor_label),
                                std::string_view(b.entity_label));
            });
  return bundle;
}

inline constexpr std::string_view kContextSeparator = "=== PATIENT CONTEXT ===";

/// d_hat = reduced text (+) context; empty context yields the text alone.
inline std::string enrich(const ReducedNote& reduced,
                          const ContextBundle& context) {
  std::string out = reconstruct(reduced);
  if (context.empty()) return out;
  out.push_back('\n');
  out += kContextSeparator;
  for (const ContextEntry& entry : context.entries) {
    out.push_back('\n');
    out += entry.entity_label;
    out += " --";
    out += to_string(entry.rel);
    out += "--> ";
    out += entry.neighbor_label;
  }
  return out;
}

inline ordered_json graph_to_json(const KnowledgeGraph& graph) {
  ordered_json doc;
  ordered_json nodes = ordered_json::array();
  for (const auto& [id, node] : graph.nodes()) {
    nodes.push_back({{"id", node.node_id},
                     {"type", to_string(node.node_type)},
                     {"label", node.label}});
  }
  ordered_json edges = ordered_json::array();
  for (const KgEdge& edge : graph.edges()) {
    edges.push_back(
        {{"src", edge.src}, {"dst", edge.dst}, {"rel", to_string(edge.rel)}});
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return doc;
}

inline void save_graph(const KnowledgeGraph& graph, const std::string& path) {
  write_file(path, graph_to_json(graph).dump(2) + "\n");
}

inline KnowledgeGraph load_graph(const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const ordered_json::exception& err) {
    throw Error(ErrorKind::format_error, err.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges") ||
      !doc["nodes"].is_array() || !doc["edges"].is_array()) {
    throw Error(ErrorKind::format_error,
                "graph JSON must have nodes[] and edges[]");
  }
  KnowledgeGraph graph;
  for (const auto& item : doc["nodes"]) {
    if (!item.contains("id") || !item.contains("type") ||
        !item.contains("label")) {
      throw Error(ErrorKind::format_error, "node missing id/type/label");
    }
    graph.add_node({item["id"].get<std::string>(),
                    node_type_from_string(item["type"].get<std::string>()),
                    item["label"].get<std::string>()});
  }
  for (const auto& item : doc["edges"]) {
    if (!item.contains("src") || !item.contains("dst") ||
        !item.contains("rel")) {
      throw Error(ErrorKind::format_error, "edge missing src/dst/rel");
    }
    graph.add_edge(item["src"].get<std::string>(),
                   item["dst"].get<std::string>(),
                   relation_from_string(item["rel"].get<std::string>()));
  }
  return graph;
}

namespace detail {

inline const char* dot_color(NodeType type) {
  switch (type) {
    case NodeType::patient: return "red";
    case NodeType::problem: return "yellow";
    case NodeType::test: return "green";
    case NodeType::treatment: return "blue";
    case NodeType::medication: return "orange";
    case NodeType::diagnosis: return "purple";
  }
  return "gray";
}

inline std::string dot_escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Graphviz export with type-keyed colors: patients red, problems yellow,
/// tests green, treatments blue.
inline std::string graph_to_dot(const KnowledgeGraph& graph) {
  std::string out = "digraph clinical_kg {\n  node [style=filled];\n";
  for (const auto& [id, node] : graph.nodes()) {
    out += "  \"" + detail::dot_escape(node.node_id) + "\" [label=\"" +
           detail::dot_escape(node.label) + "\", fillcolor=" +
           detail::dot_color(node.node_type) + "];\n";
  }
  for (const KgEdge& edge : graph.edges()) {
    out += "  \"" + detail::dot_escape(edge.src) + "\" -> \"" +
           detail::dot_escape(edge.dst) + "\" [label=\"" +
           std::string(to_string(edge.rel)) + "\"];\n";
  }
  out += "}\n";
  return out;
}

inline void export_dot(const KnowledgeGraph& graph, const std::string& path) {
  write_file(path, graph_to_dot(graph));
}

inline std::vector<AnnotationRecord> load_annotations(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<AnnotationRecord> records;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      ordered_json doc = ordered_json::parse(line);
      AnnotationRecord rec;
      rec.patient_id = doc.at("patient_id").get<std::string>();
      rec.entity = doc.at("entity").get<std::string>();
      rec.type = doc.at("type").get<std::string>();
      if (doc.contains("span") && doc["span"].is_array() &&
          doc["span"].size() == 2) {
        rec.span = {doc["span"][0].get<std::size_t>(),
                    doc["span"][1].get<std::size_t>()};
      }
      records.push_back(std::move(rec));
    } catch (const ordered_json::exception& err) {
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
  return records;
}

inline void save_annotations(const std::vector<AnnotationRecord>& records,
                             const std::string& path) {
  std::string out;
  for (const AnnotationRecord& rec : records) {
    ordered_json doc;
    doc["patient_id"] = rec.patient_id;
    doc["entity"] = rec.entity;
    doc["type"] = rec.type;
    doc["span"] = {rec.span[0], rec.span[1]};
    out += doc.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

/// Lexicon file: a JSON object mapping term -> entity type.
inline std::map<std::string, NodeType> load_lexicon(const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const ordered_json::exception& err) {
    throw Error(ErrorKind::format_error, err.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::format_error, "lexicon must be a JSON object");
  }
  std::map<std::string, NodeType> lexicon;
  for (const auto& item : doc.items()) {
    lexicon[item.key()] = node_type_from_string(item.value().get<std::string>());
  }
  return lexicon;
}

/// Case-insensitive longest-match scan of the note body against a
/// term -> type lexicon. Matches require non-alphanumeric boundaries, and a
/// longer term wins over any shorter term starting at the same offset.
inline std::vector<AnnotationRecord> lexicon_extract(
    const ClinicalNote& note, const std::map<std::string, NodeType>& lexicon) {
  if (lexicon.empty()) {
    throw Error(ErrorKind::invalid_argument, "lexicon must be non-empty");
  }
  std::vector<std::pair<std::string, NodeType>> terms;
  terms.reserve(lexicon.size());
  for (const auto& [term, type] : lexicon) {
    std::string lowered;
    lowered.reserve(term.size());
    for (char c : term) {
      lowered.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!lowered.empty()) terms.emplace_back(std::move(lowered), type);
  }
  std::string text;
  text.reserve(note.text.size());
  for (char c : note.text) {
    text.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  auto is_word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };

  std::vector<AnnotationRecord> records;
  std::size_t i = 0;
  while (i < text.size()) {
    if (i > 0 && is_word_char(text[i - 1]) && is_word_char(text[i])) {
      ++i;
      continue;
    }
    const std::pair<std::string, NodeType>* best = nullptr;
    for (const auto& term : terms) {
      if (best && term.first.size() <= best->first.size()) continue;
      if (text.compare(i, term.first.size(), term.first) != 0) continue;
      std::size_t end = i + term.first.size();
      if (end < text.size() && is_word_char(text[end]) &&
          is_word_char(term.first.back())) {
        continue;
      }
      best = &term;
    }
    if (best) {
      records.push_back({note.patient_id, best->first,
                         to_string(best->second),
                         {i, i + best->first.size()}});
      i += best->first.size();
    } else {
      ++i;
    }
  }
  return records;
}

}  // namespace contextual
