// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contextual/corpus.hpp"
#include "contextual/error.hpp"
#include "contextual/io.hpp"

namespace contextual {

/// One worked demonstration: instruction, tagged input, gold summary.
struct FewShotExample {
  std::string instruction;
  std::string input;
  std::string target_summary;

  bool operator==(const FewShotExample&) const = default;
};

enum class Strategy { zero_shot, one_shot, few_shot };

inline const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::zero_shot: return "zero_shot";
    case Strategy::one_shot: return "one_shot";
    case Strategy::few_shot: return "few_shot";
  }
  return "unknown";
}

inline Strategy strategy_from_string(const std::string& name) {
  if (name == "zero_shot") return Strategy::zero_shot;
  if (name == "one_shot") return Strategy::one_shot;
  if (name == "few_shot") return Strategy::few_shot;
  throw Error(ErrorKind::invalid_config, "unknown strategy: " + name);
}

inline constexpr std::string_view kDefaultInstruction =
    "Summarize the provided clinical notes to produce a concise, "
    "domain-specific summary. Focus on clinically relevant information while "
    "omitting redundant details.";

/// A fully specified prompt: strategy fixes the exemplar cardinality
/// (0 / 1 / >= 2), examples keep their order, and enriched_input is the
/// instance to summarize.
struct PromptSpec {
  Strategy strategy = Strategy::few_shot;
  std::string instruction{kDefaultInstruction};
  std::vector<FewShotExample> examples;
  std::string enriched_input;

  void validate() const {
    switch (strategy) {
      case Strategy::zero_shot:
        if (!examples.empty()) {
          throw Error(ErrorKind::invariant_violation,
                      "zero_shot prompts take no examples");
        }
        break;
      case Strategy::one_shot:
        if (examples.size() != 1) {
          throw Error(ErrorKind::invariant_violation,
                      "one_shot prompts take exactly 1 example, got " +
                          std::to_string(examples.size()));
        }
        break;
      case Strategy::few_shot:
        if (examples.size() < 2) {
          throw Error(ErrorKind::invariant_violation,
                      "few_shot prompts take >= 2 examples, got " +
                          std::to_string(examples.size()));
        }
        break;
    }
    for (const FewShotExample& example : examples) {
      if (example.instruction.empty() || example.input.empty() ||
          example.target_summary.empty()) {
        throw Error(ErrorKind::invariant_violation,
                    "examples must have non-empty fields");
      }
    }
  }
};

/// Frozen layout: instruction, blank line, each exemplar as an
/// Input/Summary pair, then the open-ended query block.
inline std::string build_prompt(const PromptSpec& spec) {
  spec.validate();
  std::string out = spec.instruction;
  out += "\n\n";
  for (const FewShotExample& example : spec.examples) {
    out += "Input:\n";
    out += example.input;
    out += "\nSummary:\n";
    out += example.target_summary;
    out += "\n";
  }
  out += "Input:\n";
  out += spec.enriched_input;
  out += "\nSummary:\n";
  return out;
}

/// The two bundled demonstrations (oncology, cardiology), in that order.
inline const std::vector<FewShotExample>& default_examples() {
  static const std::vector<FewShotExample> kExamples = {
      {
          std::string(kDefaultInstruction),
          "45-year-old female with stage IV metastatic breast cancer.\n"
          "Chief Complaint: Severe thoracic back pain.\n"
          "Imaging: MRI spine reveals T5-T7 vertebral compression fractures; "
          "PET-CT shows multiple bone metastases.\n"
          "Treatments: Morphine IV PCA for pain management, radiation "
          "oncology consult, zoledronic acid 4mg IV for bone metastases, "
          "continued letrozole 2.5mg daily.\n"
          "Labs: CA 15-3: 68 U/mL (elevated), alkaline phosphatase: 220 U/L.",
          "Patient with metastatic breast cancer underwent comprehensive pain "
          "management and palliative interventions, including morphine PCA, "
          "radiation consultation, and bone-targeted therapy.",
      },
      {
          "Summarize the provided clinical notes to generate a focused "
          "cardiology case summary.",
          "55-year-old male with history of hypertension and smoking.\n"
          "Chief Complaint: Acute chest pain radiating to left arm.\n"
          "Diagnostics: ECG shows ST-segment elevation in inferior leads; "
          "Troponin I: 12.4 ng/mL (significantly elevated); Cardiac "
          "ultrasound reveals anterior wall hypokinesis.\n"
          "Interventions: Immediate cardiac catheterization, primary PCI to "
          "right coronary artery, drug-eluting stent placement.\n"
          "Medications: Aspirin 325mg, atorvastatin 80mg, metoprolol 25mg.\n"
          "Labs: CK-MB: 22.5 ng/mL, LDL: 142 mg/dL.",
          "Patient diagnosed with acute myocardial infarction underwent "
          "immediate primary percutaneous coronary intervention with right "
          "coronary artery stenting and initiated comprehensive cardiac "
          "medical management.",
      },
  };
  return kExamples;
}

/// Loads user-supplied exemplars: a JSON array of
/// {instruction, input, target_summary}.
inline std::vector<FewShotExample> load_examples(const std::string& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const ordered_json::exception& err) {
    throw Error(ErrorKind::format_error, err.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorKind::format_error, "exemplar file must be a JSON array");
  }
  std::vector<FewShotExample> examples;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("instruction") ||
        !item.contains("input") || !item.contains("target_summary")) {
      throw Error(ErrorKind::format_error,
                  "exemplar needs instruction/input/target_summary");
    }
    FewShotExample example{item["instruction"].get<std::string>(),
                           item["input"].get<std::string>(),
                           item["target_summary"].get<std::string>()};
    if (example.instruction.empty() || example.input.empty() ||
        example.target_summary.empty()) {
      throw Error(ErrorKind::format_error, "exemplar fields must be non-empty");
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

}  // namespace contextual
