// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "contextual/error.hpp"
#include "contextual/io.hpp"
#include "contextual/rng.hpp"

namespace contextual {

using ordered_json = nlohmann::ordered_json;

/// One clinical note. `tags` is an ordered list of (name, value) pairs so a
/// note reconstructs in its original section order.
struct ClinicalNote {
  std::string note_id;
  std::string patient_id;
  std::string text;
  std::vector<std::pair<std::string, std::string>> tags;
  std::optional<std::string> reference_summary;

  bool operator==(const ClinicalNote&) const = default;
};

/// Tokenized text with stable 0-based original positions and deterministic
/// 32-bit vocabulary ids (FNV-1a, truncated).
struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> positions;
  std::vector<std::uint32_t> vocab_ids;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const TokenSequence&) const = default;
};

namespace detail {

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

/// Decodes the UTF-8 code point at `pos`; invalid bytes decode as themselves
/// so the tokenizer is total over arbitrary byte strings.
inline char32_t decode_utf8(std::string_view text, std::size_t pos,
                            std::size_t& length) {
  unsigned char lead = static_cast<unsigned char>(text[pos]);
  length = 1;
  if (lead < 0x80) return lead;
  int extra = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) { extra = 1; cp = lead & 0x1F; }
  else if ((lead & 0xF0) == 0xE0) { extra = 2; cp = lead & 0x0F; }
  else if ((lead & 0xF8) == 0xF0) { extra = 3; cp = lead & 0x07; }
  else return lead;
  if (pos + static_cast<std::size_t>(extra) >= text.size()) return lead;
  for (int i = 1; i <= extra; ++i) {
    unsigned char cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) return lead;
    cp = (cp << 6) | (cont & 0x3F);
  }
  length = static_cast<std::size_t>(extra) + 1;
  return cp;
}

inline bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

inline std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  bool pending_space = false;
  while (i < text.size()) {
    std::size_t len = 1;
    char32_t cp = decode_utf8(text, i, len);
    if (is_unicode_space(cp)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.append(text.substr(i, len));
    }
    i += len;
  }
  return out;
}

// Angle-bracket section tags ("<SEX>", "<CHIEF COMPLAINT>") stay single
// tokens even when the tag name contains spaces. The capture is bounded so a
// stray '<' cannot swallow a whole sentence.
inline constexpr std::size_t kMaxTagInnerLength = 64;

/// If a tag starts at `pos`, returns its normalized token and sets `end` to
/// one past the closing '>'.
inline bool try_capture_tag(std::string_view text, std::size_t pos,
                            std::string& token, std::size_t& end) {
  if (text[pos] != '<') return false;
  std::size_t close = std::string_view::npos;
  for (std::size_t j = pos + 1;
       j < text.size() && j - pos - 1 <= kMaxTagInnerLength; ++j) {
    if (text[j] == '<') return false;
    if (text[j] == '>') { close = j; break; }
  }
  if (close == std::string_view::npos) return false;
  std::string inner = collapse_whitespace(text.substr(pos + 1, close - pos - 1));
  token = "<" + inner + ">";
  end = close + 1;
  return true;
}

/// Emits a whitespace-free chunk as core token plus peeled punctuation.
inline void emit_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t finish = chunk.size();
  std::vector<char> trailing;
  while (begin < finish && is_ascii_punct(chunk[begin])) {
    out.emplace_back(1, chunk[begin]);
    ++begin;
  }
  while (finish > begin && is_ascii_punct(chunk[finish - 1])) {
    trailing.push_back(chunk[finish - 1]);
    --finish;
  }
  if (finish > begin) out.emplace_back(chunk.substr(begin, finish - begin));
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
    out.emplace_back(1, *it);
  }
}

}  // namespace detail

/// Rule-based tokenizer: split on Unicode whitespace, peel leading/trailing
/// ASCII punctuation into single-character tokens, and keep angle-bracket
/// tags whole. Deterministic and total; positions are 0..n-1.
inline TokenSequence tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string chunk;
  auto flush = [&] {
    if (!chunk.empty()) {
      detail::emit_chunk(chunk, tokens);
      chunk.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 1;
    char32_t cp = detail::decode_utf8(text, i, len);
    if (detail::is_unicode_space(cp)) {
      flush();
      i += len;
      continue;
    }
    if (cp == '<') {
      std::string tag;
      std::size_t end = 0;
      if (detail::try_capture_tag(text, i, tag, end)) {
        flush();
        tokens.push_back(std::move(tag));
        i = end;
        continue;
      }
    }
    chunk.append(text.substr(i, len));
    i += len;
  }
  flush();

  TokenSequence seq;
  seq.positions.reserve(tokens.size());
  seq.vocab_ids.reserve(tokens.size());
  for (std::size_t idx = 0; idx < tokens.size(); ++idx) {
    seq.positions.push_back(idx);
    seq.vocab_ids.push_back(stable_vocab_id(tokens[idx]));
  }
  seq.tokens = std::move(tokens);
  return seq;
}

inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

inline std::string detokenize(const TokenSequence& seq) {
  return detokenize(seq.tokens);
}

/// "<TAG> value" segments in `tag_order` (default: the note's own order),
/// then the free-text body, all space-joined.
inline std::string flatten_note(
    const ClinicalNote& note,
    const std::optional<std::vector<std::string>>& tag_order = std::nullopt) {
  std::vector<const std::pair<std::string, std::string>*> ordered;
  if (tag_order) {
    for (const std::string& name : *tag_order) {
      const std::pair<std::string, std::string>* found = nullptr;
      for (const auto& tag : note.tags) {
        if (tag.first == name) { found = &tag; break; }
      }
      if (!found) throw Error(ErrorKind::unknown_tag, name);
      ordered.push_back(found);
    }
  } else {
    for (const auto& tag : note.tags) ordered.push_back(&tag);
  }
  std::string out;
  for (const auto* tag : ordered) {
    if (!out.empty()) out.push_back(' ');
    out += "<" + tag->first + "> " + tag->second;
  }
  if (!note.text.empty()) {
    if (!out.empty()) out.push_back(' ');
    out += note.text;
  }
  return out;
}

enum class CorpusFormat { notes_jsonl };

namespace detail {

inline ClinicalNote note_from_json(const ordered_json& record) {
  ClinicalNote note;
  if (!record.is_object()) {
    throw Error(ErrorKind::parse_error, "record is not a JSON object");
  }
  if (!record.contains("note_id") || !record["note_id"].is_string() ||
      record["note_id"].get<std::string>().empty()) {
    throw Error(ErrorKind::parse_error, "missing note_id");
  }
  note.note_id = record["note_id"].get<std::string>();
  if (!record.contains("patient_id") || !record["patient_id"].is_string()) {
    throw Error(ErrorKind::parse_error, "missing patient_id");
  }
  note.patient_id = record["patient_id"].get<std::string>();
  if (!record.contains("text") || !record["text"].is_string()) {
    throw Error(ErrorKind::parse_error, "missing text");
  }
  note.text = record["text"].get<std::string>();
  if (record.contains("tags")) {
    if (!record["tags"].is_object()) {
      throw Error(ErrorKind::parse_error, "tags must be an object");
    }
    for (const auto& item : record["tags"].items()) {
      if (!item.value().is_string()) {
        throw Error(ErrorKind::parse_error,
                    "tag " + item.key() + " must be a string");
      }
      note.tags.emplace_back(item.key(), item.value().get<std::string>());
    }
  }
  if (record.contains("reference_summary") &&
      !record["reference_summary"].is_null()) {
    if (!record["reference_summary"].is_string()) {
      throw Error(ErrorKind::parse_error, "reference_summary must be a string");
    }
    note.reference_summary = record["reference_summary"].get<std::string>();
  }
  return note;
}

inline ordered_json note_to_json(const ClinicalNote& note) {
  ordered_json record;
  record["note_id"] = note.note_id;
  record["patient_id"] = note.patient_id;
  record["text"] = note.text;
  ordered_json tags = ordered_json::object();
  for (const auto& tag : note.tags) tags[tag.first] = tag.second;
  record["tags"] = tags;
  if (note.reference_summary) record["reference_summary"] = *note.reference_summary;
  return record;
}

}  // namespace detail

/// Loads a notes-jsonl corpus. Malformed lines are collected and reported
/// together with their line numbers; nothing is silently skipped.
inline std::vector<ClinicalNote> load_corpus(
    const std::string& path, CorpusFormat format = CorpusFormat::notes_jsonl) {
  (void)format;
  std::vector<std::string> lines = read_lines(path);
  std::vector<ClinicalNote> notes;
  std::vector<std::string> problems;
  std::vector<std::string> duplicates;
  std::vector<std::string> seen_ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t line_no = i + 1;
    try {
      ordered_json record = ordered_json::parse(line);
      ClinicalNote note = detail::note_from_json(record);
      bool duplicate = false;
      for (const std::string& id : seen_ids) {
        if (id == note.note_id) { duplicate = true; break; }
      }
      if (duplicate) {
        duplicates.push_back("line " + std::to_string(line_no) +
                             ": duplicate note_id " + note.note_id);
      } else {
        seen_ids.push_back(note.note_id);
        notes.push_back(std::move(note));
      }
    } catch (const Error& err) {
      problems.push_back("line " + std::to_string(line_no) + ": " +
                         err.what());
    } catch (const ordered_json::exception& err) {
      problems.push_back("line " + std::to_string(line_no) + ": " +
                         err.what());
    }
  }
  if (!problems.empty()) {
    std::string message;
    for (const std::string& problem : problems) {
      if (!message.empty()) message += "; ";
      message += problem;
    }
    for (const std::string& dup : duplicates) message += "; " + dup;
    throw Error(ErrorKind::parse_error, message);
  }
  if (!duplicates.empty()) {
    std::string message;
    for (const std::string& dup : duplicates) {
      if (!message.empty()) message += "; ";
      message += dup;
    }
    throw Error(ErrorKind::duplicate_note_id, message);
  }
  return notes;
}

inline void save_corpus(const std::vector<ClinicalNote>& notes,
                        const std::string& path) {
  std::string out;
  for (const ClinicalNote& note : notes) {
    out += detail::note_to_json(note).dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

}  // namespace contextual
