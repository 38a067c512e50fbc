#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "segtile/error.hpp"

namespace segtile {

// One caption of a meeting transcript.
struct Utterance {
  std::string id;
  std::optional<std::string> speaker;
  std::string text;
  std::optional<bool> ref_topic_change;
  std::optional<std::string> ref_topic_label;
};

// Ordered, non-empty list of utterances with unique ids. Positions 0..M-1 are
// the indices every other stage refers to.
class Transcript {
 public:
  explicit Transcript(std::vector<Utterance> utterances)
      : utterances_(std::move(utterances)) {
    if (utterances_.empty()) throw EmptyInputError("transcript has no utterances");
    std::unordered_set<std::string_view> seen;
    seen.reserve(utterances_.size());
    for (const auto& u : utterances_) {
      if (!seen.insert(u.id).second)
        throw ValidationError("duplicate utterance id '" + u.id + "'");
    }
  }

  std::size_t size() const noexcept { return utterances_.size(); }
  const Utterance& operator[](std::size_t i) const { return utterances_[i]; }
  const Utterance& at(std::size_t i) const { return utterances_.at(i); }
  std::span<const Utterance> utterances() const noexcept { return utterances_; }
  auto begin() const noexcept { return utterances_.begin(); }
  auto end() const noexcept { return utterances_.end(); }

  bool has_complete_reference() const noexcept {
    for (const auto& u : utterances_)
      if (!u.ref_topic_change) return false;
    return true;
  }

 private:
  std::vector<Utterance> utterances_;
};

// Binary per-utterance topic-start flags.
struct BoundaryLabels {
  std::vector<std::uint8_t> labels;

  BoundaryLabels() = default;
  explicit BoundaryLabels(std::size_t m) : labels(m, 0) {}
  explicit BoundaryLabels(std::vector<std::uint8_t> l) : labels(std::move(l)) {}

  std::size_t size() const noexcept { return labels.size(); }
  std::uint8_t operator[](std::size_t i) const { return labels[i]; }
  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto v : labels) n += v ? 1 : 0;
    return n;
  }

  friend bool operator==(const BoundaryLabels&, const BoundaryLabels&) = default;
};

namespace detail {

inline std::optional<std::string> optional_string(const nlohmann::json& obj,
                                                  const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(line, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

inline Utterance parse_utterance(std::string_view text, std::size_t line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, std::string("malformed record: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "record is not an object");

  Utterance u;
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) throw ParseError(line, "missing string field 'id'");
  u.id = id->get<std::string>();
  auto txt = obj.find("text");
  if (txt == obj.end() || !txt->is_string())
    throw ParseError(line, "missing string field 'text'");
  u.text = txt->get<std::string>();
  u.speaker = optional_string(obj, "speaker", line);
  u.ref_topic_label = optional_string(obj, "topic_label", line);

  if (auto tc = obj.find("topic_change"); tc != obj.end() && !tc->is_null()) {
    if (tc->is_boolean()) {
      u.ref_topic_change = tc->get<bool>();
    } else if (tc->is_number_integer() && (*tc == 0 || *tc == 1)) {
      u.ref_topic_change = tc->get<int>() == 1;
    } else {
      throw ParseError(line, "'topic_change' must be 0 or 1");
    }
  }
  return u;
}

inline bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace detail

// Reads line-delimited JSON records: {"id", "text", "speaker"?, "topic_change"?,
// "topic_label"?}. Blank lines are skipped, unknown keys ignored.
inline Transcript parse_transcript(std::istream& in) {
  std::vector<Utterance> utterances;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    utterances.push_back(detail::parse_utterance(line, lineno));
  }
  if (utterances.empty()) throw EmptyInputError("transcript contains no records");
  return Transcript(std::move(utterances));
}

inline Transcript read_transcript_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transcript '" + path + "'");
  return parse_transcript(in);
}

inline void write_transcript(std::ostream& out, const Transcript& t) {
  for (const auto& u : t) {
    nlohmann::ordered_json rec{{"id", u.id}};
    if (u.speaker) rec["speaker"] = *u.speaker;
    rec["text"] = u.text;
    if (u.ref_topic_change) rec["topic_change"] = *u.ref_topic_change ? 1 : 0;
    if (u.ref_topic_label) rec["topic_label"] = *u.ref_topic_label;
    out << rec.dump() << '\n';
  }
}

inline BoundaryLabels reference_labels(const Transcript& t) {
  BoundaryLabels out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& flag = t[i].ref_topic_change;
    if (!flag)
      throw IncompleteReferenceError("utterance '" + t[i].id + "' has no topic_change flag");
    out.labels[i] = *flag ? 1 : 0;
  }
  return out;
}

inline std::string labels_to_boundary_string(const BoundaryLabels& l) {
  std::string s(l.size(), '0');
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l[i]) s[i] = '1';
  return s;
}

// Positions of every 1-label, ascending.
inline std::vector<std::size_t> labels_to_boundaries(const BoundaryLabels& l) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l[i]) out.push_back(i);
  return out;
}

// Position 0 is never a boundary; every index must lie in [1, m-1].
inline BoundaryLabels boundaries_to_labels(std::span<const std::size_t> indices, std::size_t m) {
  BoundaryLabels out(m);
  for (auto i : indices) {
    if (i == 0) throw ValidationError("index 0 cannot be a boundary");
    if (i >= m)
      throw ValidationError("boundary index " + std::to_string(i) + " out of range for " +
                            std::to_string(m) + " utterances");
    out.labels[i] = 1;
  }
  return out;
}

}  // namespace segtile
