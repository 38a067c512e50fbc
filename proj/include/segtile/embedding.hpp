#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "segtile/error.hpp"
#include "segtile/preprocess.hpp"
#include "segtile/transcript.hpp"

namespace segtile {

// Row-major N x H matrix of token vectors for one utterance.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  TokenMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  TokenMatrix(std::size_t cols, std::vector<double> data) : cols_(cols), data_(std::move(data)) {
    if (cols_ == 0 || data_.size() % cols_ != 0)
      throw DimensionError("token data does not divide into rows of width " +
                           std::to_string(cols_));
    rows_ = data_.size() / cols_;
  }
  TokenMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    for (const auto& r : rows) append_row(std::vector<double>(r));
  }

  void append_row(std::span<const double> row) {
    if (rows_ == 0 && cols_ == 0) cols_ = row.size();
    if (row.size() != cols_)
      throw DimensionError("row width " + std::to_string(row.size()) + " differs from " +
                           std::to_string(cols_));
    data_.insert(data_.end(), row.begin(), row.end());
    ++rows_;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class BundleMode { Token, Pooled };
enum class Pooling { Max, Mean };

inline std::string_view to_string(BundleMode m) { return m == BundleMode::Token ? "token" : "pooled"; }
inline std::string_view to_string(Pooling p) { return p == Pooling::Max ? "max" : "mean"; }

inline Pooling parse_pooling(std::string_view s) {
  if (s == "max") return Pooling::Max;
  if (s == "mean") return Pooling::Mean;
  throw ValidationError("unknown pooling '" + std::string(s) + "' (expected max|mean)");
}

// Per-utterance embeddings keyed by utterance id. In pooled mode every entry
// holds exactly one row.
struct EmbeddingBundle {
  std::size_t dim = 0;
  BundleMode mode = BundleMode::Token;
  std::string model_tag;
  std::unordered_map<std::string, TokenMatrix> entries;
  // Ids in file order, for writing back deterministically.
  std::vector<std::string> order;

  void add(std::string id, TokenMatrix m) {
    if (m.cols() != dim)
      throw DimensionError("entry '" + id + "' has width " + std::to_string(m.cols()) +
                           ", expected " + std::to_string(dim));
    if (m.empty()) throw EmptyInputError("entry '" + id + "' has no tokens");
    if (mode == BundleMode::Pooled && m.rows() != 1)
      throw FormatError("pooled entry '" + id + "' must hold one vector");
    for (double v : m.data())
      if (!std::isfinite(v)) throw NumericError("non-finite value in entry '" + id + "'");
    if (entries.contains(id)) throw ValidationError("duplicate bundle entry '" + id + "'");
    order.push_back(id);
    entries.emplace(std::move(id), std::move(m));
  }

  const TokenMatrix* find(const std::string& id) const {
    auto it = entries.find(id);
    return it == entries.end() ? nullptr : &it->second;
  }
};

struct UtteranceVector {
  std::vector<double> values;
  std::size_t source_index = 0;
};

namespace detail {

// Python's json module writes non-finite floats as bare NaN / Infinity tokens,
// and literals such as 1e999 overflow the parser. Rewrite both to null outside
// string literals so the record still parses and the offending entry can be
// reported by id.
inline std::string neutralize_nonfinite(std::string_view line, bool& replaced) {
  std::string out;
  out.reserve(line.size());
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < line.size()) {
        out.push_back(line[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    auto rest = line.substr(i);
    bool matched = false;
    for (std::string_view tok : {"-Infinity", "Infinity", "NaN"}) {
      if (rest.starts_with(tok)) {
        out += "null";
        i += tok.size() - 1;
        replaced = matched = true;
        break;
      }
    }
    if (!matched && (c == '-' || (c >= '0' && c <= '9'))) {
      std::size_t end = i + 1;
      while (end < line.size() && std::string_view("0123456789+-.eE").find(line[end]) !=
                                      std::string_view::npos)
        ++end;
      const std::string literal(line.substr(i, end - i));
      if (std::isinf(std::strtod(literal.c_str(), nullptr))) {
        out += "null";
        replaced = true;
      } else {
        out += literal;
      }
      i = end - 1;
      matched = true;
    }
    if (!matched) out.push_back(c);
  }
  return out;
}

inline std::vector<double> parse_vector(const nlohmann::json& arr, const std::string& id) {
  if (!arr.is_array()) throw FormatError("entry '" + id + "': vector is not an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (v.is_null()) throw NumericError("non-finite value in entry '" + id + "'");
    if (!v.is_number()) throw FormatError("entry '" + id + "': non-numeric value");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw NumericError("non-finite value in entry '" + id + "'");
    out.push_back(d);
  }
  return out;
}

}  // namespace detail

// Line 1: {"dim", "mode", "model"}; then one {"id", "tokens"|"pooled"} object
// per line. Blank lines are skipped.
inline EmbeddingBundle read_bundle(std::istream& in) {
  EmbeddingBundle b;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    bool replaced = false;
    auto cleaned = detail::neutralize_nonfinite(line, replaced);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(cleaned);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed bundle line: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(lineno, "bundle line is not an object");

    if (!have_header) {
      auto dim = obj.find("dim");
      auto mode = obj.find("mode");
      if (dim == obj.end() || mode == obj.end())
        throw FormatError("bundle header missing (expected {\"dim\", \"mode\"} on line 1)");
      if (!dim->is_number_integer() || dim->get<long long>() < 1)
        throw FormatError("bundle header: dim must be a positive integer");
      b.dim = dim->get<std::size_t>();
      if (*mode == "token") {
        b.mode = BundleMode::Token;
      } else if (*mode == "pooled") {
        b.mode = BundleMode::Pooled;
      } else {
        throw FormatError("bundle header: mode must be \"token\" or \"pooled\"");
      }
      if (auto model = obj.find("model"); model != obj.end() && model->is_string())
        b.model_tag = model->get<std::string>();
      have_header = true;
      continue;
    }

    auto id_it = obj.find("id");
    if (id_it == obj.end() || !id_it->is_string())
      throw ParseError(lineno, "bundle entry missing string 'id'");
    std::string id = id_it->get<std::string>();

    TokenMatrix m;
    if (b.mode == BundleMode::Token) {
      auto tokens = obj.find("tokens");
      if (tokens == obj.end() || !tokens->is_array())
        throw FormatError("entry '" + id + "': token-mode entry needs \"tokens\"");
      if (tokens->empty()) throw EmptyInputError("entry '" + id + "' has no tokens");
      for (const auto& row : *tokens) {
        auto v = detail::parse_vector(row, id);
        if (v.size() != b.dim)
          throw DimensionError("entry '" + id + "' has a token of width " +
                               std::to_string(v.size()) + ", expected " + std::to_string(b.dim));
        m.append_row(v);
      }
    } else {
      auto pooled = obj.find("pooled");
      if (pooled == obj.end())
        throw FormatError("entry '" + id + "': pooled-mode entry needs \"pooled\"");
      auto v = detail::parse_vector(*pooled, id);
      if (v.size() != b.dim)
        throw DimensionError("entry '" + id + "' has width " + std::to_string(v.size()) +
                             ", expected " + std::to_string(b.dim));
      m.append_row(v);
    }
    b.add(std::move(id), std::move(m));
  }
  if (!have_header) throw FormatError("bundle header missing (empty input)");
  return b;
}

inline EmbeddingBundle read_bundle_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding bundle '" + path + "'");
  return read_bundle(in);
}

// Doubles are written with round-trip precision (at least 17 significant
// digits where needed), which is lossless for values produced in float32.
inline void write_bundle(std::ostream& out, const EmbeddingBundle& b) {
  nlohmann::json header{{"dim", b.dim}, {"mode", std::string(to_string(b.mode))},
                        {"model", b.model_tag}};
  out << header.dump() << '\n';
  for (const auto& id : b.order) {
    const auto& m = b.entries.at(id);
    nlohmann::json entry{{"id", id}};
    if (b.mode == BundleMode::Token) {
      auto rows = nlohmann::json::array();
      for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
      }
      entry["tokens"] = std::move(rows);
    } else {
      auto r = m.row(0);
      entry["pooled"] = std::vector<double>(r.begin(), r.end());
    }
    out << entry.dump() << '\n';
  }
}

inline std::vector<double> max_pool_tokens(const TokenMatrix& m) {
  if (m.empty()) throw EmptyInputError("cannot pool an empty token matrix");
  auto first = m.row(0);
  std::vector<double> out(first.begin(), first.end());
  for (std::size_t i = 1; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], r[j]);
  }
  return out;
}

inline std::vector<double> mean_pool_tokens(const TokenMatrix& m) {
  if (m.empty()) throw EmptyInputError("cannot pool an empty token matrix");
  if (m.rows() == 1) {
    auto r = m.row(0);
    return {r.begin(), r.end()};
  }
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += r[j];
  }
  const double n = static_cast<double>(m.rows());
  for (auto& v : out) v /= n;
  return out;
}

inline std::vector<double> pool_tokens(const TokenMatrix& m, Pooling pooling) {
  return pooling == Pooling::Max ? max_pool_tokens(m) : mean_pool_tokens(m);
}

using WarningSink = std::function<void(const std::string&)>;

// One vector per eligible utterance, in transcript order. Pooled-mode bundles
// are passed through unchanged and the pooling argument is ignored.
inline std::vector<UtteranceVector> utterance_vectors(const EmbeddingBundle& b,
                                                      const Transcript& t,
                                                      const EligibilityMask& mask,
                                                      Pooling pooling,
                                                      const WarningSink& warn = {}) {
  if (mask.size() != t.size())
    throw ValidationError("eligibility mask has " + std::to_string(mask.size()) +
                          " entries for a transcript of " + std::to_string(t.size()));
  if (b.mode == BundleMode::Pooled && warn)
    warn("bundle is pooled; --pooling " + std::string(to_string(pooling)) + " is ignored");

  std::vector<UtteranceVector> out;
  out.reserve(mask.eligible_count());
  for (auto idx : mask.kept_indices) {
    const auto* m = b.find(t[idx].id);
    if (!m) throw AlignmentError(t[idx].id);
    if (b.mode == BundleMode::Pooled) {
      auto r = m->row(0);
      out.push_back({{r.begin(), r.end()}, idx});
    } else {
      out.push_back({pool_tokens(*m, pooling), idx});
    }
  }
  return out;
}

}  // namespace segtile
