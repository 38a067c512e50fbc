#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "segtile/segtile.hpp"

namespace segtile::testing {

#ifndef SEGTILE_SAMPLES_DIR
#define SEGTILE_SAMPLES_DIR "samples"
#endif

inline std::string sample_path(const std::string& name) {
  return std::string(SEGTILE_SAMPLES_DIR) + "/" + name;
}

// The eight-utterance AMI IB4003 excerpt shipped in samples/.
inline Transcript ami_excerpt_transcript() {
  return read_transcript_file(sample_path("ib4003_excerpt.jsonl"));
}

inline Transcript parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_transcript(in);
}

inline EmbeddingBundle bundle_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_bundle(in);
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string transcript_text(const Transcript& t) {
  std::ostringstream out;
  write_transcript(out, t);
  return out.str();
}

inline std::string bundle_text(const EmbeddingBundle& b) {
  std::ostringstream out;
  write_bundle(out, b);
  return out.str();
}

// Pooled-mode bundle holding one vector per id.
inline EmbeddingBundle pooled_bundle(const std::vector<std::vector<double>>& vectors,
                                     const std::string& prefix = "u") {
  EmbeddingBundle b;
  b.dim = vectors.empty() ? 0 : vectors.front().size();
  b.mode = BundleMode::Pooled;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    b.add(prefix + std::to_string(i), TokenMatrix(b.dim, vectors[i]));
  return b;
}

// Transcript whose every caption is long enough to be eligible.
inline Transcript long_caption_transcript(std::size_t m, const std::string& prefix = "u") {
  std::vector<Utterance> utts;
  for (std::size_t i = 0; i < m; ++i)
    utts.push_back({prefix + std::to_string(i), std::nullopt,
                    "caption number " + std::to_string(i) + " about the project", std::nullopt,
                    std::nullopt});
  return Transcript(std::move(utts));
}

}  // namespace segtile::testing
