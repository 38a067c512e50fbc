#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "segtile/error.hpp"

namespace segtile::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

// Write to a sibling temp file, then rename over the target.
inline void write_atomic(const fs::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " +
                        ec.message());
}

// Records what a run did: subcommand, resolved configuration, input digests,
// tool version, and wall-clock duration.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand)
      : subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()) {}

  void set_config(ordered_json config) { config_ = std::move(config); }

  void add_input(const fs::path& path) {
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(path))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) add_input(f);
      return;
    }
    if (!fs::is_regular_file(path)) return;
    digests_[path.string()] = sha256_hex(read_file(path));
  }

  ordered_json to_json() const {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    ordered_json inputs = ordered_json::object();
    for (const auto& [p, d] : digests_) inputs[p] = "sha256:" + d;
    return ordered_json{{"subcommand", subcommand_},
                        {"config", config_},
                        {"inputs", inputs},
                        {"version", kToolVersion},
                        {"duration_seconds", elapsed.count()}};
  }

  // Written next to the primary output, or to stderr when output went to stdout.
  void emit(const std::string& explicit_path, const std::string& out_path) const {
    const auto text = to_json().dump(2) + "\n";
    if (!explicit_path.empty()) {
      write_atomic(explicit_path, text);
    } else if (!out_path.empty()) {
      fs::path p = out_path;
      if (fs::is_directory(p)) {
        write_atomic(p / "manifest.json", text);
      } else {
        p += ".manifest.json";
        write_atomic(p, text);
      }
    } else {
      std::fputs(("manifest: " + to_json().dump() + "\n").c_str(), stderr);
    }
  }

 private:
  std::string subcommand_;
  ordered_json config_ = ordered_json::object();
  std::map<std::string, std::string> digests_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace segtile::cli
