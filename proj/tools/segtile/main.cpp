// segtile: topic segmentation of meeting transcripts from utterance embeddings.
//
//   segtile segment  --transcript T --embeddings E [--out O]
//   segtile baseline --method random|even|texttiling --transcript T [--out O]
//   segtile evaluate --reference R --hypothesis H [--k K]
//   segtile curve    --input SEGMENTATION [--out CSV]
//
// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_support.hpp"
#include "segtile/segtile.hpp"

namespace segtile::cli {
namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_atomic(out_path, text);
  }
}

// Environment fallback: SEGTILE_ + flag name, uppercased, '-' -> '_'.
std::string env_name(std::string flag) {
  std::string out = "SEGTILE_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
  return out;
}

template <typename T>
CLI::Option* add_opt(CLI::App* app, const std::string& flag, T& var, const std::string& help) {
  return app->add_option("--" + flag, var, help)->envname(env_name(flag));
}

ordered_json segmentation_json(const std::string& method, const BoundaryLabels& labels,
                               const SimilarityProfile* profile, ordered_json config) {
  ordered_json j;
  j["method"] = method;
  j["boundaries"] = labels_to_boundaries(labels);
  j["labels"] = labels_to_boundary_string(labels);
  if (profile) {
    j["profile"] = profile->sims;
    j["gap_utterance"] = profile->gap_index_map;
    j["mu"] = profile->mean;
    j["sigma"] = profile->spread;
  } else {
    j["profile"] = ordered_json::array();
    j["gap_utterance"] = ordered_json::array();
    j["mu"] = nullptr;
    j["sigma"] = nullptr;
  }
  j["config"] = std::move(config);
  return j;
}

// ---------------------------------------------------------------------------
// Batch helpers

struct MeetingScore {
  std::string name;
  double pk = 0.0;
  double windiff = 0.0;
  std::size_t k = 0;
};

std::vector<fs::path> transcript_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no *.jsonl transcripts in '" + dir.string() + "'");
  return files;
}

std::optional<MeetingScore> score_meeting(const std::string& name, const Transcript& t,
                                          const BoundaryLabels& hyp) {
  if (!t.has_complete_reference()) return std::nullopt;
  const auto ref = labels_to_boundary_string(reference_labels(t));
  if (ref.find('1') == std::string::npos || ref.size() < 2) return std::nullopt;
  const auto k = default_window(ref);
  if (k >= ref.size()) return std::nullopt;
  const auto h = labels_to_boundary_string(hyp);
  return MeetingScore{name, pk(ref, h, k).value, windiff(ref, h, k).value, k};
}

ordered_json summary_json(const std::vector<MeetingScore>& scores,
                          const std::vector<std::string>& skipped) {
  ordered_json meetings = ordered_json::array();
  double sum_pk = 0.0, sum_wd = 0.0;
  for (const auto& s : scores) {
    meetings.push_back({{"name", s.name}, {"pk", s.pk}, {"windiff", s.windiff}, {"k", s.k}});
    sum_pk += s.pk;
    sum_wd += s.windiff;
  }
  ordered_json j;
  j["evaluated"] = scores.size();
  const double n = static_cast<double>(scores.size());
  j["mean_pk"] = scores.empty() ? ordered_json(nullptr) : ordered_json(sum_pk / n);
  j["mean_windiff"] = scores.empty() ? ordered_json(nullptr) : ordered_json(sum_wd / n);
  j["meetings"] = std::move(meetings);
  j["skipped"] = skipped;
  return j;
}

// Runs `one` per transcript in `in_dir`, writing <stem>.json into `out_dir`
// and a summary.json with unweighted mean Pk/WinDiff over meetings that carry
// a reference with at least one boundary.
template <typename PerMeeting>
void run_batch(const fs::path& in_dir, const fs::path& out_dir, PerMeeting one) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  std::vector<MeetingScore> scores;
  std::vector<std::string> skipped;
  for (const auto& file : transcript_files(in_dir)) {
    const auto stem = file.stem().string();
    Transcript t = read_transcript_file(file.string());
    auto [labels, doc] = one(stem, t);
    write_atomic(out_dir / (stem + ".json"), doc.dump() + "\n");
    if (auto s = score_meeting(stem, t, labels)) {
      scores.push_back(*s);
    } else {
      skipped.push_back(stem);
    }
  }
  write_atomic(out_dir / "summary.json", summary_json(scores, skipped).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// segment

struct SegmentArgs {
  std::string transcript, embeddings, out, manifest, fillers;
  std::size_t window = 10;
  double multiplier = 1.0;
  std::string pooling = "max";
  std::size_t min_chars = kDefaultMinChars;
  std::optional<std::size_t> min_separation;
  std::size_t smoothing = 0;
};

void setup_segment(CLI::App& app, SegmentArgs& a) {
  auto* sub = app.add_subcommand("segment", "Segment a transcript from utterance embeddings");
  add_opt(sub, "transcript", a.transcript, "Transcript file, or directory for batch mode")
      ->required();
  add_opt(sub, "embeddings", a.embeddings,
          "Embedding bundle, or directory of <meeting>.jsonl bundles")
      ->required();
  add_opt(sub, "window", a.window, "Utterances per block on each side of a gap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_opt(sub, "multiplier", a.multiplier, "Boundary iff sim < mean - multiplier * stddev")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_opt(sub, "pooling", a.pooling, "Token pooling for token-mode bundles")
      ->capture_default_str()
      ->check(CLI::IsMember({"max", "mean"}));
  add_opt(sub, "min-chars", a.min_chars, "Minimum normalized caption length")
      ->capture_default_str();
  add_opt(sub, "fillers", a.fillers, "Filler lexicon file (one term per line)");
  add_opt(sub, "min-separation", a.min_separation,
          "Minimum utterances between boundaries (default: window; 0 disables)");
  add_opt(sub, "smoothing", a.smoothing, "Moving-average width over the profile (0 = off)")
      ->capture_default_str();
  add_opt(sub, "out", a.out, "Output file, or directory in batch mode (default: stdout)");
  add_opt(sub, "manifest", a.manifest, "Manifest path (default: <out>.manifest.json)");
}

int run_segment(const SegmentArgs& a) {
  RunManifest manifest("segment");
  SegmenterConfig cfg;
  cfg.window = a.window;
  cfg.multiplier = a.multiplier;
  cfg.pooling = parse_pooling(a.pooling);
  cfg.min_chars = a.min_chars;
  cfg.min_separation = a.min_separation;
  cfg.smoothing = a.smoothing;
  cfg.validate();
  const FillerLexicon lex = a.fillers.empty() ? default_filler_lexicon()
                                              : read_filler_lexicon(a.fillers);

  ordered_json config{{"window", cfg.window},
                      {"multiplier", cfg.multiplier},
                      {"pooling", to_string(cfg.pooling)},
                      {"min_chars", cfg.min_chars},
                      {"min_separation", cfg.effective_min_separation()},
                      {"smoothing", cfg.smoothing},
                      {"fillers", a.fillers.empty() ? std::string("default") : a.fillers}};
  manifest.set_config(config);
  manifest.add_input(a.transcript);
  manifest.add_input(a.embeddings);
  if (!a.fillers.empty()) manifest.add_input(a.fillers);

  auto warn = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };

  if (fs::is_directory(a.transcript)) {
    if (!fs::is_directory(a.embeddings))
      throw ValidationError("batch mode needs --embeddings to be a directory");
    if (a.out.empty()) throw ValidationError("batch mode needs --out DIR");
    bool warned = false;
    run_batch(a.transcript, a.out, [&](const std::string& stem, const Transcript& t) {
      auto bundle_path = fs::path(a.embeddings) / (stem + ".jsonl");
      auto bundle = read_bundle_file(bundle_path.string());
      Segmentation s;
      try {
        s = run_segmentation(t, bundle, cfg, lex, [&](const std::string& m) {
          if (!warned) warn(m);
          warned = true;
        });
      } catch (const AlignmentError& e) {
        throw ValidationError(stem + ": " + e.what());
      }
      auto doc = segmentation_json("embedding", s.labels, &s.profile, config);
      return std::pair{s.labels, doc};
    });
  } else {
    auto t = read_transcript_file(a.transcript);
    auto bundle = read_bundle_file(a.embeddings);
    auto s = run_segmentation(t, bundle, cfg, lex, warn);
    write_output(a.out, segmentation_json("embedding", s.labels, &s.profile, config).dump() + "\n");
  }
  manifest.emit(a.manifest, a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineArgs {
  std::string method, transcript, out, manifest, stopwords, fillers;
  std::string scoring = "threshold";
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> period;
  std::size_t window = 10;
  double multiplier = 1.0;
  std::size_t min_chars = kDefaultMinChars;
  std::optional<std::size_t> min_separation;
};

void setup_baseline(CLI::App& app, BaselineArgs& a) {
  auto* sub = app.add_subcommand("baseline", "Run a Random, Even, or TextTiling baseline");
  add_opt(sub, "method", a.method, "random | even | texttiling")
      ->required()
      ->check(CLI::IsMember({"random", "even", "texttiling"}));
  add_opt(sub, "transcript", a.transcript, "Transcript file, or directory for batch mode")
      ->required();
  add_opt(sub, "count", a.count, "random: boundary count (default: reference count, else M/30)");
  add_opt(sub, "seed", a.seed, "random: generator seed (required)");
  add_opt(sub, "period", a.period, "even: boundary every N utterances (default: match count)")
      ->check(CLI::PositiveNumber);
  add_opt(sub, "window", a.window, "texttiling: utterances per block")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_opt(sub, "multiplier", a.multiplier, "texttiling: threshold multiplier")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_opt(sub, "stopwords", a.stopwords, "texttiling: stopword file (one term per line)");
  add_opt(sub, "scoring", a.scoring, "texttiling: threshold | depth (classic Hearst cutoff)")
      ->capture_default_str()
      ->check(CLI::IsMember({"threshold", "depth"}));
  add_opt(sub, "min-chars", a.min_chars, "texttiling: minimum normalized caption length")
      ->capture_default_str();
  add_opt(sub, "fillers", a.fillers, "texttiling: filler lexicon used for the length filter");
  add_opt(sub, "min-separation", a.min_separation,
          "texttiling: minimum utterances between boundaries (default: window)");
  add_opt(sub, "out", a.out, "Output file, or directory in batch mode (default: stdout)");
  add_opt(sub, "manifest", a.manifest, "Manifest path (default: <out>.manifest.json)");
}

int run_baseline(const BaselineArgs& a) {
  RunManifest manifest("baseline");
  if (a.method == "random" && !a.seed)
    throw ValidationError("--method random requires --seed");
  const FillerLexicon lex = a.fillers.empty() ? default_filler_lexicon()
                                              : read_filler_lexicon(a.fillers);
  const StopwordSet stop = a.stopwords.empty() ? default_stopwords() : read_stopwords(a.stopwords);

  ordered_json base_config{{"method", a.method}};
  if (a.method == "random") {
    base_config["seed"] = *a.seed;
    if (a.count) base_config["count"] = *a.count;
  } else if (a.method == "even") {
    if (a.period) base_config["period"] = *a.period;
    if (a.count) base_config["count"] = *a.count;
  } else {
    base_config["window"] = a.window;
    base_config["multiplier"] = a.multiplier;
    base_config["scoring"] = a.scoring;
    base_config["min_chars"] = a.min_chars;
    base_config["min_separation"] = a.min_separation.value_or(a.window);
    base_config["stopwords"] = a.stopwords.empty() ? std::string("default") : a.stopwords;
    base_config["fillers"] = a.fillers.empty() ? std::string("default") : a.fillers;
  }
  manifest.set_config(base_config);
  manifest.add_input(a.transcript);
  if (!a.stopwords.empty()) manifest.add_input(a.stopwords);
  if (!a.fillers.empty()) manifest.add_input(a.fillers);

  auto one = [&](const std::string&, const Transcript& t) {
    const std::size_t m = t.size();
    std::optional<BoundaryLabels> ref;
    if (t.has_complete_reference()) ref = reference_labels(t);
    ordered_json config = base_config;
    if (a.method == "random") {
      const auto b = a.count.value_or(default_random_count(m, ref));
      config["count"] = b;
      auto labels = random_baseline(m, b, *a.seed);
      return std::pair{labels, segmentation_json("random", labels, nullptr, config)};
    }
    if (a.method == "even") {
      const auto n = a.period.value_or(
          default_even_period(m, a.count.value_or(default_random_count(m, ref))));
      config["period"] = n;
      auto labels = even_baseline(m, n);
      return std::pair{labels, segmentation_json("even", labels, nullptr, config)};
    }
    auto mask = eligibility_mask(t, a.min_chars, lex);
    auto profile = texttiling_profile(t, mask, a.window, stop);
    BoundaryLabels labels =
        a.scoring == "depth"
            ? depth_boundaries(profile, m)
            : detect_boundaries(profile, a.multiplier, m, mask, a.min_separation.value_or(a.window));
    auto doc = segmentation_json("texttiling", labels, &profile, config);
    doc["degenerate_gaps"] = profile.degenerate_gaps;
    return std::pair{labels, doc};
  };

  if (fs::is_directory(a.transcript)) {
    if (a.out.empty()) throw ValidationError("batch mode needs --out DIR");
    run_batch(a.transcript, a.out, one);
  } else {
    auto t = read_transcript_file(a.transcript);
    write_output(a.out, one("", t).second.dump() + "\n");
  }
  manifest.emit(a.manifest, a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string reference, hypothesis, out, manifest;
  std::optional<std::size_t> k;
};

void setup_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* sub = app.add_subcommand("evaluate", "Score a hypothesis against a reference (Pk, WinDiff)");
  add_opt(sub, "reference", a.reference,
          "Segmentation output, transcript with topic_change flags, or a 0/1 string")
      ->required();
  add_opt(sub, "hypothesis", a.hypothesis, "Same forms as --reference")->required();
  add_opt(sub, "k", a.k, "Window size (default: half the mean reference segment length)")
      ->check(CLI::PositiveNumber);
  add_opt(sub, "out", a.out, "Output file (default: stdout)");
  add_opt(sub, "manifest", a.manifest, "Manifest path (default: <out>.manifest.json)");
}

bool is_boundary_literal(const std::string& s) {
  return !s.empty() && s.find_first_not_of("01") == std::string::npos;
}

// Accepts a segmentation output file, a transcript with flags, or a literal.
std::string load_boundary_string(const std::string& arg) {
  if (!fs::exists(arg)) {
    if (is_boundary_literal(arg)) return arg;
    throw IoError("cannot open '" + arg + "'");
  }
  const auto text = read_file(arg);
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_object() && doc.contains("labels")) {
    if (!doc["labels"].is_string()) throw FormatError("'" + arg + "': labels is not a string");
    auto s = doc["labels"].get<std::string>();
    validate_boundary_string(s, arg);
    return s;
  }
  std::istringstream in(text);
  return labels_to_boundary_string(reference_labels(parse_transcript(in)));
}

int run_evaluate(const EvaluateArgs& a) {
  RunManifest manifest("evaluate");
  if (fs::exists(a.reference)) manifest.add_input(a.reference);
  if (fs::exists(a.hypothesis)) manifest.add_input(a.hypothesis);
  const auto ref = load_boundary_string(a.reference);
  const auto hyp = load_boundary_string(a.hypothesis);
  const std::size_t k = a.k ? *a.k : default_window(ref);
  manifest.set_config({{"k", k}, {"k_source", a.k ? "flag" : "default"}});
  const auto p = pk(ref, hyp, k);
  const auto w = windiff(ref, hyp, k);
  ordered_json out{{"pk", p.value}, {"windiff", w.value}, {"k", k}};
  write_output(a.out, out.dump() + "\n");
  manifest.emit(a.manifest, a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// curve

struct CurveArgs {
  std::string input, out, manifest;
};

void setup_curve(CLI::App& app, CurveArgs& a) {
  auto* sub = app.add_subcommand("curve", "Export a similarity profile as CSV for plotting");
  add_opt(sub, "input", a.input, "Segmentation output file")->required();
  add_opt(sub, "out", a.out, "CSV file (default: stdout)");
  add_opt(sub, "manifest", a.manifest, "Manifest path (default: <out>.manifest.json)");
}

int run_curve(const CurveArgs& a) {
  RunManifest manifest("curve");
  manifest.add_input(a.input);
  const auto text = read_file(a.input);
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (!doc.is_object()) throw FormatError("'" + a.input + "' is not a segmentation output");
  auto prof = doc.find("profile");
  if (prof == doc.end() || !prof->is_array() || prof->empty())
    throw FormatError("'" + a.input + "' has no similarity profile");
  auto map = doc.find("gap_utterance");
  auto labels = doc.find("labels");
  if (map == doc.end() || !map->is_array() || map->size() != prof->size() ||
      labels == doc.end() || !labels->is_string())
    throw FormatError("'" + a.input + "' lacks gap positions or labels for its profile");
  const auto lab = labels->get<std::string>();
  const auto sims = prof->get<std::vector<double>>();
  const auto gaps = map->get<std::vector<std::size_t>>();
  const auto stats = profile_stats(sims);

  std::string csv;
  csv += "# mu=" + format_double(doc.value("mu", stats.mean)) + "\n";
  csv += "# sigma=" + format_double(doc.value("sigma", stats.spread)) + "\n";
  for (std::size_t g = 0; g < sims.size(); ++g) {
    if (gaps[g] >= lab.size()) throw FormatError("gap position outside labels");
    csv += std::to_string(g) + "," + format_double(sims[g]) + "," +
           (lab[gaps[g]] == '1' ? "1" : "0") + "\n";
  }
  manifest.set_config({{"rows", sims.size()}});
  write_output(a.out, csv);
  manifest.emit(a.manifest, a.out);
  return 0;
}

}  // namespace
}  // namespace segtile::cli

int main(int argc, char** argv) {
  using namespace segtile::cli;
  CLI::App app{"Unsupervised topic segmentation of meeting transcripts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SegmentArgs seg;
  BaselineArgs base;
  EvaluateArgs eval;
  CurveArgs curve;
  setup_segment(app, seg);
  setup_baseline(app, base);
  setup_evaluate(app, eval);
  setup_curve(app, curve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (app.got_subcommand("segment")) return run_segment(seg);
    if (app.got_subcommand("baseline")) return run_baseline(base);
    if (app.got_subcommand("evaluate")) return run_evaluate(eval);
    if (app.got_subcommand("curve")) return run_curve(curve);
  } catch (const segtile::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const segtile::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
