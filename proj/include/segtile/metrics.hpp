#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "segtile/error.hpp"

namespace segtile {

// Window-based segmentation error. value == mismatches / windows_evaluated.
struct MetricResult {
  double value = 0.0;
  std::size_t window_k = 0;
  std::size_t windows_evaluated = 0;
  std::size_t mismatches = 0;
};

inline void validate_boundary_string(std::string_view s, std::string_view what) {
  for (char c : s)
    if (c != '0' && c != '1')
      throw ValidationError(std::string(what) + " contains '" + std::string(1, c) +
                            "'; only '0' and '1' are allowed");
}

// round(len / (2 * boundaries)) with ties to even, never below 1.
inline std::size_t default_window(std::string_view ref) {
  validate_boundary_string(ref, "reference");
  std::size_t boundaries = 0;
  for (char c : ref) boundaries += c == '1';
  if (boundaries == 0)
    throw UndefinedWindowError("window undefined: reference has no boundaries");
  const std::size_t num = ref.size();
  const std::size_t den = 2 * boundaries;
  std::size_t k = num / den;
  const std::size_t rem = num % den;
  if (2 * rem > den || (2 * rem == den && k % 2 == 1)) ++k;
  return k < 1 ? 1 : k;
}

namespace detail {

inline void check_metric_args(std::string_view ref, std::string_view hyp, std::size_t k) {
  validate_boundary_string(ref, "reference");
  validate_boundary_string(hyp, "hypothesis");
  if (ref.size() != hyp.size())
    throw ValidationError("reference length " + std::to_string(ref.size()) +
                          " differs from hypothesis length " + std::to_string(hyp.size()));
  if (k < 1 || k >= ref.size())
    throw ValidationError("window k=" + std::to_string(k) + " must satisfy 1 <= k < " +
                          std::to_string(ref.size()));
}

inline std::vector<std::size_t> prefix_counts(std::string_view s) {
  std::vector<std::size_t> pre(s.size() + 1, 0);
  for (std::size_t i = 0; i < s.size(); ++i) pre[i + 1] = pre[i] + (s[i] == '1');
  return pre;
}

template <typename Mismatch>
MetricResult sliding_window(std::string_view ref, std::string_view hyp, std::size_t k,
                            Mismatch mismatch) {
  check_metric_args(ref, hyp, k);
  const auto r = prefix_counts(ref);
  const auto h = prefix_counts(hyp);
  MetricResult out;
  out.window_k = k;
  out.windows_evaluated = ref.size() - k + 1;
  for (std::size_t i = 0; i < out.windows_evaluated; ++i)
    if (mismatch(r[i + k] - r[i], h[i + k] - h[i])) ++out.mismatches;
  out.value = static_cast<double>(out.mismatches) / static_cast<double>(out.windows_evaluated);
  return out;
}

}  // namespace detail

// Fraction of k-wide windows where exactly one of ref and hyp has a boundary.
inline MetricResult pk(std::string_view ref, std::string_view hyp, std::size_t k) {
  return detail::sliding_window(ref, hyp, k, [](std::size_t a, std::size_t b) {
    return (a > 0) != (b > 0);
  });
}

// Fraction of k-wide windows where ref and hyp hold different boundary counts.
inline MetricResult windiff(std::string_view ref, std::string_view hyp, std::size_t k) {
  return detail::sliding_window(ref, hyp, k,
                                [](std::size_t a, std::size_t b) { return a != b; });
}

}  // namespace segtile
