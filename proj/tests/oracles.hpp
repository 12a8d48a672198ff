#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

// Test-only oracles. Each one recomputes an expected value through an
// independent route (brute force, direct formula) so library results can be
// checked without trusting the implementation under test.

namespace oracles {

/// Exact Jaccard over two sorted unique hash sets.
inline double exact_jaccard(const std::vector<std::uint64_t>& a,
                            const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// OLS through the mean-centered formulation (the library uses raw sums).
inline std::pair<double, double> ols_centered(
    const std::vector<std::pair<double, double>>& xy) {
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// ---------------------------------------------------------------------------
// CIDEr-D oracle: direct transcription of the metric definition with plain
// maps keyed on n-gram word vectors.
// ---------------------------------------------------------------------------

using Ngram = std::vector<std::string>;

inline std::vector<std::string> lower_words(const std::string& sentence) {
  std::vector<std::string> words;
  std::string current;
  for (const char c : sentence + " ") {
    if (c == ' ' || c == '\t' || c == '\n') {
      if (!current.empty()) {
        words.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return words;
}

inline std::map<Ngram, int> ngram_tf(const std::vector<std::string>& words,
                                     int n) {
  std::map<Ngram, int> tf;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size();
       ++i) {
    ++tf[Ngram(words.begin() + static_cast<std::ptrdiff_t>(i),
               words.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return tf;
}

inline std::vector<double> cider_oracle(
    const std::vector<std::string>& candidates,
    const std::vector<std::vector<std::string>>& references,
    double sigma = 6.0) {
  const std::size_t m = candidates.size();
  // Document frequency per n-gram over reference sets.
  std::map<Ngram, int> df;
  for (const auto& refs : references) {
    std::set<Ngram> seen;
    for (const std::string& ref : refs) {
      const auto words = lower_words(ref);
      for (int n = 1; n <= 4; ++n) {
        for (const auto& [ngram, tf] : ngram_tf(words, n)) seen.insert(ngram);
      }
    }
    for (const Ngram& g : seen) ++df[g];
  }
  const double log_m = std::log(static_cast<double>(m));

  struct Vec {
    std::array<std::map<Ngram, double>, 4> v;
    std::array<double, 4> norm{};
    int length = 0;
  };
  const auto to_vec = [&](const std::string& sentence) {
    Vec out;
    const auto words = lower_words(sentence);
    out.length = static_cast<int>(words.size());
    for (int n = 1; n <= 4; ++n) {
      double norm_sq = 0.0;
      for (const auto& [ngram, tf] : ngram_tf(words, n)) {
        const auto it = df.find(ngram);
        const double d = it == df.end() ? 0.0 : it->second;
        const double w = tf * (log_m - std::log(std::max(1.0, d)));
        out.v[static_cast<std::size_t>(n - 1)][ngram] = w;
        norm_sq += w * w;
      }
      out.norm[static_cast<std::size_t>(n - 1)] = std::sqrt(norm_sq);
    }
    return out;
  };

  std::vector<double> scores;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec hyp = to_vec(candidates[i]);
    std::array<double, 4> acc{};
    for (const std::string& ref : references[i]) {
      const Vec rv = to_vec(ref);
      const double delta = hyp.length - rv.length;
      const double penalty =
          std::exp(-(delta * delta) / (2.0 * sigma * sigma));
      for (int n = 0; n < 4; ++n) {
        double dot = 0.0;
        for (const auto& [ngram, hv] : hyp.v[static_cast<std::size_t>(n)]) {
          const auto it = rv.v[static_cast<std::size_t>(n)].find(ngram);
          if (it != rv.v[static_cast<std::size_t>(n)].end()) {
            dot += std::min(hv, it->second) * it->second;
          }
        }
        const double norms = hyp.norm[static_cast<std::size_t>(n)] *
                             rv.norm[static_cast<std::size_t>(n)];
        acc[static_cast<std::size_t>(n)] +=
            norms > 0.0 ? (dot / norms) * penalty : 0.0;
      }
    }
    double score = 0.0;
    for (int n = 0; n < 4; ++n) {
      score += acc[static_cast<std::size_t>(n)] /
               static_cast<double>(references[i].size());
    }
    scores.push_back(10.0 * score / 4.0);
  }
  return scores;
}

}  // namespace oracles
