#include "mmpipe/evalkit.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mmpipe/detrng.hpp"
#include "mmpipe/errors.hpp"

namespace mmpipe::evalkit {

namespace {

constexpr std::uint64_t kShotSampleTag = 0x6576616C2E73686Full;
constexpr int kMaxNgram = 4;
constexpr double kCiderSigma = 6.0;

const std::array<std::pair<std::string_view, std::string_view>, 11>
    kNumberWords{{{"zero", "0"},
                  {"one", "1"},
                  {"two", "2"},
                  {"three", "3"},
                  {"four", "4"},
                  {"five", "5"},
                  {"six", "6"},
                  {"seven", "7"},
                  {"eight", "8"},
                  {"nine", "9"},
                  {"ten", "10"}}};

bool is_article(std::string_view word) {
  return word == "a" || word == "an" || word == "the";
}

std::vector<std::string> whitespace_split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string placeholders_for(const EvalExample& ex) {
  const std::size_t n = std::max<std::size_t>(1, ex.image_refs.size());
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out.push_back(' ');
    out += "{IMAGE}";
  }
  return out;
}

const std::string& first_reference(const EvalExample& ex) {
  if (ex.references.empty()) {
    throw MissingField("example '" + ex.example_id + "' has no references");
  }
  return ex.references.front();
}

const std::string& question_of(const EvalExample& ex) {
  if (!ex.question) {
    throw MissingField("example '" + ex.example_id + "' has no question");
  }
  return *ex.question;
}

// --- CIDEr-D -------------------------------------------------------------

// Sentence statistics: per-n TF counts keyed on joined lowercase tokens.
struct NgramCounts {
  std::array<std::unordered_map<std::string, int>, kMaxNgram> tf;
  int length = 0;  // unigram total
};

NgramCounts count_ngrams(std::string_view sentence) {
  std::vector<std::string> words = whitespace_split(sentence);
  for (std::string& w : words) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
  }
  NgramCounts counts;
  counts.length = static_cast<int>(words.size());
  for (int n = 1; n <= kMaxNgram; ++n) {
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string key = words[i];
      for (int j = 1; j < n; ++j) {
        key.push_back('\x1f');
        key += words[i + static_cast<std::size_t>(j)];
      }
      ++counts.tf[static_cast<std::size_t>(n - 1)][key];
    }
  }
  return counts;
}

struct TfIdfVector {
  std::array<std::unordered_map<std::string, double>, kMaxNgram> values;
  std::array<double, kMaxNgram> norm{};
  int length = 0;
};

TfIdfVector to_tfidf(const NgramCounts& counts,
                     const std::unordered_map<std::string, int>& doc_freq,
                     double log_corpus_size) {
  TfIdfVector vec;
  vec.length = counts.length;
  for (int n = 0; n < kMaxNgram; ++n) {
    double norm_sq = 0.0;
    for (const auto& [ngram, tf] : counts.tf[static_cast<std::size_t>(n)]) {
      const auto it = doc_freq.find(ngram);
      const double df = it == doc_freq.end() ? 0.0 : it->second;
      const double idf = log_corpus_size - std::log(std::max(1.0, df));
      const double value = tf * idf;
      vec.values[static_cast<std::size_t>(n)][ngram] = value;
      norm_sq += value * value;
    }
    vec.norm[static_cast<std::size_t>(n)] = std::sqrt(norm_sq);
  }
  return vec;
}

// Clipped TF-IDF similarity with Gaussian length penalty, per n.
std::array<double, kMaxNgram> clipped_similarity(const TfIdfVector& hyp,
                                                 const TfIdfVector& ref) {
  const double delta = hyp.length - ref.length;
  const double penalty =
      std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
  std::array<double, kMaxNgram> sim{};
  for (int n = 0; n < kMaxNgram; ++n) {
    double dot = 0.0;
    for (const auto& [ngram, hv] : hyp.values[static_cast<std::size_t>(n)]) {
      const auto it = ref.values[static_cast<std::size_t>(n)].find(ngram);
      if (it == ref.values[static_cast<std::size_t>(n)].end()) continue;
      dot += std::min(hv, it->second) * it->second;
    }
    const double norms =
        hyp.norm[static_cast<std::size_t>(n)] * ref.norm[static_cast<std::size_t>(n)];
    sim[static_cast<std::size_t>(n)] = norms > 0.0 ? (dot / norms) * penalty : 0.0;
  }
  return sim;
}

}  // namespace

ShotSet sample_shots(std::span<const EvalExample> dataset, int k,
                     const EvalExample& query, std::uint64_t seed) {
  if (k < 0) throw InvalidParams("k must be >= 0");
  std::vector<std::size_t> pool;
  pool.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].example_id != query.example_id) pool.push_back(i);
  }
  if (pool.size() < static_cast<std::size_t>(k)) {
    throw InsufficientData("dataset has " + std::to_string(pool.size()) +
                           " candidates, need " + std::to_string(k));
  }

  rng::CounterRng gen(rng::combine(kShotSampleTag, seed));
  ShotSet out;
  out.query = query;
  out.seed = seed;
  // Partial Fisher-Yates: the first k slots are an unbiased sample.
  for (int i = 0; i < k; ++i) {
    const auto remaining = pool.size() - static_cast<std::size_t>(i);
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(gen.next_below(remaining));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    out.shots.push_back(dataset[pool[static_cast<std::size_t>(i)]]);
  }
  return out;
}

std::string build_prompt(TaskKind kind, const ShotSet& shots) {
  std::string prompt;
  for (const EvalExample& shot : shots.shots) {
    if (kind == TaskKind::caption) {
      prompt += placeholders_for(shot) + " A photo of " +
                first_reference(shot) + "\n";
    } else {
      prompt += placeholders_for(shot) + " Question: " + question_of(shot) +
                " Short answer: " + first_reference(shot) + "\n";
    }
  }
  if (kind == TaskKind::caption) {
    prompt += placeholders_for(shots.query) + " A photo of";
  } else {
    prompt += placeholders_for(shots.query) + " Question: " +
              question_of(shots.query) + " Short answer:";
  }
  return prompt;
}

std::string truncate_at_stop(std::string_view text, TaskKind kind) {
  static const std::vector<std::string_view> caption_stops = {"\n"};
  static const std::vector<std::string_view> vqa_stops = {"\n", ".", ",",
                                                          "Question"};
  const auto& stops =
      kind == TaskKind::caption ? caption_stops : vqa_stops;
  std::size_t cut = text.size();
  for (const std::string_view stop : stops) {
    const auto pos = text.find(stop);
    if (pos != std::string_view::npos) cut = std::min(cut, pos);
  }
  std::string_view head = text.substr(0, cut);
  while (!head.empty() &&
         std::isspace(static_cast<unsigned char>(head.front()))) {
    head.remove_prefix(1);
  }
  while (!head.empty() &&
         std::isspace(static_cast<unsigned char>(head.back()))) {
    head.remove_suffix(1);
  }
  return std::string(head);
}

std::string normalize_vqa_answer(std::string_view text) {
  // 1. lowercase, 2. punctuation pass.
  std::string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char lower = static_cast<char>(
        std::tolower(static_cast<unsigned char>(text[i])));
    if (std::ispunct(static_cast<unsigned char>(lower))) {
      const bool digit_sep =
          (lower == ',' || lower == '.') && i > 0 && i + 1 < text.size() &&
          std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 1]));
      cleaned.push_back(digit_sep ? lower : ' ');
    } else {
      cleaned.push_back(lower);
    }
  }
  // 3.-5. word-level passes.
  std::string out;
  for (const std::string& word : whitespace_split(cleaned)) {
    std::string_view mapped = word;
    for (const auto& [name, digit] : kNumberWords) {
      if (word == name) {
        mapped = digit;
        break;
      }
    }
    if (is_article(mapped)) continue;
    if (!out.empty()) out.push_back(' ');
    out += mapped;
  }
  return out;
}

double vqa_accuracy(std::string_view prediction,
                    std::span<const std::string> answers_10) {
  if (answers_10.size() != 10) {
    throw WrongAnnotatorCount("expected 10 annotator answers, got " +
                              std::to_string(answers_10.size()));
  }
  const std::string pred = normalize_vqa_answer(prediction);
  int matches = 0;
  for (const std::string& answer : answers_10) {
    if (normalize_vqa_answer(answer) == pred) ++matches;
  }
  return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

std::vector<double> cider_per_item(
    std::span<const std::string> candidates,
    std::span<const std::vector<std::string>> references) {
  if (candidates.size() != references.size()) {
    throw InvalidParams("candidate and reference counts differ");
  }
  if (candidates.size() < 2) {
    throw EmptyCorpus("CIDEr needs at least two items for corpus IDF");
  }

  // Document frequency over reference sets: one vote per item per n-gram.
  std::unordered_map<std::string, int> doc_freq;
  std::vector<std::vector<NgramCounts>> ref_counts(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    std::unordered_set<std::string> seen;
    for (const std::string& ref : references[i]) {
      ref_counts[i].push_back(count_ngrams(ref));
      for (const auto& per_n : ref_counts[i].back().tf) {
        for (const auto& [ngram, tf] : per_n) seen.insert(ngram);
      }
    }
    for (const std::string& ngram : seen) ++doc_freq[ngram];
  }
  const double log_corpus = std::log(static_cast<double>(references.size()));

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) {
      throw InvalidParams("item " + std::to_string(i) + " has no references");
    }
    const TfIdfVector hyp =
        to_tfidf(count_ngrams(candidates[i]), doc_freq, log_corpus);
    std::array<double, kMaxNgram> acc{};
    for (const NgramCounts& rc : ref_counts[i]) {
      const TfIdfVector ref = to_tfidf(rc, doc_freq, log_corpus);
      const auto sim = clipped_similarity(hyp, ref);
      for (int n = 0; n < kMaxNgram; ++n) {
        acc[static_cast<std::size_t>(n)] += sim[static_cast<std::size_t>(n)];
      }
    }
    double mean_over_n = 0.0;
    for (int n = 0; n < kMaxNgram; ++n) {
      mean_over_n += acc[static_cast<std::size_t>(n)] /
                     static_cast<double>(ref_counts[i].size());
    }
    mean_over_n /= kMaxNgram;
    scores.push_back(10.0 * mean_over_n);
  }
  return scores;
}

double cider(std::span<const std::string> candidates,
             std::span<const std::vector<std::string>> references) {
  const std::vector<double> scores = cider_per_item(candidates, references);
  double total = 0.0;
  for (const double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

double meta_average(const std::map<std::string, double>& results,
                    const std::map<std::string, double>& baseline) {
  if (results.empty()) throw InvalidParams("no task results");
  double ratio_sum = 0.0;
  for (const auto& [task, value] : results) {
    const auto it = baseline.find(task);
    if (it == baseline.end()) {
      throw MissingBaseline("no baseline value for task '" + task + "'");
    }
    if (it->second <= 0.0) {
      throw ZeroBaseline("baseline for task '" + task + "' must be > 0");
    }
    ratio_sum += value / it->second;
  }
  return 100.0 * ratio_sum / static_cast<double>(results.size());
}

}  // namespace mmpipe::evalkit
