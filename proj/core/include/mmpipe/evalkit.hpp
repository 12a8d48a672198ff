#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Few-shot evaluation harness: deterministic shot sampling, prompt
// construction with literal {IMAGE} placeholders, stop-token truncation, VQA
// answer normalization and consensus accuracy, CIDEr-D, and the baseline-
// normalized meta-average. This harness formats prompts and scores text; it
// never runs a model.

namespace mmpipe::evalkit {

enum class TaskKind { caption, vqa };

struct EvalExample {
  std::string example_id;
  std::vector<std::string> image_refs;
  std::optional<std::string> question;          // VQA only
  std::vector<std::string> references;          // captions or ground truths
  std::optional<std::vector<std::string>> answers_10;  // VQA: 10 annotators
};

struct ShotSet {
  std::vector<EvalExample> shots;
  EvalExample query;
  std::uint64_t seed = 0;
};

/// Seeded sampling without replacement, excluding the query by example_id.
/// Throws InsufficientData when fewer than k non-query examples exist.
ShotSet sample_shots(std::span<const EvalExample> dataset, int k,
                     const EvalExample& query, std::uint64_t seed);

/// Caption block: "{IMAGE} A photo of <caption>\n"; VQA block:
/// "{IMAGE} Question: <q> Short answer: <a>\n". The query block omits the
/// completion (and its leading space). Shot completions use the first
/// reference. Byte-exact.
std::string build_prompt(TaskKind kind, const ShotSet& shots);

/// Cuts at the earliest stop marker (caption: newline; VQA: newline, ".",
/// ",", "Question"), then trims surrounding whitespace.
std::string truncate_at_stop(std::string_view text, TaskKind kind);

/// Frozen normalization table, applied in order:
///   1. lowercase (ASCII)
///   2. punctuation: kept when between two digits and in {',', '.'},
///      otherwise replaced by a space
///   3. number words zero..ten mapped to digits (whole word)
///   4. articles {a, an, the} dropped (whole word)
///   5. whitespace collapsed to single spaces, ends trimmed
/// Idempotent: normalize(normalize(x)) == normalize(x).
std::string normalize_vqa_answer(std::string_view text);

/// Consensus accuracy min(matches/3, 1) over the 10 normalized annotator
/// answers. Throws WrongAnnotatorCount unless exactly 10 are given.
double vqa_accuracy(std::string_view prediction,
                    std::span<const std::string> answers_10);

/// CIDEr-D: n-grams 1..4 over lowercased whitespace tokens, corpus-level IDF
/// from the reference sets, clipped TF-IDF similarity per n, Gaussian length
/// penalty (sigma = 6), 10 * mean over n per item. Requires >= 2 items.
double cider(std::span<const std::string> candidates,
             std::span<const std::vector<std::string>> references);

/// Per-item CIDEr-D scores (same corpus-level IDF as cider()).
std::vector<double> cider_per_item(
    std::span<const std::string> candidates,
    std::span<const std::vector<std::string>> references);

/// 100 * mean over tasks of value/baseline. Throws MissingBaseline /
/// ZeroBaseline on bad baselines.
double meta_average(const std::map<std::string, double>& results,
                    const std::map<std::string, double>& baseline);

struct ScoreReport {
  std::string task;
  std::string metric;  // "cider" or "vqa_accuracy"
  double value = 0.0;
  std::size_t n = 0;
};

}  // namespace mmpipe::evalkit
