#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mmpipe/corpus.hpp"
#include "mmpipe/errors.hpp"
#include "mmpipe/evalkit.hpp"
#include "mmpipe/minhash.hpp"
#include "mmpipe/mixture.hpp"
#include "mmpipe/moe.hpp"
#include "mmpipe/packer.hpp"
#include "mmpipe/scaling.hpp"
#include "mmpipe/serde.hpp"
#include "mmpipe/visgeom.hpp"
#include "run_util.hpp"

namespace mmpipe::cli {

namespace {

using nlohmann::json;

void emit(std::ostream& out, const json& j) { out << j.dump() << "\n"; }

// Routes a record either to stdout or to a staged output file.
class LineSink {
 public:
  explicit LineSink(std::ostream& fallback) : fallback_(&fallback) {}

  void line(const json& j) {
    if (buffered_) {
      buffer_ << j.dump() << "\n";
    } else {
      emit(*fallback_, j);
    }
  }

  void buffer() { buffered_ = true; }
  std::string take() { return buffer_.str(); }
  bool buffered() const { return buffered_; }

 private:
  std::ostream* fallback_;
  std::ostringstream buffer_;
  bool buffered_ = false;
};

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// corpus-build
// ---------------------------------------------------------------------------

int run_corpus_build(const GlobalOptions& g, const CorpusBuildOptions& opt) {
  using namespace mmpipe::corpus;

  RunWriter writer("corpus-build", g.seed);
  writer.add_input(opt.pages_path);
  writer.set_param("max_images", std::to_string(opt.max_images));
  writer.set_param("min_tokens", std::to_string(opt.min_tokens));
  writer.set_param("dedup_max", std::to_string(opt.dedup_max));

  std::unordered_map<std::string, ImageRecord> image_meta;
  if (!opt.images_path.empty()) {
    writer.add_input(opt.images_path);
    for (const std::string& line : read_lines(opt.images_path)) {
      ImageRecord rec = serde::parse_image_meta(line);
      image_meta[rec.url] = std::move(rec);
    }
  }

  TextFilterConfig text_cfg;
  text_cfg.min_tokens = static_cast<std::size_t>(opt.min_tokens);
  if (!opt.blocklist_path.empty()) {
    writer.add_input(opt.blocklist_path);
    text_cfg.blocklist = read_lines(opt.blocklist_path);
  }

  std::map<std::string, std::size_t> image_rejects;
  std::map<std::string, std::size_t> doc_rejects;
  std::map<std::string, std::size_t> text_rejects;
  std::size_t pages = 0;
  std::size_t malformed = 0;

  std::vector<InterleavedDoc> candidates;
  std::ostringstream text_out;
  std::size_t text_kept = 0;

  for (const std::string& line : read_lines(opt.pages_path)) {
    const RawPage page = serde::parse_raw_page(line);
    ++pages;

    std::vector<DocSegment> segments;
    try {
      segments = parse_page(page);
    } catch (const MalformedMarkup& e) {
      if (opt.skip_malformed) {
        ++malformed;
        continue;
      }
      throw ParseError(e.what());
    }

    // Text-only rendition of the page.
    {
      std::string text;
      for (const DocSegment& seg : segments) {
        if (const auto* t = std::get_if<TextSegment>(&seg)) {
          if (!text.empty()) text.push_back(' ');
          text += t->content;
        }
      }
      TextDoc doc{page.page_id, std::move(text), 0};
      doc.token_estimate = estimate_tokens(doc.text);
      const FilterDecision decision = text_quality_filter(doc, text_cfg);
      if (decision.keep) {
        ++text_kept;
        text_out << serde::text_doc_line(doc) << "\n";
      } else {
        ++text_rejects[std::string(reject_reason_name(decision.reason))];
      }
    }

    // Attach metadata and filter the images.
    InterleavedDoc candidate;
    candidate.doc_id = page.page_id;
    for (DocSegment& seg : segments) {
      auto* img = std::get_if<ImageSegment>(&seg);
      if (img == nullptr) {
        candidate.segments.push_back(std::move(seg));
        continue;
      }
      const auto meta = image_meta.find(img->image.url);
      if (meta != image_meta.end()) {
        img->image = meta->second;
      }
      const FilterDecision decision = filter_image(img->image);
      if (decision.keep) {
        candidate.segments.push_back(std::move(seg));
      } else {
        ++image_rejects[std::string(reject_reason_name(decision.reason))];
      }
    }

    const FilterDecision decision = filter_document(candidate, opt.max_images);
    if (decision.keep) {
      candidates.push_back(std::move(candidate));
    } else {
      ++doc_rejects[std::string(reject_reason_name(decision.reason))];
    }
  }

  // Pass 1: corpus-wide image counts over filtered candidates.
  const DedupCounts counts = count_images(candidates);

  // Pass 2: per-document dedup, parallel over read-only counts.
  std::vector<InterleavedDoc> deduped(candidates.size());
  std::vector<DedupStats> dedup_stats(candidates.size());
  std::vector<RejectReason> recheck(candidates.size(), RejectReason::ok);
  parallel_for(candidates.size(), g.jobs, [&](std::size_t i) {
    deduped[i] =
        apply_image_dedup(candidates[i], counts,
                          static_cast<std::uint64_t>(opt.dedup_max),
                          &dedup_stats[i]);
    recheck[i] = filter_document(deduped[i], opt.max_images).reason;
  });

  std::ostringstream interleaved_out;
  std::size_t interleaved_kept = 0;
  DedupStats removed_total;
  for (std::size_t i = 0; i < deduped.size(); ++i) {
    removed_total.removed_global += dedup_stats[i].removed_global;
    removed_total.removed_page += dedup_stats[i].removed_page;
    if (recheck[i] == RejectReason::ok) {
      ++interleaved_kept;
      interleaved_out << serde::interleaved_doc_line(deduped[i]) << "\n";
    } else {
      ++doc_rejects[std::string(reject_reason_name(recheck[i]))];
    }
  }

  json stats{{"pages", pages},
             {"malformed_pages", malformed},
             {"interleaved_kept", interleaved_kept},
             {"text_kept", text_kept},
             {"image_rejections", image_rejects},
             {"image_dedup",
              {{"global_dup", removed_total.removed_global},
               {"page_dup", removed_total.removed_page}}},
             {"doc_rejections", doc_rejects},
             {"text_rejections", text_rejects}};

  writer.stage_output(opt.out_interleaved, interleaved_out.str());
  writer.stage_output(opt.out_text, text_out.str());
  writer.stage_output(opt.stats_path, stats.dump(2) + "\n");
  writer.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// corpus-dedup
// ---------------------------------------------------------------------------

int run_corpus_dedup(const GlobalOptions& g, const CorpusDedupOptions& opt) {
  using namespace mmpipe::corpus;

  if (opt.bands * opt.rows != opt.num_perm) {
    throw UsageError("InvalidParams: bands * rows must equal num_perm");
  }
  if (opt.num_perm < 16 || opt.shingle_len < 1) {
    throw UsageError("InvalidParams: num_perm >= 16 and shingle_len >= 1");
  }

  RunWriter writer("corpus-dedup", g.seed);
  writer.add_input(opt.in_path);
  writer.set_param("num_perm", std::to_string(opt.num_perm));
  writer.set_param("bands", std::to_string(opt.bands));
  writer.set_param("rows", std::to_string(opt.rows));
  writer.set_param("threshold", fmt_double(opt.threshold));

  std::vector<TextDoc> docs;
  for (const std::string& line : read_lines(opt.in_path)) {
    docs.push_back(serde::parse_text_doc(line));
  }

  LshParams params;
  params.num_perm = opt.num_perm;
  params.bands = opt.bands;
  params.rows = opt.rows;
  params.threshold_jaccard = opt.threshold;
  params.shingle_len = opt.shingle_len;
  const std::vector<DupPair> pairs = lsh_near_duplicates(docs, params);

  // Keep-first policy: the later document of every reported pair is dropped.
  std::vector<bool> removed(docs.size(), false);
  for (const DupPair& pair : pairs) removed[pair.b] = true;

  std::ostringstream out;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (removed[i]) continue;
    ++kept;
    out << serde::text_doc_line(docs[i]) << "\n";
  }
  writer.set_param("kept", std::to_string(kept));
  writer.set_param("removed", std::to_string(docs.size() - kept));
  writer.stage_output(opt.out_path, out.str());

  if (!opt.pairs_path.empty()) {
    std::ostringstream pairs_out;
    for (const DupPair& pair : pairs) {
      emit(pairs_out, json{{"a_id", docs[pair.a].doc_id},
                           {"b_id", docs[pair.b].doc_id},
                           {"estimated_jaccard", pair.estimated_jaccard},
                           {"exact", pair.exact}});
    }
    writer.stage_output(opt.pairs_path, pairs_out.str());
  }
  writer.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// mixture-snapshot
// ---------------------------------------------------------------------------

namespace {

std::vector<double> parse_weights(const std::string& spec) {
  std::vector<double> weights;
  std::istringstream in(spec);
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      std::size_t used = 0;
      weights.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw UsageError("BadWeights: cannot parse weight '" + field + "'");
    }
  }
  return weights;
}

}  // namespace

int run_mixture_snapshot(const GlobalOptions& g,
                         const MixtureSnapshotOptions& opt) {
  using namespace mmpipe::mixture;

  const std::vector<double> weights = parse_weights(opt.weights);
  if (weights.size() != 3) {
    throw UsageError("BadWeights: expected 3 weights "
                     "(interleaved,caption_pairs,text_only)");
  }
  double total = 0.0;
  for (const double w : weights) {
    if (w < 0.0) throw UsageError("BadWeights: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw UsageError("BadWeights: weights sum to " + fmt_double(total) +
                     ", expected 1.0");
  }

  RunWriter writer("mixture-snapshot", g.seed);
  writer.set_param("weights", opt.weights);
  writer.set_param("entries", std::to_string(opt.entries));

  const std::array<std::pair<SourceName, const std::string*>, 3> inputs{{
      {SourceName::interleaved, &opt.interleaved_path},
      {SourceName::caption_pairs, &opt.captions_path},
      {SourceName::text_only, &opt.text_path},
  }};

  std::vector<SourceSpec> sources;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    SourceSpec spec;
    spec.name = inputs[i].first;
    spec.weight = weights[i];
    const std::string& path = *inputs[i].second;
    if (weights[i] > 0.0) {
      if (path.empty()) {
        throw UsageError(std::string("EmptySource: no input file for ") +
                         std::string(source_name_str(spec.name)));
      }
      writer.add_input(path);
      for (const std::string& line : read_lines(path)) {
        if (spec.name == SourceName::text_only) {
          spec.doc_ids.push_back(serde::parse_text_doc(line).doc_id);
        } else {
          spec.doc_ids.push_back(serde::parse_interleaved_doc(line).doc_id);
        }
      }
      if (spec.doc_ids.empty()) {
        throw UsageError(std::string("EmptySource: ") +
                         std::string(source_name_str(spec.name)) +
                         " has no documents");
      }
    }
    sources.push_back(std::move(spec));
  }

  const Snapshot snapshot = build_snapshot(sources, opt.entries, g.seed);
  std::ostringstream out;
  write_snapshot(out, snapshot);
  writer.stage_output(opt.out_path, out.str());
  writer.commit();

  const auto counts = snapshot.counts();
  emit(std::cout, json{{"entries", snapshot.entries.size()},
                       {"counts",
                        {{"interleaved", counts[0]},
                         {"caption_pairs", counts[1]},
                         {"text_only", counts[2]}}}});
  return 0;
}

// ---------------------------------------------------------------------------
// pack
// ---------------------------------------------------------------------------

int run_pack(const GlobalOptions& g, const PackOptions& opt) {
  using namespace mmpipe::packer;
  using mmpipe::corpus::InterleavedDoc;
  using mmpipe::corpus::TextSegment;

  if (opt.seq_len <= 0 || opt.tokens_per_image <= 0 || opt.max_images < 0) {
    throw UsageError("InvalidParams: seq-len and tokens-per-image must be "
                     "positive");
  }
  if (opt.tokens_per_image > opt.seq_len) {
    throw UsageError("OversizedSlot: tokens-per-image exceeds seq-len");
  }
  if (opt.dense_mask && opt.seq_len > 512) {
    throw UsageError("InvalidParams: --dense-mask requires seq-len <= 512");
  }

  RunWriter writer("pack", g.seed);
  writer.add_input(opt.snapshot_path);
  writer.set_param("seq_len", std::to_string(opt.seq_len));
  writer.set_param("max_images", std::to_string(opt.max_images));
  writer.set_param("tokens_per_image", std::to_string(opt.tokens_per_image));
  writer.set_param("batch_size", std::to_string(opt.batch_size));

  std::ifstream snap_in(opt.snapshot_path);
  if (!snap_in) throw IoError("cannot open " + opt.snapshot_path);
  const mixture::Snapshot snapshot = mixture::read_snapshot(snap_in);

  std::set<mixture::SourceName> needed;
  for (const mixture::SnapshotEntry& e : snapshot.entries) {
    needed.insert(e.source);
  }

  std::unordered_map<std::string, InterleavedDoc> docs;
  const auto load_interleaved = [&](const std::string& path) {
    if (path.empty()) {
      throw UsageError("InvalidParams: snapshot references a source with no "
                       "input file");
    }
    writer.add_input(path);
    for (const std::string& line : read_lines(path)) {
      InterleavedDoc doc = serde::parse_interleaved_doc(line);
      docs.emplace(doc.doc_id, std::move(doc));
    }
  };
  if (needed.count(mixture::SourceName::interleaved) > 0) {
    load_interleaved(opt.interleaved_path);
  }
  if (needed.count(mixture::SourceName::caption_pairs) > 0) {
    load_interleaved(opt.captions_path);
  }
  if (needed.count(mixture::SourceName::text_only) > 0) {
    if (opt.text_path.empty()) {
      throw UsageError("InvalidParams: snapshot references text_only but no "
                       "--text file given");
    }
    writer.add_input(opt.text_path);
    for (const std::string& line : read_lines(opt.text_path)) {
      mmpipe::corpus::TextDoc doc = serde::parse_text_doc(line);
      InterleavedDoc wrapped;
      wrapped.doc_id = doc.doc_id;
      if (!doc.text.empty()) {
        wrapped.segments.push_back(TextSegment{std::move(doc.text)});
      }
      docs.emplace(wrapped.doc_id, std::move(wrapped));
    }
  }

  BatchPlan plan;
  plan.batch_size = opt.batch_size;
  plan.seq_len = opt.seq_len;
  plan.max_images_per_seq = opt.max_images;
  plan.tokens_per_image = opt.tokens_per_image;

  Vocabulary vocab;
  SequencePacker packer(plan);
  std::ostringstream out;
  std::size_t sequences = 0;
  const auto write_seq = [&](const PackedSequence& seq) {
    out << serde::packed_sequence_line(seq, opt.dense_mask) << "\n";
    ++sequences;
  };

  for (const mixture::SnapshotEntry& entry : snapshot.entries) {
    const auto it = docs.find(entry.doc_id);
    if (it == docs.end()) {
      throw ParseError("snapshot doc '" + entry.doc_id +
                       "' not found in inputs");
    }
    const TokenStream stream =
        lay_out_document(it->second, opt.tokens_per_image, vocab);
    for (const PackedSequence& seq : packer.push(stream)) write_seq(seq);
  }
  if (const auto tail = packer.finish()) write_seq(*tail);

  writer.set_param("sequences", std::to_string(sequences));
  writer.stage_output(opt.out_path, out.str());
  if (!opt.vocab_out.empty()) {
    std::ostringstream vocab_out;
    vocab.write(vocab_out);
    writer.stage_output(opt.vocab_out, vocab_out.str());
  }
  writer.commit();

  json summary{{"sequences", sequences}, {"vocab_size", vocab.size()}};
  // Token accounting is only defined when the image budget fits a sequence.
  if (static_cast<long>(opt.max_images) * opt.tokens_per_image <=
      opt.seq_len) {
    const TokenAccounting acc = batch_token_accounting(plan);
    summary["accounting"] = {{"total_positions", acc.total_positions},
                             {"max_image_tokens", acc.max_image_tokens},
                             {"min_text_positions", acc.min_text_positions}};
  }
  emit(std::cout, summary);
  return 0;
}

// ---------------------------------------------------------------------------
// visgeom-budget
// ---------------------------------------------------------------------------

int run_visgeom_budget(const GlobalOptions& g,
                       const VisgeomBudgetOptions& opt) {
  using namespace mmpipe::visgeom;

  if (opt.hires_last < 0 || opt.hires_last > opt.shots) {
    throw UsageError("InvalidParams: --hires-last must lie in [0, --shots]");
  }

  FewShotBudget budget;
  budget.shots_k = opt.shots;
  budget.hires_last_n = opt.hires_last;
  budget.hi_tokens = opt.hi_tokens;
  budget.lo_tokens = opt.lo_tokens;
  budget.images_per_example = opt.images_per_example;
  const FewShotUsage usage = fewshot_token_budget(budget);

  LineSink sink(std::cout);
  if (!opt.out_path.empty()) sink.buffer();

  for (int shot = 0; shot < opt.shots; ++shot) {
    const bool hires = shot >= opt.shots - opt.hires_last;
    sink.line(json{
        {"shot", shot},
        {"mode", hires ? "hires" : "lores"},
        {"effective_images",
         opt.images_per_example * (hires ? 5 : 1)},
        {"tokens",
         opt.images_per_example * (hires ? opt.hi_tokens : opt.lo_tokens)}});
  }
  sink.line(json{{"shots", opt.shots},
                 {"hires_last", opt.hires_last},
                 {"effective_images", usage.effective_images},
                 {"image_tokens", usage.image_tokens}});

  if (!opt.out_path.empty()) {
    RunWriter writer("visgeom-budget", g.seed);
    writer.set_param("shots", std::to_string(opt.shots));
    writer.set_param("hires_last", std::to_string(opt.hires_last));
    writer.stage_output(opt.out_path, sink.take());
    writer.commit();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// scaling-plan
// ---------------------------------------------------------------------------

int run_scaling_plan(const GlobalOptions& g, const ScalingPlanOptions& opt) {
  using namespace mmpipe::scaling;

  if (opt.params <= 0.0) {
    throw UsageError("InvalidParams: --params must be positive");
  }
  if (opt.final_fraction <= 0.0 || opt.final_fraction > 1.0 ||
      opt.warmup_steps < 0 || opt.warmup_steps >= opt.total_steps) {
    throw UsageError("InvalidParams: bad schedule configuration");
  }

  ScalingFit fit;
  std::vector<std::filesystem::path> fit_input;
  if (opt.fit == "default") {
    fit = default_fit();
  } else {
    std::vector<std::pair<double, double>> points;
    for (const std::string& line : read_lines(opt.fit)) {
      std::istringstream in(line);
      double n = 0.0, lr = 0.0;
      if (!(in >> n >> lr)) {
        throw ParseError("fit file line is not '<params> <lr>': " + line);
      }
      points.emplace_back(n, lr);
    }
    fit = fit_loglog(points);
    fit_input.push_back(opt.fit);
  }

  const double eta = predict_lr(fit, opt.params);
  const double lambda = weight_decay_for(eta);

  ScheduleConfig schedule;
  schedule.peak_lr = eta;
  schedule.warmup_steps = opt.warmup_steps;
  schedule.total_steps = opt.total_steps;
  schedule.final_fraction = opt.final_fraction;

  LineSink sink(std::cout);
  if (!opt.out_path.empty()) sink.buffer();

  sink.line(json{{"params", opt.params},
                 {"eta", eta},
                 {"lambda", lambda},
                 {"fit", {{"slope_a", fit.slope_a},
                          {"intercept_b", fit.intercept_b}}}});
  sink.line(json{{"step", 0}, {"lr", lr_at_step(schedule, 0)}});
  sink.line(json{{"step", opt.warmup_steps},
                 {"lr", lr_at_step(schedule, opt.warmup_steps)}});
  const int samples = std::max(opt.schedule_samples, 2);
  for (int i = 1; i < samples; ++i) {
    const long t = opt.warmup_steps + (opt.total_steps - opt.warmup_steps) *
                                          static_cast<long>(i) /
                                          (samples - 1);
    sink.line(json{{"step", t}, {"lr", lr_at_step(schedule, t)}});
  }

  if (!opt.out_path.empty()) {
    RunWriter writer("scaling-plan", g.seed);
    for (const auto& path : fit_input) writer.add_input(path);
    writer.set_param("params", fmt_double(opt.params));
    writer.stage_output(opt.out_path, sink.take());
    writer.commit();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// moe-audit
// ---------------------------------------------------------------------------

int run_moe_audit(const GlobalOptions& g, const MoeAuditOptions& opt) {
  using namespace mmpipe::moe;

  if (opt.experts < 1 || opt.top_k < 1 || opt.top_k > opt.experts) {
    throw UsageError("InvalidParams: need 1 <= topk <= experts");
  }

  LogitMatrix logits;
  for (const std::string& line : read_lines(opt.logits_path)) {
    std::istringstream in(line);
    std::vector<double> row;
    double v = 0.0;
    while (in >> v) row.push_back(v);
    if (!in.eof()) throw ParseError("non-numeric logits line: " + line);
    if (static_cast<int>(row.size()) != opt.experts) {
      throw ParseError("logits row has " + std::to_string(row.size()) +
                       " columns, expected " + std::to_string(opt.experts));
    }
    logits.push_back(std::move(row));
  }
  if (logits.empty()) throw ParseError("logits file is empty");

  const RouterOutput routed = route_topk(logits, opt.top_k);
  const AuxLoss lb = load_balance_loss(routed, opt.lb_coeff);
  const AuxLoss z = router_z_loss(logits, opt.z_coeff);

  LineSink sink(std::cout);
  if (!opt.out_path.empty()) sink.buffer();

  for (std::size_t t = 0; t < routed.tokens.size(); ++t) {
    sink.line(json{{"token", t},
                   {"experts", routed.tokens[t].experts},
                   {"weights", routed.tokens[t].weights}});
  }
  sink.line(json{{"dispatch_fraction", routed.dispatch_fraction},
                 {"mean_gate_prob", routed.mean_gate_prob},
                 {"load_balance", {{"raw", lb.raw}, {"scaled", lb.scaled}}},
                 {"router_z", {{"raw", z.raw}, {"scaled", z.scaled}}}});

  if (!opt.out_path.empty()) {
    RunWriter writer("moe-audit", g.seed);
    writer.add_input(opt.logits_path);
    writer.set_param("experts", std::to_string(opt.experts));
    writer.set_param("top_k", std::to_string(opt.top_k));
    writer.stage_output(opt.out_path, sink.take());
    writer.commit();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval-score
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, double> read_task_values(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  std::map<std::string, double> out;
  for (const auto& [task, value] : j.items()) {
    out[task] = value.get<double>();
  }
  return out;
}

}  // namespace

int run_eval_score(const GlobalOptions& g, const EvalScoreOptions& opt) {
  using namespace mmpipe::evalkit;

  // Aggregate mode: meta-average of per-task results against a baseline.
  if (!opt.meta_results.empty() || !opt.meta_baseline.empty()) {
    if (opt.meta_results.empty() || opt.meta_baseline.empty()) {
      throw UsageError("InvalidParams: --meta and --baseline go together");
    }
    const auto results = read_task_values(opt.meta_results);
    const auto baseline = read_task_values(opt.meta_baseline);
    const double value = meta_average(results, baseline);
    emit(std::cout, json{{"meta_average", value}, {"n", results.size()}});
    if (!opt.report_path.empty()) {
      RunWriter writer("eval-score", g.seed);
      writer.add_input(opt.meta_results);
      writer.add_input(opt.meta_baseline);
      writer.stage_output(
          opt.report_path,
          json{{"meta_average", value}, {"n", results.size()}}.dump() + "\n");
      writer.commit();
    }
    return 0;
  }

  TaskKind kind;
  if (opt.kind == "caption") {
    kind = TaskKind::caption;
  } else if (opt.kind == "vqa") {
    kind = TaskKind::vqa;
  } else {
    throw UsageError("InvalidParams: --kind must be caption or vqa");
  }
  if (opt.dataset_path.empty()) {
    throw UsageError("InvalidParams: --dataset is required");
  }
  if (opt.predictions_path.empty() && opt.emit_prompts.empty()) {
    throw UsageError("InvalidParams: need --predictions and/or "
                     "--emit-prompts");
  }

  RunWriter writer("eval-score", g.seed);
  writer.add_input(opt.dataset_path);
  writer.set_param("task", opt.task);
  writer.set_param("kind", opt.kind);
  if (!opt.split.empty()) writer.set_param("split", opt.split);

  std::vector<EvalExample> dataset;
  std::unordered_map<std::string, std::size_t> by_id;
  for (const std::string& line : read_lines(opt.dataset_path)) {
    EvalExample ex = serde::parse_eval_example(line);
    by_id[ex.example_id] = dataset.size();
    dataset.push_back(std::move(ex));
  }

  if (!opt.emit_prompts.empty()) {
    std::ostringstream prompts;
    for (const EvalExample& ex : dataset) {
      const ShotSet shots = sample_shots(dataset, opt.shots, ex, g.seed);
      prompts << json{{"example_id", ex.example_id},
                      {"prompt", build_prompt(kind, shots)}}
                     .dump()
              << "\n";
    }
    writer.set_param("shots", std::to_string(opt.shots));
    writer.stage_output(opt.emit_prompts, prompts.str());
  }

  if (!opt.predictions_path.empty()) {
    if (opt.report_path.empty()) {
      throw UsageError("InvalidParams: --report is required when scoring");
    }
    writer.add_input(opt.predictions_path);

    std::vector<std::pair<std::size_t, std::string>> joined;
    for (const std::string& line : read_lines(opt.predictions_path)) {
      auto [id, text] = serde::parse_prediction(line);
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw ParseError("prediction for unknown example '" + id + "'");
      }
      if (opt.truncate) text = truncate_at_stop(text, kind);
      joined.emplace_back(it->second, std::move(text));
    }

    ScoreReport report;
    report.task = opt.task;
    report.n = joined.size();
    if (kind == TaskKind::caption) {
      report.metric = "cider";
      std::vector<std::string> candidates;
      std::vector<std::vector<std::string>> references;
      for (const auto& [idx, text] : joined) {
        candidates.push_back(text);
        references.push_back(dataset[idx].references);
      }
      report.value = cider(candidates, references);
    } else {
      report.metric = "vqa_accuracy";
      double total = 0.0;
      for (const auto& [idx, text] : joined) {
        const EvalExample& ex = dataset[idx];
        if (!ex.answers_10) {
          throw MissingField("example '" + ex.example_id +
                             "' has no answers_10");
        }
        total += vqa_accuracy(text, *ex.answers_10);
      }
      report.value = joined.empty() ? 0.0 : total / static_cast<double>(
                                                        joined.size());
    }

    const std::string line = serde::score_report_line(report);
    std::cout << line << "\n";
    writer.stage_output(opt.report_path, line + "\n");
  }

  writer.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int run_verify(const GlobalOptions&, const VerifyOptions& opt) {
  const artifacts::VerifyResult result =
      artifacts::verify_manifest(opt.manifest_path);
  if (result.ok) {
    emit(std::cout, json{{"ok", true}});
    return 0;
  }
  for (const std::string& mismatch : result.mismatches) {
    emit(std::cerr, json{{"error", "VerifyMismatch"}, {"message", mismatch}});
  }
  return 5;
}

}  // namespace mmpipe::cli
