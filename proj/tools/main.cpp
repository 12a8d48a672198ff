#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "mmpipe/errors.hpp"
#include "run_util.hpp"

// Exit codes: 0 ok, 2 bad arguments, 3 input parse failure, 4 module error,
// 5 verify mismatch. Errors print one machine-parsable JSON line to stderr.

namespace {

int report(const char* kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump()
            << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mmpipe::cli;

  CLI::App app{"Deterministic multimodal pre-training pipeline toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags are accepted after the subcommand too
  app.set_config("--config", "", "Read options from an INI/TOML file");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for all sampled decisions")
      ->capture_default_str();
  app.add_option("--jobs", global.jobs, "Worker threads for parallel stages")
      ->capture_default_str();

  CorpusBuildOptions corpus_build;
  auto* cb = app.add_subcommand(
      "corpus-build", "Build interleaved and text-only docs from raw pages");
  cb->add_option("--pages", corpus_build.pages_path, "Raw pages (JSONL)")
      ->required();
  cb->add_option("--images", corpus_build.images_path,
                 "Image metadata sidecar (JSONL)");
  cb->add_option("--out-interleaved", corpus_build.out_interleaved,
                 "Interleaved docs output")
      ->required();
  cb->add_option("--out-text", corpus_build.out_text, "Text docs output")
      ->required();
  cb->add_option("--stats", corpus_build.stats_path, "Rejection stats output")
      ->required();
  cb->add_option("--blocklist", corpus_build.blocklist_path,
                 "Blocklist terms, one per line");
  cb->add_option("--max-images", corpus_build.max_images,
                 "Max images per document")
      ->capture_default_str();
  cb->add_option("--min-tokens", corpus_build.min_tokens,
                 "Min tokens for text docs")
      ->capture_default_str();
  cb->add_option("--dedup-max", corpus_build.dedup_max,
                 "Max corpus occurrences before an image is dropped")
      ->capture_default_str();
  cb->add_flag("--skip-malformed", corpus_build.skip_malformed,
               "Count and skip pages with malformed markup");

  CorpusDedupOptions corpus_dedup;
  auto* cd = app.add_subcommand(
      "corpus-dedup", "Remove exact and near-duplicate text documents");
  cd->add_option("--in", corpus_dedup.in_path, "Text docs (JSONL)")
      ->required();
  cd->add_option("--out", corpus_dedup.out_path, "Deduplicated output")
      ->required();
  cd->add_option("--pairs", corpus_dedup.pairs_path,
                 "Optional duplicate-pair report");
  cd->add_option("--num-perm", corpus_dedup.num_perm, "MinHash permutations")
      ->capture_default_str();
  cd->add_option("--bands", corpus_dedup.bands, "LSH bands")
      ->capture_default_str();
  cd->add_option("--rows", corpus_dedup.rows, "Rows per band")
      ->capture_default_str();
  cd->add_option("--threshold", corpus_dedup.threshold,
                 "Jaccard threshold for near-duplicates")
      ->capture_default_str();
  cd->add_option("--shingle-len", corpus_dedup.shingle_len,
                 "Character shingle length")
      ->capture_default_str();

  MixtureSnapshotOptions mixture;
  auto* ms = app.add_subcommand("mixture-snapshot",
                                "Freeze a deterministic mixture snapshot");
  ms->add_option("--interleaved", mixture.interleaved_path,
                 "Interleaved docs (JSONL)");
  ms->add_option("--captions", mixture.captions_path,
                 "Caption-pair docs (JSONL)");
  ms->add_option("--text", mixture.text_path, "Text docs (JSONL)");
  ms->add_option("--weights", mixture.weights,
                 "Sampling probabilities interleaved,caption_pairs,text_only")
      ->capture_default_str();
  ms->add_option("--entries", mixture.entries, "Snapshot length")->required();
  ms->add_option("--out", mixture.out_path, "Snapshot file")->required();

  PackOptions pack;
  auto* pk = app.add_subcommand(
      "pack", "Pack snapshot documents into fixed-length sequences");
  pk->add_option("--snapshot", pack.snapshot_path, "Mixture snapshot file")
      ->required();
  pk->add_option("--interleaved", pack.interleaved_path,
                 "Interleaved docs (JSONL)");
  pk->add_option("--captions", pack.captions_path,
                 "Caption-pair docs (JSONL)");
  pk->add_option("--text", pack.text_path, "Text docs (JSONL)");
  pk->add_option("--out", pack.out_path, "Packed sequences output")
      ->required();
  pk->add_option("--vocab-out", pack.vocab_out, "Write the vocabulary");
  pk->add_option("--seq-len", pack.seq_len, "Sequence length")
      ->capture_default_str();
  pk->add_option("--max-images", pack.max_images, "Max images per sequence")
      ->capture_default_str();
  pk->add_option("--tokens-per-image", pack.tokens_per_image,
                 "Decoder tokens per image slot")
      ->capture_default_str();
  pk->add_option("--batch-size", pack.batch_size,
                 "Sequences per batch (accounting only)")
      ->capture_default_str();
  pk->add_flag("--dense-mask", pack.dense_mask,
               "Embed the dense attention mask (seq-len <= 512)");

  VisgeomBudgetOptions budget;
  auto* vb = app.add_subcommand("visgeom-budget",
                                "Few-shot image token budget table");
  vb->add_option("--shots", budget.shots, "In-context examples K")
      ->required();
  vb->add_option("--hires-last", budget.hires_last,
                 "Last N examples at high resolution")
      ->required();
  vb->add_option("--images-per-example", budget.images_per_example,
                 "Source images per example")
      ->capture_default_str();
  vb->add_option("--hi-tokens", budget.hi_tokens,
                 "Tokens per decomposed source image")
      ->capture_default_str();
  vb->add_option("--lo-tokens", budget.lo_tokens,
                 "Tokens per low-resolution image")
      ->capture_default_str();
  vb->add_option("--out", budget.out_path, "Write the table to a file");

  ScalingPlanOptions scaling;
  auto* sp = app.add_subcommand("scaling-plan",
                                "Learning-rate plan for a model size");
  sp->add_option("--params", scaling.params,
                 "Non-embedding parameter count N")
      ->required();
  sp->add_option("--fit", scaling.fit,
                 "'default' or a two-column (N, lr) fit file")
      ->capture_default_str();
  sp->add_option("--warmup", scaling.warmup_steps, "Warmup steps")
      ->capture_default_str();
  sp->add_option("--total-steps", scaling.total_steps, "Total steps")
      ->capture_default_str();
  sp->add_option("--final-fraction", scaling.final_fraction,
                 "Cosine floor as a fraction of peak")
      ->capture_default_str();
  sp->add_option("--schedule-samples", scaling.schedule_samples,
                 "Schedule sample count after warmup")
      ->capture_default_str();
  sp->add_option("--out", scaling.out_path, "Write the plan to a file");

  MoeAuditOptions moe;
  auto* ma = app.add_subcommand("moe-audit",
                                "Route a logits matrix and report losses");
  ma->add_option("--logits", moe.logits_path, "T x E numeric text matrix")
      ->required();
  ma->add_option("--experts", moe.experts, "Expert count E")->required();
  ma->add_option("--topk", moe.top_k, "Experts per token")
      ->capture_default_str();
  ma->add_option("--lb-coeff", moe.lb_coeff, "Load-balance coefficient")
      ->capture_default_str();
  ma->add_option("--z-coeff", moe.z_coeff, "Router z-loss coefficient")
      ->capture_default_str();
  ma->add_option("--out", moe.out_path, "Write the audit to a file");

  EvalScoreOptions eval;
  auto* es = app.add_subcommand("eval-score",
                                "Score predictions or aggregate task results");
  es->add_option("--task", eval.task, "Task name for the report")
      ->capture_default_str();
  es->add_option("--split", eval.split,
                 "Dataset split the examples came from (recorded only)");
  es->add_option("--kind", eval.kind, "caption or vqa");
  es->add_option("--dataset", eval.dataset_path, "Eval examples (JSONL)");
  es->add_option("--predictions", eval.predictions_path,
                 "Predictions (JSONL)");
  es->add_option("--report", eval.report_path, "Score report output");
  es->add_flag("--truncate", eval.truncate,
               "Apply stop-token truncation to predictions");
  es->add_option("--emit-prompts", eval.emit_prompts,
                 "Write few-shot prompts for every example");
  es->add_option("--shots", eval.shots, "Shots for --emit-prompts")
      ->capture_default_str();
  es->add_option("--meta", eval.meta_results,
                 "Per-task results JSON for meta-average");
  es->add_option("--baseline", eval.meta_baseline,
                 "Per-task baseline JSON for meta-average");

  VerifyOptions verify;
  auto* vf = app.add_subcommand("verify",
                                "Re-check content hashes from a run manifest");
  vf->add_option("--manifest", verify.manifest_path, "Run manifest path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cb->parsed()) return run_corpus_build(global, corpus_build);
    if (cd->parsed()) return run_corpus_dedup(global, corpus_dedup);
    if (ms->parsed()) return run_mixture_snapshot(global, mixture);
    if (pk->parsed()) return run_pack(global, pack);
    if (vb->parsed()) return run_visgeom_budget(global, budget);
    if (sp->parsed()) return run_scaling_plan(global, scaling);
    if (ma->parsed()) return run_moe_audit(global, moe);
    if (es->parsed()) return run_eval_score(global, eval);
    if (vf->parsed()) return run_verify(global, verify);
  } catch (const UsageError& e) {
    return report("UsageError", e.what(), 2);
  } catch (const mmpipe::ParseError& e) {
    return report(e.kind().c_str(), e.what(), 3);
  } catch (const mmpipe::IoError& e) {
    return report(e.kind().c_str(), e.what(), 3);
  } catch (const mmpipe::Error& e) {
    return report(e.kind().c_str(), e.what(), 4);
  } catch (const std::exception& e) {
    return report("InternalError", e.what(), 4);
  }
  return 2;
}
