#pragma once

#include <cstdint>
#include <string>

// One options struct + entry point per subcommand. Entry points return the
// process exit code for success (always 0); failures are reported by
// throwing (UsageError -> 2, ParseError/IoError -> 3, mmpipe::Error -> 4).

namespace mmpipe::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct CorpusBuildOptions {
  std::string pages_path;
  std::string images_path;  // optional metadata sidecar
  std::string out_interleaved;
  std::string out_text;
  std::string stats_path;
  std::string blocklist_path;
  int max_images = 30;
  int min_tokens = 64;
  int dedup_max = 10;
  bool skip_malformed = false;
};
int run_corpus_build(const GlobalOptions& g, const CorpusBuildOptions& opt);

struct CorpusDedupOptions {
  std::string in_path;
  std::string out_path;
  std::string pairs_path;  // optional report
  int num_perm = 128;
  int bands = 32;
  int rows = 4;
  double threshold = 0.8;
  int shingle_len = 5;
};
int run_corpus_dedup(const GlobalOptions& g, const CorpusDedupOptions& opt);

struct MixtureSnapshotOptions {
  std::string interleaved_path;
  std::string captions_path;
  std::string text_path;
  std::string weights = "0.45,0.45,0.10";
  std::uint64_t entries = 0;
  std::string out_path;
};
int run_mixture_snapshot(const GlobalOptions& g,
                         const MixtureSnapshotOptions& opt);

struct PackOptions {
  std::string snapshot_path;
  std::string interleaved_path;
  std::string captions_path;
  std::string text_path;
  std::string out_path;
  std::string vocab_out;
  int seq_len = 4096;
  int max_images = 16;
  int tokens_per_image = 144;
  int batch_size = 512;
  bool dense_mask = false;
};
int run_pack(const GlobalOptions& g, const PackOptions& opt);

struct VisgeomBudgetOptions {
  int shots = 0;
  int hires_last = 0;
  int images_per_example = 1;
  int hi_tokens = 720;
  int lo_tokens = 144;
  std::string out_path;  // stdout when empty
};
int run_visgeom_budget(const GlobalOptions& g,
                       const VisgeomBudgetOptions& opt);

struct ScalingPlanOptions {
  double params = 0.0;
  std::string fit = "default";  // "default" or a two-column (N, lr) file
  long warmup_steps = 2000;
  long total_steps = 200000;
  double final_fraction = 0.1;
  int schedule_samples = 5;
  std::string out_path;  // stdout when empty
};
int run_scaling_plan(const GlobalOptions& g, const ScalingPlanOptions& opt);

struct MoeAuditOptions {
  std::string logits_path;
  int experts = 0;
  int top_k = 2;
  double lb_coeff = 0.01;
  double z_coeff = 0.001;
  std::string out_path;  // stdout when empty
};
int run_moe_audit(const GlobalOptions& g, const MoeAuditOptions& opt);

struct EvalScoreOptions {
  std::string task = "task";
  std::string split;  // dataset split the examples came from (metadata)
  std::string kind;   // "caption" or "vqa"
  std::string dataset_path;
  std::string predictions_path;
  std::string report_path;
  bool truncate = false;
  std::string emit_prompts;  // optional prompts output
  int shots = 0;             // for --emit-prompts
  // Aggregate mode:
  std::string meta_results;
  std::string meta_baseline;
};
int run_eval_score(const GlobalOptions& g, const EvalScoreOptions& opt);

struct VerifyOptions {
  std::string manifest_path;
};
int run_verify(const GlobalOptions& g, const VerifyOptions& opt);

}  // namespace mmpipe::cli
