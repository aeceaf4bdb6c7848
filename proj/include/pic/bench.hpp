#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pic/common.hpp"

namespace pic::bench {

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

enum class Suite { Diffusion, Seqgen, Blockworld, All };
enum class Ablation { Scorers, Refinement, None };

std::string suite_name(Suite s);
std::string ablation_name(Ablation a);
Suite suite_from_name(const std::string& name);
Ablation ablation_from_name(const std::string& name);

struct DiffusionParams {
  int classes = 4;
  int components = 2;
  double separation = 8.0;
  int steps = 100;        // reverse steps
  int samples = 1000;
  double lambda = 1.0;    // gradient-scorer guidance scale
  double cfg_weight = 3.0;
  int embed_dim = 8;
  int class_id = 0;
};

struct SeqgenParams {
  int order = 3;
  int corpus_size = 20000;
  double wrong_fraction = 0.3;
  double width_bias = 0.85;       // probability of a 1-digit operand
  int eval_size = 200;
  int max_answer_tokens = 1;      // held-out suite keeps short-answer problems
  int candidates = 8;
  int inner_iterations = 10;
  double step_size = 0.5;
  double fluency_weight = 0.2;
  double temperature = 0.3;
  int beam_size = 5;
  int rerank_candidates = 5;
  std::string scorer = "exact";  // exact | noisy
  double flip_probability = 0.1;
  int max_length = 12;
};

struct BlockworldParams {
  int grid = 8;
  int objects = 6;
  int episodes = 30;
  int candidates = 64;
  int relations = 2;
  int views = 5;
  double confusion = 0.1;
  int open_loop_trajectories = 100;
};

struct ExperimentConfig {
  Suite suite = Suite::All;
  Ablation ablation = Ablation::None;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir;  // default: $PIC_OUT_DIR or "pic-runs"
  int workers = 1;
  DiffusionParams diffusion;
  SeqgenParams seqgen;
  BlockworldParams blockworld;

  void validate() const;
  // Fully-resolved settings in a fixed sorted order; the hash input.
  std::string canonical_string() const;
  std::string config_hash() const;  // 16 hex digits, stable under key reordering
};

ExperimentConfig default_config();
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// ---------------------------------------------------------------------------
// Run records.
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string config_hash;
  std::string suite;
  std::string ablation;
  std::string arm;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> metrics;  // insertion order kept
  double wall_time_s = 0.0;
  std::string artifact_version = kVersion;
  bool ok = true;
  std::string error;

  std::string to_json() const;
  static RunRecord from_json(const std::string& text);
};

// Arm labels for the config's suite/ablation, grouped by suite.
std::vector<std::pair<std::string, std::string>> list_arms(const ExperimentConfig& config);

// Executes the (arms x seeds) cross product, persisting every record under
// out_dir/records plus an append-only index. Failures become failed records;
// the matrix continues.
std::vector<RunRecord> run_matrix(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Summaries.
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string suite;
  std::string ablation;
  std::string arm;
  std::string metric;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation; 0 for a single record
  int n = 0;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

// Per-arm mean and sample standard deviation across seeds, grouped by suite
// and ablation (never merged across suites). Permutation-invariant.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

std::string render_table(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

// Minimal dependency-free SVG line charts.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::vector<std::string>& x_labels,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series);

// Metric-vs-arm plots for every (suite, ablation, metric) group in the rows.
void write_summary_plots(const std::string& dir, const std::vector<SummaryRow>& rows);

}  // namespace pic::bench
