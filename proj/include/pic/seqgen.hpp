#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pic/core.hpp"

namespace pic::seqgen {

// ---------------------------------------------------------------------------
// Vocabulary and corpus.
// ---------------------------------------------------------------------------

// Fixed arithmetic vocabulary: digits 0-9, operators + - * /, '=', a padding
// separator, and EOS.
class Vocabulary {
 public:
  static const Vocabulary& instance();

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  int eos() const { return eos_; }
  int sep() const { return sep_; }
  int equals() const { return equals_; }
  bool is_digit(int id) const { return id >= 0 && id <= 9; }

  std::vector<int> encode_number(long long value) const;
  std::vector<int> tokenize(const std::string& text) const;  // whitespace separated
  std::string to_string(std::span<const int> ids) const;     // space separated
  std::string concat(std::span<const int> ids) const;        // answer-style, no spaces

 private:
  Vocabulary();
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int eos_ = 0;
  int sep_ = 0;
  int equals_ = 0;
};

// Seeded synthetic-corpus descriptor: "a op b = c" lines where a fraction of
// the c values are corrupted (off by 1..3). Operand widths span
// [min_digits, max_digits]; min-width operands are drawn with probability
// min_width_bias, the rest uniformly over the wider widths.
struct CorpusSpec {
  int min_digits = 1;
  int max_digits = 2;
  double min_width_bias = 0.85;
  std::vector<char> operators = {'+', '-'};
  int size = 20000;
  double wrong_answer_fraction = 0.3;

  void validate() const;
};

struct Corpus {
  std::vector<std::vector<int>> lines;  // token sequences ending in EOS
};

Corpus build_corpus(const CorpusSpec& spec, std::uint64_t seed);

// Exact arithmetic for a well-formed question prefix "a op b ="; the result
// includes the trailing EOS. Throws on malformed questions (no '=' token).
std::vector<int> true_answer_tokens(std::span<const int> question);

// ---------------------------------------------------------------------------
// Generator.
// ---------------------------------------------------------------------------

// Add-k smoothed n-gram table over the fixed vocabulary. Rows are logits
// (log smoothed counts); unseen contexts fall back to a uniform row.
class ToyGenerator {
 public:
  ToyGenerator(int order, std::unordered_map<std::uint64_t, Eigen::VectorXd> table,
               double fallback_logit);

  int order() const { return order_; }
  // Raw logits for the next token given a full prefix (question + answer so
  // far); short prefixes are padded with the separator token.
  Eigen::VectorXd logits(std::span<const int> prefix) const;

  static std::uint64_t context_key(std::span<const int> context);

 private:
  int order_;
  std::unordered_map<std::uint64_t, Eigen::VectorXd> table_;
  double fallback_logit_;
};

ToyGenerator fit_generator(const Corpus& corpus, int order, double add_k = 1.0);

// ---------------------------------------------------------------------------
// Candidates, scorer, refinement.
// ---------------------------------------------------------------------------

// Per-position logit offsets (the refinement state), reset at each position.
struct ContextBias {
  Eigen::VectorXd bias;  // vocabulary length
  double step_size = 0.5;
  int inner_iterations = 10;
};

struct CandidateSet {
  std::vector<int> tokens;  // K candidate token ids
  Eigen::VectorXd probs;    // softmax of (logits + bias) restricted to the K
};

// Top-K tokens by (logits + bias); ties break toward smaller token id.
CandidateSet propose_candidates(const ToyGenerator& generator, std::span<const int> prefix,
                                const ContextBias& bias, int k);

enum class ScorerMode { ExactOracle, NoisyOracle };

// Question-solution checker. ExactOracle gives energy 0 when prefix+candidate
// is a prefix of the true answer (with EOS), else 1; NoisyOracle flips each
// energy with the given probability (deterministically from the seed).
struct SolutionScorer {
  ScorerMode mode = ScorerMode::ExactOracle;
  double flip_probability = 0.0;
  double temperature = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

Eigen::VectorXd candidate_energies(const SolutionScorer& scorer, std::span<const int> question,
                                   std::span<const int> answer_prefix, const CandidateSet& cands);

// q = softmax(-e / tau) over the candidate set.
Eigen::VectorXd scorer_distribution(const SolutionScorer& scorer, std::span<const int> question,
                                    std::span<const int> answer_prefix, const CandidateSet& cands,
                                    double tau);

// Decoding configuration; gamma anchors the refined distribution to the
// unbiased generator distribution so updates stay fluent.
struct DecodeConfig {
  int candidates = 8;       // K
  int inner_iterations = 10;  // M
  double step_size = 0.5;   // lambda
  double fluency_weight = 0.2;  // gamma
  double temperature = 0.3;  // tau
  int max_length = 12;

  void validate() const;
};

// Loss and gradient over a fixed candidate set: with p = softmax(logits+bias)
// restricted to the candidates, L = CE(q, p) + gamma * CE(p0, p) and
// dL/dbias_j = (p_j - q_j) + gamma * (p_j - p0_j).
double refinement_loss(const Eigen::VectorXd& cand_logits, const Eigen::VectorXd& cand_bias,
                       const Eigen::VectorXd& q, double gamma);
Eigen::VectorXd refinement_gradient(const Eigen::VectorXd& cand_logits,
                                    const Eigen::VectorXd& cand_bias, const Eigen::VectorXd& q,
                                    double gamma);

// M gradient steps on the bias; the candidate set and scorer target q are
// recomputed each step and q is held fixed within the step.
ContextBias refine_bias(const ToyGenerator& generator, const SolutionScorer& scorer,
                        std::span<const int> question, std::span<const int> answer_prefix,
                        const DecodeConfig& config);

// ---------------------------------------------------------------------------
// Decoding and evaluation.
// ---------------------------------------------------------------------------

struct DecodeResult {
  std::vector<std::string> beams;               // answers, best first (concatenated tokens)
  std::vector<std::vector<int>> beam_tokens;    // without EOS
  std::vector<double> beam_log_probs;
};

// Per position: refine the bias, then extend beams by the refined
// distribution; terminates on EOS or max length.
DecodeResult decode_answer(const ToyGenerator& generator, const SolutionScorer& scorer,
                           std::span<const int> question, int beam_size,
                           const DecodeConfig& config);

// Samples n full answers without refinement and returns the one with minimum
// total scorer energy (ties: first sampled).
std::string baseline_rerank(const ToyGenerator& generator, const SolutionScorer& scorer,
                            std::span<const int> question, int n_candidates,
                            const DecodeConfig& config, Rng& rng);

struct AnswerMetrics {
  double accuracy_bs1 = 0.0;
  double accuracy_bs5 = 0.0;  // any-of-beams exact match
  int vocab_size = 0;         // distinct tokens across emitted top answers
};

AnswerMetrics answer_metrics(const std::vector<DecodeResult>& results,
                             const std::vector<std::string>& ground_truth);

// ---------------------------------------------------------------------------
// Evaluation sets.
// ---------------------------------------------------------------------------

struct Problem {
  std::vector<int> question;  // "a op b =" tokens
  std::string answer;         // concatenated answer tokens
};

// n problems drawn from the spec whose questions do not occur in the training
// corpus; answers are exact. When max_answer_tokens > 0 the suite keeps only
// short-answer problems (answer length, excluding EOS, at most that many
// tokens).
std::vector<Problem> make_eval_set(const CorpusSpec& spec, const Corpus& training, int n,
                                   std::uint64_t seed, int max_answer_tokens = 0);

// Line-oriented "question TAB answer" serialization (both sides space-joined
// token text).
void save_eval_set(const std::string& path, const std::vector<Problem>& problems);
std::vector<Problem> load_eval_set(const std::string& path);

}  // namespace pic::seqgen
