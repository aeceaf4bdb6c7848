#include "pic/seqgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace pic::seqgen {

namespace {

constexpr double kFloorLogit = -1e3;  // finite stand-in for log(0)

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

std::uint64_t fold_tokens(std::uint64_t h, std::span<const int> tokens) {
  for (int t : tokens) h = mix64(h ^ static_cast<std::uint64_t>(t + 1));
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (int d = 0; d <= 9; ++d) tokens_.push_back(std::string(1, '0' + d));
  tokens_.push_back("+");
  tokens_.push_back("-");
  tokens_.push_back("*");
  tokens_.push_back("/");
  tokens_.push_back("=");
  tokens_.push_back("<sep>");
  tokens_.push_back("<eos>");
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) index_[tokens_[i]] = i;
  equals_ = index_.at("=");
  sep_ = index_.at("<sep>");
  eos_ = index_.at("<eos>");
}

const Vocabulary& Vocabulary::instance() {
  static const Vocabulary v;
  return v;
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) throw ConfigError("unknown token '" + token + "'");
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ConfigError("token id out of range");
  return tokens_[id];
}

std::vector<int> Vocabulary::encode_number(long long value) const {
  std::vector<int> out;
  if (value < 0) {
    out.push_back(id("-"));
    value = -value;
  }
  std::string digits = std::to_string(value);
  for (char c : digits) out.push_back(c - '0');
  return out;
}

std::vector<int> Vocabulary::tokenize(const std::string& text) const {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(id(tok));
  return out;
}

std::string Vocabulary::to_string(std::span<const int> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

std::string Vocabulary::concat(std::span<const int> ids) const {
  std::string out;
  for (int t : ids) out += token(t);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

void CorpusSpec::validate() const {
  if (operators.empty()) throw ConfigError("corpus spec needs a non-empty operator set");
  for (char op : operators) {
    if (op != '+' && op != '-' && op != '*' && op != '/') {
      throw ConfigError(std::string("unsupported operator '") + op + "'");
    }
  }
  if (min_digits < 1 || max_digits < min_digits) throw ConfigError("invalid operand digit range");
  if (!(min_width_bias >= 0.0 && min_width_bias <= 1.0)) {
    throw ConfigError("operand width bias must lie in [0, 1]");
  }
  if (size < 1) throw ConfigError("corpus size must be positive");
  if (!(wrong_answer_fraction >= 0.0 && wrong_answer_fraction <= 1.0)) {
    throw ConfigError("wrong answer fraction must lie in [0, 1]");
  }
}

namespace {

long long sample_operand(const CorpusSpec& spec, Rng& rng) {
  int digits = spec.min_digits;
  if (spec.max_digits > spec.min_digits && rng.uniform() >= spec.min_width_bias) {
    digits =
        spec.min_digits + 1 + static_cast<int>(rng.below(spec.max_digits - spec.min_digits));
  }
  if (digits == 1) return static_cast<long long>(rng.below(10));
  long long lo = 1;
  for (int i = 1; i < digits; ++i) lo *= 10;
  const long long hi = lo * 10 - 1;
  return lo + static_cast<long long>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

long long apply_op(long long a, char op, long long b) {
  switch (op) {
    case '+':
      return a + b;
    case '-':
      return a - b;
    case '*':
      return a * b;
    case '/':
      return a / b;  // truncated; callers guarantee b != 0
  }
  throw ConfigError("unsupported operator");
}

struct QuestionDraw {
  long long a = 0;
  long long b = 0;
  char op = '+';
};

QuestionDraw draw_question(const CorpusSpec& spec, Rng& rng) {
  QuestionDraw q;
  q.a = sample_operand(spec, rng);
  q.op = spec.operators[rng.below(spec.operators.size())];
  do {
    q.b = sample_operand(spec, rng);
  } while (q.op == '/' && q.b == 0);
  return q;
}

std::vector<int> question_tokens(const QuestionDraw& q) {
  const auto& v = Vocabulary::instance();
  std::vector<int> out = v.encode_number(q.a);
  out.push_back(v.id(std::string(1, q.op)));
  const auto b = v.encode_number(q.b);
  out.insert(out.end(), b.begin(), b.end());
  out.push_back(v.equals());
  return out;
}

}  // namespace

Corpus build_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto& v = Vocabulary::instance();
  Rng rng = Rng::stream(seed, 0xc0c0u);
  Corpus corpus;
  corpus.lines.reserve(spec.size);
  for (int i = 0; i < spec.size; ++i) {
    const QuestionDraw q = draw_question(spec, rng);
    long long c = apply_op(q.a, q.op, q.b);
    if (rng.uniform() < spec.wrong_answer_fraction) {
      const long long delta = 1 + static_cast<long long>(rng.below(3));
      c += rng.uniform() < 0.5 ? delta : -delta;
    }
    std::vector<int> line = question_tokens(q);
    const auto ans = v.encode_number(c);
    line.insert(line.end(), ans.begin(), ans.end());
    line.push_back(v.eos());
    corpus.lines.push_back(std::move(line));
  }
  return corpus;
}

std::vector<int> true_answer_tokens(std::span<const int> question) {
  const auto& v = Vocabulary::instance();
  const auto eq = std::find(question.begin(), question.end(), v.equals());
  if (eq == question.end()) throw Error("question malformed: no '=' token");

  // Parse "a op b" from the tokens before '='.
  long long a = 0, b = 0;
  char op = 0;
  bool in_b = false;
  bool any_a = false, any_b = false;
  for (auto it = question.begin(); it != eq; ++it) {
    const int tok = *it;
    if (v.is_digit(tok)) {
      if (in_b) {
        b = b * 10 + tok;
        any_b = true;
      } else {
        a = a * 10 + tok;
        any_a = true;
      }
    } else {
      const std::string& s = v.token(tok);
      if (s.size() == 1 && (s[0] == '+' || s[0] == '-' || s[0] == '*' || s[0] == '/') && !in_b &&
          any_a) {
        op = s[0];
        in_b = true;
      } else {
        throw Error("question malformed: unexpected token '" + s + "'");
      }
    }
  }
  if (!any_a || !any_b || op == 0) throw Error("question malformed: expected 'a op b ='");
  if (op == '/' && b == 0) throw Error("question malformed: division by zero");

  std::vector<int> out = v.encode_number(apply_op(a, op, b));
  out.push_back(v.eos());
  return out;
}

// ---------------------------------------------------------------------------
// ToyGenerator
// ---------------------------------------------------------------------------

ToyGenerator::ToyGenerator(int order, std::unordered_map<std::uint64_t, Eigen::VectorXd> table,
                           double fallback_logit)
    : order_(order), table_(std::move(table)), fallback_logit_(fallback_logit) {
  if (order_ != 2 && order_ != 3) throw ConfigError("generator order must be 2 or 3");
  for (const auto& [key, row] : table_) {
    (void)key;
    if (!row.allFinite()) throw ConfigError("generator logits must be finite");
  }
}

std::uint64_t ToyGenerator::context_key(std::span<const int> context) {
  std::uint64_t key = 1;
  for (int t : context) key = key * 64 + static_cast<std::uint64_t>(t + 1);
  return key;
}

Eigen::VectorXd ToyGenerator::logits(std::span<const int> prefix) const {
  const auto& v = Vocabulary::instance();
  const int n = order_ - 1;
  std::vector<int> context(n, v.sep());
  const int take = std::min<int>(n, static_cast<int>(prefix.size()));
  for (int i = 0; i < take; ++i) context[n - take + i] = prefix[prefix.size() - take + i];
  const auto it = table_.find(context_key(context));
  if (it == table_.end()) {
    return Eigen::VectorXd::Constant(v.size(), fallback_logit_);
  }
  return it->second;
}

ToyGenerator fit_generator(const Corpus& corpus, int order, double add_k) {
  if (corpus.lines.empty()) throw ConfigError("cannot fit a generator on an empty corpus");
  if (order != 2 && order != 3) throw ConfigError("generator order must be 2 or 3");
  if (add_k < 0.0) throw ConfigError("smoothing constant must be >= 0");
  const auto& v = Vocabulary::instance();
  const int n = order - 1;

  std::unordered_map<std::uint64_t, Eigen::VectorXd> counts;
  for (const auto& line : corpus.lines) {
    std::vector<int> padded(n, v.sep());
    padded.insert(padded.end(), line.begin(), line.end());
    for (std::size_t i = n; i < padded.size(); ++i) {
      const std::span<const int> ctx(padded.data() + i - n, static_cast<std::size_t>(n));
      auto [it, fresh] = counts.try_emplace(ToyGenerator::context_key(ctx),
                                            Eigen::VectorXd::Zero(v.size()));
      (void)fresh;
      it->second[padded[i]] += 1.0;
    }
  }

  std::unordered_map<std::uint64_t, Eigen::VectorXd> table;
  table.reserve(counts.size());
  for (auto& [key, row] : counts) {
    Eigen::VectorXd logits(v.size());
    for (int j = 0; j < v.size(); ++j) {
      const double c = row[j] + add_k;
      logits[j] = c > 0.0 ? std::log(c) : kFloorLogit;
    }
    table.emplace(key, std::move(logits));
  }
  const double fallback = add_k > 0.0 ? std::log(add_k) : kFloorLogit;
  return ToyGenerator(order, std::move(table), fallback);
}

// ---------------------------------------------------------------------------
// Candidates and scorer
// ---------------------------------------------------------------------------

CandidateSet propose_candidates(const ToyGenerator& generator, std::span<const int> prefix,
                                const ContextBias& bias, int k) {
  const auto& v = Vocabulary::instance();
  if (k > v.size()) throw ConfigError("candidate count exceeds vocabulary size");
  if (k < 2) throw ConfigError("candidate count must be at least 2");
  Eigen::VectorXd scores = generator.logits(prefix);
  if (bias.bias.size() != 0) {
    if (bias.bias.size() != scores.size()) throw ConfigError("bias length must equal vocab size");
    scores += bias.bias;
  }

  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(k);

  Eigen::VectorXd restricted(k);
  for (int j = 0; j < k; ++j) restricted[j] = scores[idx[j]];
  CandidateSet out;
  out.tokens = std::move(idx);
  out.probs = softmax(restricted);
  return out;
}

void SolutionScorer::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("scorer temperature must be positive");
  if (!(flip_probability >= 0.0 && flip_probability < 0.5)) {
    throw ConfigError("flip probability must lie in [0, 0.5)");
  }
  if (mode == ScorerMode::ExactOracle && flip_probability != 0.0) {
    throw ConfigError("exact oracle cannot have a flip probability");
  }
}

Eigen::VectorXd candidate_energies(const SolutionScorer& scorer, std::span<const int> question,
                                   std::span<const int> answer_prefix, const CandidateSet& cands) {
  scorer.validate();
  if (cands.tokens.empty()) throw ConfigError("candidate set is empty");
  const std::vector<int> truth = true_answer_tokens(question);

  // The prefix itself must still match the truth for any candidate to extend it.
  bool prefix_ok = answer_prefix.size() < truth.size();
  for (std::size_t i = 0; prefix_ok && i < answer_prefix.size(); ++i) {
    prefix_ok = answer_prefix[i] == truth[i];
  }

  Eigen::VectorXd e(cands.tokens.size());
  for (std::size_t j = 0; j < cands.tokens.size(); ++j) {
    const bool match = prefix_ok && truth[answer_prefix.size()] == cands.tokens[j];
    double energy = match ? 0.0 : 1.0;
    if (scorer.mode == ScorerMode::NoisyOracle && scorer.flip_probability > 0.0) {
      std::uint64_t h = mix64(scorer.seed ^ 0x6f7261636cull);
      h = fold_tokens(h, question);
      h = mix64(h ^ (answer_prefix.size() + 1));
      h = fold_tokens(h, answer_prefix);
      h = mix64(h ^ static_cast<std::uint64_t>(cands.tokens[j] + 1));
      Rng r(h);
      if (r.uniform() < scorer.flip_probability) energy = 1.0 - energy;
    }
    e[j] = energy;
  }
  return e;
}

Eigen::VectorXd scorer_distribution(const SolutionScorer& scorer, std::span<const int> question,
                                    std::span<const int> answer_prefix, const CandidateSet& cands,
                                    double tau) {
  if (!(tau > 0.0)) throw ConfigError("scorer temperature must be positive");
  const Eigen::VectorXd e = candidate_energies(scorer, question, answer_prefix, cands);
  return softmax(-e / tau);
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

void DecodeConfig::validate() const {
  const auto& v = Vocabulary::instance();
  if (candidates < 2 || candidates > v.size()) throw ConfigError("candidate count out of range");
  if (inner_iterations < 0) throw ConfigError("inner iterations must be >= 0");
  if (!(step_size > 0.0)) throw ConfigError("refinement step size must be positive");
  if (!(fluency_weight >= 0.0)) throw ConfigError("fluency weight must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (max_length < 1) throw ConfigError("max length must be >= 1");
}

double refinement_loss(const Eigen::VectorXd& cand_logits, const Eigen::VectorXd& cand_bias,
                       const Eigen::VectorXd& q, double gamma) {
  const Eigen::VectorXd z = cand_logits + cand_bias;
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  const Eigen::VectorXd logp = z.array() - lse;
  const Eigen::VectorXd p0 = softmax(cand_logits);
  const double loss = -q.dot(logp) - gamma * p0.dot(logp);
  if (!std::isfinite(loss)) throw NonFiniteEnergyError("refinement loss is non-finite");
  return loss;
}

Eigen::VectorXd refinement_gradient(const Eigen::VectorXd& cand_logits,
                                    const Eigen::VectorXd& cand_bias, const Eigen::VectorXd& q,
                                    double gamma) {
  const Eigen::VectorXd p = softmax(cand_logits + cand_bias);
  const Eigen::VectorXd p0 = softmax(cand_logits);
  return (1.0 + gamma) * p - q - gamma * p0;
}

ContextBias refine_bias(const ToyGenerator& generator, const SolutionScorer& scorer,
                        std::span<const int> question, std::span<const int> answer_prefix,
                        const DecodeConfig& config) {
  config.validate();
  scorer.validate();
  const auto& v = Vocabulary::instance();

  std::vector<int> prefix(question.begin(), question.end());
  prefix.insert(prefix.end(), answer_prefix.begin(), answer_prefix.end());

  ContextBias bias{Eigen::VectorXd::Zero(v.size()), config.step_size, config.inner_iterations};
  const Eigen::VectorXd raw_logits = generator.logits(prefix);

  for (int m = 0; m < config.inner_iterations; ++m) {
    const CandidateSet cands = propose_candidates(generator, prefix, bias, config.candidates);
    const Eigen::VectorXd q =
        scorer_distribution(scorer, question, answer_prefix, cands, config.temperature);

    Eigen::VectorXd cand_logits(cands.tokens.size());
    Eigen::VectorXd cand_bias(cands.tokens.size());
    for (std::size_t j = 0; j < cands.tokens.size(); ++j) {
      cand_logits[j] = raw_logits[cands.tokens[j]];
      cand_bias[j] = bias.bias[cands.tokens[j]];
    }
    const Eigen::VectorXd g =
        refinement_gradient(cand_logits, cand_bias, q, config.fluency_weight);
    if (!g.allFinite()) throw NonFiniteEnergyError("refinement gradient is non-finite");
    for (std::size_t j = 0; j < cands.tokens.size(); ++j) {
      bias.bias[cands.tokens[j]] -= config.step_size * g[j];
    }
  }
  return bias;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

namespace {

struct Beam {
  std::vector<int> answer;
  double log_prob = 0.0;
};

}  // namespace

DecodeResult decode_answer(const ToyGenerator& generator, const SolutionScorer& scorer,
                           std::span<const int> question, int beam_size,
                           const DecodeConfig& config) {
  config.validate();
  if (beam_size < 1) throw ConfigError("beam size must be >= 1");
  const auto& v = Vocabulary::instance();

  std::vector<Beam> live{{{}, 0.0}};
  std::vector<Beam> finished;

  for (int position = 0; position <= config.max_length && !live.empty(); ++position) {
    if (position == config.max_length) {
      for (auto& b : live) finished.push_back(std::move(b));
      break;
    }

    struct Extension {
      std::size_t parent;
      int token;
      double log_prob;
    };
    std::vector<Extension> extensions;
    for (std::size_t bi = 0; bi < live.size(); ++bi) {
      const ContextBias bias = refine_bias(generator, scorer, question, live[bi].answer, config);
      std::vector<int> prefix(question.begin(), question.end());
      prefix.insert(prefix.end(), live[bi].answer.begin(), live[bi].answer.end());
      const CandidateSet cands = propose_candidates(generator, prefix, bias, config.candidates);
      for (std::size_t j = 0; j < cands.tokens.size(); ++j) {
        extensions.push_back(
            {bi, cands.tokens[j], live[bi].log_prob + std::log(cands.probs[j])});
      }
    }
    std::sort(extensions.begin(), extensions.end(), [](const Extension& a, const Extension& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });

    // Each of the top beam_size extensions takes a slot, finished or live.
    std::vector<Beam> next;
    int slots = 0;
    for (const auto& ext : extensions) {
      if (slots >= beam_size) break;
      ++slots;
      Beam b = live[ext.parent];
      b.log_prob = ext.log_prob;
      if (ext.token == v.eos()) {
        finished.push_back(std::move(b));
        continue;
      }
      b.answer.push_back(ext.token);
      next.push_back(std::move(b));
    }
    live = std::move(next);
  }

  std::stable_sort(finished.begin(), finished.end(),
                   [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
  if (static_cast<int>(finished.size()) > beam_size) finished.resize(beam_size);

  DecodeResult result;
  for (const auto& b : finished) {
    result.beams.push_back(v.concat(b.answer));
    result.beam_tokens.push_back(b.answer);
    result.beam_log_probs.push_back(b.log_prob);
  }
  return result;
}

std::string baseline_rerank(const ToyGenerator& generator, const SolutionScorer& scorer,
                            std::span<const int> question, int n_candidates,
                            const DecodeConfig& config, Rng& rng) {
  config.validate();
  scorer.validate();
  if (n_candidates < 1) throw ConfigError("rerank needs at least one candidate");
  const auto& v = Vocabulary::instance();

  // Answers are sampled from the generator's candidate proposal distribution
  // (top-K, renormalized) — the same interface the refined decoder extends.
  const ContextBias no_bias{Eigen::VectorXd::Zero(v.size()), config.step_size,
                            config.inner_iterations};
  std::string best;
  double best_energy = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_candidates; ++i) {
    std::vector<int> answer;
    std::vector<int> prefix(question.begin(), question.end());
    double total_energy = 0.0;
    for (int pos = 0; pos < config.max_length; ++pos) {
      const CandidateSet cands = propose_candidates(generator, prefix, no_bias, config.candidates);
      const double u = rng.uniform();
      double acc = 0.0;
      int tok = cands.tokens.back();
      for (std::size_t j = 0; j < cands.tokens.size(); ++j) {
        acc += cands.probs[j];
        if (u < acc) {
          tok = cands.tokens[j];
          break;
        }
      }
      CandidateSet single;
      single.tokens = {tok};
      single.probs = Eigen::VectorXd::Ones(1);
      total_energy += candidate_energies(scorer, question, answer, single)[0];
      if (tok == v.eos()) break;
      answer.push_back(tok);
      prefix.push_back(tok);
    }
    if (total_energy < best_energy) {
      best_energy = total_energy;
      best = v.concat(answer);
    }
  }
  return best;
}

AnswerMetrics answer_metrics(const std::vector<DecodeResult>& results,
                             const std::vector<std::string>& ground_truth) {
  if (results.size() != ground_truth.size()) {
    throw ConfigError("answers and ground truth have different lengths");
  }
  if (results.empty()) throw ConfigError("no answers to score");
  AnswerMetrics m;
  std::set<int> vocab;
  int bs1 = 0, bs5 = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.beams.empty() && r.beams[0] == ground_truth[i]) ++bs1;
    for (const auto& beam : r.beams) {
      if (beam == ground_truth[i]) {
        ++bs5;
        break;
      }
    }
    if (!r.beam_tokens.empty()) {
      for (int t : r.beam_tokens[0]) vocab.insert(t);
    }
  }
  m.accuracy_bs1 = static_cast<double>(bs1) / results.size();
  m.accuracy_bs5 = static_cast<double>(bs5) / results.size();
  m.vocab_size = static_cast<int>(vocab.size());
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation sets
// ---------------------------------------------------------------------------

std::vector<Problem> make_eval_set(const CorpusSpec& spec, const Corpus& training, int n,
                                   std::uint64_t seed, int max_answer_tokens) {
  spec.validate();
  if (n < 1) throw ConfigError("evaluation set size must be positive");
  const auto& v = Vocabulary::instance();

  std::unordered_set<std::uint64_t> seen;
  for (const auto& line : training.lines) {
    const auto eq = std::find(line.begin(), line.end(), v.equals());
    if (eq == line.end()) continue;
    seen.insert(fold_tokens(7u, std::span<const int>(line.data(), (eq - line.begin()) + 1)));
  }

  std::vector<Problem> problems;
  std::unordered_set<std::uint64_t> picked;
  Rng rng = Rng::stream(seed, 0xe7a1u);
  const long long max_attempts = 5000LL * n;
  for (long long attempt = 0; attempt < max_attempts && static_cast<int>(problems.size()) < n;
       ++attempt) {
    const QuestionDraw qd = draw_question(spec, rng);
    const std::vector<int> q = question_tokens(qd);
    const std::uint64_t key = fold_tokens(7u, q);
    if (seen.count(key) || picked.count(key)) continue;
    std::vector<int> ans = true_answer_tokens(q);
    ans.pop_back();  // drop EOS
    if (max_answer_tokens > 0 && static_cast<int>(ans.size()) > max_answer_tokens) continue;
    picked.insert(key);
    problems.push_back({q, v.concat(ans)});
  }
  if (static_cast<int>(problems.size()) < n) {
    throw ConfigError("could not draw enough held-out problems; shrink the corpus or eval set");
  }
  return problems;
}

void save_eval_set(const std::string& path, const std::vector<Problem>& problems) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const auto& v = Vocabulary::instance();
  for (const auto& p : problems) {
    out << v.to_string(p.question) << '\t';
    std::string spaced;
    for (std::size_t i = 0; i < p.answer.size(); ++i) {
      if (i) spaced += ' ';
      spaced += p.answer[i];
    }
    out << spaced << '\n';
  }
}

std::vector<Problem> load_eval_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  const auto& v = Vocabulary::instance();
  std::vector<Problem> problems;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected 'question TAB answer'", line_no);
    Problem p;
    p.question = v.tokenize(line.substr(0, tab));
    p.answer = v.concat(v.tokenize(line.substr(tab + 1)));
    problems.push_back(std::move(p));
  }
  return problems;
}

}  // namespace pic::seqgen
