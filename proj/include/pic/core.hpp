#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pic/common.hpp"

namespace pic {

// ---------------------------------------------------------------------------
// Conditioning inputs shared by all task suites.
// ---------------------------------------------------------------------------

struct ClassLabel {
  int id = 0;
};

struct Question {
  std::vector<int> tokens;
};

// Polymorphic anchor so task modules can pass their goal types through a
// Condition without the core depending on them.
struct GoalHandle {
  virtual ~GoalHandle() = default;
};

using Condition = std::variant<ClassLabel, Question, std::shared_ptr<const GoalHandle>>;

inline const char* condition_kind_name(const Condition& c) {
  if (std::holds_alternative<ClassLabel>(c)) return "ClassLabel";
  if (std::holds_alternative<Question>(c)) return "Question";
  return "Goal";
}

// Scalar agreement measure; lower = better. Scorers must clamp or reject
// degenerate inputs so the value is always finite.
using EnergyValue = double;

enum class Capability { EnergyOnly, EnergyAndGradient };

// One scorer E_n over proposals of type P. Implementations validate the
// condition kind themselves and throw KindMismatchError naming the scorer.
template <class P>
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const std::string& name() const = 0;
  virtual Capability capability() const { return Capability::EnergyOnly; }
  virtual EnergyValue energy(const P& proposal, const Condition& condition) const = 0;
  virtual Eigen::VectorXd gradient(const P& /*proposal*/, const Condition& /*condition*/) const {
    throw CapabilityError("scorer '" + name() + "' is energy-only");
  }
};

template <class P>
struct ScorerHandle {
  std::shared_ptr<const Scorer<P>> scorer;
  double weight = 1.0;
};

// Ordered weighted set of scorers. Evaluation order is the list order so
// floating-point sums are reproducible.
template <class P>
class EnsembleSpec {
 public:
  explicit EnsembleSpec(std::vector<ScorerHandle<P>> scorers) : scorers_(std::move(scorers)) {
    if (scorers_.empty()) throw ConfigError("ensemble must contain at least one scorer");
    std::unordered_set<std::string> names;
    for (const auto& h : scorers_) {
      if (!h.scorer) throw ConfigError("ensemble contains a null scorer");
      if (!(h.weight >= 0.0) || !std::isfinite(h.weight)) {
        throw ConfigError("scorer '" + h.scorer->name() + "' has invalid weight");
      }
      if (!names.insert(h.scorer->name()).second) {
        throw ConfigError("duplicate scorer name '" + h.scorer->name() + "' in ensemble");
      }
    }
  }

  const std::vector<ScorerHandle<P>>& scorers() const { return scorers_; }
  std::size_t size() const { return scorers_.size(); }

 private:
  std::vector<ScorerHandle<P>> scorers_;
};

// ---------------------------------------------------------------------------
// Weighted energy composition.
// ---------------------------------------------------------------------------

// Returns sum_n weight_n * E_n(proposal, condition), summed in list order.
template <class P>
EnergyValue compose_energies(const P& proposal, const EnsembleSpec<P>& ensemble,
                             const Condition& condition) {
  double total = 0.0;
  for (const auto& h : ensemble.scorers()) {
    const double e = h.scorer->energy(proposal, condition);
    if (!std::isfinite(e)) {
      throw NonFiniteEnergyError("scorer '" + h.scorer->name() + "' returned non-finite energy");
    }
    total += h.weight * e;
  }
  return total;
}

// Per-scorer energies in list order (unweighted), used for trajectories.
template <class P>
std::vector<double> per_scorer_energies(const P& proposal, const EnsembleSpec<P>& ensemble,
                                        const Condition& condition) {
  std::vector<double> out;
  out.reserve(ensemble.size());
  for (const auto& h : ensemble.scorers()) {
    const double e = h.scorer->energy(proposal, condition);
    if (!std::isfinite(e)) {
      throw NonFiniteEnergyError("scorer '" + h.scorer->name() + "' returned non-finite energy");
    }
    out.push_back(e);
  }
  return out;
}

namespace detail {
inline const Eigen::VectorXd& proposal_vector(const Eigen::VectorXd& p) { return p; }
}  // namespace detail

// Returns sum_n weight_n * grad E_n. Every scorer must advertise
// EnergyAndGradient; the result has the proposal's dimensionality.
template <class P>
Eigen::VectorXd compose_gradients(const P& proposal, const EnsembleSpec<P>& ensemble,
                                  const Condition& condition) {
  Eigen::VectorXd total;
  for (const auto& h : ensemble.scorers()) {
    if (h.scorer->capability() != Capability::EnergyAndGradient) {
      throw CapabilityError("scorer '" + h.scorer->name() +
                            "' cannot provide gradients for composition");
    }
    Eigen::VectorXd g = h.scorer->gradient(proposal, condition);
    if (!g.allFinite()) {
      throw NonFiniteEnergyError("scorer '" + h.scorer->name() + "' returned non-finite gradient");
    }
    if (total.size() == 0) {
      total = Eigen::VectorXd::Zero(g.size());
    } else if (g.size() != total.size()) {
      throw KindMismatchError("scorer '" + h.scorer->name() +
                              "' returned a gradient of mismatched dimension");
    }
    total += h.weight * g;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Generic closed-loop consensus driver.
// ---------------------------------------------------------------------------

struct RefinementConfig {
  double step_size = 1.0;
  int iterations = 1;
  std::uint64_t seed = 0;
  std::optional<double> early_stop_tolerance;

  void validate() const {
    if (iterations < 1) throw ConfigError("refinement requires at least one iteration");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) {
      throw ConfigError("refinement step size must be positive and finite");
    }
    if (early_stop_tolerance && !(*early_stop_tolerance >= 0.0)) {
      throw ConfigError("early stop tolerance must be nonnegative");
    }
  }
};

// Task modules supply the propose and refine callbacks for their proposal kind.
template <class P>
struct Generator {
  std::function<P(Rng&)> propose;
  std::function<P(const P&, int iteration, Rng&)> refine;
};

template <class P>
struct ConsensusResult {
  P final_proposal;
  std::vector<double> energy_trajectory;               // length = iterations_run
  std::vector<std::vector<double>> per_scorer_trajectory;  // rows of width = ensemble size
  int iterations_run = 0;
};

// Executes up to K iterations of propose -> score -> refine. When an early
// stop tolerance is set, the energy of the raw initial proposal serves as the
// baseline and the loop stops once per-iteration improvement falls below it.
template <class P>
ConsensusResult<P> run_consensus(const Generator<P>& generator, const EnsembleSpec<P>& ensemble,
                                 const Condition& condition, const RefinementConfig& config) {
  config.validate();
  if (!generator.propose || !generator.refine) {
    throw ConfigError("generator must define propose and refine callbacks");
  }

  Rng rng(config.seed);
  ConsensusResult<P> result;
  result.energy_trajectory.reserve(config.iterations);
  result.per_scorer_trajectory.reserve(config.iterations);

  P current = generator.propose(rng);
  std::optional<double> previous_energy;
  if (config.early_stop_tolerance) {
    previous_energy = compose_energies(current, ensemble, condition);
  }

  for (int k = 1; k <= config.iterations; ++k) {
    current = generator.refine(current, k, rng);
    const std::vector<double> per_scorer = per_scorer_energies(current, ensemble, condition);
    double composed = 0.0;
    {
      std::size_t i = 0;
      for (const auto& h : ensemble.scorers()) composed += h.weight * per_scorer[i++];
    }
    result.energy_trajectory.push_back(composed);
    result.per_scorer_trajectory.push_back(per_scorer);
    result.iterations_run = k;
    if (config.early_stop_tolerance) {
      const double improvement = *previous_energy - composed;
      if (improvement < *config.early_stop_tolerance) break;
      previous_energy = composed;
    }
  }
  result.final_proposal = std::move(current);
  return result;
}

}  // namespace pic
