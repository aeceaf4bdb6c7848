#include "pic/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <thread>

namespace pic::diffusion {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) + index + 1);
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// NoiseSchedule
// ---------------------------------------------------------------------------

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ConfigError("schedule needs at least one step");
  alpha_bars_.reserve(betas_.size());
  double ab = 1.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("schedule betas must lie in (0, 1)");
    ab *= (1.0 - b);
    if (!(ab > 0.0)) throw ConfigError("schedule alpha_bar underflowed to zero");
    alpha_bars_.push_back(ab);
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("schedule needs at least one step");
  std::vector<double> betas(steps);
  for (int i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[i] = beta_start + f * (beta_end - beta_start);
  }
  return NoiseSchedule(std::move(betas));
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw ConfigError("beta(t): t out of range");
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw ConfigError("alpha_bar(t): t out of range");
  return t == 0 ? 1.0 : alpha_bars_[t - 1];
}

// ---------------------------------------------------------------------------
// GaussianMixture
// ---------------------------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<GaussianComponent> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty() || weights_.size() != components_.size()) {
    throw ConfigError("mixture needs matching, non-empty weights and components");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("mixture weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");

  const auto d = components_[0].mean.size();
  cache_.reserve(components_.size());
  for (const auto& c : components_) {
    if (c.mean.size() != d || c.cov.rows() != d || c.cov.cols() != d) {
      throw ConfigError("mixture component dimensions disagree");
    }
    ComponentCache cc;
    cc.llt.compute(c.cov);
    if (cc.llt.info() != Eigen::Success) {
      throw ConfigError("mixture covariance is not positive definite");
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) log_det += 2.0 * std::log(cc.llt.matrixL()(i, i));
    cc.log_norm = -0.5 * (d * std::log(2.0 * M_PI) + log_det);
    cache_.push_back(std::move(cc));
  }
}

double GaussianMixture::log_density(const Eigen::VectorXd& x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] == 0.0) {
      terms[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Eigen::VectorXd diff = x - components_[i].mean;
    const double q = diff.dot(cache_[i].llt.solve(diff));
    terms[i] = std::log(weights_[i]) + cache_[i].log_norm - 0.5 * q;
  }
  return logsumexp(terms);
}

Eigen::VectorXd GaussianMixture::score(const Eigen::VectorXd& x) const {
  const auto n = components_.size();
  std::vector<double> log_terms(n);
  std::vector<double> quad(n);
  std::vector<Eigen::VectorXd> comp_scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd diff = x - components_[i].mean;
    const Eigen::VectorXd solved = cache_[i].llt.solve(diff);
    comp_scores[i] = -solved;
    quad[i] = diff.dot(solved);
    log_terms[i] = weights_[i] == 0.0 ? -std::numeric_limits<double>::infinity()
                                      : std::log(weights_[i]) + cache_[i].log_norm - 0.5 * quad[i];
  }
  const double lse = logsumexp(log_terms);
  if (!std::isfinite(lse)) {
    // Far enough out that every density underflowed: the nearest component
    // (smallest Mahalanobis distance, nonzero weight) dominates the score.
    std::size_t best = 0;
    double best_q = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (weights_[i] > 0.0 && quad[i] < best_q) {
        best_q = quad[i];
        best = i;
      }
    }
    return comp_scores[best];
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::exp(log_terms[i] - lse);
    if (r > 0.0) out += r * comp_scores[i];
  }
  return out;
}

Eigen::VectorXd GaussianMixture::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = components_.size() - 1;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    acc += weights_[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  const Eigen::VectorXd z = rng.normal_vector(dimension());
  return components_[pick].mean + cache_[pick].llt.matrixL() * z;
}

Moments GaussianMixture::moments() const {
  const int d = dimension();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < components_.size(); ++i) mean += weights_[i] * components_[i].mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const Eigen::VectorXd dm = components_[i].mean - mean;
    cov += weights_[i] * (components_[i].cov + dm * dm.transpose());
  }
  return {std::move(mean), std::move(cov)};
}

// ---------------------------------------------------------------------------
// MixtureTarget
// ---------------------------------------------------------------------------

namespace {

GaussianMixture make_marginal(const std::vector<GaussianMixture>& classes) {
  std::vector<double> weights;
  std::vector<GaussianComponent> comps;
  const double prior = 1.0 / static_cast<double>(classes.size());
  for (const auto& cls : classes) {
    for (std::size_t i = 0; i < cls.components().size(); ++i) {
      weights.push_back(prior * cls.weights()[i]);
      comps.push_back(cls.components()[i]);
    }
  }
  // Re-normalize exactly; the prior division can leave ~1e-16 residue.
  double s = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= s;
  return GaussianMixture(std::move(weights), std::move(comps));
}

}  // namespace

MixtureTarget::MixtureTarget(std::vector<GaussianMixture> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) throw ConfigError("target needs at least one class");
  const int d = classes_[0].dimension();
  for (const auto& c : classes_) {
    if (c.dimension() != d) throw ConfigError("target class dimensions disagree");
  }
  marginal_ = std::make_shared<GaussianMixture>(make_marginal(classes_));
}

MixtureTarget MixtureTarget::default_target() { return default_target(4, 2, 8.0); }

MixtureTarget MixtureTarget::default_target(int classes, int components_per_class,
                                            double separation) {
  if (classes < 1 || components_per_class < 1) throw ConfigError("target needs classes >= 1");
  // Classes pair up on shared ray directions at different radii (an inner and
  // an outer tier). Direction alone is deliberately not enough to tell a tier
  // pair apart, so the embedding scorer and the class-posterior scorer carry
  // complementary information.
  const int tiers = classes >= 2 ? 2 : 1;
  const int n_rays = (classes + tiers - 1) / tiers;
  double base = separation;
  if (n_rays >= 2) {
    base = std::max(base, separation / (2.0 * std::sin(M_PI / n_rays)));
  }
  std::vector<GaussianMixture> cls;
  cls.reserve(classes);
  for (int c = 0; c < classes; ++c) {
    const int ray = c % n_rays;
    // Low class ids take the outer tier of their ray.
    const int tier = tiers == 2 ? 1 - c / n_rays : 0;
    const double angle = 2.0 * M_PI * ray / n_rays;
    std::vector<double> w(components_per_class, 1.0 / components_per_class);
    std::vector<GaussianComponent> comps;
    for (int k = 0; k < components_per_class; ++k) {
      const double radius = base + (tier * components_per_class + k) * separation;
      Eigen::VectorXd mean(2);
      mean << radius * std::cos(angle), radius * std::sin(angle);
      comps.push_back({std::move(mean), Eigen::MatrixXd::Identity(2, 2)});
    }
    cls.emplace_back(std::move(w), std::move(comps));
  }
  return MixtureTarget(std::move(cls));
}

MixtureTarget MixtureTarget::single_gaussian(const Eigen::VectorXd& mean,
                                             const Eigen::MatrixXd& cov) {
  std::vector<GaussianMixture> cls;
  cls.emplace_back(std::vector<double>{1.0}, std::vector<GaussianComponent>{{mean, cov}});
  return MixtureTarget(std::move(cls));
}

const GaussianMixture& MixtureTarget::class_mixture(int class_id) const {
  if (class_id < 0 || class_id >= num_classes()) throw ConfigError("class id out of range");
  return classes_[class_id];
}

// ---------------------------------------------------------------------------
// Exact denoiser pieces
// ---------------------------------------------------------------------------

GaussianMixture noised(const GaussianMixture& clean, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw ConfigError("alpha_bar must lie in (0, 1]");
  const double sab = std::sqrt(alpha_bar);
  const int d = clean.dimension();
  std::vector<GaussianComponent> comps;
  comps.reserve(clean.components().size());
  for (const auto& c : clean.components()) {
    comps.push_back({sab * c.mean,
                     alpha_bar * c.cov + (1.0 - alpha_bar) * Eigen::MatrixXd::Identity(d, d)});
  }
  return GaussianMixture(clean.weights(), std::move(comps));
}

GaussianMixture noised_mixture(const MixtureTarget& target, const NoiseSchedule& schedule,
                               int class_id, int t) {
  return noised(target.class_mixture(class_id), schedule.alpha_bar(t));
}

GaussianMixture noised_marginal(const MixtureTarget& target, const NoiseSchedule& schedule,
                                int t) {
  return noised(target.marginal(), schedule.alpha_bar(t));
}

Eigen::VectorXd exact_score(const Eigen::VectorXd& x, int t, const MixtureTarget& target,
                            const NoiseSchedule& schedule, int class_id) {
  return noised_mixture(target, schedule, class_id, t).score(x);
}

Eigen::VectorXd exact_score_marginal(const Eigen::VectorXd& x, int t, const MixtureTarget& target,
                                     const NoiseSchedule& schedule) {
  return noised_marginal(target, schedule, t).score(x);
}

Eigen::VectorXd tweedie_denoise(const Eigen::VectorXd& x, int t, const MixtureTarget& target,
                                const NoiseSchedule& schedule, int class_id) {
  const double ab = schedule.alpha_bar(t);
  if (!(ab > 0.0)) throw ConfigError("tweedie_denoise: singular step, alpha_bar = 0");
  const Eigen::VectorXd sc = exact_score(x, t, target, schedule, class_id);
  return (x + (1.0 - ab) * sc) / std::sqrt(ab);
}

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

ClassPosteriorScorer::ClassPosteriorScorer(std::shared_ptr<const MixtureTarget> target,
                                           std::shared_ptr<const NoiseSchedule> schedule)
    : target_(std::move(target)), schedule_(std::move(schedule)) {
  if (!target_ || !schedule_) throw ConfigError("class-energy scorer needs a target and schedule");
  const int T = schedule_->steps();
  class_at_t_.reserve(T + 1);
  marginal_at_t_.reserve(T + 1);
  for (int t = 0; t <= T; ++t) {
    std::vector<GaussianMixture> per_class;
    per_class.reserve(target_->num_classes());
    for (int c = 0; c < target_->num_classes(); ++c) {
      per_class.push_back(noised_mixture(*target_, *schedule_, c, t));
    }
    class_at_t_.push_back(std::move(per_class));
    marginal_at_t_.push_back(noised_marginal(*target_, *schedule_, t));
  }
}

int ClassPosteriorScorer::class_of(const Condition& c) const {
  const auto* label = std::get_if<ClassLabel>(&c);
  if (!label) {
    throw KindMismatchError("scorer '" + name_ + "' requires a ClassLabel condition, got " +
                            condition_kind_name(c));
  }
  if (label->id < 0 || label->id >= target_->num_classes()) {
    throw KindMismatchError("scorer '" + name_ + "': class id out of range");
  }
  return label->id;
}

EnergyValue ClassPosteriorScorer::energy(const SamplePoint& x, const Condition& c) const {
  const int cls = class_of(c);
  const int t = x.step_index;
  if (t < 0 || t > schedule_->steps()) throw ConfigError("class-energy: step index out of range");
  std::vector<double> ld(target_->num_classes());
  for (int i = 0; i < target_->num_classes(); ++i) {
    ld[i] = class_at_t_[t][i].log_density(x.coords);
  }
  const double lse = logsumexp(ld);
  return -(ld[cls] - lse);
}

Eigen::VectorXd ClassPosteriorScorer::gradient(const SamplePoint& x, const Condition& c) const {
  const int cls = class_of(c);
  const int t = x.step_index;
  if (t < 0 || t > schedule_->steps()) throw ConfigError("class-energy: step index out of range");
  return marginal_at_t_[t].score(x.coords) - class_at_t_[t][cls].score(x.coords);
}

CosineEmbedScorer::CosineEmbedScorer(std::shared_ptr<const MixtureTarget> target, int embed_dim,
                                     std::uint64_t seed)
    : target_(std::move(target)) {
  if (!target_) throw ConfigError("cosine-embed scorer needs a target");
  if (embed_dim < 1) throw ConfigError("cosine-embed scorer needs embed_dim >= 1");
  const int d = target_->dimension();
  Rng rng = Rng::stream(seed, 0x636f73u);  // fixed scorer stream
  map_.resize(embed_dim, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (int i = 0; i < embed_dim; ++i) {
    for (int j = 0; j < d; ++j) map_(i, j) = scale * rng.normal();
  }
  class_embeds_.reserve(target_->num_classes());
  for (int cls = 0; cls < target_->num_classes(); ++cls) {
    class_embeds_.push_back(map_ * target_->class_mixture(cls).moments().mean);
  }
}

int CosineEmbedScorer::class_of(const Condition& c) const {
  const auto* label = std::get_if<ClassLabel>(&c);
  if (!label) {
    throw KindMismatchError("scorer '" + name_ + "' requires a ClassLabel condition, got " +
                            condition_kind_name(c));
  }
  if (label->id < 0 || label->id >= target_->num_classes()) {
    throw KindMismatchError("scorer '" + name_ + "': class id out of range");
  }
  return label->id;
}

EnergyValue CosineEmbedScorer::energy(const SamplePoint& x, const Condition& c) const {
  const Eigen::VectorXd u = map_ * x.coords;
  const Eigen::VectorXd& v = class_embeds_[class_of(c)];
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < 1e-12 || nv < 1e-12) return 1.0;  // degenerate direction: treat as orthogonal
  return 1.0 - u.dot(v) / (nu * nv);
}

Eigen::VectorXd CosineEmbedScorer::gradient(const SamplePoint& x, const Condition& c) const {
  const Eigen::VectorXd u = map_ * x.coords;
  const Eigen::VectorXd& v = class_embeds_[class_of(c)];
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < 1e-12 || nv < 1e-12) return Eigen::VectorXd::Zero(x.coords.size());
  const double cosine = u.dot(v) / (nu * nv);
  const Eigen::VectorXd dcos_du = v / (nu * nv) - cosine * u / (nu * nu);
  return -map_.transpose() * dcos_du;
}

// ---------------------------------------------------------------------------
// Guidance
// ---------------------------------------------------------------------------

void GuidanceSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("guidance lambda must be finite and >= 0");
  }
  if (!(cfg_weight >= 0.0) || !std::isfinite(cfg_weight)) {
    throw ConfigError("guidance cfg weight must be finite and >= 0");
  }
}

GuidanceSpec make_guidance(std::shared_ptr<const MixtureTarget> target,
                           std::shared_ptr<const NoiseSchedule> schedule, ScorerArm arm,
                           double lambda, double cfg_weight, int embed_dim,
                           std::uint64_t embed_seed) {
  std::vector<ScorerHandle<SamplePoint>> handles;
  handles.push_back({std::make_shared<CosineEmbedScorer>(target, embed_dim, embed_seed), 1.0});
  if (arm == ScorerArm::E1E2 || arm == ScorerArm::E1E2E3) {
    handles.push_back({std::make_shared<ClassPosteriorScorer>(target, schedule), 1.0});
  }
  const bool cfg_on = arm == ScorerArm::E1E3 || arm == ScorerArm::E1E2E3;
  GuidanceSpec spec{lambda, cfg_on ? cfg_weight : 0.0, EnsembleSpec<SamplePoint>(std::move(handles))};
  spec.validate();
  return spec;
}

GuidanceSpec unguided(std::shared_ptr<const MixtureTarget> target,
                      std::shared_ptr<const NoiseSchedule> schedule, int embed_dim,
                      std::uint64_t embed_seed) {
  GuidanceSpec spec = make_guidance(std::move(target), std::move(schedule), ScorerArm::E1, 0.0,
                                    0.0, embed_dim, embed_seed);
  spec.lambda = 0.0;
  return spec;
}

namespace {

// Deterministic reverse prediction from prebuilt step-t mixtures. The class
// score is only consulted when cfg weight w > 0; w = 0 uses the marginal
// denoiser alone.
Eigen::VectorXd reverse_prediction(const Eigen::VectorXd& x, double ab_t, double ab_prev,
                                   const GaussianMixture& marg_t,
                                   const GaussianMixture* class_t, double w) {
  const double noise_scale = std::sqrt(1.0 - ab_t);
  Eigen::VectorXd eps_hat;
  if (w > 0.0) {
    const Eigen::VectorXd eps_class = -noise_scale * class_t->score(x);
    const Eigen::VectorXd eps_marg = -noise_scale * marg_t.score(x);
    eps_hat = (1.0 + w) * eps_class - w * eps_marg;
  } else {
    eps_hat = -noise_scale * marg_t.score(x);
  }
  const Eigen::VectorXd x0 = (x - noise_scale * eps_hat) / std::sqrt(ab_t);
  return std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps_hat;
}

// Caches the per-step noised mixtures so a full trajectory costs no repeated
// covariance factorizations.
class ReverseSampler {
 public:
  ReverseSampler(const MixtureTarget& target, const NoiseSchedule& schedule, int class_id,
                 const GuidanceSpec& guidance)
      : schedule_(schedule), guidance_(guidance), condition_(ClassLabel{class_id}) {
    guidance_.validate();
    const int T = schedule.steps();
    marg_.reserve(T);
    for (int t = 1; t <= T; ++t) marg_.push_back(noised_marginal(target, schedule, t));
    if (guidance.cfg_weight > 0.0) {
      cls_.reserve(T);
      for (int t = 1; t <= T; ++t) cls_.push_back(noised_mixture(target, schedule, class_id, t));
    }
  }

  SamplePoint step(const SamplePoint& x) const {
    const int t = x.step_index;
    if (t < 1 || t > schedule_.steps()) throw ConfigError("reverse step: t out of range");
    Eigen::VectorXd next = reverse_prediction(
        x.coords, schedule_.alpha_bar(t), schedule_.alpha_bar(t - 1), marg_[t - 1],
        cls_.empty() ? nullptr : &cls_[t - 1], guidance_.cfg_weight);
    if (guidance_.lambda > 0.0) {
      next -= guidance_.lambda * compose_gradients(x, guidance_.ensemble, condition_);
    }
    if (!next.allFinite()) {
      throw GuidanceBlowupError("guided reverse step diverged at t=" + std::to_string(t) +
                                " with lambda=" + std::to_string(guidance_.lambda));
    }
    return {std::move(next), t - 1};
  }

  const Condition& condition() const { return condition_; }

 private:
  const NoiseSchedule& schedule_;
  GuidanceSpec guidance_;
  Condition condition_;
  std::vector<GaussianMixture> marg_;
  std::vector<GaussianMixture> cls_;
};

}  // namespace

SamplePoint guided_reverse_step(const SamplePoint& x, const MixtureTarget& target,
                                const NoiseSchedule& schedule, const Condition& condition,
                                const GuidanceSpec& guidance) {
  guidance.validate();
  const int t = x.step_index;
  if (t < 1 || t > schedule.steps()) throw ConfigError("guided_reverse_step: t out of range");
  const auto* label = std::get_if<ClassLabel>(&condition);
  if (!label) {
    throw KindMismatchError(std::string("guided_reverse_step requires a ClassLabel, got ") +
                            condition_kind_name(condition));
  }
  const GaussianMixture marg_t = noised_marginal(target, schedule, t);
  std::optional<GaussianMixture> cls_t;
  if (guidance.cfg_weight > 0.0) {
    cls_t = noised_mixture(target, schedule, label->id, t);
  }
  Eigen::VectorXd next =
      reverse_prediction(x.coords, schedule.alpha_bar(t), schedule.alpha_bar(t - 1), marg_t,
                         cls_t ? &*cls_t : nullptr, guidance.cfg_weight);
  if (guidance.lambda > 0.0) {
    next -= guidance.lambda * compose_gradients(x, guidance.ensemble, condition);
  }
  if (!next.allFinite()) {
    throw GuidanceBlowupError("guided reverse step diverged at t=" + std::to_string(t) +
                              " with lambda=" + std::to_string(guidance.lambda));
  }
  return {std::move(next), t - 1};
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

SampleRun sample_class(const MixtureTarget& target, const NoiseSchedule& schedule, int class_id,
                       const GuidanceSpec& guidance, int n_samples, std::uint64_t seed,
                       int n_threads) {
  if (n_samples < 1) throw ConfigError("sample_class needs n_samples >= 1");
  if (class_id < 0 || class_id >= target.num_classes()) throw ConfigError("class id out of range");
  const int T = schedule.steps();
  const int d = target.dimension();
  const ReverseSampler sampler(target, schedule, class_id, guidance);

  Eigen::MatrixXd samples(n_samples, d);
  Eigen::MatrixXd trajectories(n_samples, T);

  const auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Generator<SamplePoint> gen;
      gen.propose = [&](Rng& rng) { return SamplePoint{rng.normal_vector(d), T}; };
      gen.refine = [&](const SamplePoint& x, int, Rng&) { return sampler.step(x); };
      RefinementConfig rc;
      rc.iterations = T;
      rc.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
      const auto res = run_consensus(gen, guidance.ensemble, sampler.condition(), rc);
      samples.row(i) = res.final_proposal.coords.transpose();
      for (int t = 0; t < T; ++t) trajectories(i, t) = res.energy_trajectory[t];
    }
  };

  if (n_threads <= 1 || n_samples < 2 * n_threads) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_samples + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n_samples, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  SampleRun run;
  run.samples = std::move(samples);
  run.mean_energy_trajectory.resize(T);
  for (int t = 0; t < T; ++t) run.mean_energy_trajectory[t] = trajectories.col(t).mean();
  return run;
}

ConsensusResult<SamplePoint> consensus_trajectory(const MixtureTarget& target,
                                                  const NoiseSchedule& schedule, int class_id,
                                                  const GuidanceSpec& guidance,
                                                  std::uint64_t seed) {
  const ReverseSampler sampler(target, schedule, class_id, guidance);
  const int d = target.dimension();
  const int T = schedule.steps();
  Generator<SamplePoint> gen;
  gen.propose = [&](Rng& rng) { return SamplePoint{rng.normal_vector(d), T}; };
  gen.refine = [&](const SamplePoint& x, int, Rng&) { return sampler.step(x); };
  RefinementConfig rc;
  rc.iterations = T;
  rc.seed = seed;
  return run_consensus(gen, guidance.ensemble, sampler.condition(), rc);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Moments fit_moments(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < d + 1) throw ConfigError("moment fit needs at least d + 1 samples");
  const Eigen::VectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return {mean, cov};
}

namespace {

Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

bool needs_regularization(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  return es.eigenvalues().minCoeff() < 1e-10;
}

}  // namespace

FrechetResult frechet_gaussian_distance(const Moments& a, const Moments& b) {
  if (a.mean.size() != b.mean.size()) throw ConfigError("moment dimensions disagree");
  FrechetResult result;
  Eigen::MatrixXd sa = a.cov;
  Eigen::MatrixXd sb = b.cov;
  const Eigen::Index d = sa.rows();
  if (needs_regularization(sa)) {
    sa += 1e-8 * Eigen::MatrixXd::Identity(d, d);
    result.regularized = true;
  }
  if (needs_regularization(sb)) {
    sb += 1e-8 * Eigen::MatrixXd::Identity(d, d);
    result.regularized = true;
  }
  const Eigen::MatrixXd root_a = sqrt_spd(sa);
  Eigen::MatrixXd inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value =
      (a.mean - b.mean).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  result.value = std::max(0.0, value);
  return result;
}

FrechetResult frechet_gaussian_distance(const Eigen::MatrixXd& samples, const Moments& reference) {
  return frechet_gaussian_distance(fit_moments(samples), reference);
}

FrechetResult frechet_gaussian_distance(const Eigen::MatrixXd& samples_a,
                                        const Eigen::MatrixXd& samples_b) {
  return frechet_gaussian_distance(fit_moments(samples_a), fit_moments(samples_b));
}

int bayes_classify(const Eigen::VectorXd& x, const MixtureTarget& target) {
  int best = 0;
  double best_ld = target.class_mixture(0).log_density(x);
  for (int c = 1; c < target.num_classes(); ++c) {
    const double ld = target.class_mixture(c).log_density(x);
    if (ld > best_ld) {
      best = c;
      best_ld = ld;
    }
  }
  return best;
}

double bayes_accuracy(const Eigen::MatrixXd& samples, int class_id, const MixtureTarget& target) {
  if (target.num_classes() < 2) throw ConfigError("bayes_accuracy needs at least 2 classes");
  if (samples.rows() == 0) throw ConfigError("bayes_accuracy needs samples");
  int hits = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    if (bayes_classify(samples.row(i).transpose(), target) == class_id) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.rows());
}

void write_samples_csv(const std::string& path, const Eigen::MatrixXd& samples,
                       const MixtureTarget& target) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "sample_index";
  for (Eigen::Index j = 0; j < samples.cols(); ++j) out << ",x" << j;
  out << ",bayes_label\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) out << "," << samples(i, j);
    out << "," << bayes_classify(samples.row(i).transpose(), target) << "\n";
  }
}

}  // namespace pic::diffusion
