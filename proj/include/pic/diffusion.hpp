#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pic/core.hpp"

namespace pic::diffusion {

// ---------------------------------------------------------------------------
// Schedule and targets.
// ---------------------------------------------------------------------------

// Forward-process schedule. alpha_bar(0) == 1 (clean data) and alpha_bar(t)
// is strictly decreasing in (0, 1] for t = 1..T.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> betas);

  // Linear betas over `steps` steps. The default endpoint range reaches
  // alpha_bar(T) ~= 2e-5 at 100 steps so the pure-noise start matches N(0, I).
  static NoiseSchedule linear(int steps, double beta_start = 1e-4, double beta_end = 0.2);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;       // t in 1..T
  double alpha_bar(int t) const;  // t in 0..T

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Weighted Gaussian mixture with SPD covariances; weights sum to 1 (1e-12).
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<GaussianComponent> components);

  int dimension() const { return static_cast<int>(components_[0].mean.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double log_density(const Eigen::VectorXd& x) const;
  // grad_x log p(x), responsibility-weighted and log-sum-exp stabilized.
  Eigen::VectorXd score(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;
  Moments moments() const;

 private:
  struct ComponentCache {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_norm = 0.0;  // -0.5 * (d log 2pi + log det cov)
  };
  std::vector<double> weights_;
  std::vector<GaussianComponent> components_;
  std::vector<ComponentCache> cache_;
};

// Per-class Gaussian-mixture data distribution; equal class priors.
class MixtureTarget {
 public:
  MixtureTarget(std::vector<GaussianMixture> classes);

  // d = 2, 4 classes, 2 components per class, min component separation 8,
  // isotropic unit covariance. Class pairs share a ray direction at inner
  // and outer radii, so direction alone cannot separate them.
  static MixtureTarget default_target();
  static MixtureTarget default_target(int classes, int components_per_class, double separation);
  static MixtureTarget single_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

  int dimension() const { return classes_[0].dimension(); }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  const GaussianMixture& class_mixture(int class_id) const;
  // Equal-prior mixture over all classes.
  const GaussianMixture& marginal() const { return *marginal_; }

 private:
  std::vector<GaussianMixture> classes_;
  std::shared_ptr<GaussianMixture> marginal_;
};

// Continuous proposal x^k tagged with the diffusion step it lives at.
struct SamplePoint {
  Eigen::VectorXd coords;
  int step_index = 0;
};

// ---------------------------------------------------------------------------
// Exact denoiser pieces.
// ---------------------------------------------------------------------------

// Class mixture diffused to step t: means sqrt(abar_t) * mu, covariances
// abar_t * Sigma + (1 - abar_t) * I.
GaussianMixture noised_mixture(const MixtureTarget& target, const NoiseSchedule& schedule,
                               int class_id, int t);
GaussianMixture noised_marginal(const MixtureTarget& target, const NoiseSchedule& schedule, int t);
GaussianMixture noised(const GaussianMixture& clean, double alpha_bar);

// grad_x log p_t(x | class) in closed form.
Eigen::VectorXd exact_score(const Eigen::VectorXd& x, int t, const MixtureTarget& target,
                            const NoiseSchedule& schedule, int class_id);
Eigen::VectorXd exact_score_marginal(const Eigen::VectorXd& x, int t, const MixtureTarget& target,
                                     const NoiseSchedule& schedule);

// Posterior mean of x_0 given x_t (Tweedie): (x + (1 - abar_t) * score) / sqrt(abar_t).
Eigen::VectorXd tweedie_denoise(const Eigen::VectorXd& x, int t, const MixtureTarget& target,
                                const NoiseSchedule& schedule, int class_id);

// ---------------------------------------------------------------------------
// Guidance.
// ---------------------------------------------------------------------------

// Classifier analog: energy = -log p_t(class | x) under the noised mixtures
// with equal priors; gradient available in closed form.
class ClassPosteriorScorer : public Scorer<SamplePoint> {
 public:
  ClassPosteriorScorer(std::shared_ptr<const MixtureTarget> target,
                       std::shared_ptr<const NoiseSchedule> schedule);
  const std::string& name() const override { return name_; }
  Capability capability() const override { return Capability::EnergyAndGradient; }
  EnergyValue energy(const SamplePoint& x, const Condition& c) const override;
  Eigen::VectorXd gradient(const SamplePoint& x, const Condition& c) const override;

 private:
  int class_of(const Condition& c) const;
  std::shared_ptr<const MixtureTarget> target_;
  std::shared_ptr<const NoiseSchedule> schedule_;
  // Noised mixtures cached per step t = 0..T; immutable after construction.
  std::vector<std::vector<GaussianMixture>> class_at_t_;
  std::vector<GaussianMixture> marginal_at_t_;
  std::string name_ = "class-energy";
};

// Embedding-cosine analog: a fixed seeded linear map A embeds points; the
// class embedding is A * (class mean); energy = 1 - cos(Ax, A mu_c).
class CosineEmbedScorer : public Scorer<SamplePoint> {
 public:
  CosineEmbedScorer(std::shared_ptr<const MixtureTarget> target, int embed_dim, std::uint64_t seed);
  const std::string& name() const override { return name_; }
  Capability capability() const override { return Capability::EnergyAndGradient; }
  EnergyValue energy(const SamplePoint& x, const Condition& c) const override;
  Eigen::VectorXd gradient(const SamplePoint& x, const Condition& c) const override;
  const Eigen::MatrixXd& embedding() const { return map_; }

 private:
  int class_of(const Condition& c) const;
  std::shared_ptr<const MixtureTarget> target_;
  Eigen::MatrixXd map_;                   // embed_dim x d
  std::vector<Eigen::VectorXd> class_embeds_;
  std::string name_ = "cosine-embed";
};

// Guidance configuration. cfg_weight = 0 disables classifier-free guidance
// (the reverse step then uses the class-marginal denoiser); cfg_weight = w > 0
// combines the exact denoisers as eps = (1 + w) * eps_class - w * eps_marginal.
// lambda scales the gradient feedback from the scorer ensemble.
struct GuidanceSpec {
  double lambda = 1.0;
  double cfg_weight = 3.0;
  EnsembleSpec<SamplePoint> ensemble;

  void validate() const;
};

// Scorer subsets used by defaults and the bench arms.
enum class ScorerArm {
  E1,        // cosine-embed only
  E1E2,      // cosine-embed + class-energy
  E1E3,      // cosine-embed, classifier-free on
  E1E2E3,    // all three
};

GuidanceSpec make_guidance(std::shared_ptr<const MixtureTarget> target,
                           std::shared_ptr<const NoiseSchedule> schedule, ScorerArm arm,
                           double lambda = 1.0, double cfg_weight = 3.0, int embed_dim = 8,
                           std::uint64_t embed_seed = 0);
GuidanceSpec unguided(std::shared_ptr<const MixtureTarget> target,
                      std::shared_ptr<const NoiseSchedule> schedule, int embed_dim = 8,
                      std::uint64_t embed_seed = 0);

// One deterministic reverse step t -> t-1 with optional classifier-free
// combination, followed by the gradient correction
// x^{k+1} = xhat^{k+1} - lambda * compose_gradients(x^k, ensemble, condition).
SamplePoint guided_reverse_step(const SamplePoint& x, const MixtureTarget& target,
                                const NoiseSchedule& schedule, const Condition& condition,
                                const GuidanceSpec& guidance);

struct SampleRun {
  Eigen::MatrixXd samples;                   // n x d, step 0 coordinates
  std::vector<double> mean_energy_trajectory;  // composed ensemble energy per step
};

// n independent reverse trajectories from N(0, I); deterministic per seed.
// Per-sample RNG streams derive from (seed, sampleIndex) so serial and
// parallel execution produce identical output.
SampleRun sample_class(const MixtureTarget& target, const NoiseSchedule& schedule, int class_id,
                       const GuidanceSpec& guidance, int n_samples, std::uint64_t seed,
                       int n_threads = 1);

// Single-trajectory consensus view of the same reverse process (exposes the
// generic driver's trajectory recording).
ConsensusResult<SamplePoint> consensus_trajectory(const MixtureTarget& target,
                                                  const NoiseSchedule& schedule, int class_id,
                                                  const GuidanceSpec& guidance,
                                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------

struct FrechetResult {
  double value = 0.0;    // squared 2-Wasserstein distance between Gaussian fits
  bool regularized = false;  // rank-deficient covariance bumped by 1e-8 I
};

Moments fit_moments(const Eigen::MatrixXd& samples);  // needs >= d + 1 rows

// FD^2 = |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa^{1/2} Sb Sa^{1/2})^{1/2}).
FrechetResult frechet_gaussian_distance(const Moments& a, const Moments& b);
FrechetResult frechet_gaussian_distance(const Eigen::MatrixXd& samples, const Moments& reference);
FrechetResult frechet_gaussian_distance(const Eigen::MatrixXd& samples_a,
                                        const Eigen::MatrixXd& samples_b);

// Ground-truth Bayes label under the clean class mixtures, equal priors;
// exact ties go to the lowest class id.
int bayes_classify(const Eigen::VectorXd& x, const MixtureTarget& target);
double bayes_accuracy(const Eigen::MatrixXd& samples, int class_id, const MixtureTarget& target);

// Per-run sample dump: sampleIndex, coordinates, assigned Bayes label.
void write_samples_csv(const std::string& path, const Eigen::MatrixXd& samples,
                       const MixtureTarget& target);

}  // namespace pic::diffusion
