#pragma once

// Closed-form scorers over plain vectors, shared by the core tests.

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "pic/core.hpp"

namespace pictest {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// E(x) = 0.5 * (x - c)^T A (x - c), A symmetric positive definite.
class QuadraticScorer : public pic::Scorer<Vec> {
 public:
  QuadraticScorer(std::string name, Vec center, Mat curvature)
      : name_(std::move(name)), center_(std::move(center)), curvature_(std::move(curvature)) {}
  QuadraticScorer(std::string name, Vec center)
      : QuadraticScorer(std::move(name), center,
                        Mat::Identity(center.size(), center.size())) {}

  const std::string& name() const override { return name_; }
  pic::Capability capability() const override { return pic::Capability::EnergyAndGradient; }
  double energy(const Vec& x, const pic::Condition&) const override {
    const Vec d = x - center_;
    return 0.5 * d.dot(curvature_ * d);
  }
  Vec gradient(const Vec& x, const pic::Condition&) const override {
    return curvature_ * (x - center_);
  }

 private:
  std::string name_;
  Vec center_;
  Mat curvature_;
};

class EnergyOnlyScorer : public pic::Scorer<Vec> {
 public:
  explicit EnergyOnlyScorer(std::string name, double value = 1.0)
      : name_(std::move(name)), value_(value) {}
  const std::string& name() const override { return name_; }
  double energy(const Vec&, const pic::Condition&) const override { return value_; }

 private:
  std::string name_;
  double value_;
};

class ConstantScorer : public pic::Scorer<Vec> {
 public:
  ConstantScorer(std::string name, double value) : name_(std::move(name)), value_(value) {}
  const std::string& name() const override { return name_; }
  pic::Capability capability() const override { return pic::Capability::EnergyAndGradient; }
  double energy(const Vec&, const pic::Condition&) const override { return value_; }
  Vec gradient(const Vec& x, const pic::Condition&) const override {
    return Vec::Zero(x.size());
  }

 private:
  std::string name_;
  double value_;
};

// Smooth non-convex energy for gradient checks: sum_i a_i * sin(b_i . x).
class SinusoidScorer : public pic::Scorer<Vec> {
 public:
  SinusoidScorer(std::string name, std::vector<double> amps, std::vector<Vec> freqs)
      : name_(std::move(name)), amps_(std::move(amps)), freqs_(std::move(freqs)) {}
  const std::string& name() const override { return name_; }
  pic::Capability capability() const override { return pic::Capability::EnergyAndGradient; }
  double energy(const Vec& x, const pic::Condition&) const override {
    double e = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) e += amps_[i] * std::sin(freqs_[i].dot(x));
    return e;
  }
  Vec gradient(const Vec& x, const pic::Condition&) const override {
    Vec g = Vec::Zero(x.size());
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      g += amps_[i] * std::cos(freqs_[i].dot(x)) * freqs_[i];
    }
    return g;
  }

 private:
  std::string name_;
  std::vector<double> amps_;
  std::vector<Vec> freqs_;
};

inline pic::EnsembleSpec<Vec> ensemble_of(
    std::vector<std::pair<std::shared_ptr<const pic::Scorer<Vec>>, double>> scorers) {
  std::vector<pic::ScorerHandle<Vec>> handles;
  for (auto& [s, w] : scorers) handles.push_back({std::move(s), w});
  return pic::EnsembleSpec<Vec>(std::move(handles));
}

// Central finite differences of the composed energy.
inline Vec fd_gradient(const Vec& x, const pic::EnsembleSpec<Vec>& ensemble,
                       const pic::Condition& cond, double h = 1e-5) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (pic::compose_energies(hi, ensemble, cond) -
            pic::compose_energies(lo, ensemble, cond)) /
           (2.0 * h);
  }
  return g;
}

}  // namespace pictest
