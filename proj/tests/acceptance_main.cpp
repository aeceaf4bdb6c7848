// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "pic/bench.hpp"
#include "pic/blockworld.hpp"
#include "pic/diffusion.hpp"
#include "pic/seqgen.hpp"

using namespace pic;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void expect(bool ok, const std::string& detail) {
    if (!ok) {
      ok_ = false;
      failures_.push_back(detail);
    }
    details_.push_back((ok ? "    ok:   " : "    FAIL: ") + detail);
  }

  void runtime_limit(double seconds) { limit_ = seconds; }

  ~Criterion() {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (limit_ > 0 && elapsed >= limit_) {
      ok_ = false;
      failures_.push_back("runtime " + std::to_string(elapsed) + " s exceeded the " +
                          std::to_string(limit_) + " s limit");
    }
    std::printf("criterion %2d: %-58s %s (%.2f s)\n", number_, title_.c_str(),
                ok_ ? "PASS" : "FAIL", elapsed);
    for (const auto& d : details_) std::printf("%s\n", d.c_str());
    if (!ok_) ++g_failures;
    std::fflush(stdout);
  }

 private:
  int number_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  double limit_ = 0;
  bool ok_ = true;
  std::vector<std::string> details_;
  std::vector<std::string> failures_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) + index + 1);
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness.
// ---------------------------------------------------------------------------

// Random SPD quadratic scorer over plain vectors.
class RandomQuadratic : public Scorer<Eigen::VectorXd> {
 public:
  RandomQuadratic(std::string name, Eigen::VectorXd center, Eigen::MatrixXd curv)
      : name_(std::move(name)), center_(std::move(center)), curv_(std::move(curv)) {}
  const std::string& name() const override { return name_; }
  Capability capability() const override { return Capability::EnergyAndGradient; }
  EnergyValue energy(const Eigen::VectorXd& x, const Condition&) const override {
    const Eigen::VectorXd d = x - center_;
    return 0.5 * d.dot(curv_ * d);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, const Condition&) const override {
    return curv_ * (x - center_);
  }

 private:
  std::string name_;
  Eigen::VectorXd center_;
  Eigen::MatrixXd curv_;
};

void criterion_1() {
  Criterion c(1, "gradient correctness vs central finite differences");
  c.runtime_limit(10.0);
  const Condition cond = ClassLabel{0};

  // compose_gradients over randomized ensembles: 1e-5 relative.
  {
    Rng rng(101);
    int cases = 0;
    double worst = 0;
    for (int rep = 0; rep < 120; ++rep) {
      const int dim = 2 + static_cast<int>(rng.below(3));
      std::vector<ScorerHandle<Eigen::VectorXd>> handles;
      const int n = 1 + static_cast<int>(rng.below(3));
      for (int s = 0; s < n; ++s) {
        Eigen::MatrixXd b(dim, dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) b(i, j) = rng.normal();
        handles.push_back({std::make_shared<RandomQuadratic>(
                               "q" + std::to_string(s), rng.normal_vector(dim),
                               Eigen::MatrixXd(b * b.transpose() +
                                               0.5 * Eigen::MatrixXd::Identity(dim, dim))),
                           rng.uniform() * 2.0});
      }
      const EnsembleSpec<Eigen::VectorXd> ens(std::move(handles));
      const Eigen::VectorXd x = rng.normal_vector(dim);
      const Eigen::VectorXd g = compose_gradients(x, ens, cond);
      const double h = 1e-5;
      for (int j = 0; j < dim; ++j) {
        Eigen::VectorXd hi = x, lo = x;
        hi[j] += h;
        lo[j] -= h;
        const double fd =
            (compose_energies(hi, ens, cond) - compose_energies(lo, ens, cond)) / (2 * h);
        worst = std::max(worst, std::abs(g[j] - fd) / std::max(1.0, std::abs(fd)));
      }
      ++cases;
    }
    c.expect(cases >= 100 && worst < 1e-5,
             "compose_gradients: " + std::to_string(cases) + " cases, worst rel err " + fmt(worst));
  }

  // exact_score vs finite differences of log density: 1e-5 relative.
  {
    Rng rng(202);
    namespace dif = pic::diffusion;
    const dif::NoiseSchedule schedule = dif::NoiseSchedule::linear(60);
    int cases = 0;
    double worst = 0;
    for (int rep = 0; rep < 110; ++rep) {
      const int dim = 2 + static_cast<int>(rng.below(2));
      const int comps = 1 + static_cast<int>(rng.below(3));
      std::vector<double> w(comps);
      double sum = 0;
      for (double& x : w) {
        x = 0.2 + rng.uniform();
        sum += x;
      }
      for (double& x : w) x /= sum;
      std::vector<dif::GaussianComponent> parts;
      for (int i = 0; i < comps; ++i) {
        Eigen::MatrixXd b(dim, dim);
        for (int r = 0; r < dim; ++r)
          for (int q = 0; q < dim; ++q) b(r, q) = 0.5 * rng.normal();
        parts.push_back({3.0 * rng.normal_vector(dim),
                         b * b.transpose() + Eigen::MatrixXd::Identity(dim, dim)});
      }
      const dif::GaussianMixture clean(w, parts);
      const int t = static_cast<int>(rng.below(61));
      const dif::GaussianMixture noisy = dif::noised(clean, schedule.alpha_bar(t));
      const Eigen::VectorXd x = 3.0 * rng.normal_vector(dim);
      const Eigen::VectorXd sc = noisy.score(x);
      const double h = 1e-5;
      for (int j = 0; j < dim; ++j) {
        Eigen::VectorXd hi = x, lo = x;
        hi[j] += h;
        lo[j] -= h;
        const double fd = (noisy.log_density(hi) - noisy.log_density(lo)) / (2 * h);
        worst = std::max(worst, std::abs(sc[j] - fd) / std::max(1.0, std::abs(fd)));
      }
      ++cases;
    }
    c.expect(cases >= 100 && worst < 1e-5,
             "exact_score: " + std::to_string(cases) + " cases, worst rel err " + fmt(worst));
  }

  // refine_bias loss gradient: 1e-6 absolute.
  {
    namespace sg = pic::seqgen;
    Rng rng(303);
    int cases = 0;
    double worst = 0;
    for (int rep = 0; rep < 120; ++rep) {
      const int k = 3 + static_cast<int>(rng.below(6));
      const Eigen::VectorXd logits = rng.normal_vector(k);
      const Eigen::VectorXd bias = 0.5 * rng.normal_vector(k);
      Eigen::VectorXd q = rng.normal_vector(k).array().abs() + 0.05;
      q /= q.sum();
      const double gamma = rng.uniform();
      const Eigen::VectorXd g = sg::refinement_gradient(logits, bias, q, gamma);
      const double h = 1e-6;
      for (int j = 0; j < k; ++j) {
        Eigen::VectorXd hi = bias, lo = bias;
        hi[j] += h;
        lo[j] -= h;
        const double fd = (sg::refinement_loss(logits, hi, q, gamma) -
                           sg::refinement_loss(logits, lo, q, gamma)) /
                          (2 * h);
        worst = std::max(worst, std::abs(g[j] - fd));
      }
      ++cases;
    }
    c.expect(cases >= 100 && worst < 1e-6,
             "refine_bias: " + std::to_string(cases) + " cases, worst abs err " +
                 std::to_string(worst));
  }
}

// ---------------------------------------------------------------------------
// 2. Diffusion fidelity.
// ---------------------------------------------------------------------------

void criterion_2() {
  Criterion c(2, "unguided diffusion fidelity and step-count convergence");
  c.runtime_limit(60.0);
  namespace dif = pic::diffusion;
  Eigen::VectorXd mu(2);
  mu << 1.5, -0.5;
  auto target = std::make_shared<const dif::MixtureTarget>(
      dif::MixtureTarget::single_gaussian(mu, Eigen::MatrixXd::Identity(2, 2)));
  const dif::Moments reference = target->class_mixture(0).moments();

  std::vector<double> fds;
  for (int steps : {10, 25, 50, 100}) {
    auto schedule = std::make_shared<const dif::NoiseSchedule>(dif::NoiseSchedule::linear(steps));
    const dif::SampleRun run = dif::sample_class(*target, *schedule, 0,
                                                 dif::unguided(target, schedule), 10000, 7, 2);
    fds.push_back(dif::frechet_gaussian_distance(run.samples, reference).value);
  }
  c.expect(fds.back() < 0.05, "FD at 100 steps = " + fmt(fds.back()) + " < 0.05 (1e4 samples)");
  bool monotone = true;
  for (std::size_t i = 1; i < fds.size(); ++i) monotone = monotone && fds[i] < fds[i - 1];
  c.expect(monotone, "FD monotone over steps {10,25,50,100}: " + fmt(fds[0]) + " > " +
                         fmt(fds[1]) + " > " + fmt(fds[2]) + " > " + fmt(fds[3]));
}

// ---------------------------------------------------------------------------
// 3. Ensemble ablation (diffusion).
// ---------------------------------------------------------------------------

void criterion_3() {
  Criterion c(3, "diffusion scorer-ensemble ablation ordering");
  c.runtime_limit(300.0);
  namespace dif = pic::diffusion;
  const pic::bench::DiffusionParams p;  // wired defaults
  auto target = std::make_shared<const dif::MixtureTarget>(
      dif::MixtureTarget::default_target(p.classes, p.components, p.separation));
  auto schedule = std::make_shared<const dif::NoiseSchedule>(dif::NoiseSchedule::linear(p.steps));

  const std::vector<std::pair<std::string, dif::ScorerArm>> arms = {
      {"G+E1", dif::ScorerArm::E1},
      {"G+E1+E2", dif::ScorerArm::E1E2},
      {"G+E1+E3", dif::ScorerArm::E1E3},
      {"G+E1+E2+E3", dif::ScorerArm::E1E2E3},
  };
  std::vector<double> mean_acc;
  for (const auto& [label, arm] : arms) {
    double acc = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const dif::GuidanceSpec g =
          dif::make_guidance(target, schedule, arm, p.lambda, p.cfg_weight, p.embed_dim);
      const dif::SampleRun run =
          dif::sample_class(*target, *schedule, p.class_id, g, p.samples, seed, 2);
      acc += dif::bayes_accuracy(run.samples, p.class_id, *target);
    }
    mean_acc.push_back(acc / 5);
    c.expect(true, label + " mean accuracy " + fmt(mean_acc.back()));
  }
  const double single = mean_acc[0], e12 = mean_acc[1], e13 = mean_acc[2], full = mean_acc[3];
  c.expect(full >= e12, "full >= G+E1+E2 (" + fmt(full) + " >= " + fmt(e12) + ")");
  c.expect(full >= e13, "full >= G+E1+E3 (" + fmt(full) + " >= " + fmt(e13) + ")");
  c.expect(e12 >= single, "G+E1+E2 >= G+E1 (" + fmt(e12) + " >= " + fmt(single) + ")");
  c.expect(e13 >= single, "G+E1+E3 >= G+E1 (" + fmt(e13) + " >= " + fmt(single) + ")");
  c.expect(full - single >= 0.02,
           "full - single = " + fmt(full - single) + " >= 0.02 absolute");
}

// ---------------------------------------------------------------------------
// 4 & 5. Seqgen refinement ablation and the beam property.
// ---------------------------------------------------------------------------

struct SeqgenArmResult {
  double bs1 = 0;
  double bs5 = 0;
};

void criteria_4_and_5() {
  namespace sg = pic::seqgen;
  const pic::bench::SeqgenParams p;  // wired defaults
  std::vector<SeqgenArmResult> iter_runs, rerank_runs, genonly_runs;
  bool beam_recount_ok = true;
  bool beam_superset_ok = true;

  {
    Criterion c(4, "seqgen iterative > rerank > generator-only ordering");
    c.runtime_limit(300.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      sg::CorpusSpec spec;
      spec.size = p.corpus_size;
      spec.wrong_answer_fraction = p.wrong_fraction;
      spec.min_width_bias = p.width_bias;
      const sg::Corpus corpus = sg::build_corpus(spec, seed);
      const sg::ToyGenerator gen = sg::fit_generator(corpus, p.order);
      const auto eval = sg::make_eval_set(spec, corpus, p.eval_size, seed, p.max_answer_tokens);
      const sg::SolutionScorer scorer;
      sg::DecodeConfig dc;
      dc.candidates = p.candidates;
      dc.inner_iterations = p.inner_iterations;
      dc.step_size = p.step_size;
      dc.fluency_weight = p.fluency_weight;
      dc.temperature = p.temperature;
      dc.max_length = p.max_length;

      std::vector<sg::DecodeResult> iter, gonly, rerank;
      std::vector<std::string> truths;
      Rng rng = Rng::stream(seed, 0x7e7aull);
      for (const auto& problem : eval) {
        truths.push_back(problem.answer);
        iter.push_back(sg::decode_answer(gen, scorer, problem.question, p.beam_size, dc));
        sg::DecodeConfig off = dc;
        off.inner_iterations = 0;
        gonly.push_back(sg::decode_answer(gen, scorer, problem.question, p.beam_size, off));
        sg::DecodeResult r;
        r.beams = {sg::baseline_rerank(gen, scorer, problem.question, p.rerank_candidates, dc,
                                       rng)};
        r.beam_tokens = {{}};
        r.beam_log_probs = {0.0};
        rerank.push_back(std::move(r));
      }
      const auto mi = sg::answer_metrics(iter, truths);
      const auto mg = sg::answer_metrics(gonly, truths);
      const auto mr = sg::answer_metrics(rerank, truths);
      iter_runs.push_back({mi.accuracy_bs1, mi.accuracy_bs5});
      genonly_runs.push_back({mg.accuracy_bs1, mg.accuracy_bs5});
      rerank_runs.push_back({mr.accuracy_bs1, mr.accuracy_bs5});

      // Recount oracle for any-of-5 judging, and the per-run superset check.
      for (const auto* arm : {&iter, &gonly}) {
        int any = 0;
        for (std::size_t i = 0; i < arm->size(); ++i) {
          bool hit = false;
          for (const auto& beam : (*arm)[i].beams) hit = hit || beam == truths[i];
          if (hit) ++any;
        }
        const double recounted = static_cast<double>(any) / arm->size();
        const auto m = sg::answer_metrics(*arm, truths);
        beam_recount_ok = beam_recount_ok && recounted == m.accuracy_bs5;
        beam_superset_ok = beam_superset_ok && m.accuracy_bs5 >= m.accuracy_bs1;
      }
    }
    const auto mean = [](const std::vector<SeqgenArmResult>& runs) {
      double s = 0;
      for (const auto& r : runs) s += r.bs1;
      return s / runs.size();
    };
    const double it = mean(iter_runs), rr = mean(rerank_runs), go = mean(genonly_runs);
    c.expect(true, "mean BS=1: iterative " + fmt(it) + ", rerank " + fmt(rr) +
                       ", generator-only " + fmt(go) + " (5 seeds x 200 problems)");
    c.expect(it > rr && it - rr >= 0.05, "iterative - rerank = " + fmt(it - rr) + " >= 0.05");
    c.expect(rr > go && rr - go >= 0.05, "rerank - generator-only = " + fmt(rr - go) + " >= 0.05");
  }

  {
    Criterion c(5, "beam-5 accuracy dominates beam-1 on every run");
    c.runtime_limit(60.0);
    c.expect(beam_superset_ok, "BS=5 >= BS=1 on every decoded run");
    c.expect(beam_recount_ok, "any-of-5 judging matches the recount oracle exactly");
  }
}

// ---------------------------------------------------------------------------
// 6 & 7. Blockworld ablations.
// ---------------------------------------------------------------------------

void criteria_6_and_7() {
  namespace bw = pic::blockworld;
  const pic::bench::BlockworldParams p;  // wired defaults
  const int episodes = 30;

  std::vector<double> by_views;
  double closed_rate = 0, open_rate = 0;
  {
    Criterion c(6, "blockworld success monotone in the view count");
    c.runtime_limit(300.0);
    for (int views : {1, 3, 5}) {
      double mean = 0;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        int wins = 0;
        for (int e = 0; e < episodes; ++e) {
          bw::ScenarioParams sp;
          sp.grid = p.grid;
          sp.objects = p.objects;
          sp.relations = p.relations;
          sp.views = views;
          sp.confusion = p.confusion;
          const bw::Scenario sc = bw::random_scenario(sp, derive(seed, e));
          bw::MPCConfig mc;
          mc.candidate_count = p.candidates;
          mc.seed = derive(seed, 1000000 + e);
          if (bw::run_episode(sc.initial, sc.goal, sc.views, mc).success) ++wins;
        }
        mean += static_cast<double>(wins) / episodes;
      }
      by_views.push_back(mean / 5);
      c.expect(true, std::to_string(views) + " views: success rate " + fmt(by_views.back()) +
                         " (30 episodes x 5 seeds, 2-relation goals)");
    }
    c.expect(by_views[1] >= by_views[0] && by_views[2] >= by_views[1],
             "monotone non-decreasing over {1, 3, 5} views");
    c.expect(by_views[2] - by_views[0] >= 0.15,
             "5-view - 1-view = " + fmt(by_views[2] - by_views[0]) + " >= 0.15");
  }

  {
    Criterion c(7, "closed-loop beats the 100-trajectory open-loop baseline");
    c.runtime_limit(300.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      int cw = 0, ow = 0;
      for (int e = 0; e < episodes; ++e) {
        bw::ScenarioParams sp;
        sp.grid = p.grid;
        sp.objects = p.objects;
        sp.relations = p.relations;
        sp.views = p.views;
        sp.confusion = p.confusion;
        const bw::Scenario sc = bw::random_scenario(sp, derive(seed, e));
        bw::MPCConfig mc;
        mc.candidate_count = p.candidates;
        mc.seed = derive(seed, 1000000 + e);
        if (bw::run_episode(sc.initial, sc.goal, sc.views, mc).success) ++cw;
        if (bw::baseline_openloop(sc.initial, sc.goal, sc.views, p.open_loop_trajectories, mc)
                .success) {
          ++ow;
        }
      }
      closed_rate += static_cast<double>(cw) / episodes;
      open_rate += static_cast<double>(ow) / episodes;
    }
    closed_rate /= 5;
    open_rate /= 5;
    c.expect(true, "closed-loop " + fmt(closed_rate) + ", open-loop(100) " + fmt(open_rate) +
                       " on the same episode/seed grid");
    c.expect(closed_rate >= open_rate + 0.10,
             "closed - open = " + fmt(closed_rate - open_rate) + " >= 0.10 absolute");
  }
}

// ---------------------------------------------------------------------------
// 8. Oracle equivalence on randomized instances.
// ---------------------------------------------------------------------------

void criterion_8() {
  Criterion c(8, "brute-force oracle equivalence on randomized instances");
  c.runtime_limit(120.0);
  namespace bw = pic::blockworld;
  namespace sg = pic::seqgen;

  // extract_relations vs pairwise enumeration.
  {
    Rng rng(811);
    int agree = 0;
    const int total = 1000;
    for (int rep = 0; rep < total; ++rep) {
      std::vector<bw::ObjectState> objs;
      std::set<int> cells;
      const int n = 2 + static_cast<int>(rng.below(4));
      for (int i = 0; i < n; ++i) {
        bw::GridPos pos;
        do {
          pos = {static_cast<int>(rng.below(5)), static_cast<int>(rng.below(5))};
        } while (!cells.insert(pos.row * 5 + pos.col).second);
        objs.push_back({i, "o" + std::to_string(i), pos});
      }
      const bw::WorldState state(5, 5, objs);
      std::set<bw::Relation> oracle;
      for (const auto& a : objs) {
        for (const auto& b : objs) {
          if (a.id == b.id) continue;
          if (a.pos.col < b.pos.col) oracle.insert({a.id, bw::Predicate::LeftOf, b.id});
          if (a.pos.col > b.pos.col) oracle.insert({a.id, bw::Predicate::RightOf, b.id});
          if (a.pos.row < b.pos.row) oracle.insert({a.id, bw::Predicate::Above, b.id});
          if (a.pos.row > b.pos.row) oracle.insert({a.id, bw::Predicate::Below, b.id});
        }
      }
      if (bw::extract_relations(state) == oracle) ++agree;
    }
    c.expect(agree == total, "extract_relations: " + std::to_string(agree) + "/1000 exact");
  }

  // view_energy vs a recount over the rendered observation.
  {
    Rng rng(822);
    int agree = 0;
    const int total = 1000;
    for (int rep = 0; rep < total; ++rep) {
      bw::ScenarioParams sp;
      sp.relations = 1 + static_cast<int>(rng.below(3));
      const bw::Scenario sc = bw::random_scenario(sp, rng.next_u64());
      const std::uint64_t salt = rng.next_u64();
      bool all_match = true;
      for (const auto& v : sc.views) {
        const bw::Observation obs = bw::render_view(sc.initial, v, salt);
        int recount = 0;
        for (const auto& r : sc.goal.relations()) {
          const bool horiz =
              r.predicate == bw::Predicate::LeftOf || r.predicate == bw::Predicate::RightOf;
          if (!obs.axes.count(horiz ? bw::Axis::Horizontal : bw::Axis::Vertical)) {
            ++recount;
            continue;
          }
          int ns = 0, no = 0;
          bw::GridPos ps{}, po{};
          for (const auto& o : obs.objects) {
            if (o.label == sc.initial.label_of(r.subject_id)) {
              ++ns;
              ps = o.pos;
            }
            if (o.label == sc.initial.label_of(r.object_id)) {
              ++no;
              po = o.pos;
            }
          }
          bool holds = false;
          if (ns == 1 && no == 1) {
            switch (r.predicate) {
              case bw::Predicate::LeftOf: holds = ps.col < po.col; break;
              case bw::Predicate::RightOf: holds = ps.col > po.col; break;
              case bw::Predicate::Above: holds = ps.row < po.row; break;
              case bw::Predicate::Below: holds = ps.row > po.row; break;
            }
          }
          if (!holds) ++recount;
        }
        all_match = all_match && recount == bw::view_energy(sc.initial, v, sc.goal, salt);
      }
      if (all_match) ++agree;
    }
    c.expect(agree == total, "view_energy: " + std::to_string(agree) + "/1000 exact");
  }

  // select_action vs exhaustive re-evaluation of the same candidates.
  {
    Rng rng(833);
    int agree = 0;
    const int total = 1000;
    for (int rep = 0; rep < total; ++rep) {
      bw::ScenarioParams sp;
      sp.relations = 2;
      const bw::Scenario sc = bw::random_scenario(sp, rng.next_u64());
      const std::uint64_t seed = rng.next_u64();
      const std::uint64_t salt = rng.next_u64();
      Rng pick(seed);
      const bw::Action a = bw::select_action(sc.initial, sc.goal, sc.views, 8, pick, salt);
      Rng replay(seed);
      const auto cands = bw::sample_valid_actions(sc.initial, 8, replay);
      const auto ensemble = bw::view_ensemble(sc.views, salt);
      const Condition cond = std::make_shared<const bw::GoalSpec>(sc.goal);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const double e = compose_energies(bw::world_step(sc.initial, cands[i]), ensemble, cond);
        if (e < best) {
          best = e;
          best_i = i;
        }
      }
      if (a.object_id == cands[best_i].object_id && a.target == cands[best_i].target) ++agree;
    }
    c.expect(agree == total, "select_action argmin: " + std::to_string(agree) + "/1000 exact");
  }

  // scorer_distribution vs direct softmax of independently recomputed energies.
  {
    Rng rng(844);
    int agree = 0;
    const int total = 1000;
    const auto& v = sg::Vocabulary::instance();
    sg::CorpusSpec spec;
    spec.size = 50;
    const sg::Corpus corpus = sg::build_corpus(spec, 9);
    for (int rep = 0; rep < total; ++rep) {
      const auto& line = corpus.lines[rng.below(corpus.lines.size())];
      const auto eq = std::find(line.begin(), line.end(), v.equals());
      const std::vector<int> question(line.begin(), eq + 1);
      const std::vector<int> truth = sg::true_answer_tokens(question);

      // Random prefix: sometimes a truth prefix, sometimes corrupted.
      std::vector<int> prefix;
      const std::size_t keep = rng.below(truth.size());
      for (std::size_t i = 0; i < keep; ++i) prefix.push_back(truth[i]);
      if (!prefix.empty() && rng.uniform() < 0.4) {
        prefix.back() = static_cast<int>(rng.below(10));
      }

      sg::CandidateSet cands;
      const int k = 2 + static_cast<int>(rng.below(5));
      for (int j = 0; j < k; ++j) cands.tokens.push_back(static_cast<int>(rng.below(v.size())));
      cands.probs = Eigen::VectorXd::Constant(k, 1.0 / k);
      const double tau = 0.2 + rng.uniform();

      const Eigen::VectorXd q = sg::scorer_distribution(sg::SolutionScorer{}, question, prefix,
                                                        cands, tau);
      // Oracle: prefix-of-truth check + the same stabilized softmax.
      Eigen::VectorXd e(k);
      bool prefix_ok = prefix.size() < truth.size();
      for (std::size_t i = 0; prefix_ok && i < prefix.size(); ++i) {
        prefix_ok = prefix[i] == truth[i];
      }
      for (int j = 0; j < k; ++j) {
        e[j] = prefix_ok && truth[prefix.size()] == cands.tokens[j] ? 0.0 : 1.0;
      }
      Eigen::VectorXd z = -e / tau;
      Eigen::VectorXd expected = (z.array() - z.maxCoeff()).exp();
      expected /= expected.sum();
      if (q == expected) ++agree;
    }
    c.expect(agree == total, "scorer_distribution: " + std::to_string(agree) + "/1000 exact");
  }
}

// ---------------------------------------------------------------------------
// 9. Determinism across reruns and worker counts.
// ---------------------------------------------------------------------------

void criterion_9() {
  Criterion c(9, "byte-identical metrics across reruns, serial vs parallel");
  c.runtime_limit(300.0);
  namespace fs = std::filesystem;
  using namespace pic::bench;

  ExperimentConfig cfg = default_config();
  cfg.suite = Suite::All;
  cfg.ablation = Ablation::None;
  cfg.seeds = {11, 12};
  cfg.diffusion.samples = 400;
  cfg.seqgen.eval_size = 60;
  cfg.blockworld.episodes = 10;

  const std::string base = (fs::temp_directory_path() / "pic_acceptance_det").string();
  fs::remove_all(base);
  cfg.workers = 1;
  cfg.out_dir = base + "/serial";
  const auto serial = run_matrix(cfg);
  cfg.workers = 2;
  cfg.out_dir = base + "/parallel";
  const auto parallel = run_matrix(cfg);

  bool all_ok = serial.size() == parallel.size() && !serial.empty();
  bool identical = all_ok;
  for (std::size_t i = 0; all_ok && i < serial.size(); ++i) {
    all_ok = all_ok && serial[i].ok && parallel[i].ok;
    RunRecord a = serial[i];
    RunRecord b = parallel[i];
    a.wall_time_s = b.wall_time_s = 0;
    identical = identical && a.to_json() == b.to_json();
  }
  c.expect(all_ok, "all " + std::to_string(serial.size()) + " records (3 suites x 2 seeds) ran ok");
  c.expect(identical, "metrics byte-identical between workers=1 and workers=2");
  fs::remove_all(base);
}

// ---------------------------------------------------------------------------
// 10. Defaults provenance.
// ---------------------------------------------------------------------------

void criterion_10() {
  Criterion c(10, "diffusion defaults: 100 reverse steps, CFG weight 3.0");
  c.runtime_limit(10.0);
  namespace dif = pic::diffusion;
  const pic::bench::DiffusionParams p;
  c.expect(p.steps == 100, "bench default reverse steps = 100");
  c.expect(p.cfg_weight == 3.0, "bench default CFG weight = 3.0");
  c.expect(p.lambda == 1.0, "bench default gradient-scorer lambda = 1.0");

  const auto cfg = pic::bench::default_config();
  c.expect(cfg.diffusion.steps == 100 && cfg.diffusion.cfg_weight == 3.0,
           "empty config resolves to the same defaults");

  auto target = std::make_shared<const dif::MixtureTarget>(dif::MixtureTarget::default_target());
  auto schedule = std::make_shared<const dif::NoiseSchedule>(dif::NoiseSchedule::linear(p.steps));
  const dif::GuidanceSpec g = dif::make_guidance(target, schedule, dif::ScorerArm::E1E2E3);
  c.expect(schedule->steps() == 100, "schedule carries the 100 steps");
  c.expect(g.cfg_weight == 3.0 && g.lambda == 1.0, "guidance defaults wired into make_guidance");
}

}  // namespace

int main() {
  std::printf("accept: generator/scorer consensus harness, version %s\n\n", kVersion);
  criterion_1();
  criterion_2();
  criterion_3();
  criteria_4_and_5();
  criteria_6_and_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("\n%s (%d criterion failure%s)\n", g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
