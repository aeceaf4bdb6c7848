#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pic/bench.hpp"
#include "pic/blockworld.hpp"
#include "pic/diffusion.hpp"
#include "pic/seqgen.hpp"

namespace py = pybind11;

namespace {

pic::diffusion::ScorerArm arm_from_string(const std::string& arm) {
  using pic::diffusion::ScorerArm;
  if (arm == "G+E1") return ScorerArm::E1;
  if (arm == "G+E1+E2") return ScorerArm::E1E2;
  if (arm == "G+E1+E3") return ScorerArm::E1E3;
  if (arm == "G+E1+E2+E3") return ScorerArm::E1E2E3;
  throw pic::ConfigError("unknown arm '" + arm + "'");
}

py::dict diffusion_sample(const std::string& arm, std::uint64_t seed, int n_samples, int steps,
                          int classes, int components, double separation, double lambda,
                          double cfg_weight, int embed_dim, int class_id, bool unguided) {
  namespace dif = pic::diffusion;
  auto target = std::make_shared<const dif::MixtureTarget>(
      dif::MixtureTarget::default_target(classes, components, separation));
  auto schedule = std::make_shared<const dif::NoiseSchedule>(dif::NoiseSchedule::linear(steps));
  const dif::GuidanceSpec guidance =
      unguided ? dif::unguided(target, schedule, embed_dim)
               : dif::make_guidance(target, schedule, arm_from_string(arm), lambda, cfg_weight,
                                    embed_dim);
  const dif::SampleRun run =
      dif::sample_class(*target, *schedule, class_id, guidance, n_samples, seed);

  py::dict out;
  out["samples"] = run.samples;
  out["bayes_accuracy"] = classes > 1 ? dif::bayes_accuracy(run.samples, class_id, *target) : 1.0;
  out["frechet"] =
      dif::frechet_gaussian_distance(run.samples, target->class_mixture(class_id).moments()).value;
  out["mean_energy_trajectory"] = run.mean_energy_trajectory;
  return out;
}

double frechet_gaussian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return pic::diffusion::frechet_gaussian_distance(a, b).value;
}

py::dict seqgen_eval(const std::string& arm, std::uint64_t seed, int corpus_size,
                     double wrong_fraction, int eval_size, int order, int beam_size,
                     const std::string& scorer_mode, double flip_probability,
                     int max_answer_tokens) {
  namespace sg = pic::seqgen;
  sg::CorpusSpec spec;
  spec.size = corpus_size;
  spec.wrong_answer_fraction = wrong_fraction;
  const sg::Corpus corpus = sg::build_corpus(spec, seed);
  const sg::ToyGenerator gen = sg::fit_generator(corpus, order);
  const auto eval = sg::make_eval_set(spec, corpus, eval_size, seed, max_answer_tokens);

  sg::SolutionScorer scorer;
  if (scorer_mode == "noisy") {
    scorer.mode = sg::ScorerMode::NoisyOracle;
    scorer.flip_probability = flip_probability;
    scorer.seed = seed;
  }
  sg::DecodeConfig dc;
  if (arm == "generator-only") dc.inner_iterations = 0;

  std::vector<sg::DecodeResult> results;
  std::vector<std::string> truths;
  pic::Rng rng = pic::Rng::stream(seed, 0x7e7aull);
  for (const auto& problem : eval) {
    truths.push_back(problem.answer);
    if (arm == "end-only") {
      sg::DecodeResult r;
      r.beams = {sg::baseline_rerank(gen, scorer, problem.question, 5, dc, rng)};
      r.beam_tokens.push_back({});
      r.beam_log_probs.push_back(0.0);
      results.push_back(std::move(r));
    } else {
      results.push_back(sg::decode_answer(gen, scorer, problem.question, beam_size, dc));
    }
  }
  const auto m = sg::answer_metrics(results, truths);
  py::dict out;
  out["accuracy_bs1"] = m.accuracy_bs1;
  out["accuracy_bs5"] = m.accuracy_bs5;
  out["vocab_size"] = m.vocab_size;
  return out;
}

std::string decode_answer(const std::string& question, std::uint64_t seed, int corpus_size,
                          int order, int beam_size) {
  namespace sg = pic::seqgen;
  sg::CorpusSpec spec;
  spec.size = corpus_size;  // defaults otherwise
  const sg::Corpus corpus = sg::build_corpus(spec, seed);
  const sg::ToyGenerator gen = sg::fit_generator(corpus, order);
  const auto tokens = sg::Vocabulary::instance().tokenize(question);
  const sg::SolutionScorer scorer;
  const sg::DecodeConfig dc;
  const auto result = sg::decode_answer(gen, scorer, tokens, beam_size, dc);
  return result.beams.empty() ? std::string() : result.beams[0];
}

py::dict blockworld_eval(const std::string& arm, std::uint64_t seed, int episodes, int views,
                         int relations, int grid, int objects, int candidates, double confusion,
                         int open_loop_trajectories) {
  namespace bw = pic::blockworld;
  bw::ScenarioParams sp;
  sp.grid = grid;
  sp.objects = objects;
  sp.relations = relations;
  sp.views = views;
  sp.confusion = confusion;

  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    const auto scenario = bw::random_scenario(sp, pic::mix64(pic::mix64(seed) + e + 1));
    bw::MPCConfig mc;
    mc.candidate_count = candidates;
    mc.seed = pic::mix64(pic::mix64(seed) + 1000000 + e);
    const auto result =
        arm == "open-loop"
            ? bw::baseline_openloop(scenario.initial, scenario.goal, scenario.views,
                                    open_loop_trajectories, mc)
            : bw::run_episode(scenario.initial, scenario.goal, scenario.views, mc);
    if (result.success) ++successes;
  }
  py::dict out;
  out["success_rate"] = static_cast<double>(successes) / episodes;
  out["episodes"] = episodes;
  return out;
}

py::list run_matrix_py(const std::string& config_path, const std::string& out_dir) {
  pic::bench::ExperimentConfig config = config_path.empty()
                                            ? pic::bench::default_config()
                                            : pic::bench::load_config(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  const auto records = pic::bench::run_matrix(config);
  py::list out;
  for (const auto& r : records) {
    py::dict d;
    d["config_hash"] = r.config_hash;
    d["suite"] = r.suite;
    d["ablation"] = r.ablation;
    d["arm"] = r.arm;
    d["seed"] = r.seed;
    py::dict metrics;
    for (const auto& [k, v] : r.metrics) metrics[py::str(k)] = v;
    d["metrics"] = metrics;
    d["ok"] = r.ok;
    d["error"] = r.error;
    out.append(std::move(d));
  }
  return out;
}

std::string config_hash(const std::string& config_path) {
  return pic::bench::load_config(config_path).config_hash();
}

}  // namespace

PYBIND11_MODULE(_pic, m) {
  m.doc() = "Generator/scorer consensus benchmark harness";
  m.attr("__version__") = pic::kVersion;

  m.def("diffusion_sample", &diffusion_sample, py::arg("arm") = "G+E1+E2+E3",
        py::arg("seed") = 0, py::arg("n_samples") = 500, py::arg("steps") = 100,
        py::arg("classes") = 4, py::arg("components") = 2, py::arg("separation") = 8.0,
        py::arg("lam") = 1.0, py::arg("cfg_weight") = 3.0, py::arg("embed_dim") = 8,
        py::arg("class_id") = 0, py::arg("unguided") = false,
        "Guided reverse-process sampling; returns samples and metrics.");
  m.def("frechet_gaussian", &frechet_gaussian, py::arg("a"), py::arg("b"),
        "Squared Frechet distance between Gaussian fits of two sample sets.");
  m.def("seqgen_eval", &seqgen_eval, py::arg("arm") = "iterative", py::arg("seed") = 0,
        py::arg("corpus_size") = 20000, py::arg("wrong_fraction") = 0.3, py::arg("eval_size") = 50,
        py::arg("order") = 3, py::arg("beam_size") = 5, py::arg("scorer") = "exact",
        py::arg("flip_probability") = 0.1, py::arg("max_answer_tokens") = 1,
        "Decode a held-out arithmetic set; returns accuracy metrics.");
  m.def("decode_answer", &decode_answer, py::arg("question"), py::arg("seed") = 0,
        py::arg("corpus_size") = 20000, py::arg("order") = 3, py::arg("beam_size") = 1,
        "Scorer-refined decode of a single question such as '1 2 + 7 ='.");
  m.def("blockworld_eval", &blockworld_eval, py::arg("arm") = "closed-loop", py::arg("seed") = 0,
        py::arg("episodes") = 10, py::arg("views") = 5, py::arg("relations") = 2,
        py::arg("grid") = 8, py::arg("objects") = 6, py::arg("candidates") = 64,
        py::arg("confusion") = 0.1, py::arg("open_loop_trajectories") = 100,
        "Run manipulation episodes; returns the success rate.");
  m.def("run_matrix", &run_matrix_py, py::arg("config_path") = "", py::arg("out_dir") = "",
        "Run the experiment matrix for a config file; returns run records.");
  m.def("config_hash", &config_hash, py::arg("config_path"),
        "Canonical hash of a config file.");
}
