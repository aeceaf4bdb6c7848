#include "pic/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "pic/blockworld.hpp"
#include "pic/diffusion.hpp"
#include "pic/seqgen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace pic::bench {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + s + "'", line);
  }
}

int parse_int(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + s + "'", line);
  }
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '-';
  }
  return out;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) + index + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

std::string suite_name(Suite s) {
  switch (s) {
    case Suite::Diffusion:
      return "diffusion";
    case Suite::Seqgen:
      return "seqgen";
    case Suite::Blockworld:
      return "blockworld";
    case Suite::All:
      return "all";
  }
  throw ConfigError("invalid suite");
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Scorers:
      return "scorers";
    case Ablation::Refinement:
      return "refinement";
    case Ablation::None:
      return "none";
  }
  throw ConfigError("invalid ablation");
}

Suite suite_from_name(const std::string& name) {
  if (name == "diffusion") return Suite::Diffusion;
  if (name == "seqgen") return Suite::Seqgen;
  if (name == "blockworld") return Suite::Blockworld;
  if (name == "all") return Suite::All;
  throw ConfigError("unknown suite '" + name + "'");
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "scorers") return Ablation::Scorers;
  if (name == "refinement") return Ablation::Refinement;
  if (name == "none") return Ablation::None;
  throw ConfigError("unknown ablation '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config needs at least one seed");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const auto& d = diffusion;
  if (d.classes < 1 || d.components < 1) throw ConfigError("diffusion target shape invalid");
  if (!(d.separation > 0.0)) throw ConfigError("diffusion separation must be positive");
  if (d.steps < 1 || d.samples < 1) throw ConfigError("diffusion steps/samples must be positive");
  if (!(d.lambda >= 0.0) || !(d.cfg_weight >= 0.0)) {
    throw ConfigError("diffusion guidance scales must be >= 0");
  }
  if (d.embed_dim < 1) throw ConfigError("diffusion embed_dim must be >= 1");
  if (d.class_id < 0 || d.class_id >= d.classes) throw ConfigError("diffusion class_id out of range");
  const auto& s = seqgen;
  if (s.order != 2 && s.order != 3) throw ConfigError("seqgen order must be 2 or 3");
  if (s.corpus_size < 1 || s.eval_size < 1) throw ConfigError("seqgen sizes must be positive");
  if (!(s.wrong_fraction >= 0.0 && s.wrong_fraction <= 1.0)) {
    throw ConfigError("seqgen wrong_fraction must lie in [0, 1]");
  }
  if (!(s.width_bias >= 0.0 && s.width_bias <= 1.0)) {
    throw ConfigError("seqgen width_bias must lie in [0, 1]");
  }
  if (s.max_answer_tokens < 0) throw ConfigError("seqgen max_answer_tokens must be >= 0");
  if (s.candidates < 2) throw ConfigError("seqgen candidates must be >= 2");
  if (s.inner_iterations < 0) throw ConfigError("seqgen inner_iterations must be >= 0");
  if (!(s.step_size > 0.0) || !(s.temperature > 0.0)) {
    throw ConfigError("seqgen step_size and temperature must be positive");
  }
  if (!(s.fluency_weight >= 0.0)) throw ConfigError("seqgen fluency_weight must be >= 0");
  if (s.beam_size < 1 || s.rerank_candidates < 1) throw ConfigError("seqgen beam sizes invalid");
  if (s.scorer != "exact" && s.scorer != "noisy") {
    throw ConfigError("seqgen scorer must be exact or noisy");
  }
  if (!(s.flip_probability >= 0.0 && s.flip_probability < 0.5)) {
    throw ConfigError("seqgen flip_probability must lie in [0, 0.5)");
  }
  if (s.max_length < 1) throw ConfigError("seqgen max_length must be >= 1");
  const auto& b = blockworld;
  if (b.grid < 2) throw ConfigError("blockworld grid must be >= 2");
  if (b.objects < 2) throw ConfigError("blockworld needs >= 2 objects");
  if (b.episodes < 1) throw ConfigError("blockworld episodes must be >= 1");
  if (b.candidates < 1) throw ConfigError("blockworld candidates must be >= 1");
  if (b.relations < 1) throw ConfigError("blockworld relations must be >= 1");
  if (b.views < 1 || b.views > 5) throw ConfigError("blockworld views must lie in 1..5");
  if (!(b.confusion >= 0.0 && b.confusion < 0.5)) {
    throw ConfigError("blockworld confusion must lie in [0, 0.5)");
  }
  if (b.open_loop_trajectories < 1) throw ConfigError("blockworld open-loop budget invalid");
}

std::string ExperimentConfig::canonical_string() const {
  // Resolved settings; out/seeds/workers are execution details, not part of
  // the experiment identity.
  std::vector<std::string> lines;
  lines.push_back("ablation=" + ablation_name(ablation));
  lines.push_back("suite=" + suite_name(suite));
  const auto& d = diffusion;
  lines.push_back("diffusion.cfg_weight=" + format_double(d.cfg_weight));
  lines.push_back("diffusion.class_id=" + std::to_string(d.class_id));
  lines.push_back("diffusion.classes=" + std::to_string(d.classes));
  lines.push_back("diffusion.components=" + std::to_string(d.components));
  lines.push_back("diffusion.embed_dim=" + std::to_string(d.embed_dim));
  lines.push_back("diffusion.lambda=" + format_double(d.lambda));
  lines.push_back("diffusion.samples=" + std::to_string(d.samples));
  lines.push_back("diffusion.separation=" + format_double(d.separation));
  lines.push_back("diffusion.steps=" + std::to_string(d.steps));
  const auto& s = seqgen;
  lines.push_back("seqgen.beam_size=" + std::to_string(s.beam_size));
  lines.push_back("seqgen.candidates=" + std::to_string(s.candidates));
  lines.push_back("seqgen.corpus_size=" + std::to_string(s.corpus_size));
  lines.push_back("seqgen.eval_size=" + std::to_string(s.eval_size));
  lines.push_back("seqgen.flip_probability=" + format_double(s.flip_probability));
  lines.push_back("seqgen.fluency_weight=" + format_double(s.fluency_weight));
  lines.push_back("seqgen.inner_iterations=" + std::to_string(s.inner_iterations));
  lines.push_back("seqgen.max_length=" + std::to_string(s.max_length));
  lines.push_back("seqgen.order=" + std::to_string(s.order));
  lines.push_back("seqgen.rerank_candidates=" + std::to_string(s.rerank_candidates));
  lines.push_back("seqgen.scorer=" + s.scorer);
  lines.push_back("seqgen.step_size=" + format_double(s.step_size));
  lines.push_back("seqgen.temperature=" + format_double(s.temperature));
  lines.push_back("seqgen.width_bias=" + format_double(s.width_bias));
  lines.push_back("seqgen.max_answer_tokens=" + std::to_string(s.max_answer_tokens));
  lines.push_back("seqgen.wrong_fraction=" + format_double(s.wrong_fraction));
  const auto& b = blockworld;
  lines.push_back("blockworld.candidates=" + std::to_string(b.candidates));
  lines.push_back("blockworld.confusion=" + format_double(b.confusion));
  lines.push_back("blockworld.episodes=" + std::to_string(b.episodes));
  lines.push_back("blockworld.grid=" + std::to_string(b.grid));
  lines.push_back("blockworld.objects=" + std::to_string(b.objects));
  lines.push_back("blockworld.open_loop_trajectories=" + std::to_string(b.open_loop_trajectories));
  lines.push_back("blockworld.relations=" + std::to_string(b.relations));
  lines.push_back("blockworld.views=" + std::to_string(b.views));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string ExperimentConfig::config_hash() const {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical_string());
  return out.str();
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  const char* env = std::getenv("PIC_OUT_DIR");
  cfg.out_dir = env && *env ? env : "pic-runs";
  return cfg;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg = default_config();
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section != "diffusion" && section != "seqgen" && section != "blockworld") {
        throw ParseError("unknown section '" + section + "'", line_no);
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);

    if (section.empty()) {
      if (key == "suite") {
        try {
          cfg.suite = suite_from_name(value);
        } catch (const ConfigError& e) {
          throw ParseError(e.what(), line_no);
        }
      } else if (key == "ablation") {
        try {
          cfg.ablation = ablation_from_name(value);
        } catch (const ConfigError& e) {
          throw ParseError(e.what(), line_no);
        }
      } else if (key == "seeds") {
        cfg.seeds.clear();
        std::istringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const std::string si = trim(item);
          if (si.empty()) throw ParseError("empty seed entry", line_no);
          try {
            cfg.seeds.push_back(std::stoull(si));
          } catch (const std::exception&) {
            throw ParseError("expected a seed integer, got '" + si + "'", line_no);
          }
        }
        if (cfg.seeds.empty()) throw ParseError("seeds list is empty", line_no);
      } else if (key == "out") {
        cfg.out_dir = value;
      } else if (key == "workers") {
        cfg.workers = parse_int(value, line_no);
      } else {
        throw ParseError("unknown key '" + key + "'", line_no);
      }
    } else if (section == "diffusion") {
      auto& d = cfg.diffusion;
      if (key == "classes") d.classes = parse_int(value, line_no);
      else if (key == "components") d.components = parse_int(value, line_no);
      else if (key == "separation") d.separation = parse_double(value, line_no);
      else if (key == "steps") d.steps = parse_int(value, line_no);
      else if (key == "samples") d.samples = parse_int(value, line_no);
      else if (key == "lambda") d.lambda = parse_double(value, line_no);
      else if (key == "cfg_weight") d.cfg_weight = parse_double(value, line_no);
      else if (key == "embed_dim") d.embed_dim = parse_int(value, line_no);
      else if (key == "class_id") d.class_id = parse_int(value, line_no);
      else throw ParseError("unknown key '" + key + "' in [diffusion]", line_no);
    } else if (section == "seqgen") {
      auto& s = cfg.seqgen;
      if (key == "order") s.order = parse_int(value, line_no);
      else if (key == "corpus_size") s.corpus_size = parse_int(value, line_no);
      else if (key == "wrong_fraction") s.wrong_fraction = parse_double(value, line_no);
      else if (key == "width_bias") s.width_bias = parse_double(value, line_no);
      else if (key == "max_answer_tokens") s.max_answer_tokens = parse_int(value, line_no);
      else if (key == "eval_size") s.eval_size = parse_int(value, line_no);
      else if (key == "candidates") s.candidates = parse_int(value, line_no);
      else if (key == "inner_iterations") s.inner_iterations = parse_int(value, line_no);
      else if (key == "step_size") s.step_size = parse_double(value, line_no);
      else if (key == "fluency_weight") s.fluency_weight = parse_double(value, line_no);
      else if (key == "temperature") s.temperature = parse_double(value, line_no);
      else if (key == "beam_size") s.beam_size = parse_int(value, line_no);
      else if (key == "rerank_candidates") s.rerank_candidates = parse_int(value, line_no);
      else if (key == "scorer") s.scorer = value;
      else if (key == "flip_probability") s.flip_probability = parse_double(value, line_no);
      else if (key == "max_length") s.max_length = parse_int(value, line_no);
      else throw ParseError("unknown key '" + key + "' in [seqgen]", line_no);
    } else if (section == "blockworld") {
      auto& b = cfg.blockworld;
      if (key == "grid") b.grid = parse_int(value, line_no);
      else if (key == "objects") b.objects = parse_int(value, line_no);
      else if (key == "episodes") b.episodes = parse_int(value, line_no);
      else if (key == "candidates") b.candidates = parse_int(value, line_no);
      else if (key == "relations") b.relations = parse_int(value, line_no);
      else if (key == "views") b.views = parse_int(value, line_no);
      else if (key == "confusion") b.confusion = parse_double(value, line_no);
      else if (key == "open_loop_trajectories") b.open_loop_trajectories = parse_int(value, line_no);
      else throw ParseError("unknown key '" + key + "' in [blockworld]", line_no);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// RunRecord
// ---------------------------------------------------------------------------

std::string RunRecord::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["suite"] = suite;
  j["ablation"] = ablation;
  j["arm"] = arm;
  j["seed"] = seed;
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  j["metrics"] = std::move(m);
  j["wall_time_s"] = wall_time_s;
  j["artifact_version"] = artifact_version;
  j["ok"] = ok;
  j["error"] = error;
  return j.dump(2);
}

RunRecord RunRecord::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.suite = j.at("suite").get<std::string>();
  r.ablation = j.at("ablation").get<std::string>();
  r.arm = j.at("arm").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics.emplace_back(k, v.get<double>());
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.artifact_version = j.at("artifact_version").get<std::string>();
  r.ok = j.at("ok").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

// ---------------------------------------------------------------------------
// Arms
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> arms_for(Suite suite, Ablation ablation) {
  switch (suite) {
    case Suite::Diffusion:
      if (ablation == Ablation::Scorers) return {"G+E1", "G+E1+E2", "G+E1+E3", "G+E1+E2+E3"};
      if (ablation == Ablation::Refinement) return {"iterative", "end-only"};
      return {"G+E1+E2+E3"};
    case Suite::Seqgen:
      if (ablation == Ablation::Scorers) return {"G", "G+E"};
      if (ablation == Ablation::Refinement) return {"iterative", "end-only", "generator-only"};
      return {"iterative"};
    case Suite::Blockworld:
      if (ablation == Ablation::Scorers) return {"views-1", "views-3", "views-5"};
      if (ablation == Ablation::Refinement) return {"closed-loop", "open-loop"};
      return {"closed-loop"};
    case Suite::All:
      break;
  }
  throw ConfigError("arms_for: concrete suite required");
}

std::vector<Suite> concrete_suites(Suite s) {
  if (s == Suite::All) return {Suite::Diffusion, Suite::Seqgen, Suite::Blockworld};
  return {s};
}

}  // namespace

std::vector<std::pair<std::string, std::string>> list_arms(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (Suite s : concrete_suites(config.suite)) {
    for (const auto& arm : arms_for(s, config.ablation)) {
      out.emplace_back(suite_name(s), arm);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suite runners
// ---------------------------------------------------------------------------

namespace {

using MetricList = std::vector<std::pair<std::string, double>>;

MetricList run_diffusion_arm(const DiffusionParams& p, const std::string& arm, std::uint64_t seed,
                             const std::string& out_dir) {
  namespace dif = pic::diffusion;
  auto target = std::make_shared<const dif::MixtureTarget>(
      dif::MixtureTarget::default_target(p.classes, p.components, p.separation));
  auto schedule = std::make_shared<const dif::NoiseSchedule>(dif::NoiseSchedule::linear(p.steps));

  const auto arm_spec = [&](const std::string& name) -> dif::ScorerArm {
    if (name == "G+E1") return dif::ScorerArm::E1;
    if (name == "G+E1+E2") return dif::ScorerArm::E1E2;
    if (name == "G+E1+E3") return dif::ScorerArm::E1E3;
    if (name == "G+E1+E2+E3" || name == "iterative") return dif::ScorerArm::E1E2E3;
    throw ConfigError("unknown diffusion arm '" + name + "'");
  };

  Eigen::MatrixXd samples;
  std::vector<double> trajectory;
  if (arm == "end-only") {
    // Feedback only at the end: unguided trajectories, then per-slot
    // reranking by the composed scorer energy of the finished samples.
    const dif::GuidanceSpec scorer_spec =
        dif::make_guidance(target, schedule, dif::ScorerArm::E1E2, 0.0, 0.0, p.embed_dim);
    const dif::GuidanceSpec off = dif::unguided(target, schedule, p.embed_dim);
    const int rounds = 5;
    std::vector<dif::SampleRun> runs;
    runs.reserve(rounds);
    for (int r = 0; r < rounds; ++r) {
      runs.push_back(dif::sample_class(*target, *schedule, p.class_id, off, p.samples,
                                       derive(seed, r)));
    }
    const Condition cond = ClassLabel{p.class_id};
    samples.resize(p.samples, target->dimension());
    for (int i = 0; i < p.samples; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rounds; ++r) {
        const dif::SamplePoint pt{runs[r].samples.row(i).transpose(), 0};
        const double e = compose_energies(pt, scorer_spec.ensemble, cond);
        if (e < best) {
          best = e;
          samples.row(i) = runs[r].samples.row(i);
        }
      }
    }
    trajectory = runs[0].mean_energy_trajectory;
  } else {
    const dif::GuidanceSpec guidance =
        dif::make_guidance(target, schedule, arm_spec(arm), p.lambda, p.cfg_weight, p.embed_dim);
    dif::SampleRun run =
        dif::sample_class(*target, *schedule, p.class_id, guidance, p.samples, seed);
    samples = std::move(run.samples);
    trajectory = std::move(run.mean_energy_trajectory);
  }

  const std::string tag = sanitize(arm) + "_" + std::to_string(seed);
  dif::write_samples_csv(out_dir + "/samples/diffusion_" + tag + ".csv", samples, *target);
  {
    std::vector<std::string> x_labels(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) x_labels[i] = std::to_string(i + 1);
    write_line_chart_svg(out_dir + "/plots/energy_diffusion_" + tag + ".svg",
                         "mean composed energy, " + arm, x_labels, {{arm, trajectory}});
  }

  MetricList metrics;
  metrics.emplace_back("bayes_accuracy",
                       dif::bayes_accuracy(samples, p.class_id, *target));
  metrics.emplace_back(
      "frechet",
      dif::frechet_gaussian_distance(samples, target->class_mixture(p.class_id).moments()).value);
  metrics.emplace_back("mean_final_energy", trajectory.empty() ? 0.0 : trajectory.back());
  return metrics;
}

MetricList run_seqgen_arm(const SeqgenParams& p, const std::string& arm, std::uint64_t seed,
                          const std::string& out_dir) {
  namespace sg = pic::seqgen;
  sg::CorpusSpec spec;
  spec.size = p.corpus_size;
  spec.wrong_answer_fraction = p.wrong_fraction;
  spec.min_width_bias = p.width_bias;
  const sg::Corpus corpus = sg::build_corpus(spec, seed);
  const sg::ToyGenerator generator = sg::fit_generator(corpus, p.order);
  const std::vector<sg::Problem> eval =
      sg::make_eval_set(spec, corpus, p.eval_size, seed, p.max_answer_tokens);

  sg::SolutionScorer scorer;
  if (p.scorer == "noisy") {
    scorer.mode = sg::ScorerMode::NoisyOracle;
    scorer.flip_probability = p.flip_probability;
    scorer.seed = seed;
  }
  scorer.temperature = p.temperature;

  sg::DecodeConfig dc;
  dc.candidates = p.candidates;
  dc.inner_iterations = p.inner_iterations;
  dc.step_size = p.step_size;
  dc.fluency_weight = p.fluency_weight;
  dc.temperature = p.temperature;
  dc.max_length = p.max_length;

  std::vector<sg::DecodeResult> results;
  std::vector<std::string> truths;
  results.reserve(eval.size());
  truths.reserve(eval.size());
  Rng rerank_rng = Rng::stream(seed, 0x7e7aull);
  for (const auto& problem : eval) {
    truths.push_back(problem.answer);
    if (arm == "end-only") {
      sg::DecodeResult r;
      r.beams = {sg::baseline_rerank(generator, scorer, problem.question, p.rerank_candidates, dc,
                                     rerank_rng)};
      r.beam_tokens = {{}};
      for (char c : r.beams[0]) {
        r.beam_tokens[0].push_back(sg::Vocabulary::instance().id(std::string(1, c)));
      }
      r.beam_log_probs = {0.0};
      results.push_back(std::move(r));
    } else {
      sg::DecodeConfig arm_dc = dc;
      if (arm == "generator-only" || arm == "G") arm_dc.inner_iterations = 0;
      results.push_back(
          sg::decode_answer(generator, scorer, problem.question, p.beam_size, arm_dc));
    }
  }

  const auto metrics_struct = sg::answer_metrics(results, truths);
  const std::string tag = sanitize(arm) + "_" + std::to_string(seed);
  {
    std::ofstream csv(out_dir + "/predictions/seqgen_" + tag + ".csv");
    const auto& v = sg::Vocabulary::instance();
    csv << "question,prediction,correct,beams\n";
    for (std::size_t i = 0; i < eval.size(); ++i) {
      std::string beams;
      for (std::size_t b = 0; b < results[i].beams.size(); ++b) {
        if (b) beams += ' ';
        beams += results[i].beams[b].empty() ? "<empty>" : results[i].beams[b];
      }
      const std::string top = results[i].beams.empty() ? "" : results[i].beams[0];
      csv << '"' << v.to_string(eval[i].question) << "\"," << top << ','
          << (top == truths[i] ? 1 : 0) << ",\"" << beams << "\"\n";
    }
  }

  MetricList metrics;
  metrics.emplace_back("accuracy_bs1", metrics_struct.accuracy_bs1);
  metrics.emplace_back("accuracy_bs5", metrics_struct.accuracy_bs5);
  metrics.emplace_back("vocab_size", static_cast<double>(metrics_struct.vocab_size));
  return metrics;
}

MetricList run_blockworld_arm(const BlockworldParams& p, const std::string& arm,
                              std::uint64_t seed, const std::string& out_dir) {
  namespace bw = pic::blockworld;
  int n_views = p.views;
  if (arm == "views-1") n_views = 1;
  else if (arm == "views-3") n_views = 3;
  else if (arm == "views-5") n_views = 5;

  bw::ScenarioParams sp;
  sp.grid = p.grid;
  sp.objects = p.objects;
  sp.relations = p.relations;
  sp.views = n_views;
  sp.confusion = p.confusion;

  json episodes = json::array();
  int successes = 0;
  double step_total = 0.0;
  double energy_total = 0.0;
  int energy_count = 0;
  for (int e = 0; e < p.episodes; ++e) {
    const bw::Scenario scenario = bw::random_scenario(sp, derive(seed, e));
    bw::MPCConfig mc;
    mc.candidate_count = p.candidates;
    mc.seed = derive(seed, 1000000 + e);
    const bw::EpisodeResult result =
        arm == "open-loop"
            ? bw::baseline_openloop(scenario.initial, scenario.goal, scenario.views,
                                    p.open_loop_trajectories, mc)
            : bw::run_episode(scenario.initial, scenario.goal, scenario.views, mc);
    if (result.success) ++successes;
    step_total += static_cast<double>(result.trajectory.size());
    if (!result.energy_trace.empty()) {
      energy_total += result.energy_trace.back();
      ++energy_count;
    }
    json rec;
    rec["episode"] = e;
    rec["success"] = result.success;
    rec["steps"] = result.trajectory.size();
    rec["final_energy"] = result.energy_trace.empty() ? -1.0 : result.energy_trace.back();
    rec["failure_reason"] = result.failure_reason;
    episodes.push_back(std::move(rec));
  }

  const std::string tag = sanitize(arm) + "_" + std::to_string(seed);
  {
    std::ofstream out(out_dir + "/episodes/blockworld_" + tag + ".json");
    out << episodes.dump(2) << "\n";
  }

  MetricList metrics;
  metrics.emplace_back("success_rate", static_cast<double>(successes) / p.episodes);
  metrics.emplace_back("mean_steps", step_total / p.episodes);
  metrics.emplace_back("mean_final_energy",
                       energy_count ? energy_total / energy_count : 0.0);
  return metrics;
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

std::vector<RunRecord> run_matrix(const ExperimentConfig& config) {
  config.validate();
  const std::string hash = config.config_hash();
  fs::create_directories(config.out_dir + "/records");
  fs::create_directories(config.out_dir + "/samples");
  fs::create_directories(config.out_dir + "/predictions");
  fs::create_directories(config.out_dir + "/episodes");
  fs::create_directories(config.out_dir + "/plots");

  struct Cell {
    Suite suite;
    std::string arm;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Suite s : concrete_suites(config.suite)) {
    for (const auto& arm : arms_for(s, config.ablation)) {
      for (std::uint64_t seed : config.seeds) cells.push_back({s, arm, seed});
    }
  }

  std::vector<RunRecord> records(cells.size());
  std::mutex io_mutex;
  std::ofstream index(config.out_dir + "/index.txt", std::ios::app);

  const auto run_cell = [&](std::size_t i) {
    const Cell& cell = cells[i];
    RunRecord r;
    r.config_hash = hash;
    r.suite = suite_name(cell.suite);
    r.ablation = ablation_name(config.ablation);
    r.arm = cell.arm;
    r.seed = cell.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (cell.suite) {
        case Suite::Diffusion:
          r.metrics = run_diffusion_arm(config.diffusion, cell.arm, cell.seed, config.out_dir);
          break;
        case Suite::Seqgen:
          r.metrics = run_seqgen_arm(config.seqgen, cell.arm, cell.seed, config.out_dir);
          break;
        case Suite::Blockworld:
          r.metrics = run_blockworld_arm(config.blockworld, cell.arm, cell.seed, config.out_dir);
          break;
        case Suite::All:
          throw ConfigError("internal: unexpanded suite");
      }
      for (const auto& [k, v] : r.metrics) {
        if (!std::isfinite(v)) throw NonFiniteEnergyError("metric '" + k + "' is not finite");
      }
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
      r.metrics.clear();
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string file = "records/" + r.suite + "_" + r.ablation + "_" + sanitize(r.arm) +
                             "_" + std::to_string(r.seed) + ".json";
    {
      std::lock_guard<std::mutex> lock(io_mutex);
      std::ofstream out(config.out_dir + "/" + file);
      out << r.to_json() << "\n";
      index << file << "\n";
      index.flush();
    }
    records[i] = std::move(r);
  };

  if (config.workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n = std::min<int>(config.workers, static_cast<int>(cells.size()));
    for (int w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return records;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("nothing to summarize");
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::vector<double>>
      groups;
  for (const auto& r : records) {
    if (!r.ok) continue;
    for (const auto& [metric, value] : r.metrics) {
      groups[{r.suite, r.ablation, r.arm, metric}].push_back(value);
    }
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, values] : groups) {
    // Sorted accumulation keeps the result independent of record order.
    std::sort(values.begin(), values.end());
    const int n = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double std_dev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), mean,
                    std_dev, n});
  }
  return rows;
}

std::string render_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "suite" << std::setw(12) << "ablation" << std::setw(14)
      << "arm" << std::setw(20) << "metric" << std::right << std::setw(12) << "mean"
      << std::setw(12) << "std" << std::setw(5) << "n" << "\n";
  out << std::string(87, '-') << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.suite << std::setw(12) << r.ablation << std::setw(14)
        << r.arm << std::setw(20) << r.metric << std::right << std::setw(12) << std::fixed
        << std::setprecision(4) << r.mean << std::setw(12) << r.std_dev << std::setw(5) << r.n
        << "\n";
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "suite,ablation,arm,metric,mean,std,n\n";
  for (const auto& r : rows) {
    out << r.suite << ',' << r.ablation << ',' << r.arm << ',' << r.metric << ','
        << format_double(r.mean) << ',' << format_double(r.std_dev) << ',' << r.n << "\n";
  }
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "suite,ablation,arm,metric,mean,std,n") {
    throw ParseError("bad summary header", 1);
  }
  std::vector<SummaryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::istringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 7) throw ParseError("expected 7 columns", line_no);
    SummaryRow r;
    r.suite = parts[0];
    r.ablation = parts[1];
    r.arm = parts[2];
    r.metric = parts[3];
    r.mean = parse_double(parts[4], line_no);
    r.std_dev = parse_double(parts[5], line_no);
    r.n = parse_int(parts[6], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::vector<std::string>& x_labels,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (series.empty()) throw ConfigError("chart needs at least one series");
  const double width = 720, height = 420;
  const double ml = 70, mr = 150, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (const auto& [name, values] : series) {
    (void)name;
    n = std::max(n, values.size());
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n == 0) throw ConfigError("chart series are empty");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const auto x_at = [&](std::size_t i) {
    return n == 1 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / (n - 1);
  };
  const auto y_at = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf"};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n";
  // Axes.
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    const double y = y_at(v);
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << svg_num(y) << "\" x2=\"" << ml << "\" y2=\""
        << svg_num(y) << "\" stroke=\"black\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    out << "<text x=\"" << ml - 8 << "\" y=\"" << svg_num(y + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << buf
        << "</text>\n";
  }
  // Sparse x labels.
  const std::size_t label_stride = std::max<std::size_t>(1, x_labels.size() / 10);
  for (std::size_t i = 0; i < x_labels.size(); i += label_stride) {
    out << "<text x=\"" << svg_num(x_at(i)) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << x_labels[i]
        << "</text>\n";
  }
  std::size_t si = 0;
  for (const auto& [name, values] : series) {
    const char* color = kColors[si % 7];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << svg_num(x_at(i)) << "," << svg_num(y_at(values[i])) << " ";
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << "<circle cx=\"" << svg_num(x_at(i)) << "\" cy=\"" << svg_num(y_at(values[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << ml + pw + 12 << "\" y=\"" << mt + 16 + 18 * si
        << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << color << "\">" << name
        << "</text>\n";
    ++si;
  }
  out << "</svg>\n";
}

void write_summary_plots(const std::string& dir, const std::vector<SummaryRow>& rows) {
  fs::create_directories(dir);
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<std::pair<std::string, double>>>
      groups;
  for (const auto& r : rows) {
    groups[{r.suite, r.ablation, r.metric}].emplace_back(r.arm, r.mean);
  }
  for (const auto& [key, points] : groups) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& [arm, mean] : points) {
      labels.push_back(arm);
      values.push_back(mean);
    }
    const std::string name = std::get<0>(key) + "_" + std::get<1>(key) + "_" +
                             sanitize(std::get<2>(key)) + ".svg";
    write_line_chart_svg(dir + "/" + name,
                         std::get<0>(key) + " " + std::get<2>(key) + " (" + std::get<1>(key) + ")",
                         labels, {{std::get<2>(key), values}});
  }
}

}  // namespace pic::bench
