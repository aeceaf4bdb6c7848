#include "pic/blockworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

namespace pic::blockworld {

// ---------------------------------------------------------------------------
// WorldState
// ---------------------------------------------------------------------------

WorldState::WorldState(int width, int height, std::vector<ObjectState> objects)
    : width_(width), height_(height), objects_(std::move(objects)) {
  if (width_ < 1 || height_ < 1) throw ConfigError("grid dimensions must be positive");
  std::unordered_set<int> ids;
  std::unordered_set<std::string> labels;
  std::unordered_set<int> cells;
  for (const auto& o : objects_) {
    if (!in_bounds(o.pos)) throw ConfigError("object '" + o.label + "' is out of bounds");
    if (!ids.insert(o.id).second) throw ConfigError("duplicate object id");
    if (o.label.empty() || !labels.insert(o.label).second) {
      throw ConfigError("object labels must be unique and non-empty");
    }
    if (!cells.insert(o.pos.row * width_ + o.pos.col).second) {
      throw ConfigError("two objects share a cell");
    }
  }
}

const ObjectState& WorldState::object(int id) const {
  for (const auto& o : objects_) {
    if (o.id == id) return o;
  }
  throw ConfigError("unknown object id " + std::to_string(id));
}

std::optional<int> WorldState::occupant(GridPos p) const {
  for (const auto& o : objects_) {
    if (o.pos == p) return o.id;
  }
  return std::nullopt;
}

WorldState world_step(const WorldState& state, const Action& action) {
  const ObjectState& moving = state.object(action.object_id);
  if (!state.in_bounds(action.target)) {
    throw InvalidActionError("target cell is out of bounds");
  }
  const auto occ = state.occupant(action.target);
  if (occ && *occ != moving.id) {
    throw InvalidActionError("target cell is occupied by '" + state.label_of(*occ) + "'");
  }
  std::vector<ObjectState> objects = state.objects();
  for (auto& o : objects) {
    if (o.id == action.object_id) o.pos = action.target;
  }
  return WorldState(state.width(), state.height(), std::move(objects));
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

const char* predicate_name(Predicate p) {
  switch (p) {
    case Predicate::LeftOf:
      return "left_of";
    case Predicate::RightOf:
      return "right_of";
    case Predicate::Above:
      return "above";
    case Predicate::Below:
      return "below";
  }
  throw ConfigError("invalid predicate");
}

Predicate predicate_from_name(const std::string& name) {
  if (name == "left_of") return Predicate::LeftOf;
  if (name == "right_of") return Predicate::RightOf;
  if (name == "above") return Predicate::Above;
  if (name == "below") return Predicate::Below;
  throw ConfigError("unknown predicate '" + name + "'");
}

Predicate inverse(Predicate p) {
  switch (p) {
    case Predicate::LeftOf:
      return Predicate::RightOf;
    case Predicate::RightOf:
      return Predicate::LeftOf;
    case Predicate::Above:
      return Predicate::Below;
    case Predicate::Below:
      return Predicate::Above;
  }
  throw ConfigError("invalid predicate");
}

namespace {

bool relation_holds(GridPos subject, Predicate p, GridPos object) {
  switch (p) {
    case Predicate::LeftOf:
      return subject.col < object.col;
    case Predicate::RightOf:
      return subject.col > object.col;
    case Predicate::Above:
      return subject.row < object.row;
    case Predicate::Below:
      return subject.row > object.row;
  }
  return false;
}

bool is_horizontal(Predicate p) { return p == Predicate::LeftOf || p == Predicate::RightOf; }

}  // namespace

std::set<Relation> extract_relations(const WorldState& state) {
  const auto& objs = state.objects();
  if (objs.size() < 2) throw Error("extract_relations needs at least 2 objects");
  std::set<Relation> out;
  for (const auto& a : objs) {
    for (const auto& b : objs) {
      if (a.id == b.id) continue;
      if (a.pos.col < b.pos.col) out.insert({a.id, Predicate::LeftOf, b.id});
      if (a.pos.col > b.pos.col) out.insert({a.id, Predicate::RightOf, b.id});
      if (a.pos.row < b.pos.row) out.insert({a.id, Predicate::Above, b.id});
      if (a.pos.row > b.pos.row) out.insert({a.id, Predicate::Below, b.id});
    }
  }
  return out;
}

GoalSpec GoalSpec::text(std::vector<Relation> relations) {
  // Canonical key (axis, low id, high id) -> required direction; a second
  // relation demanding the opposite direction contradicts the goal.
  std::map<std::tuple<bool, int, int>, bool> constraints;
  for (const auto& r : relations) {
    if (r.subject_id == r.object_id) throw ConfigError("relation subject equals object");
    const bool horiz = is_horizontal(r.predicate);
    const bool subject_first = r.predicate == Predicate::LeftOf || r.predicate == Predicate::Above;
    const int lo = std::min(r.subject_id, r.object_id);
    const int hi = std::max(r.subject_id, r.object_id);
    // direction: true when the lower id must precede (left of / above).
    const bool direction = (r.subject_id == lo) == subject_first;
    const auto key = std::make_tuple(horiz, lo, hi);
    const auto it = constraints.find(key);
    if (it != constraints.end() && it->second != direction) {
      throw ConfigError("goal contains a relation and its inverse");
    }
    constraints.emplace(key, direction);
  }
  GoalSpec g;
  g.relations_ = std::move(relations);
  return g;
}

GoalSpec GoalSpec::image(WorldState reference) {
  GoalSpec g;
  const auto rels = extract_relations(reference);
  g.relations_.assign(rels.begin(), rels.end());
  g.reference_ = std::move(reference);
  return g;
}

const WorldState& GoalSpec::reference() const {
  if (!reference_) throw ConfigError("goal has no reference image");
  return *reference_;
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

void ViewSpec::validate() const {
  if (region.col1 < region.col0 || region.row1 < region.row0) {
    throw ConfigError("view region is empty");
  }
  if (!(label_confusion >= 0.0 && label_confusion < 0.5)) {
    throw ConfigError("label confusion must lie in [0, 0.5)");
  }
  if (axes.empty()) throw ConfigError("view needs at least one sensitive axis");
}

ViewSpec ViewSpec::identity(int view_id, int width, int height) {
  ViewSpec v;
  v.view_id = view_id;
  v.region = {0, 0, width - 1, height - 1};
  return v;
}

Observation render_view(const WorldState& state, const ViewSpec& view, std::uint64_t salt) {
  view.validate();
  const auto& objs = state.objects();
  Observation obs;
  obs.axes = view.axes;
  for (const auto& o : objs) {
    if (!view.region.contains(o.pos)) continue;
    std::string label = o.label;
    if (view.label_confusion > 0.0 && objs.size() > 1) {
      // Per-object stream keyed on (view seed, salt, object id): the swap
      // pattern does not depend on positions, only on the episode context.
      Rng r = Rng::stream(view.seed ^ mix64(salt), static_cast<std::uint64_t>(o.id) + 1);
      if (r.uniform() < view.label_confusion) {
        const std::uint64_t pick = r.below(objs.size() - 1);
        std::size_t idx = 0;
        std::uint64_t count = 0;
        for (std::size_t i = 0; i < objs.size(); ++i) {
          if (objs[i].id == o.id) continue;
          if (count++ == pick) {
            idx = i;
            break;
          }
        }
        label = objs[idx].label;
      }
    }
    obs.objects.push_back({std::move(label), o.pos});
  }
  return obs;
}

namespace {

// Position of the uniquely labeled observed object, if any.
std::optional<GridPos> find_unique(const Observation& obs, const std::string& label) {
  std::optional<GridPos> found;
  for (const auto& o : obs.objects) {
    if (o.label != label) continue;
    if (found) return std::nullopt;
    found = o.pos;
  }
  return found;
}

}  // namespace

int view_energy(const WorldState& state, const ViewSpec& view, const GoalSpec& goal,
                std::uint64_t salt) {
  const Observation obs = render_view(state, view, salt);
  int violated = 0;
  for (const auto& r : goal.relations()) {
    const Axis axis = is_horizontal(r.predicate) ? Axis::Horizontal : Axis::Vertical;
    if (!obs.axes.count(axis)) {
      ++violated;
      continue;
    }
    const auto subject = find_unique(obs, state.label_of(r.subject_id));
    const auto object = find_unique(obs, state.label_of(r.object_id));
    if (!subject || !object || !relation_holds(*subject, r.predicate, *object)) ++violated;
  }
  return violated;
}

ViewScorer::ViewScorer(ViewSpec view, std::uint64_t salt)
    : view_(std::move(view)), salt_(salt), name_("view-" + std::to_string(view_.view_id)) {
  view_.validate();
}

EnergyValue ViewScorer::energy(const WorldState& state, const Condition& condition) const {
  const auto* handle = std::get_if<std::shared_ptr<const GoalHandle>>(&condition);
  if (!handle || !*handle) {
    throw KindMismatchError("scorer '" + name_ + "' requires a Goal condition, got " +
                            condition_kind_name(condition));
  }
  const auto* goal = dynamic_cast<const GoalSpec*>(handle->get());
  if (!goal) throw KindMismatchError("scorer '" + name_ + "': goal handle is not a GoalSpec");
  return static_cast<double>(view_energy(state, view_, *goal, salt_));
}

EnsembleSpec<WorldState> view_ensemble(std::span<const ViewSpec> views, std::uint64_t salt) {
  std::vector<ScorerHandle<WorldState>> handles;
  handles.reserve(views.size());
  for (const auto& v : views) {
    handles.push_back({std::make_shared<ViewScorer>(v, salt), 1.0});
  }
  return EnsembleSpec<WorldState>(std::move(handles));
}

// ---------------------------------------------------------------------------
// MPC
// ---------------------------------------------------------------------------

void MPCConfig::validate() const {
  if (candidate_count < 1) throw ConfigError("candidate count must be >= 1");
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
}

int MPCConfig::resolved_horizon(const GoalSpec& goal) const {
  return horizon > 0 ? horizon : static_cast<int>(goal.relations().size());
}

std::vector<Action> sample_valid_actions(const WorldState& state, int k, Rng& rng) {
  const auto& objs = state.objects();
  if (objs.empty()) throw StuckError("no objects to move");
  std::vector<Action> out;
  out.reserve(k);
  const long long budget = 10LL * k;
  for (long long attempt = 0; attempt < budget && static_cast<int>(out.size()) < k; ++attempt) {
    const auto& obj = objs[rng.below(objs.size())];
    const GridPos cell{static_cast<int>(rng.below(state.width())),
                       static_cast<int>(rng.below(state.height()))};
    const auto occ = state.occupant(cell);
    if (occ && *occ != obj.id) continue;
    out.push_back({obj.id, cell});
  }
  if (out.empty()) throw StuckError("no valid candidate action within the resample budget");
  return out;
}

Action select_action(const WorldState& state, const GoalSpec& goal,
                     std::span<const ViewSpec> views, int k, Rng& rng, std::uint64_t salt) {
  if (k < 1) throw ConfigError("candidate count must be >= 1");
  const std::vector<Action> candidates = sample_valid_actions(state, k, rng);
  const EnsembleSpec<WorldState> ensemble = view_ensemble(views, salt);
  const Condition condition = std::make_shared<const GoalSpec>(goal);

  std::size_t best = 0;
  double best_energy = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const WorldState next = world_step(state, candidates[i]);
    const double e = compose_energies(next, ensemble, condition);
    if (e < best_energy) {
      best_energy = e;
      best = i;
    }
  }
  return candidates[best];
}

bool goal_satisfied(const WorldState& state, const GoalSpec& goal) {
  if (goal.relations().empty()) return true;
  const std::set<Relation> present = extract_relations(state);
  for (const auto& r : goal.relations()) {
    if (!present.count(r)) return false;
  }
  return true;
}

namespace {

std::uint64_t step_salt(std::uint64_t episode_seed, int step) {
  return mix64(mix64(episode_seed) + static_cast<std::uint64_t>(step) + 1);
}

double true_summed_energy(const WorldState& state, const GoalSpec& goal,
                          std::span<const ViewSpec> views, std::uint64_t salt) {
  double total = 0.0;
  for (const auto& v : views) total += view_energy(state, v, goal, salt);
  return total;
}

}  // namespace

EpisodeResult run_episode(const WorldState& initial, const GoalSpec& goal,
                          std::span<const ViewSpec> views, const MPCConfig& config) {
  config.validate();
  if (views.empty()) throw ConfigError("episode needs at least one view");
  EpisodeResult result;
  WorldState state = initial;
  if (goal_satisfied(state, goal)) {
    result.success = true;
    result.final_state = std::move(state);
    return result;
  }
  const int horizon = config.resolved_horizon(goal);
  Rng rng(config.seed);
  for (int step = 0; step < horizon; ++step) {
    const std::uint64_t salt = step_salt(config.seed, step);
    Action action;
    try {
      action = select_action(state, goal, views, config.candidate_count, rng, salt);
    } catch (const StuckError& e) {
      result.failure_reason = e.what();
      result.final_state = std::move(state);
      return result;
    }
    state = world_step(state, action);
    result.trajectory.push_back(action);
    result.energy_trace.push_back(true_summed_energy(state, goal, views, salt));
    if (goal_satisfied(state, goal)) {
      result.success = true;
      break;
    }
  }
  result.final_state = std::move(state);
  return result;
}

EpisodeResult baseline_openloop(const WorldState& initial, const GoalSpec& goal,
                                std::span<const ViewSpec> views, int n_trajectories,
                                const MPCConfig& config) {
  config.validate();
  if (n_trajectories < 1) throw ConfigError("open-loop baseline needs at least one trajectory");
  if (views.empty()) throw ConfigError("episode needs at least one view");
  const int horizon = config.resolved_horizon(goal);
  Rng rng(config.seed);
  const std::uint64_t final_salt = step_salt(config.seed, horizon == 0 ? 0 : horizon - 1);

  EpisodeResult best;
  double best_energy = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int i = 0; i < n_trajectories; ++i) {
    WorldState state = initial;
    std::vector<Action> actions;
    bool aborted = false;
    for (int step = 0; step < horizon; ++step) {
      try {
        const Action a = sample_valid_actions(state, 1, rng)[0];
        state = world_step(state, a);
        actions.push_back(a);
      } catch (const StuckError&) {
        aborted = true;
        break;
      }
    }
    if (aborted) continue;
    const double e = true_summed_energy(state, goal, views, final_salt);
    if (!have_best || e < best_energy) {
      have_best = true;
      best_energy = e;
      best.trajectory = std::move(actions);
      best.energy_trace = {e};
      best.final_state = std::move(state);
    }
  }
  if (!have_best) {
    best.failure_reason = "all sampled trajectories got stuck";
    return best;
  }
  best.success = goal_satisfied(*best.final_state, goal);
  return best;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, delim)) out.push_back(trim(item));
  return out;
}

int to_int(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + s + "'", line);
  }
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");

  int width = 0, height = 0;
  std::vector<ObjectState> objects;
  std::vector<ObjectState> ref_objects;
  std::vector<Relation> relations;
  std::vector<ViewSpec> views;
  std::string goal_mode = "text";

  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));

    if (section == "grid") {
      if (key == "width") {
        width = to_int(value, line_no);
      } else if (key == "height") {
        height = to_int(value, line_no);
      } else {
        throw ParseError("unknown key '" + key + "' in [grid]", line_no);
      }
    } else if (section == "objects" || section == "reference") {
      if (key != "object") throw ParseError("unknown key '" + key + "'", line_no);
      const auto parts = split(value, ',');
      if (parts.size() != 4) throw ParseError("object needs 'id, label, col, row'", line_no);
      ObjectState o{to_int(parts[0], line_no), parts[1],
                    {to_int(parts[2], line_no), to_int(parts[3], line_no)}};
      (section == "objects" ? objects : ref_objects).push_back(std::move(o));
    } else if (section == "goal") {
      if (key == "mode") {
        if (value != "text" && value != "image") throw ParseError("goal mode must be text|image", line_no);
        goal_mode = value;
      } else if (key == "relation") {
        std::istringstream rs(value);
        int s, o;
        std::string pred;
        if (!(rs >> s >> pred >> o)) {
          throw ParseError("relation needs 'subject predicate object'", line_no);
        }
        relations.push_back({s, predicate_from_name(pred), o});
      } else {
        throw ParseError("unknown key '" + key + "' in [goal]", line_no);
      }
    } else if (section == "views") {
      if (key != "view") throw ParseError("unknown key '" + key + "' in [views]", line_no);
      const auto parts = split(value, ',');
      if (parts.size() != 8) {
        throw ParseError("view needs 'id, col0, row0, col1, row1, confusion, axes, seed'", line_no);
      }
      ViewSpec v;
      v.view_id = to_int(parts[0], line_no);
      v.region = {to_int(parts[1], line_no), to_int(parts[2], line_no), to_int(parts[3], line_no),
                  to_int(parts[4], line_no)};
      try {
        v.label_confusion = std::stod(parts[5]);
      } catch (const std::exception&) {
        throw ParseError("expected a confusion probability, got '" + parts[5] + "'", line_no);
      }
      v.axes.clear();
      for (char c : parts[6]) {
        if (c == 'H') v.axes.insert(Axis::Horizontal);
        else if (c == 'V') v.axes.insert(Axis::Vertical);
        else throw ParseError("axes must be a combination of H and V", line_no);
      }
      v.seed = static_cast<std::uint64_t>(std::stoull(parts[7]));
      v.validate();
      views.push_back(std::move(v));
    } else {
      throw ParseError("unknown section '" + section + "'", line_no);
    }
  }

  if (width < 1 || height < 1) throw ParseError("scenario is missing [grid] width/height", 0);
  if (views.empty()) throw ParseError("scenario needs at least one view", 0);
  WorldState initial(width, height, std::move(objects));
  GoalSpec goal = goal_mode == "image"
                      ? GoalSpec::image(WorldState(width, height, std::move(ref_objects)))
                      : GoalSpec::text(std::move(relations));
  return Scenario{std::move(initial), std::move(goal), std::move(views)};
}

void save_scenario(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "[grid]\n";
  out << "width = " << scenario.initial.width() << "\n";
  out << "height = " << scenario.initial.height() << "\n\n";
  out << "[objects]\n";
  for (const auto& o : scenario.initial.objects()) {
    out << "object = " << o.id << ", " << o.label << ", " << o.pos.col << ", " << o.pos.row << "\n";
  }
  out << "\n[goal]\n";
  if (scenario.goal.is_image()) {
    out << "mode = image\n";
  } else {
    out << "mode = text\n";
    for (const auto& r : scenario.goal.relations()) {
      out << "relation = " << r.subject_id << " " << predicate_name(r.predicate) << " "
          << r.object_id << "\n";
    }
  }
  if (scenario.goal.is_image()) {
    out << "\n[reference]\n";
    for (const auto& o : scenario.goal.reference().objects()) {
      out << "object = " << o.id << ", " << o.label << ", " << o.pos.col << ", " << o.pos.row
          << "\n";
    }
  }
  out << "\n[views]\n";
  for (const auto& v : scenario.views) {
    std::string axes;
    if (v.axes.count(Axis::Horizontal)) axes += 'H';
    if (v.axes.count(Axis::Vertical)) axes += 'V';
    out << "view = " << v.view_id << ", " << v.region.col0 << ", " << v.region.row0 << ", "
        << v.region.col1 << ", " << v.region.row1 << ", " << v.label_confusion << ", " << axes
        << ", " << v.seed << "\n";
  }
}

std::vector<ViewSpec> default_views(int width, int height, int count, double confusion,
                                    std::uint64_t seed) {
  if (count < 1 || count > 5) throw ConfigError("view count must lie in 1..5");
  std::vector<ViewSpec> views;
  const Rect full{0, 0, width - 1, height - 1};
  const Rect left{0, 0, width / 2 - 1, height - 1};
  const Rect right{width / 2, 0, width - 1, height - 1};

  ViewSpec v;
  v.view_id = 1;
  v.region = left;
  v.label_confusion = confusion;
  v.seed = mix64(seed + 1);
  views.push_back(v);

  v = ViewSpec{};
  v.view_id = 2;
  v.region = right;
  v.label_confusion = confusion;
  v.seed = mix64(seed + 2);
  views.push_back(v);

  v = ViewSpec{};
  v.view_id = 3;
  v.region = full;
  v.label_confusion = confusion;
  v.axes = {Axis::Horizontal};
  v.seed = mix64(seed + 3);
  views.push_back(v);

  v = ViewSpec{};
  v.view_id = 4;
  v.region = full;
  v.label_confusion = confusion;
  v.axes = {Axis::Vertical};
  v.seed = mix64(seed + 4);
  views.push_back(v);

  v = ViewSpec::identity(5, width, height);
  v.seed = mix64(seed + 5);
  views.push_back(v);

  views.resize(count);
  return views;
}

Scenario random_scenario(const ScenarioParams& params, std::uint64_t seed) {
  static const std::vector<std::string> kLabels = {
      "red bowl",     "blue mug",   "green block", "yellow cup",
      "purple plate", "orange bottle", "white cube",  "black bin"};
  if (params.objects < 2 || params.objects > static_cast<int>(kLabels.size())) {
    throw ConfigError("scenario needs between 2 and 8 objects");
  }
  if (params.grid < 2) throw ConfigError("grid must be at least 2x2");
  if (params.relations < 1) throw ConfigError("scenario needs at least one goal relation");

  Rng rng = Rng::stream(seed, 0xb10cull);
  const Predicate preds[] = {Predicate::LeftOf, Predicate::RightOf, Predicate::Above,
                             Predicate::Below};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // Distinct random cells.
    std::vector<ObjectState> objects;
    std::unordered_set<int> cells;
    for (int i = 0; i < params.objects; ++i) {
      GridPos p;
      do {
        p = {static_cast<int>(rng.below(params.grid)), static_cast<int>(rng.below(params.grid))};
      } while (!cells.insert(p.row * params.grid + p.col).second);
      objects.push_back({i, kLabels[i], p});
    }
    WorldState initial(params.grid, params.grid, std::move(objects));
    const std::set<Relation> present = extract_relations(initial);

    // Goal relations prefer disjoint object pairs and must each be violated
    // in the initial state, so every relation needs its own repair move and
    // random trajectories cannot satisfy the goal by accident.
    std::vector<Relation> relations;
    std::set<std::tuple<bool, int, int>> used;
    std::set<int> constrained;
    int guard = 0;
    while (static_cast<int>(relations.size()) < params.relations && guard++ < 300) {
      std::vector<int> pool;
      for (int i = 0; i < params.objects; ++i) {
        if (!constrained.count(i)) pool.push_back(i);
      }
      if (pool.size() < 2) {
        pool.resize(params.objects);
        for (int i = 0; i < params.objects; ++i) pool[i] = i;
      }
      const int s = pool[rng.below(pool.size())];
      int o;
      do {
        o = pool[rng.below(pool.size())];
      } while (o == s);
      const Predicate p = preds[rng.below(4)];
      const auto key = std::make_tuple(is_horizontal(p), std::min(s, o), std::max(s, o));
      if (used.count(key)) continue;
      if (present.count({s, p, o})) continue;  // already satisfied
      used.insert(key);
      constrained.insert(s);
      constrained.insert(o);
      relations.push_back({s, p, o});
    }
    if (static_cast<int>(relations.size()) < params.relations) continue;
    GoalSpec goal = GoalSpec::text(std::move(relations));
    if (goal_satisfied(initial, goal)) continue;

    std::vector<ViewSpec> views =
        default_views(params.grid, params.grid, params.views, params.confusion, mix64(seed));
    return Scenario{std::move(initial), std::move(goal), std::move(views)};
  }
  throw ConfigError("could not draw an unsatisfied consistent goal for these parameters");
}

}  // namespace pic::blockworld
