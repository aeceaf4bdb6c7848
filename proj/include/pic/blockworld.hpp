#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pic/core.hpp"

namespace pic::blockworld {

// ---------------------------------------------------------------------------
// World model.
// ---------------------------------------------------------------------------

struct GridPos {
  int col = 0;
  int row = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

struct ObjectState {
  int id = 0;
  std::string label;
  GridPos pos;
};

// Bounded grid with at most one object per cell; labels and ids unique.
class WorldState {
 public:
  WorldState(int width, int height, std::vector<ObjectState> objects);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<ObjectState>& objects() const { return objects_; }
  const ObjectState& object(int id) const;
  const std::string& label_of(int id) const { return object(id).label; }
  bool in_bounds(GridPos p) const {
    return p.col >= 0 && p.col < width_ && p.row >= 0 && p.row < height_;
  }
  std::optional<int> occupant(GridPos p) const;  // object id, if any

 private:
  int width_;
  int height_;
  std::vector<ObjectState> objects_;
};

struct Action {
  int object_id = 0;
  GridPos target;
};

// Moves the object to the target cell; everything else is unchanged.
WorldState world_step(const WorldState& state, const Action& action);

// ---------------------------------------------------------------------------
// Relations and goals.
// ---------------------------------------------------------------------------

// LeftOf: subject.col < object.col. Above: subject.row < object.row (row 0 is
// the top of the grid).
enum class Predicate { LeftOf, RightOf, Above, Below };

const char* predicate_name(Predicate p);
Predicate predicate_from_name(const std::string& name);
Predicate inverse(Predicate p);

struct Relation {
  int subject_id = 0;
  Predicate predicate = Predicate::LeftOf;
  int object_id = 0;
  friend auto operator<=>(const Relation&, const Relation&) = default;
};

// Every ordered pair with differing column yields exactly one of
// LeftOf/RightOf, and likewise Above/Below for differing rows.
std::set<Relation> extract_relations(const WorldState& state);

// Text goals list relations directly; Image goals carry a reference state and
// resolve to extract_relations(reference).
class GoalSpec : public GoalHandle {
 public:
  static GoalSpec text(std::vector<Relation> relations);
  static GoalSpec image(WorldState reference);

  bool is_image() const { return reference_.has_value(); }
  const WorldState& reference() const;
  // The relation set episodes are judged against.
  const std::vector<Relation>& relations() const { return relations_; }

 private:
  GoalSpec() = default;
  std::vector<Relation> relations_;
  std::optional<WorldState> reference_;
};

// ---------------------------------------------------------------------------
// Views.
// ---------------------------------------------------------------------------

enum class Axis { Horizontal, Vertical };

struct Rect {
  int col0 = 0, row0 = 0, col1 = 0, row1 = 0;  // inclusive corners
  bool contains(GridPos p) const {
    return p.col >= col0 && p.col <= col1 && p.row >= row0 && p.row <= row1;
  }
};

// A partial, possibly mislabeling observation channel: objects outside the
// region are invisible, labels swap with probability label_confusion, and
// relations on axes outside the sensitivity set are unobservable.
struct ViewSpec {
  int view_id = 0;
  Rect region;
  double label_confusion = 0.0;
  std::set<Axis> axes = {Axis::Horizontal, Axis::Vertical};
  std::uint64_t seed = 0;

  void validate() const;
  static ViewSpec identity(int view_id, int width, int height);
};

struct ObservedObject {
  std::string label;
  GridPos pos;
};

struct Observation {
  std::vector<ObservedObject> objects;
  std::set<Axis> axes;
};

// The salt folds (episode, step) into the per-view label noise stream.
Observation render_view(const WorldState& state, const ViewSpec& view, std::uint64_t salt = 0);

// Count of goal relations NOT satisfied in this view's observation. Relations
// whose objects are invisible (or not uniquely labeled) or whose axis the
// view cannot sense count as violated.
int view_energy(const WorldState& state, const ViewSpec& view, const GoalSpec& goal,
                std::uint64_t salt = 0);

// Adapter so a set of views forms a core scorer ensemble over world states.
class ViewScorer : public Scorer<WorldState> {
 public:
  ViewScorer(ViewSpec view, std::uint64_t salt);
  const std::string& name() const override { return name_; }
  EnergyValue energy(const WorldState& state, const Condition& condition) const override;

 private:
  ViewSpec view_;
  std::uint64_t salt_;
  std::string name_;
};

EnsembleSpec<WorldState> view_ensemble(std::span<const ViewSpec> views, std::uint64_t salt);

// ---------------------------------------------------------------------------
// MPC.
// ---------------------------------------------------------------------------

struct MPCConfig {
  int candidate_count = 64;   // K
  int horizon = 0;            // T; 0 resolves to the number of goal relations
  std::uint64_t seed = 0;

  void validate() const;
  int resolved_horizon(const GoalSpec& goal) const;
};

// Uniform (object, cell) candidates; cells occupied by another object are
// rejected within a 10 * k attempt budget. Throws StuckError when nothing
// valid turns up.
std::vector<Action> sample_valid_actions(const WorldState& state, int k, Rng& rng);

// Samples K valid candidates uniformly over (object, cell not occupied by
// another object) with a 10 * K resample budget, then returns the candidate
// minimizing the summed view energy of the simulated next state. Ties break
// toward the lowest candidate index.
Action select_action(const WorldState& state, const GoalSpec& goal,
                     std::span<const ViewSpec> views, int k, Rng& rng, std::uint64_t salt = 0);

struct EpisodeResult {
  bool success = false;
  std::vector<Action> trajectory;
  std::vector<double> energy_trace;  // summed view energy after each executed action
  std::string failure_reason;
  std::optional<WorldState> final_state;
};

// Closed-loop episode: select_action + world_step for up to T steps; success
// iff the goal relations all hold in the true final state.
EpisodeResult run_episode(const WorldState& initial, const GoalSpec& goal,
                          std::span<const ViewSpec> views, const MPCConfig& config);

// Open-loop baseline: n random action sequences of length T executed without
// per-step scoring; the trajectory with minimum final summed view energy is
// selected and judged on its true final state.
EpisodeResult baseline_openloop(const WorldState& initial, const GoalSpec& goal,
                                std::span<const ViewSpec> views, int n_trajectories,
                                const MPCConfig& config);

// True-state goal satisfaction (superset semantics: extra relations are fine).
bool goal_satisfied(const WorldState& state, const GoalSpec& goal);

// ---------------------------------------------------------------------------
// Scenarios.
// ---------------------------------------------------------------------------

struct Scenario {
  WorldState initial;
  GoalSpec goal;
  std::vector<ViewSpec> views;
};

// Key-value scenario file format; see the repository README.
Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& scenario);

// The default five-view ladder, weakest first: left-half, right-half,
// horizontal-only, vertical-only, identity. Partial views carry the given
// label confusion; the identity view is exact.
std::vector<ViewSpec> default_views(int width, int height, int count, double confusion,
                                    std::uint64_t seed);

struct ScenarioParams {
  int grid = 8;
  int objects = 6;
  int relations = 2;
  int views = 5;
  double confusion = 0.1;
};

// Seeded random scenario whose goal is consistent, achievable, and not
// already satisfied by the initial state.
Scenario random_scenario(const ScenarioParams& params, std::uint64_t seed);

}  // namespace pic::blockworld
