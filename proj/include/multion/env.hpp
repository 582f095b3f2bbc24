#pragma once

#include <memory>
#include <string>
#include <vector>

#include "multion/geodesy.hpp"
#include "multion/scene.hpp"

namespace multion::env {

using scene::Cell;
using scene::GridScene;

// Continuous position in meters; heading quantized to 30 degree increments.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    int heading_deg = 0;
    friend bool operator==(const Pose&, const Pose&) = default;
};

enum class Action { MoveForward, TurnLeft, TurnRight, Stop };

const char* action_name(Action a);
bool parse_action(const std::string& name, Action& out);

enum class TerminationCause { None, AllFound, MaxSteps, StopAction };

enum class SuccessMetric { Geodesic, Euclidean };

struct EpisodeSpec {
    std::shared_ptr<const GridScene> scene;
    Pose start;
    std::vector<int> targets;  // the goal set; k = targets.size()
    // nonempty: only the earliest unfound category in this order may be
    // credited (pre-sequenced episodes); must be a permutation of targets
    std::vector<int> required_order;
    int max_steps = 600;
    double success_radius_m = 1.0;
    SuccessMetric success_metric = SuccessMetric::Geodesic;
    bool require_seen = false;  // credit only instances already on the map
    int map_side = 0;           // map cells per side; 0 = max(scene w, h)
};

struct FoundRecord {
    int category_id = 0;
    int t = 0;
    Cell instance;
};

struct StepEvents {
    bool collided = false;
    std::vector<int> categories_found;
    double moved_distance_m = 0.0;
};

// Agent-built map: binary planes of side x side cells, scene anchored at the
// origin. Padding cells beyond the scene rectangle are pre-marked as explored
// obstacles (the workspace boundary is known a priori).
struct SemanticMapState {
    int side = 0;
    int category_count = 0;                // C
    std::vector<std::uint8_t> obstacle;    // seen obstacle cells
    std::vector<std::uint8_t> explored;    // superset of obstacle
    std::vector<std::uint8_t> category;    // C planes, seen object cells
    std::vector<std::uint8_t> agent;       // exactly one cell set
    std::vector<std::uint8_t> trajectory;  // every cell the agent occupied
    std::vector<std::uint8_t> found;       // credited instance cells

    std::size_t plane_cells() const { return std::size_t(side) * std::size_t(side); }
    std::size_t index(const Cell& c) const {
        return std::size_t(c.y) * std::size_t(side) + std::size_t(c.x);
    }
    std::uint8_t category_at(int id, const Cell& c) const {
        return category[std::size_t(id) * plane_cells() + index(c)];
    }
};

struct EpisodeState {
    Pose pose;
    int t = 0;
    std::vector<int> remaining;  // unfound targets, ascending category id
    std::vector<FoundRecord> found_log;
    double path_length_m = 0.0;  // 0.25 * non-colliding forward moves
    TerminationCause cause = TerminationCause::None;

    bool terminated() const { return cause != TerminationCause::None; }
    bool success() const { return cause == TerminationCause::AllFound; }
};

struct Observation {
    const SemanticMapState* map = nullptr;
    std::vector<int> remaining;
    std::vector<float> remaining_encoding;  // multi-hot, catalog encoding width
    Pose pose;
};

// Pure occlusion test: walks the segment from (px, py) to the center of
// `target` across the grid; true when no obstacle cell intersects the walk
// before the target cell. Ties on exact corner crossings advance both axes,
// so rays slip between diagonally adjacent obstacles.
bool cell_visible(const GridScene& s, double px, double py, const Cell& target);

// Reveal every cell within the field of view (90 degrees about the heading),
// range 5 m to cell centers, and line of sight of the pose.
void sense(const GridScene& s, const Pose& pose, SemanticMapState& map);

class Episode {
  public:
    // fields may be shared across episodes on the same scene; pass null to
    // build a private cache
    explicit Episode(EpisodeSpec spec, std::shared_ptr<geodesy::SceneFields> fields = nullptr);

    StepEvents step(Action a);

    const EpisodeSpec& spec() const { return spec_; }
    const EpisodeState& state() const { return state_; }
    const SemanticMapState& map() const { return map_; }
    geodesy::SceneFields& fields() { return *fields_; }
    Observation observe() const;

    Cell agent_cell() const;
    // geodesic meters from the agent cell to the nearest instance, +inf when
    // unreachable
    double dtg(int category_id) const;

  private:
    void apply_sense();
    std::vector<int> credit_targets();

    EpisodeSpec spec_;
    std::shared_ptr<geodesy::SceneFields> fields_;
    EpisodeState state_;
    SemanticMapState map_;
};

// One trajectory log line: t, action, pose, collision flag, categories
// credited this step, reward. Tab separated; labels use the '_' token form.
std::string trajectory_line(int t, Action a, const Pose& pose, bool collided,
                            const std::vector<std::string>& found_labels, double reward);

}  // namespace multion::env
