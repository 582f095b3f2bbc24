#pragma once

#include <vector>

#include "multion/env.hpp"

namespace multion::agents {

using env::Action;
using env::Episode;
using env::Pose;
using env::SemanticMapState;
using scene::Cell;

// Long-term goals are re-issued at most every kGoalPeriod steps, or earlier on
// arrival, blockage, or a change in the remaining-target set.
constexpr int kGoalPeriod = 25;

struct LongTermGoal {
    Cell cell;
    int issued_at = -1;
    std::size_t remaining_at_issue = 0;
};

struct PolicyStep {
    Action action = Action::MoveForward;
    bool arrived = false;        // within one cell of the goal in field value
    bool replan_needed = false;  // goal unreachable on the current map
};

// One step of goal following on the agent's own map: fast-marching field to
// the goal over the observed obstacles (unexplored optimistically free), then
// a descent step to the best axis neighbor, rotating first whenever the
// heading is off that neighbor's bearing. Axis-only motion keeps poses on
// cell centers and makes heading error exact integer arithmetic; where the
// first-order field flattens into a plateau, the step follows the shortest
// plateau walk toward the nearest strict drop.
PolicyStep local_policy_step(const SemanticMapState& map, double cell_size, const Pose& pose,
                             const Cell& goal);

// Uniform over {move-forward, turn-left, turn-right}; never stops.
Action random_agent_step(Rng& rng);

// Instance cell with the smallest ground-truth geodesic distance from the
// agent cell over all instances of the remaining categories. Ties prefer the
// lower category id, then row-major cell order.
Cell sam_oracle_goal(geodesy::SceneFields& fields, const Cell& agent,
                     const std::vector<int>& remaining);

// Nearest instance of the earliest category in `sequence` that is still in
// `remaining`; later categories are ignored until the cursor advances.
Cell psm_oracle_goal(geodesy::SceneFields& fields, const Cell& agent,
                     const std::vector<int>& sequence, const std::vector<int>& remaining);

class Controller {
  public:
    virtual ~Controller() = default;
    // chooses the next primitive action; called exactly once per env step
    virtual Action act(Episode& ep, Rng& rng) = 0;
};

class RandomController : public Controller {
  public:
    Action act(Episode& ep, Rng& rng) override;
};

// Ground-truth goal selection (greedy nearest when sequence is empty,
// sequenced otherwise) driving the shared local policy.
class OracleController : public Controller {
  public:
    explicit OracleController(std::vector<int> sequence = {})
        : sequence_(std::move(sequence)) {}

    Action act(Episode& ep, Rng& rng) override;

  private:
    std::vector<int> sequence_;
    LongTermGoal goal_;
    bool have_goal_ = false;
    Action last_action_ = Action::Stop;
    Pose last_pose_;
};

}  // namespace multion::agents
