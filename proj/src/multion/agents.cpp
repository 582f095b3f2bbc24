#include "multion/agents.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace multion::agents {

namespace {

// axis steps only: axis-aligned motion keeps poses on cell centers, so every
// non-colliding forward advances exactly one cell and realized path length
// can never undercut the 8-connected optimum used for g
constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

// direction of a unit axis step, degrees; y grows downward but the convention
// only has to match the env's motion math
int step_bearing_deg(int dx, int dy) {
    if (dx == 1) return 0;
    if (dx == -1) return 180;
    return dy == 1 ? 90 : 270;
}

int wrap180(int deg) {
    int v = ((deg % 360) + 360) % 360;
    return v > 180 ? v - 360 : v;
}

bool plan_free(const SemanticMapState& map, int x, int y) {
    if (x < 0 || x >= map.side || y < 0 || y >= map.side) return false;
    return map.obstacle[std::size_t(y) * std::size_t(map.side) + std::size_t(x)] == 0;
}

}  // namespace

PolicyStep local_policy_step(const SemanticMapState& map, double cell_size, const Pose& pose,
                             const Cell& goal) {
    Cell a{int(std::floor(pose.x / cell_size)), int(std::floor(pose.y / cell_size))};
    if (goal.x < 0 || goal.x >= map.side || goal.y < 0 || goal.y >= map.side)
        return {Action::MoveForward, false, true};

    auto field = geodesy::distance_field_fmm(map.side, map.side, map.obstacle, cell_size, {goal});
    if (!field.reachable(a)) return {Action::MoveForward, false, true};
    // arrival is one cell in the planner metric, not Chebyshev: a goal
    // diagonally across a wall is adjacent by coordinates yet far by travel
    if (field.at(a) <= cell_size * 1.5) return {Action::Stop, true, false};

    int best = -1;
    double best_v = field.at(a);
    for (int k = 0; k < 4; ++k) {
        if (!plan_free(map, a.x + kDx[k], a.y + kDy[k])) continue;
        double v = field.at({a.x + kDx[k], a.y + kDy[k]});
        if (v < best_v) {
            best_v = v;
            best = k;
        }
    }
    if (best < 0) {
        // first-order fields flatten where the flow runs diagonally, so the
        // strictly descending cell can sit across a plateau of equal values;
        // walk the plateau by BFS and head for the nearest strict drop
        constexpr double kTieEps = 1e-9;
        const double v0 = field.at(a);
        std::vector<std::int8_t> first_step(std::size_t(map.side) * std::size_t(map.side), -1);
        std::deque<Cell> frontier;
        first_step[std::size_t(a.y) * std::size_t(map.side) + std::size_t(a.x)] = 4;
        frontier.push_back(a);
        while (!frontier.empty() && best < 0) {
            Cell c = frontier.front();
            frontier.pop_front();
            std::int8_t via =
                first_step[std::size_t(c.y) * std::size_t(map.side) + std::size_t(c.x)];
            for (int k = 0; k < 4; ++k) {
                Cell n{c.x + kDx[k], c.y + kDy[k]};
                if (!plan_free(map, n.x, n.y)) continue;
                std::size_t ni = std::size_t(n.y) * std::size_t(map.side) + std::size_t(n.x);
                if (first_step[ni] >= 0) continue;
                double v = field.at(n);
                if (v > v0 + kTieEps) continue;
                first_step[ni] = via == 4 ? std::int8_t(k) : via;
                if (v < v0 - kTieEps) {
                    best = first_step[ni];
                    break;
                }
                frontier.push_back(n);
            }
        }
        if (best < 0) return {Action::MoveForward, false, true};
    }

    // axis bearings make the error a multiple of 30, so forward fires only on
    // exact alignment and the 15-degree threshold never sits on a boundary
    int desired = step_bearing_deg(kDx[best], kDy[best]);
    int err = wrap180(desired - pose.heading_deg);
    if (err > 15) return {Action::TurnLeft, false, false};
    if (err < -15) return {Action::TurnRight, false, false};
    return {Action::MoveForward, false, false};
}

Action random_agent_step(Rng& rng) {
    switch (rng.uniform_int(0, 2)) {
        case 0: return Action::MoveForward;
        case 1: return Action::TurnLeft;
        default: return Action::TurnRight;
    }
}

namespace {

Cell nearest_instance(geodesy::SceneFields& fields, const Cell& agent,
                      const std::vector<int>& categories) {
    const auto& s = fields.scene();
    auto from_agent = geodesy::distance_field_dijkstra(s, {agent});
    bool found = false;
    Cell best_cell;
    int best_cat = 0;
    double best_d = geodesy::kInf;
    for (int id : categories) {
        for (const Cell& inst : s.instances_of(id)) {
            double d = from_agent.at(inst);
            if (d >= geodesy::kInf) continue;
            bool better = d < best_d;
            if (!better && d == best_d && found) {
                if (id != best_cat)
                    better = id < best_cat;
                else
                    better = scene::row_major_less(inst, best_cell);
            }
            if (!found || better) {
                found = true;
                best_d = d;
                best_cat = id;
                best_cell = inst;
            }
        }
    }
    if (!found) throw UnreachableError("no reachable instance of any requested category");
    return best_cell;
}

}  // namespace

Cell sam_oracle_goal(geodesy::SceneFields& fields, const Cell& agent,
                     const std::vector<int>& remaining) {
    if (remaining.empty()) throw ValidationError("goal query with no remaining targets");
    return nearest_instance(fields, agent, remaining);
}

Cell psm_oracle_goal(geodesy::SceneFields& fields, const Cell& agent,
                     const std::vector<int>& sequence, const std::vector<int>& remaining) {
    for (int id : sequence) {
        if (std::find(remaining.begin(), remaining.end(), id) != remaining.end())
            return nearest_instance(fields, agent, {id});
    }
    throw ValidationError("sequence has no category left to find");
}

Action RandomController::act(Episode& ep, Rng& rng) {
    (void)ep;
    return random_agent_step(rng);
}

Action OracleController::act(Episode& ep, Rng&) {
    const auto& st = ep.state();
    const double cs = ep.spec().scene->cell_size();
    Cell agent = ep.agent_cell();

    bool blocked = have_goal_ && last_action_ == Action::MoveForward && st.pose == last_pose_;
    bool reissue = !have_goal_ || blocked ||
                   st.t - goal_.issued_at >= kGoalPeriod ||
                   st.remaining.size() != goal_.remaining_at_issue;

    for (int round = 0; round < 2; ++round) {
        if (reissue) {
            Cell g = sequence_.empty() ? sam_oracle_goal(ep.fields(), agent, st.remaining)
                                       : psm_oracle_goal(ep.fields(), agent, sequence_,
                                                         st.remaining);
            goal_ = {g, st.t, st.remaining.size()};
            have_goal_ = true;
        }
        PolicyStep ps = local_policy_step(ep.map(), cs, st.pose, goal_.cell);
        if (!ps.arrived && !ps.replan_needed) {
            last_action_ = ps.action;
            last_pose_ = st.pose;
            return ps.action;
        }
        if (reissue) break;  // fresh goal and still arrived/stuck: scan below
        reissue = true;
    }
    // adjacent to an uncredited goal (or boxed in): rotate to reveal more map
    last_action_ = Action::TurnLeft;
    last_pose_ = st.pose;
    return Action::TurnLeft;
}

}  // namespace multion::agents
