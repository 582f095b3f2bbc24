#include "multion/env.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace multion::env {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSenseRangeM = 5.0;
constexpr double kHalfFovDeg = 45.0;
constexpr double kFovSlackDeg = 1e-9;

Cell cell_of(const GridScene& s, double x, double y) {
    return {int(std::floor(x / s.cell_size())), int(std::floor(y / s.cell_size()))};
}

}  // namespace

const char* action_name(Action a) {
    switch (a) {
        case Action::MoveForward: return "move-forward";
        case Action::TurnLeft: return "turn-left";
        case Action::TurnRight: return "turn-right";
        case Action::Stop: return "stop";
    }
    return "?";
}

bool parse_action(const std::string& name, Action& out) {
    if (name == "move-forward") out = Action::MoveForward;
    else if (name == "turn-left") out = Action::TurnLeft;
    else if (name == "turn-right") out = Action::TurnRight;
    else if (name == "stop") out = Action::Stop;
    else return false;
    return true;
}

bool cell_visible(const GridScene& s, double px, double py, const Cell& target) {
    const double cs = s.cell_size();
    Cell cur = cell_of(s, px, py);
    if (cur == target) return true;

    const double tx = (target.x + 0.5) * cs;
    const double ty = (target.y + 0.5) * cs;
    const double dx = tx - px;
    const double dy = ty - py;
    const int stepx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int stepy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);

    double t_max_x = geodesy::kInf, t_max_y = geodesy::kInf;
    double t_dx = geodesy::kInf, t_dy = geodesy::kInf;
    if (stepx != 0) {
        double boundary = (stepx > 0 ? cur.x + 1 : cur.x) * cs;
        t_max_x = (boundary - px) / dx;
        t_dx = cs / std::abs(dx);
    }
    if (stepy != 0) {
        double boundary = (stepy > 0 ? cur.y + 1 : cur.y) * cs;
        t_max_y = (boundary - py) / dy;
        t_dy = cs / std::abs(dy);
    }

    int guard = std::abs(target.x - cur.x) + std::abs(target.y - cur.y) + 4;
    while (guard-- > 0) {
        if (t_max_x == t_max_y) {
            // exact corner crossing: step through the corner, letting rays
            // pass between diagonally adjacent obstacles
            cur.x += stepx;
            cur.y += stepy;
            t_max_x += t_dx;
            t_max_y += t_dy;
        } else if (t_max_x < t_max_y) {
            cur.x += stepx;
            t_max_x += t_dx;
        } else {
            cur.y += stepy;
            t_max_y += t_dy;
        }
        if (cur == target) return true;
        if (!s.in_bounds(cur) || s.obstacle(cur)) return false;
    }
    return false;
}

void sense(const GridScene& s, const Pose& pose, SemanticMapState& map) {
    const double cs = s.cell_size();
    const Cell me = cell_of(s, pose.x, pose.y);
    const int reach = int(std::ceil(kSenseRangeM / cs)) + 1;

    const int x0 = std::max(0, me.x - reach), x1 = std::min(s.width() - 1, me.x + reach);
    const int y0 = std::max(0, me.y - reach), y1 = std::min(s.height() - 1, me.y + reach);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            Cell c{x, y};
            if (!(c == me)) {
                double cx = (x + 0.5) * cs - pose.x;
                double cy = (y + 0.5) * cs - pose.y;
                if (cx * cx + cy * cy > kSenseRangeM * kSenseRangeM) continue;
                double ang = std::atan2(cy, cx) * 180.0 / kPi;
                double diff = std::fmod(ang - pose.heading_deg + 540.0, 360.0) - 180.0;
                if (std::abs(diff) > kHalfFovDeg + kFovSlackDeg) continue;
                if (!cell_visible(s, pose.x, pose.y, c)) continue;
            }
            std::size_t idx = map.index(c);
            map.explored[idx] = 1;
            if (s.obstacle(c)) map.obstacle[idx] = 1;
        }
    }
    for (const auto& o : s.objects()) {
        std::size_t idx = map.index(o.cell);
        if (map.explored[idx])
            map.category[std::size_t(o.category_id) * map.plane_cells() + idx] = 1;
    }
}

Episode::Episode(EpisodeSpec spec, std::shared_ptr<geodesy::SceneFields> fields)
    : spec_(std::move(spec)), fields_(std::move(fields)) {
    if (!spec_.scene) throw ValidationError("episode needs a scene");
    const GridScene& s = *spec_.scene;
    if (!fields_) fields_ = std::make_shared<geodesy::SceneFields>(spec_.scene);

    int h = ((spec_.start.heading_deg % 360) + 360) % 360;
    if (h % 30 != 0) throw ValidationError("heading must be a multiple of 30 degrees");
    spec_.start.heading_deg = h;

    Cell start_cell = cell_of(s, spec_.start.x, spec_.start.y);
    if (!s.free(start_cell)) throw ValidationError("start pose is not on a free cell");

    if (spec_.targets.empty()) throw ValidationError("episode needs at least one target");
    std::set<int> tset;
    for (int id : spec_.targets) {
        if (id < 0 || id >= s.catalog().size())
            throw ValidationError("unknown target category id " + std::to_string(id));
        if (!tset.insert(id).second)
            throw ValidationError("duplicate target category " + s.catalog().name(id));
        if (s.instances_of(id).empty())
            throw ValidationError("target category '" + s.catalog().name(id) +
                                  "' has no instance in the scene");
    }
    if (!spec_.required_order.empty()) {
        if (std::set<int>(spec_.required_order.begin(), spec_.required_order.end()) != tset ||
            spec_.required_order.size() != tset.size())
            throw ValidationError("required order must be a permutation of the targets");
    }
    if (spec_.max_steps <= 0) throw ValidationError("max_steps must be positive");
    if (spec_.success_radius_m <= 0.0) throw ValidationError("success radius must be positive");

    int side = spec_.map_side > 0 ? spec_.map_side : std::max(s.width(), s.height());
    if (side < std::max(s.width(), s.height()))
        throw ValidationError("map side smaller than the scene");
    spec_.map_side = side;

    map_.side = side;
    map_.category_count = s.catalog().size();
    map_.obstacle.assign(map_.plane_cells(), 0);
    map_.explored.assign(map_.plane_cells(), 0);
    map_.category.assign(std::size_t(map_.category_count) * map_.plane_cells(), 0);
    map_.agent.assign(map_.plane_cells(), 0);
    map_.trajectory.assign(map_.plane_cells(), 0);
    map_.found.assign(map_.plane_cells(), 0);

    // the workspace rectangle is known a priori: padding beyond the scene is
    // a wall, or optimistic planners would route through it indefinitely
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (x >= s.width() || y >= s.height()) {
                std::size_t idx = map_.index({x, y});
                map_.obstacle[idx] = 1;
                map_.explored[idx] = 1;
            }

    state_.pose = spec_.start;
    state_.remaining.assign(tset.begin(), tset.end());

    apply_sense();
    credit_targets();
    if (state_.remaining.empty()) state_.cause = TerminationCause::AllFound;
}

Cell Episode::agent_cell() const {
    return cell_of(*spec_.scene, state_.pose.x, state_.pose.y);
}

double Episode::dtg(int category_id) const {
    return fields_->dtg(category_id, agent_cell());
}

void Episode::apply_sense() {
    std::fill(map_.agent.begin(), map_.agent.end(), 0);
    std::size_t idx = map_.index(agent_cell());
    map_.agent[idx] = 1;
    map_.trajectory[idx] = 1;
    sense(*spec_.scene, state_.pose, map_);
}

std::vector<int> Episode::credit_targets() {
    const GridScene& s = *spec_.scene;
    const Cell a = agent_cell();
    const double radius = spec_.success_radius_m;

    std::vector<int> creditable;
    if (!spec_.required_order.empty()) {
        for (int id : spec_.required_order) {
            if (std::find(state_.remaining.begin(), state_.remaining.end(), id) !=
                state_.remaining.end()) {
                creditable.push_back(id);
                break;
            }
        }
    } else {
        creditable = state_.remaining;
    }

    // distances from the agent cell to each candidate instance; shared across
    // categories credited on the same step
    std::optional<geodesy::DistanceField> from_agent;
    auto instance_distance = [&](const Cell& inst) {
        if (spec_.success_metric == SuccessMetric::Euclidean) {
            double dx = (inst.x - a.x) * s.cell_size();
            double dy = (inst.y - a.y) * s.cell_size();
            return std::sqrt(dx * dx + dy * dy);
        }
        if (!from_agent) from_agent = geodesy::distance_field_dijkstra(s, {a});
        return from_agent->at(inst);
    };

    std::vector<int> credited;
    for (int id : creditable) {
        if (spec_.success_metric == SuccessMetric::Geodesic && fields_->dtg(id, a) > radius)
            continue;
        std::optional<Cell> best;
        double best_d = geodesy::kInf;
        for (const Cell& inst : s.instances_of(id)) {
            if (spec_.require_seen && !map_.category_at(id, inst)) continue;
            double d = instance_distance(inst);
            if (d > radius) continue;
            if (d < best_d || (d == best_d && best && scene::row_major_less(inst, *best))) {
                best_d = d;
                best = inst;
            }
        }
        if (!best) continue;
        credited.push_back(id);
        state_.found_log.push_back({id, state_.t, *best});
        map_.found[map_.index(*best)] = 1;
    }
    for (int id : credited)
        state_.remaining.erase(
            std::remove(state_.remaining.begin(), state_.remaining.end(), id),
            state_.remaining.end());
    return credited;
}

StepEvents Episode::step(Action a) {
    if (state_.terminated()) throw ValidationError("step on a terminated episode");
    const GridScene& s = *spec_.scene;
    StepEvents ev;

    switch (a) {
        case Action::TurnLeft:
            state_.pose.heading_deg = (state_.pose.heading_deg + 30) % 360;
            break;
        case Action::TurnRight:
            state_.pose.heading_deg = (state_.pose.heading_deg + 330) % 360;
            break;
        case Action::MoveForward: {
            double rad = double(state_.pose.heading_deg) * kPi / 180.0;
            double step_m = s.cell_size();
            double nx = state_.pose.x + step_m * std::cos(rad);
            double ny = state_.pose.y + step_m * std::sin(rad);
            Cell dest = cell_of(s, nx, ny);
            if (s.free(dest)) {
                state_.pose.x = nx;
                state_.pose.y = ny;
                state_.path_length_m += step_m;
                ev.moved_distance_m = step_m;
            } else {
                ev.collided = true;
                // bump feedback: the agent learns the destination cell is
                // blocked even when sensing never revealed it (e.g. a corner
                // cell outside the FOV)
                if (dest.x >= 0 && dest.x < map_.side && dest.y >= 0 && dest.y < map_.side) {
                    std::size_t i =
                        std::size_t(dest.y) * std::size_t(map_.side) + std::size_t(dest.x);
                    map_.obstacle[i] = 1;
                    map_.explored[i] = 1;
                }
            }
            break;
        }
        case Action::Stop:
            break;
    }

    state_.t += 1;
    if (a != Action::Stop) {
        apply_sense();
        ev.categories_found = credit_targets();
    }

    if (state_.remaining.empty())
        state_.cause = TerminationCause::AllFound;
    else if (a == Action::Stop)
        state_.cause = TerminationCause::StopAction;
    else if (state_.t >= spec_.max_steps)
        state_.cause = TerminationCause::MaxSteps;
    return ev;
}

Observation Episode::observe() const {
    Observation obs;
    obs.map = &map_;
    obs.remaining = state_.remaining;
    obs.pose = state_.pose;
    obs.remaining_encoding.assign(std::size_t(spec_.scene->catalog().encoding_width()), 0.0f);
    for (int id : state_.remaining) obs.remaining_encoding[std::size_t(id)] = 1.0f;
    return obs;
}

std::string trajectory_line(int t, Action a, const Pose& pose, bool collided,
                            const std::vector<std::string>& found_labels, double reward) {
    std::string found = "found:";
    for (std::size_t i = 0; i < found_labels.size(); ++i) {
        if (i) found.push_back(',');
        found += scene::label_to_token(found_labels[i]);
    }
    return std::to_string(t) + "\t" + action_name(a) + "\t" + format_double(pose.x) + "\t" +
           format_double(pose.y) + "\t" + std::to_string(pose.heading_deg) + "\t" +
           (collided ? "1" : "0") + "\t" + found + "\t" + format_double(reward);
}

}  // namespace multion::env
