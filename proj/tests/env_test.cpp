#include "doctest.h"

#include <cstdint>
#include <memory>
#include <vector>

#include "multion/env.hpp"
#include "multion/scene.hpp"
#include "multion/util.hpp"

using namespace multion;
using env::Action;
using env::Episode;
using env::EpisodeSpec;
using env::Pose;
using env::TerminationCause;
using scene::CategoryCatalog;
using scene::Cell;
using scene::GridScene;
using scene::ObjectInstance;

namespace {

double center(int cell_index) { return (cell_index + 0.5) * 0.25; }

// 21-cell corridor along row y=1, walls elsewhere; A=chair at x=0, B=couch
// at x=20
std::shared_ptr<const GridScene> corridor() {
    std::vector<std::uint8_t> occ(21 * 4, 1);
    for (int x = 0; x < 21; ++x) occ[1 * 21 + x] = 0;
    std::vector<ObjectInstance> objs = {{0, {0, 1}}, {1, {20, 1}}};
    return std::make_shared<GridScene>(21, 4, 0.25, std::move(occ), std::move(objs),
                                       CategoryCatalog::standard());
}

std::shared_ptr<const GridScene> open_room(int w, int h, std::vector<ObjectInstance> objs,
                                           std::vector<Cell> pillars = {}) {
    std::vector<std::uint8_t> occ(std::size_t(w) * std::size_t(h), 0);
    for (const Cell& p : pillars) occ[std::size_t(p.y) * std::size_t(w) + std::size_t(p.x)] = 1;
    return std::make_shared<GridScene>(w, h, 0.25, std::move(occ), std::move(objs),
                                       CategoryCatalog::standard());
}

EpisodeSpec corridor_spec(int start_cell_x, int heading) {
    EpisodeSpec spec;
    spec.scene = corridor();
    spec.start = {center(start_cell_x), center(1), heading};
    spec.targets = {0, 1};
    return spec;
}

}  // namespace

TEST_CASE("episode: corridor credit at exactly the success radius") {
    EpisodeSpec spec = corridor_spec(10, 180);
    Episode ep(spec);

    CHECK(ep.state().t == 0);
    CHECK(ep.dtg(0) == doctest::Approx(2.5));
    CHECK(ep.dtg(1) == doctest::Approx(2.5));
    CHECK(ep.state().remaining == std::vector<int>{0, 1});

    // five forwards leave dtg at 1.25, just outside the 1 m radius
    for (int i = 0; i < 5; ++i) {
        auto ev = ep.step(Action::MoveForward);
        CHECK_FALSE(ev.collided);
        CHECK(ev.categories_found.empty());
        CHECK(ev.moved_distance_m == doctest::Approx(0.25));
    }
    CHECK(ep.agent_cell() == Cell{5, 1});
    CHECK(ep.dtg(0) == doctest::Approx(1.25));

    // the sixth crosses to dtg 1.0 and credits the chair
    auto ev = ep.step(Action::MoveForward);
    REQUIRE(ev.categories_found == std::vector<int>{0});
    CHECK(ep.state().remaining == std::vector<int>{1});
    REQUIRE(ep.state().found_log.size() == 1);
    CHECK(ep.state().found_log[0].category_id == 0);
    CHECK(ep.state().found_log[0].t == 6);
    CHECK(ep.state().found_log[0].instance == Cell{0, 1});
    CHECK(ep.map().found[ep.map().index({0, 1})] == 1);
    CHECK(ep.state().path_length_m == doctest::Approx(1.5));
    CHECK_FALSE(ep.state().terminated());
}

TEST_CASE("episode: turns rotate in place, twelve of them close the circle") {
    EpisodeSpec spec = corridor_spec(10, 0);
    Episode ep(spec);
    Pose start = ep.state().pose;

    for (int i = 0; i < 12; ++i) ep.step(Action::TurnLeft);
    CHECK(ep.state().pose == start);
    CHECK(ep.state().t == 12);
    CHECK(ep.state().path_length_m == 0.0);

    ep.step(Action::TurnRight);
    CHECK(ep.state().pose.heading_deg == 330);
    ep.step(Action::TurnLeft);
    CHECK(ep.state().pose.heading_deg == 0);
}

TEST_CASE("episode: collisions freeze the pose and reveal the blocker") {
    // facing up the corridor wall at (10, 2)
    EpisodeSpec spec = corridor_spec(10, 90);
    Episode ep(spec);
    CHECK(ep.map().obstacle[ep.map().index({10, 2})] == 1);  // wall is in view

    Pose before = ep.state().pose;
    auto ev = ep.step(Action::MoveForward);
    CHECK(ev.collided);
    CHECK(ev.moved_distance_m == 0.0);
    CHECK(ep.state().pose == before);
    CHECK(ep.state().path_length_m == 0.0);
    CHECK(ep.state().t == 1);  // time still advances
}

TEST_CASE("episode: bump feedback maps an occluded blocker") {
    // A forward at heading 30 from an off-center pose crosses diagonally into
    // (4,2). That cell hides behind the known wall at (4,1): every sight line
    // clips the wall first, so only the bump can reveal it.
    auto s = open_room(10, 4, {{0, {9, 3}}}, {{4, 1}, {4, 2}});
    EpisodeSpec spec;
    spec.scene = s;
    spec.start = {0.95, 0.375, 30};  // inside cell (3,1)
    spec.targets = {0};
    Episode ep(spec);

    CHECK(ep.agent_cell() == Cell{3, 1});
    CHECK(ep.map().obstacle[ep.map().index({4, 1})] == 1);   // seen head-on
    CHECK(ep.map().explored[ep.map().index({4, 2})] == 0);   // occluded

    Pose before = ep.state().pose;
    auto ev = ep.step(Action::MoveForward);
    CHECK(ev.collided);
    CHECK(ep.state().pose == before);
    CHECK(ep.map().obstacle[ep.map().index({4, 2})] == 1);
    CHECK(ep.map().explored[ep.map().index({4, 2})] == 1);
}

TEST_CASE("sense: forward cone only, occlusion behind pillars") {
    auto s = open_room(12, 9, {{0, {11, 4}}}, {{6, 4}});
    EpisodeSpec spec;
    spec.scene = s;
    spec.start = {center(2), center(4), 0};
    spec.targets = {0};
    Episode ep(spec);
    const auto& m = ep.map();

    // ahead: explored; behind: not
    CHECK(m.explored[m.index({4, 4})] == 1);
    CHECK(m.explored[m.index({0, 4})] == 0);
    // the pillar face is visible and marked as an obstacle
    CHECK(m.explored[m.index({6, 4})] == 1);
    CHECK(m.obstacle[m.index({6, 4})] == 1);
    // directly behind the pillar: occluded
    CHECK(m.explored[m.index({7, 4})] == 0);
    CHECK(m.explored[m.index({8, 4})] == 0);
    // the 45 degree FOV edge is inclusive
    CHECK(m.explored[m.index({3, 5})] == 1);
    // straight sideways is out of the cone
    CHECK(m.explored[m.index({2, 6})] == 0);
    // agent's own cell is always explored
    CHECK(m.explored[m.index({2, 4})] == 1);
    CHECK(m.agent[m.index({2, 4})] == 1);
    CHECK(m.trajectory[m.index({2, 4})] == 1);
}

TEST_CASE("sense: range limit at five meters") {
    // corridor is 21 cells = 5.25 m long; from x=0 the far end is out of range
    EpisodeSpec spec = corridor_spec(0, 0);
    Episode ep(spec);
    const auto& m = ep.map();
    // (19,1) center is 4.75 m away: in range; (20,1) is 5.0 m exactly: in
    // range by the closed comparison
    CHECK(m.explored[m.index({19, 1})] == 1);
    CHECK(m.explored[m.index({20, 1})] == 1);

    // objects on explored cells land on the category plane
    CHECK(m.category_at(1, {20, 1}) == 1);
    CHECK(m.category_at(0, {0, 1}) == 1);  // agent's own cell
}

TEST_CASE("sense: repeated sensing is idempotent") {
    auto s = open_room(10, 8, {{0, {8, 4}}});
    env::SemanticMapState map;
    map.side = 10;
    map.category_count = s->catalog().size();
    map.obstacle.assign(map.plane_cells(), 0);
    map.explored.assign(map.plane_cells(), 0);
    map.category.assign(std::size_t(map.category_count) * map.plane_cells(), 0);
    map.agent.assign(map.plane_cells(), 0);
    map.trajectory.assign(map.plane_cells(), 0);
    map.found.assign(map.plane_cells(), 0);

    Pose pose{center(2), center(3), 0};
    env::sense(*s, pose, map);
    auto explored = map.explored;
    auto obstacle = map.obstacle;
    auto category = map.category;
    env::sense(*s, pose, map);
    CHECK(map.explored == explored);
    CHECK(map.obstacle == obstacle);
    CHECK(map.category == category);
}

TEST_CASE("episode: map padding beyond the scene reads as explored wall") {
    EpisodeSpec spec = corridor_spec(10, 0);
    Episode ep(spec);
    const auto& m = ep.map();
    REQUIRE(m.side == 21);  // max(21, 4)
    for (int x = 0; x < 21; ++x) {
        CHECK(m.obstacle[m.index({x, 10})] == 1);
        CHECK(m.explored[m.index({x, 10})] == 1);
    }
}

TEST_CASE("episode: ordered crediting holds back out-of-turn targets") {
    // close to the chair but the required order is couch first
    EpisodeSpec spec = corridor_spec(4, 180);
    spec.required_order = {1, 0};
    Episode ep(spec);

    CHECK(ep.dtg(0) == doctest::Approx(1.0));  // inside the radius
    CHECK(ep.state().remaining == std::vector<int>{0, 1});

    // sit next to the chair for a few steps; nothing is credited
    ep.step(Action::MoveForward);
    CHECK(ep.dtg(0) == doctest::Approx(0.75));
    CHECK(ep.state().remaining == std::vector<int>{0, 1});
    CHECK(ep.state().found_log.empty());

    // unordered control: same walk credits the chair immediately
    EpisodeSpec free_spec = corridor_spec(4, 180);
    Episode ep2(free_spec);
    CHECK(ep2.state().remaining == std::vector<int>{1});  // credited at t=0
}

TEST_CASE("episode: start inside the radius credits at t=0") {
    auto s = open_room(8, 6, {{2, {2, 2}}, {4, {3, 2}}});
    EpisodeSpec spec;
    spec.scene = s;
    spec.start = {center(2), center(2), 0};
    spec.targets = {2, 4};
    Episode ep(spec);

    CHECK(ep.state().t == 0);
    CHECK(ep.state().cause == TerminationCause::AllFound);
    CHECK(ep.state().success());
    CHECK(ep.state().found_log.size() == 2);
    CHECK_THROWS_AS(ep.step(Action::TurnLeft), ValidationError);
}

TEST_CASE("episode: stop action ends the episode as a failure") {
    EpisodeSpec spec = corridor_spec(10, 0);
    Episode ep(spec);
    ep.step(Action::TurnLeft);
    ep.step(Action::Stop);
    CHECK(ep.state().cause == TerminationCause::StopAction);
    CHECK_FALSE(ep.state().success());
    CHECK(ep.state().t == 2);
}

TEST_CASE("episode: step budget expires into MaxSteps") {
    EpisodeSpec spec = corridor_spec(10, 0);
    spec.max_steps = 3;
    Episode ep(spec);
    ep.step(Action::TurnLeft);
    ep.step(Action::TurnLeft);
    CHECK_FALSE(ep.state().terminated());
    ep.step(Action::TurnLeft);
    CHECK(ep.state().cause == TerminationCause::MaxSteps);
    CHECK_FALSE(ep.state().success());
}

TEST_CASE("episode: finding the last target on the final step still succeeds") {
    EpisodeSpec spec = corridor_spec(10, 180);
    spec.targets = {0};
    spec.max_steps = 6;
    Episode ep(spec);
    for (int i = 0; i < 6; ++i) ep.step(Action::MoveForward);
    CHECK(ep.state().t == 6);
    CHECK(ep.state().cause == TerminationCause::AllFound);
    CHECK(ep.state().success());
}

TEST_CASE("episode: require_seen defers credit until the instance is mapped") {
    EpisodeSpec spec = corridor_spec(4, 0);  // chair 1 m behind the agent
    spec.targets = {0};
    spec.require_seen = true;
    Episode ep(spec);
    CHECK(ep.state().remaining == std::vector<int>{0});

    // rotate left toward the chair; FOV reaches 180 degrees once heading 150
    int credited_at = -1;
    for (int i = 1; i <= 6 && credited_at < 0; ++i) {
        auto ev = ep.step(Action::TurnLeft);
        if (!ev.categories_found.empty()) credited_at = i;
    }
    CHECK(credited_at == 5);
    CHECK(ep.state().success());
}

TEST_CASE("episode: euclidean metric ignores walls, geodesic does not") {
    // solid wall column splits the room; the target sits just across it
    auto s = open_room(8, 4, {{3, {4, 1}}},
                       {{3, 0}, {3, 1}, {3, 2}, {3, 3}});
    EpisodeSpec spec;
    spec.scene = s;
    spec.start = {center(2), center(1), 0};
    spec.targets = {3};

    Episode geo(spec);
    CHECK(geo.dtg(3) == geodesy::kInf);
    CHECK(geo.state().remaining == std::vector<int>{3});

    spec.success_metric = env::SuccessMetric::Euclidean;
    Episode eu(spec);
    CHECK(eu.state().success());  // 0.5 m through the wall
}

TEST_CASE("episode: spec validation rejects malformed setups") {
    EpisodeSpec spec = corridor_spec(10, 0);

    auto bad = spec;
    bad.start.heading_deg = 45;
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.start = {center(10), center(0), 0};  // wall cell
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.targets = {};
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.targets = {0, 0};
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.targets = {9};
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.targets = {0, 5};  // no tv in the corridor
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.required_order = {0};  // not a permutation of {0,1}
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.max_steps = 0;
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.success_radius_m = 0.0;
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.map_side = 8;  // smaller than the 21-cell scene
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    bad = spec;
    bad.scene = nullptr;
    CHECK_THROWS_AS(Episode{bad}, ValidationError);

    // negative headings normalize instead of throwing
    auto ok = spec;
    ok.start.heading_deg = -90;
    CHECK(Episode(ok).state().pose.heading_deg == 270);
}

TEST_CASE("episode: identical specs replay to identical states") {
    scene::SceneGenSpec gen;
    gen.width = 16;
    gen.height = 12;
    gen.room_count = 3;
    gen.seed = 42;
    auto s = std::make_shared<const GridScene>(scene::generate_scene(gen));

    EpisodeSpec spec;
    spec.scene = s;
    auto free = s->free_cells();
    spec.start = {(free[7].x + 0.5) * 0.25, (free[7].y + 0.5) * 0.25, 60};
    spec.targets = {0, 1, 2};

    std::vector<Action> script;
    for (int i = 0; i < 80; ++i) {
        int r = (i * 7) % 11;
        script.push_back(r < 6 ? Action::MoveForward
                                : (r < 9 ? Action::TurnLeft : Action::TurnRight));
    }

    Episode a(spec);
    Episode b(spec);
    for (Action act : script) {
        if (a.state().terminated()) break;
        a.step(act);
        b.step(act);
    }
    CHECK(a.state().pose == b.state().pose);
    CHECK(a.state().t == b.state().t);
    CHECK(a.state().remaining == b.state().remaining);
    CHECK(a.state().path_length_m == b.state().path_length_m);
    CHECK(a.map().explored == b.map().explored);
    CHECK(a.map().obstacle == b.map().obstacle);
    CHECK(a.map().trajectory == b.map().trajectory);
}

TEST_CASE("observation: remaining categories as a multi-hot code") {
    EpisodeSpec spec = corridor_spec(10, 0);
    Episode ep(spec);
    auto obs = ep.observe();
    REQUIRE(obs.map != nullptr);
    CHECK(obs.remaining == std::vector<int>{0, 1});
    REQUIRE(obs.remaining_encoding.size() == 16);
    CHECK(obs.remaining_encoding[0] == 1.0f);
    CHECK(obs.remaining_encoding[1] == 1.0f);
    for (std::size_t i = 2; i < obs.remaining_encoding.size(); ++i)
        CHECK(obs.remaining_encoding[i] == 0.0f);
    CHECK(obs.pose == ep.state().pose);
}

TEST_CASE("trajectory line layout") {
    CHECK(env::trajectory_line(3, Action::MoveForward, {1.25, 0.375, 90}, false,
                               {"potted plant", "tv"}, -0.01) ==
          "3\tmove-forward\t1.25\t0.375\t90\t0\tfound:potted_plant,tv\t-0.01");
    CHECK(env::trajectory_line(0, Action::Stop, {0.125, 0.125, 0}, true, {}, 2.14) ==
          "0\tstop\t0.125\t0.125\t0\t1\tfound:\t2.14");
}

TEST_CASE("action names round trip") {
    for (Action a : {Action::MoveForward, Action::TurnLeft, Action::TurnRight, Action::Stop}) {
        Action back{};
        REQUIRE(env::parse_action(env::action_name(a), back));
        CHECK(back == a);
    }
    Action out{};
    CHECK_FALSE(env::parse_action("teleport", out));
}
