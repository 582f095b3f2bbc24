#include "doctest.h"

#include <cstdint>
#include <memory>
#include <vector>

#include "multion/agents.hpp"
#include "multion/env.hpp"
#include "multion/geodesy.hpp"
#include "multion/scene.hpp"
#include "multion/util.hpp"

using namespace multion;
using agents::OracleController;
using agents::PolicyStep;
using env::Action;
using env::Episode;
using env::EpisodeSpec;
using env::Pose;
using env::SemanticMapState;
using scene::CategoryCatalog;
using scene::Cell;
using scene::GridScene;
using scene::ObjectInstance;

namespace {

constexpr double kCs = 0.25;

double center(int i) { return (i + 0.5) * kCs; }

// fully-known map: the planner sees the true occupancy
SemanticMapState known_map(const std::vector<const char*>& rows) {
    SemanticMapState m;
    m.side = int(std::string(rows[0]).size());
    m.obstacle.assign(std::size_t(m.side) * std::size_t(m.side), 0);
    m.explored.assign(m.obstacle.size(), 1);
    for (int y = 0; y < m.side; ++y)
        for (int x = 0; x < m.side; ++x)
            if (rows[std::size_t(y)][std::size_t(x)] == '#') m.obstacle[m.index({x, y})] = 1;
    return m;
}

SemanticMapState open_map(int side) {
    SemanticMapState m;
    m.side = side;
    m.obstacle.assign(std::size_t(side) * std::size_t(side), 0);
    m.explored.assign(m.obstacle.size(), 1);
    return m;
}

// Drive the policy as a pure function: apply its action to a synthetic pose
// until arrival. Returns forward count; fails the test on a commanded
// collision or timeout.
int drive_to_goal(const SemanticMapState& map, Pose pose, const Cell& goal, int max_steps = 600) {
    int forwards = 0;
    for (int t = 0; t < max_steps; ++t) {
        PolicyStep ps = agents::local_policy_step(map, kCs, pose, goal);
        REQUIRE_FALSE(ps.replan_needed);
        if (ps.arrived) return forwards;
        if (ps.action == Action::TurnLeft) {
            pose.heading_deg = (pose.heading_deg + 30) % 360;
        } else if (ps.action == Action::TurnRight) {
            pose.heading_deg = (pose.heading_deg + 330) % 360;
        } else {
            REQUIRE(ps.action == Action::MoveForward);
            // axis alignment is part of the contract
            REQUIRE(pose.heading_deg % 90 == 0);
            Cell c{int(pose.x / kCs), int(pose.y / kCs)};
            Cell dest = c;
            if (pose.heading_deg == 0) dest.x += 1;
            else if (pose.heading_deg == 180) dest.x -= 1;
            else if (pose.heading_deg == 90) dest.y += 1;
            else dest.y -= 1;
            // the policy must never command a collision on a known map
            REQUIRE(dest.x >= 0);
            REQUIRE(dest.x < map.side);
            REQUIRE(map.obstacle[map.index(dest)] == 0);
            pose.x = center(dest.x);
            pose.y = center(dest.y);
            ++forwards;
        }
    }
    FAIL("policy did not arrive within the step budget");
    return -1;
}

std::shared_ptr<const GridScene> corridor() {
    std::vector<std::uint8_t> occ(21 * 4, 1);
    for (int x = 0; x < 21; ++x) occ[1 * 21 + x] = 0;
    std::vector<ObjectInstance> objs = {{0, {0, 1}}, {1, {20, 1}}};
    return std::make_shared<GridScene>(21, 4, 0.25, std::move(occ), std::move(objs),
                                       CategoryCatalog::standard());
}

}  // namespace

TEST_CASE("local policy: single actions match the bearing geometry") {
    auto m = open_map(8);

    // goal straight east, already aligned
    PolicyStep ps = agents::local_policy_step(m, kCs, {center(1), center(4), 0}, {6, 4});
    CHECK(ps.action == Action::MoveForward);
    CHECK_FALSE(ps.arrived);
    CHECK_FALSE(ps.replan_needed);

    // facing north (270), goal east: error -90, turn right... or the policy
    // may prefer left; pin the actual contract: err(0 - 270) wraps to +90
    ps = agents::local_policy_step(m, kCs, {center(1), center(4), 270}, {6, 4});
    CHECK(ps.action == Action::TurnLeft);

    ps = agents::local_policy_step(m, kCs, {center(1), center(4), 90}, {6, 4});
    CHECK(ps.action == Action::TurnRight);

    // dead opposite: deterministic tie toward TurnLeft
    ps = agents::local_policy_step(m, kCs, {center(1), center(4), 180}, {6, 4});
    CHECK(ps.action == Action::TurnLeft);

    // small misalignment within 15 degrees cannot happen from axis bearings:
    // a 30 degree offset already turns
    ps = agents::local_policy_step(m, kCs, {center(1), center(4), 30}, {6, 4});
    CHECK(ps.action == Action::TurnRight);
}

TEST_CASE("local policy: arrival uses travel distance, not coordinates") {
    auto m = open_map(8);

    // on the goal
    CHECK(agents::local_policy_step(m, kCs, {center(3), center(3), 0}, {3, 3}).arrived);
    // axis neighbor
    CHECK(agents::local_policy_step(m, kCs, {center(2), center(3), 0}, {3, 3}).arrived);
    // open diagonal neighbor: sqrt(2) cells in field value, still arrived
    CHECK(agents::local_policy_step(m, kCs, {center(2), center(2), 0}, {3, 3}).arrived);
    // two cells away is not arrived
    CHECK_FALSE(agents::local_policy_step(m, kCs, {center(1), center(3), 0}, {3, 3}).arrived);

    // diagonal neighbor across a wall corner: coordinate-adjacent, far by
    // travel, so the policy keeps going instead of declaring arrival
    auto walled = known_map({
        "........",
        "........",
        "....#...",
        "...#g...",  // g marks the goal cell (4,3); '#' at (3,3) and (4,2)
        "........",
        "........",
        "........",
        "........",
    });
    // fix up: 'g' parsed as free ground
    PolicyStep ps = agents::local_policy_step(m, kCs, {center(3), center(2), 0}, {4, 3});
    CHECK(ps.arrived);  // open-map control
    ps = agents::local_policy_step(walled, kCs, {center(3), center(2), 0}, {4, 3});
    CHECK_FALSE(ps.arrived);
    CHECK_FALSE(ps.replan_needed);
}

TEST_CASE("local policy: replan signals") {
    auto m = open_map(8);
    // goal outside the map
    CHECK(agents::local_policy_step(m, kCs, {center(1), center(1), 0}, {9, 1}).replan_needed);
    CHECK(agents::local_policy_step(m, kCs, {center(1), center(1), 0}, {-1, 1}).replan_needed);

    // goal sealed behind a known wall
    auto sealed = known_map({
        "........",
        "..####..",
        "..#..#..",
        "..#..#..",
        "..####..",
        "........",
        "........",
        "........",
    });
    CHECK(agents::local_policy_step(sealed, kCs, {center(0), center(0), 0}, {3, 2})
              .replan_needed);
}

TEST_CASE("local policy: descends plateaus of the first-order field") {
    // Long diagonal flow flattens the axis neighborhood of the agent; the
    // policy must still walk off the plateau instead of spinning.
    auto m = open_map(24);
    int forwards = drive_to_goal(m, {center(2), center(2), 0}, {21, 21});
    // taxicab lower bound: 19 + 19 axis moves, minus one cell of arrival slack
    CHECK(forwards >= 36);
    CHECK(forwards <= 44);
}

TEST_CASE("local policy: routes through doors and around pillars") {
    auto m = known_map({
        "############",
        "#....#.....#",
        "#....#.....#",
        "#....#.....#",
        "#..........#",
        "#....#.....#",
        "#.#..#..#..#",
        "#....#.....#",
        "#....#.....#",
        "#..........#",
        "#....#.....#",
        "############",
    });
    // across the wall through either door row
    int forwards = drive_to_goal(m, {center(2), center(2), 0}, {9, 2});
    CHECK(forwards >= 9);  // at least the taxicab distance through a door

    // start adjacent to a pillar, goal on the other side
    forwards = drive_to_goal(m, {center(1), center(6), 0}, {4, 6});
    CHECK(forwards >= 3);
}

TEST_CASE("random agent: uniform over the three motion actions") {
    Rng rng(123);
    int counts[3] = {0, 0, 0};
    const int n = 30000;
    for (int i = 0; i < n; ++i) {
        Action a = agents::random_agent_step(rng);
        REQUIRE(a != Action::Stop);
        if (a == Action::MoveForward) ++counts[0];
        else if (a == Action::TurnLeft) ++counts[1];
        else ++counts[2];
    }
    for (int c : counts) {
        CHECK(double(c) / n > 1.0 / 3.0 - 0.01);
        CHECK(double(c) / n < 1.0 / 3.0 + 0.01);
    }
}

TEST_CASE("greedy goal selection: nearest instance with pinned tie-breaks") {
    auto s = corridor();
    geodesy::SceneFields fields(s);

    // equidistant chair/couch: lower category id wins
    Cell g = agents::sam_oracle_goal(fields, {10, 1}, {0, 1});
    CHECK(g == Cell{0, 1});
    // strictly nearer instance wins regardless of id
    g = agents::sam_oracle_goal(fields, {14, 1}, {0, 1});
    CHECK(g == Cell{20, 1});

    // same category, equidistant instances: row-major order decides
    auto twin = std::make_shared<GridScene>(
        9, 9, 0.25, std::vector<std::uint8_t>(81, 0),
        std::vector<ObjectInstance>{{0, {4, 8}}, {0, {8, 4}}}, CategoryCatalog::standard());
    geodesy::SceneFields tf(twin);
    g = agents::sam_oracle_goal(tf, {4, 4}, {0});
    CHECK(g == Cell{8, 4});  // smaller y first

    CHECK_THROWS_AS(agents::sam_oracle_goal(fields, {10, 1}, {}), ValidationError);
}

TEST_CASE("greedy goal selection: unreachable instances are skipped") {
    // chair instances on both sides of a solid wall; only the right one is
    // reachable from the agent
    std::vector<std::uint8_t> occ(8 * 8, 0);
    for (int y = 0; y < 8; ++y) occ[std::size_t(y) * 8 + 3] = 1;
    auto s = std::make_shared<GridScene>(
        8, 8, 0.25, std::move(occ),
        std::vector<ObjectInstance>{{0, {0, 0}}, {0, {7, 7}}, {1, {1, 1}}},
        CategoryCatalog::standard());
    geodesy::SceneFields fields(s);

    Cell g = agents::sam_oracle_goal(fields, {5, 5}, {0});
    CHECK(g == Cell{7, 7});

    // nothing reachable at all
    CHECK_THROWS_AS(agents::sam_oracle_goal(fields, {5, 5}, {1}), UnreachableError);
}

TEST_CASE("sequenced goal selection: only the earliest pending category counts") {
    auto s = corridor();
    geodesy::SceneFields fields(s);

    // agent sits next to the chair, but the sequence demands the couch first
    Cell g = agents::psm_oracle_goal(fields, {2, 1}, {1, 0}, {0, 1});
    CHECK(g == Cell{20, 1});
    // cursor advances once the couch is done
    g = agents::psm_oracle_goal(fields, {2, 1}, {1, 0}, {0});
    CHECK(g == Cell{0, 1});
    // categories not in the sequence remainder are errors
    CHECK_THROWS_AS(agents::psm_oracle_goal(fields, {2, 1}, {1, 0}, {}), ValidationError);
}

TEST_CASE("oracle controller: corridor runs match the hand-derived optimum") {
    EpisodeSpec spec;
    spec.scene = corridor();
    spec.start = {center(10), center(1), 180};
    spec.targets = {0, 1};

    SUBCASE("greedy order walks 4.5 m") {
        Episode ep(spec);
        OracleController oracle;
        Rng rng(1);
        while (!ep.state().terminated()) ep.step(oracle.act(ep, rng));
        CHECK(ep.state().success());
        CHECK(ep.state().path_length_m == doctest::Approx(4.5).epsilon(1e-9));
        REQUIRE(ep.state().found_log.size() == 2);
        CHECK(ep.state().found_log[0].category_id == 0);  // faces the chair first
        CHECK(ep.state().found_log[1].category_id == 1);
    }

    SUBCASE("sequenced order visits the couch first") {
        Episode ep(spec);
        OracleController oracle({1, 0});
        Rng rng(1);
        while (!ep.state().terminated()) ep.step(oracle.act(ep, rng));
        CHECK(ep.state().success());
        REQUIRE(ep.state().found_log.size() == 2);
        CHECK(ep.state().found_log[0].category_id == 1);
        CHECK(ep.state().found_log[1].category_id == 0);
        CHECK(ep.state().path_length_m == doctest::Approx(4.5).epsilon(1e-9));
    }
}

TEST_CASE("oracle controller: realized path never beats the planner optimum") {
    for (std::uint64_t seed : {3ull, 21ull, 33ull, 47ull, 55ull}) {
        scene::SceneGenSpec gen;
        gen.width = 12;
        gen.height = 12;
        gen.room_count = 3;
        gen.seed = seed;
        auto s = std::make_shared<const GridScene>(scene::generate_scene(gen));

        auto fields = std::make_shared<geodesy::SceneFields>(s);
        auto free = s->free_cells();
        EpisodeSpec spec;
        spec.scene = s;
        spec.start = {(free[free.size() / 2].x + 0.5) * 0.25,
                      (free[free.size() / 2].y + 0.5) * 0.25, 0};
        spec.targets = {0, 1};

        Episode ep(spec, fields);
        double g = geodesy::optimal_multigoal_length(*fields, free[free.size() / 2],
                                                     spec.targets, spec.success_radius_m);
        OracleController oracle;
        Rng rng(seed);
        while (!ep.state().terminated()) ep.step(oracle.act(ep, rng));

        CHECK(ep.state().success());
        CHECK(ep.state().path_length_m >= g - 1e-9);
    }
}
