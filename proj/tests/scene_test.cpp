#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "multion/scene.hpp"
#include "multion/util.hpp"

using namespace multion;
using scene::CategoryCatalog;
using scene::Cell;
using scene::GridScene;
using scene::ObjectInstance;
using scene::SceneGenSpec;

namespace {

// 6x5 hand-drawn scene: border walls, one inner pillar, two objects
GridScene tiny_scene() {
    const char* rows[5] = {
        "######",
        "#....#",
        "#.#..#",
        "#....#",
        "######",
    };
    std::vector<std::uint8_t> occ;
    for (const auto* r : rows)
        for (const char* c = r; *c; ++c) occ.push_back(*c == '#' ? 1 : 0);
    std::vector<ObjectInstance> objs = {
        {0, {1, 1}},  // chair
        {2, {4, 3}},  // potted plant
    };
    return GridScene(6, 5, 0.25, std::move(occ), std::move(objs), CategoryCatalog::standard());
}

}  // namespace

TEST_CASE("category catalog: standard set and label lookup") {
    const auto& cat = CategoryCatalog::standard();
    REQUIRE(cat.size() == 6);
    CHECK(cat.name(0) == "chair");
    CHECK(cat.name(1) == "couch");
    CHECK(cat.name(2) == "potted plant");
    CHECK(cat.name(3) == "bed");
    CHECK(cat.name(4) == "toilet");
    CHECK(cat.name(5) == "tv");
    CHECK(cat.encoding_width() == CategoryCatalog::kDefaultEncodingWidth);
    CHECK(cat.id_of("toilet") == 4);
    CHECK(cat.id_of("fridge") == -1);
    CHECK(cat.id_of("") == -1);
}

TEST_CASE("category catalog: label validation") {
    CHECK_THROWS_AS(CategoryCatalog({""}), ValidationError);
    CHECK_THROWS_AS(CategoryCatalog({"has_underscore"}), ValidationError);
    CHECK_THROWS_AS(CategoryCatalog({" padded"}), ValidationError);
    CHECK_THROWS_AS(CategoryCatalog({"padded "}), ValidationError);
    CHECK_THROWS_AS(CategoryCatalog({"tab\tlabel"}), ValidationError);
    CHECK_THROWS_AS(CategoryCatalog({"chair", "chair"}), ValidationError);
    CHECK_THROWS_AS(CategoryCatalog({"a", "b"}, 0), ValidationError);
    // more labels than one-hot slots
    CHECK_THROWS_AS(CategoryCatalog({"a", "b", "c"}, 2), ValidationError);
    // interior space is fine
    CHECK_NOTHROW(CategoryCatalog({"potted plant"}, 1));
}

TEST_CASE("label/token codec round trip") {
    CHECK(scene::label_to_token("potted plant") == "potted_plant");
    CHECK(scene::token_to_label("potted_plant") == "potted plant");
    CHECK(scene::label_to_token("tv") == "tv");
    for (const auto& n : CategoryCatalog::standard().names())
        CHECK(scene::token_to_label(scene::label_to_token(n)) == n);
}

TEST_CASE("grid scene: accessors on a hand-drawn map") {
    GridScene s = tiny_scene();
    CHECK(s.width() == 6);
    CHECK(s.height() == 5);
    CHECK(s.cell_size() == 0.25);

    CHECK(s.obstacle({0, 0}));
    CHECK(s.obstacle({2, 2}));
    CHECK_FALSE(s.obstacle({1, 1}));
    CHECK(s.free({3, 2}));
    CHECK_FALSE(s.free({-1, 2}));
    CHECK_FALSE(s.in_bounds({6, 0}));
    CHECK(s.in_bounds({5, 4}));

    // 4x3 interior minus the pillar
    CHECK(s.free_cells().size() == 11);

    auto chairs = s.instances_of(0);
    REQUIRE(chairs.size() == 1);
    CHECK(chairs[0] == Cell{1, 1});
    CHECK(s.instances_of(5).empty());

    CHECK(s.categories_present() == std::vector<int>{0, 2});
}

TEST_CASE("grid scene: construction rejects malformed input") {
    std::vector<std::uint8_t> occ(6 * 5, 0);
    auto cat = CategoryCatalog::standard();

    CHECK_THROWS_AS(GridScene(3, 5, 0.25, std::vector<std::uint8_t>(15, 0), {}, cat),
                    ValidationError);
    CHECK_THROWS_AS(GridScene(6, 5, 0.0, occ, {}, cat), ValidationError);
    CHECK_THROWS_AS(GridScene(6, 5, -1.0, occ, {}, cat), ValidationError);
    CHECK_THROWS_AS(GridScene(6, 5, 0.25, std::vector<std::uint8_t>(29, 0), {}, cat),
                    ValidationError);
    CHECK_THROWS_AS(GridScene(6, 5, 0.25, occ, {{9, {1, 1}}}, cat), ValidationError);
    CHECK_THROWS_AS(GridScene(6, 5, 0.25, occ, {{0, {6, 1}}}, cat), ValidationError);

    auto blocked = occ;
    blocked[1 * 6 + 1] = 1;
    CHECK_THROWS_AS(GridScene(6, 5, 0.25, blocked, {{0, {1, 1}}}, cat), ValidationError);
}

TEST_CASE("scene text format: serialize/parse round trip") {
    GridScene s = tiny_scene();
    std::string text = serialize_scene(s);
    GridScene back = scene::parse_scene(text);
    CHECK(back == s);
    // serialization is canonical: a second trip is byte-identical
    CHECK(serialize_scene(back) == text);
}

TEST_CASE("scene text format: custom catalog survives the round trip") {
    std::vector<std::uint8_t> occ(6 * 5, 0);
    CategoryCatalog cat({"lamp", "coffee table"}, 8);
    GridScene s(6, 5, 0.5, occ, {{1, {2, 2}}}, cat);

    std::string text = serialize_scene(s);
    CHECK(text.find("catalog 8 lamp coffee_table") != std::string::npos);
    GridScene back = scene::parse_scene(text);
    CHECK(back.catalog().name(1) == "coffee table");
    CHECK(back.catalog().encoding_width() == 8);
    CHECK(back.cell_size() == 0.5);
    CHECK(back == s);
}

TEST_CASE("scene text format: parse errors carry the origin") {
    CHECK_THROWS_AS(scene::parse_scene(""), ParseError);
    CHECK_THROWS_AS(scene::parse_scene("multion-scene v2 4 4 0.25\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene("multion-scene v1 4 4\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene("multion-scene v1 x 4 0.25\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene("multion-scene v1 4 4 0.25\n....\n....\n"), ParseError);

    std::string base = "multion-scene v1 4 4 0.25\n....\n....\n....\n....\n";
    CHECK_NOTHROW(scene::parse_scene(base));
    CHECK_THROWS_AS(scene::parse_scene(base + "obj chair 1\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene(base + "obj chair a b\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene(base + "obj fridge 1 1\n"), ValidationError);
    CHECK_THROWS_AS(scene::parse_scene(base + "what 1 2\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene(base + "catalog 4 a\ncatalog 4 b\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene(base + "catalog chair\n"), ParseError);
    CHECK_THROWS_AS(scene::parse_scene(base + "catalog x chair\n"), ParseError);

    std::string short_row = "multion-scene v1 4 4 0.25\n....\n...\n....\n....\n";
    CHECK_THROWS_AS(scene::parse_scene(short_row), ParseError);
    std::string bad_char = "multion-scene v1 4 4 0.25\n....\n..x.\n....\n....\n";
    CHECK_THROWS_AS(scene::parse_scene(bad_char), ParseError);

    try {
        scene::parse_scene("", "somewhere.scene");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("somewhere.scene") != std::string::npos);
    }
}

TEST_CASE("scene generation: determinism and structural invariants") {
    SceneGenSpec spec;
    spec.width = 20;
    spec.height = 14;
    spec.room_count = 4;
    spec.seed = 7;

    GridScene a = scene::generate_scene(spec);
    GridScene b = scene::generate_scene(spec);
    CHECK(a == b);  // pure function of the spec

    spec.seed = 8;
    GridScene c = scene::generate_scene(spec);
    CHECK_FALSE(a == c);

    // border is solid
    for (int x = 0; x < a.width(); ++x) {
        CHECK(a.obstacle({x, 0}));
        CHECK(a.obstacle({x, a.height() - 1}));
    }
    for (int y = 0; y < a.height(); ++y) {
        CHECK(a.obstacle({0, y}));
        CHECK(a.obstacle({a.width() - 1, y}));
    }

    // objects sit on free cells, one per cell, and every default category
    // shows up at least once
    std::vector<std::size_t> taken;
    for (const auto& o : a.objects()) {
        CHECK(a.free(o.cell));
        taken.push_back(a.index(o.cell));
    }
    std::sort(taken.begin(), taken.end());
    CHECK(std::adjacent_find(taken.begin(), taken.end()) == taken.end());
    CHECK(a.categories_present() == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("scene generation: free space is one connected component") {
    for (std::uint64_t seed : {1ull, 5ull, 9ull, 42ull}) {
        SceneGenSpec spec;
        spec.width = 24;
        spec.height = 24;
        spec.room_count = 6;
        spec.clutter_density = 0.08;
        spec.seed = seed;
        GridScene s = scene::generate_scene(spec);

        auto free = s.free_cells();
        REQUIRE_FALSE(free.empty());
        std::vector<std::uint8_t> seen(std::size_t(s.width()) * std::size_t(s.height()), 0);
        std::vector<Cell> stack{free[0]};
        seen[s.index(free[0])] = 1;
        std::size_t count = 0;
        while (!stack.empty()) {
            Cell c = stack.back();
            stack.pop_back();
            ++count;
            const int dx[4] = {1, -1, 0, 0};
            const int dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                Cell n{c.x + dx[k], c.y + dy[k]};
                if (!s.free(n) || seen[s.index(n)]) continue;
                seen[s.index(n)] = 1;
                stack.push_back(n);
            }
        }
        CHECK(count == free.size());
    }
}

TEST_CASE("scene generation: clutter raises obstacle density") {
    SceneGenSpec plain;
    plain.width = 24;
    plain.height = 24;
    plain.room_count = 4;
    plain.seed = 3;
    SceneGenSpec cluttered = plain;
    cluttered.clutter_density = 0.15;

    auto count_free = [](const GridScene& s) { return s.free_cells().size(); };
    GridScene a = scene::generate_scene(plain);
    GridScene b = scene::generate_scene(cluttered);
    CHECK(count_free(b) < count_free(a));
    // sprinkled cells are a bounded fraction of the pre-clutter open area
    CHECK(count_free(b) >= std::size_t(double(count_free(a)) * 0.8));
}

TEST_CASE("scene generation: instance count range is honored") {
    SceneGenSpec spec;
    spec.width = 24;
    spec.height = 24;
    spec.room_count = 3;
    spec.min_instances = 2;
    spec.max_instances = 4;
    spec.categories_present = {1, 4};
    spec.seed = 11;
    GridScene s = scene::generate_scene(spec);

    CHECK(s.categories_present() == std::vector<int>{1, 4});
    for (int id : {1, 4}) {
        auto n = s.instances_of(id).size();
        CHECK(n >= 2);
        CHECK(n <= 4);
    }
}

TEST_CASE("scene generation: invalid specs are rejected") {
    SceneGenSpec spec;

    spec.width = 3;
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
    spec.width = 32;

    spec.room_count = 0;
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
    spec.room_count = 4;

    spec.min_instances = 3;
    spec.max_instances = 2;
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
    spec.min_instances = 1;
    spec.max_instances = 3;

    spec.clutter_density = 0.6;
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
    spec.clutter_density = -0.1;
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
    spec.clutter_density = 0.0;

    spec.categories_present = {6};
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
    spec.categories_present.clear();

    // so many rooms that the splitter cannot keep the minimum side
    spec.width = 8;
    spec.height = 8;
    spec.room_count = 40;
    CHECK_THROWS_AS(scene::generate_scene(spec), GenerationError);
}

TEST_CASE("scene file io round trip") {
    GridScene s = tiny_scene();
    std::string path = "scene_io_test.scene";
    scene::save_scene(s, path);
    GridScene back = scene::load_scene(path);
    CHECK(back == s);
    std::remove(path.c_str());

    CHECK_THROWS_AS(scene::load_scene("does_not_exist.scene"), IoError);
}
