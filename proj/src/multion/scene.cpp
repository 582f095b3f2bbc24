#include "multion/scene.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace multion::scene {

namespace {

void validate_label(const std::string& label) {
    if (label.empty()) throw ValidationError("category label must be nonempty");
    if (label.find('_') != std::string::npos)
        throw ValidationError("category label must not contain '_': " + label);
    if (label.find('\t') != std::string::npos || label.find('\n') != std::string::npos)
        throw ValidationError("category label must not contain control whitespace: " + label);
    if (label.front() == ' ' || label.back() == ' ')
        throw ValidationError("category label must not have leading/trailing spaces: " + label);
}

}  // namespace

CategoryCatalog::CategoryCatalog(std::vector<std::string> names, int encoding_width)
    : names_(std::move(names)), encoding_width_(encoding_width) {
    if (encoding_width_ < 1) throw ValidationError("encoding width must be >= 1");
    if (int(names_.size()) > encoding_width_)
        throw ValidationError("catalog has " + std::to_string(names_.size()) +
                              " categories, exceeds encoding width " +
                              std::to_string(encoding_width_));
    std::set<std::string> seen;
    for (const auto& n : names_) {
        validate_label(n);
        if (!seen.insert(n).second) throw ValidationError("duplicate category label: " + n);
    }
}

const CategoryCatalog& CategoryCatalog::standard() {
    static const CategoryCatalog c(
        {"chair", "couch", "potted plant", "bed", "toilet", "tv"});
    return c;
}

int CategoryCatalog::id_of(const std::string& label) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == label) return int(i);
    return -1;
}

std::string label_to_token(const std::string& label) {
    std::string t = label;
    std::replace(t.begin(), t.end(), ' ', '_');
    return t;
}

std::string token_to_label(const std::string& token) {
    std::string t = token;
    std::replace(t.begin(), t.end(), '_', ' ');
    return t;
}

GridScene::GridScene(int width, int height, double cell_size, std::vector<std::uint8_t> occupancy,
                     std::vector<ObjectInstance> objects, CategoryCatalog catalog)
    : width_(width),
      height_(height),
      cell_size_(cell_size),
      occupancy_(std::move(occupancy)),
      objects_(std::move(objects)),
      catalog_(std::move(catalog)) {
    if (width_ < 4 || height_ < 4)
        throw ValidationError("scene must be at least 4x4 cells, got " + std::to_string(width_) +
                              "x" + std::to_string(height_));
    if (cell_size_ <= 0.0) throw ValidationError("cell size must be positive");
    if (occupancy_.size() != std::size_t(width_) * std::size_t(height_))
        throw ValidationError("occupancy grid size does not match width*height");
    for (const auto& o : objects_) {
        if (o.category_id < 0 || o.category_id >= catalog_.size())
            throw ValidationError("object has unknown category id " +
                                  std::to_string(o.category_id));
        if (!in_bounds(o.cell))
            throw ValidationError("object '" + catalog_.name(o.category_id) +
                                  "' is out of bounds at (" + std::to_string(o.cell.x) + "," +
                                  std::to_string(o.cell.y) + ")");
        if (obstacle(o.cell))
            throw ValidationError("object '" + catalog_.name(o.category_id) +
                                  "' placed on an obstacle cell (" + std::to_string(o.cell.x) +
                                  "," + std::to_string(o.cell.y) + ")");
    }
}

std::vector<Cell> GridScene::instances_of(int category_id) const {
    std::vector<Cell> out;
    for (const auto& o : objects_)
        if (o.category_id == category_id) out.push_back(o.cell);
    return out;
}

std::vector<Cell> GridScene::free_cells() const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (!obstacle({x, y})) out.push_back({x, y});
    return out;
}

std::vector<int> GridScene::categories_present() const {
    std::set<int> ids;
    for (const auto& o : objects_) ids.insert(o.category_id);
    return std::vector<int>(ids.begin(), ids.end());
}

GridScene parse_scene(const std::string& text, const std::string& origin) {
    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) lines.push_back(cur);
    }
    if (lines.empty()) throw ParseError(origin + ": empty scene file");

    auto head = split_ws(lines[0]);
    if (head.size() != 5 || head[0] != "multion-scene" || head[1] != "v1")
        throw ParseError(origin + ": bad header, expected 'multion-scene v1 <w> <h> <cell>'");
    std::int64_t w = 0, h = 0;
    double cell = 0;
    if (!parse_i64(head[2], w) || !parse_i64(head[3], h) || !parse_double(head[4], cell))
        throw ParseError(origin + ": malformed header numbers");
    if (w <= 0 || h <= 0) throw ParseError(origin + ": nonpositive dimensions");
    if (lines.size() < std::size_t(1 + h)) throw ParseError(origin + ": truncated grid rows");

    std::vector<std::uint8_t> occ(std::size_t(w) * std::size_t(h), 0);
    for (std::int64_t y = 0; y < h; ++y) {
        const std::string& row = lines[std::size_t(1 + y)];
        if (std::int64_t(row.size()) != w)
            throw ParseError(origin + ": row " + std::to_string(y) + " has length " +
                             std::to_string(row.size()) + ", expected " + std::to_string(w));
        for (std::int64_t x = 0; x < w; ++x) {
            char c = row[std::size_t(x)];
            if (c == '#')
                occ[std::size_t(y * w + x)] = 1;
            else if (c != '.')
                throw ParseError(origin + ": bad grid character '" + std::string(1, c) + "'");
        }
    }

    // objects reference labels that a trailing catalog line may redefine, so
    // scan the remainder before resolving
    struct RawObj {
        std::string token;
        std::int64_t x, y;
    };
    std::vector<RawObj> raw;
    std::vector<std::string> catalog_tokens;
    std::int64_t catalog_width = CategoryCatalog::kDefaultEncodingWidth;
    bool saw_catalog = false;
    for (std::size_t i = std::size_t(1 + h); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto toks = split_ws(lines[i]);
        if (toks.empty()) continue;
        if (toks[0] == "obj") {
            if (toks.size() != 4) throw ParseError(origin + ": bad obj line: " + lines[i]);
            RawObj o;
            o.token = toks[1];
            if (!parse_i64(toks[2], o.x) || !parse_i64(toks[3], o.y))
                throw ParseError(origin + ": bad obj coordinates: " + lines[i]);
            raw.push_back(o);
        } else if (toks[0] == "catalog") {
            if (saw_catalog) throw ParseError(origin + ": duplicate catalog line");
            if (toks.size() < 3 || !parse_i64(toks[1], catalog_width))
                throw ParseError(origin +
                                 ": bad catalog line, expected 'catalog <width> <labels...>'");
            saw_catalog = true;
            for (std::size_t k = 2; k < toks.size(); ++k)
                catalog_tokens.push_back(token_to_label(toks[k]));
        } else {
            throw ParseError(origin + ": unexpected line: " + lines[i]);
        }
    }

    CategoryCatalog catalog = saw_catalog
                                  ? CategoryCatalog(catalog_tokens, int(catalog_width))
                                  : CategoryCatalog::standard();

    std::vector<ObjectInstance> objects;
    for (const auto& o : raw) {
        int id = catalog.id_of(token_to_label(o.token));
        if (id < 0)
            throw ValidationError(origin + ": unknown category label '" +
                                  token_to_label(o.token) + "'");
        objects.push_back({id, Cell{int(o.x), int(o.y)}});
    }

    return GridScene(int(w), int(h), cell, std::move(occ), std::move(objects),
                     std::move(catalog));
}

std::string serialize_scene(const GridScene& s) {
    std::string out = "multion-scene v1 " + std::to_string(s.width()) + " " +
                      std::to_string(s.height()) + " " + format_double(s.cell_size()) + "\n";
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) out.push_back(s.obstacle({x, y}) ? '#' : '.');
        out.push_back('\n');
    }
    for (const auto& o : s.objects()) {
        out += "obj " + label_to_token(s.catalog().name(o.category_id)) + " " +
               std::to_string(o.cell.x) + " " + std::to_string(o.cell.y) + "\n";
    }
    if (!(s.catalog() == CategoryCatalog::standard())) {
        out += "catalog " + std::to_string(s.catalog().encoding_width());
        for (const auto& n : s.catalog().names()) out += " " + label_to_token(n);
        out.push_back('\n');
    }
    return out;
}

GridScene load_scene(const std::string& path) {
    return parse_scene(read_text_file(path), path);
}

void save_scene(const GridScene& s, const std::string& path) {
    write_text_file(path, serialize_scene(s));
}

namespace {

struct Rect {  // inclusive cell bounds of a room interior
    int x0, y0, x1, y1;
    int w() const { return x1 - x0 + 1; }
    int h() const { return y1 - y0 + 1; }
};

constexpr int kMinRoomSide = 2;

bool splittable(const Rect& r) {
    return r.w() >= 2 * kMinRoomSide + 1 || r.h() >= 2 * kMinRoomSide + 1;
}

// Splits rooms by carving a 1-cell wall line with one door gap. Returns false
// when no leaf can be split further.
bool split_one(std::vector<Rect>& leaves, std::vector<std::uint8_t>& occ, int width, Rng& rng) {
    // pick the largest splittable leaf
    int best = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!splittable(leaves[i])) continue;
        if (best < 0 || leaves[i].w() * leaves[i].h() > leaves[best].w() * leaves[best].h())
            best = int(i);
    }
    if (best < 0) return false;
    Rect r = leaves[std::size_t(best)];

    bool vertical;
    if (r.w() >= 2 * kMinRoomSide + 1 && r.h() >= 2 * kMinRoomSide + 1)
        vertical = r.w() >= r.h();
    else
        vertical = r.w() >= 2 * kMinRoomSide + 1;

    if (vertical) {
        int c = int(rng.uniform_int(r.x0 + kMinRoomSide, r.x1 - kMinRoomSide));
        for (int y = r.y0; y <= r.y1; ++y) occ[std::size_t(y) * std::size_t(width) + std::size_t(c)] = 1;
        int door = int(rng.uniform_int(r.y0, r.y1));
        occ[std::size_t(door) * std::size_t(width) + std::size_t(c)] = 0;
        leaves[std::size_t(best)] = Rect{r.x0, r.y0, c - 1, r.y1};
        leaves.push_back(Rect{c + 1, r.y0, r.x1, r.y1});
    } else {
        int c = int(rng.uniform_int(r.y0 + kMinRoomSide, r.y1 - kMinRoomSide));
        for (int x = r.x0; x <= r.x1; ++x) occ[std::size_t(c) * std::size_t(width) + std::size_t(x)] = 1;
        int door = int(rng.uniform_int(r.x0, r.x1));
        occ[std::size_t(c) * std::size_t(width) + std::size_t(door)] = 0;
        leaves[std::size_t(best)] = Rect{r.x0, r.y0, r.x1, c - 1};
        leaves.push_back(Rect{r.x0, c + 1, r.x1, r.y1});
    }
    return true;
}

bool all_free_connected(const std::vector<std::uint8_t>& occ, int width, int height) {
    std::size_t total = 0;
    Cell start{-1, -1};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (!occ[std::size_t(y) * std::size_t(width) + std::size_t(x)]) {
                ++total;
                if (start.x < 0) start = {x, y};
            }
    if (total == 0) return false;
    std::vector<std::uint8_t> seen(occ.size(), 0);
    std::queue<Cell> q;
    q.push(start);
    seen[std::size_t(start.y) * std::size_t(width) + std::size_t(start.x)] = 1;
    std::size_t count = 0;
    while (!q.empty()) {
        Cell c = q.front();
        q.pop();
        ++count;
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            Cell n{c.x + dx[k], c.y + dy[k]};
            if (n.x < 0 || n.x >= width || n.y < 0 || n.y >= height) continue;
            std::size_t idx = std::size_t(n.y) * std::size_t(width) + std::size_t(n.x);
            if (occ[idx] || seen[idx]) continue;
            seen[idx] = 1;
            q.push(n);
        }
    }
    return count == total;
}

}  // namespace

GridScene generate_scene(const SceneGenSpec& spec) {
    if (spec.width < 4 || spec.height < 4)
        throw GenerationError("scene dimensions must be at least 4x4");
    if (spec.room_count < 1) throw GenerationError("room count must be >= 1");
    if (spec.max_instances < 1 || spec.max_instances < spec.min_instances)
        throw GenerationError("instances-per-category range cannot satisfy >=1 instance");
    if (spec.clutter_density < 0.0 || spec.clutter_density > 0.5)
        throw GenerationError("clutter_density must lie in [0, 0.5]");
    std::vector<int> cats = spec.categories_present;
    if (cats.empty())
        for (int i = 0; i < spec.catalog.size(); ++i) cats.push_back(i);
    for (int id : cats)
        if (id < 0 || id >= spec.catalog.size())
            throw GenerationError("categories_present contains unknown id " + std::to_string(id));

    const int attempts = 32;
    Rng master(spec.seed);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        Rng rng = master.fork(std::uint64_t(attempt) + 1);

        std::vector<std::uint8_t> occ(std::size_t(spec.width) * std::size_t(spec.height), 1);
        Rect interior{1, 1, spec.width - 2, spec.height - 2};
        for (int y = interior.y0; y <= interior.y1; ++y)
            for (int x = interior.x0; x <= interior.x1; ++x)
                occ[std::size_t(y) * std::size_t(spec.width) + std::size_t(x)] = 0;

        std::vector<Rect> leaves{interior};
        bool ok = true;
        while (int(leaves.size()) < spec.room_count) {
            if (!split_one(leaves, occ, spec.width, rng)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        // furniture-like clutter: lone obstacle cells sprinkled over free
        // space; a sprinkle that seals a doorway fails the connectivity check
        // below and costs one attempt
        if (spec.clutter_density > 0.0) {
            std::vector<Cell> open;
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x)
                    if (!occ[std::size_t(y) * std::size_t(spec.width) + std::size_t(x)])
                        open.push_back({x, y});
            auto n = std::size_t(spec.clutter_density * double(open.size()) + 0.5);
            for (std::size_t i = 0; i < n && !open.empty(); ++i) {
                std::size_t j = std::size_t(rng.uniform_int(0, std::int64_t(open.size()) - 1));
                Cell c = open[j];
                open[j] = open.back();
                open.pop_back();
                occ[std::size_t(c.y) * std::size_t(spec.width) + std::size_t(c.x)] = 1;
            }
        }

        // uniform object placement over free cells, one object per cell
        std::vector<Cell> free;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (!occ[std::size_t(y) * std::size_t(spec.width) + std::size_t(x)])
                    free.push_back({x, y});
        std::vector<std::uint8_t> used(occ.size(), 0);
        std::vector<ObjectInstance> objects;
        ok = true;
        for (int id : cats) {
            int lo = std::max(1, spec.min_instances);
            int n = int(rng.uniform_int(lo, spec.max_instances));
            for (int i = 0; i < n && ok; ++i) {
                bool placed = false;
                for (int tries = 0; tries < 256; ++tries) {
                    Cell c = free[std::size_t(rng.uniform_int(0, std::int64_t(free.size()) - 1))];
                    std::size_t idx = std::size_t(c.y) * std::size_t(spec.width) + std::size_t(c.x);
                    if (used[idx]) continue;
                    used[idx] = 1;
                    objects.push_back({id, c});
                    placed = true;
                    break;
                }
                if (!placed) ok = false;
            }
            if (!ok) break;
        }
        if (!ok) continue;

        if (!all_free_connected(occ, spec.width, spec.height)) continue;

        return GridScene(spec.width, spec.height, spec.cell_size, std::move(occ),
                         std::move(objects), spec.catalog);
    }
    throw GenerationError("scene generation failed after " + std::to_string(attempts) +
                          " attempts; spec likely infeasible");
}

}  // namespace multion::scene
