#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multion/util.hpp"

namespace multion::scene {

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

// row-major order, used for deterministic tie-breaking
inline bool row_major_less(const Cell& a, const Cell& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
}

// Ordered list of category labels embedded in a fixed-width one-hot encoding.
// Labels may contain spaces ("potted plant"); file formats encode a space as
// '_', so labels themselves must not contain underscores.
class CategoryCatalog {
  public:
    static constexpr int kDefaultEncodingWidth = 16;

    CategoryCatalog(std::vector<std::string> names, int encoding_width = kDefaultEncodingWidth);

    // the six indoor classes evaluated by the navigation benchmarks
    static const CategoryCatalog& standard();

    int size() const { return int(names_.size()); }
    int encoding_width() const { return encoding_width_; }
    const std::string& name(int id) const { return names_.at(std::size_t(id)); }
    const std::vector<std::string>& names() const { return names_; }

    // -1 when the label is unknown
    int id_of(const std::string& label) const;

    friend bool operator==(const CategoryCatalog&, const CategoryCatalog&) = default;

  private:
    std::vector<std::string> names_;
    int encoding_width_;
};

struct ObjectInstance {
    int category_id = 0;
    Cell cell;
    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

// Static world: occupancy grid plus semantic object instances. Immutable
// after construction; safe to share read-only across episode workers.
class GridScene {
  public:
    GridScene(int width, int height, double cell_size, std::vector<std::uint8_t> occupancy,
              std::vector<ObjectInstance> objects, CategoryCatalog catalog);

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return cell_size_; }
    const CategoryCatalog& catalog() const { return catalog_; }
    const std::vector<ObjectInstance>& objects() const { return objects_; }

    bool in_bounds(const Cell& c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }
    bool obstacle(const Cell& c) const { return occupancy_[index(c)] != 0; }
    bool free(const Cell& c) const { return in_bounds(c) && !obstacle(c); }
    std::size_t index(const Cell& c) const {
        return std::size_t(c.y) * std::size_t(width_) + std::size_t(c.x);
    }

    std::vector<Cell> instances_of(int category_id) const;
    std::vector<Cell> free_cells() const;
    // distinct category ids with at least one instance, ascending
    std::vector<int> categories_present() const;

    friend bool operator==(const GridScene&, const GridScene&) = default;

  private:
    int width_;
    int height_;
    double cell_size_;
    std::vector<std::uint8_t> occupancy_;  // 1 = obstacle
    std::vector<ObjectInstance> objects_;
    CategoryCatalog catalog_;
};

struct SceneGenSpec {
    int width = 32;
    int height = 32;
    int room_count = 4;
    double clutter_density = 0.0;  // fraction of free cells turned into obstacles
    int min_instances = 1;
    int max_instances = 3;
    std::vector<int> categories_present;  // ids into catalog; empty = all
    CategoryCatalog catalog = CategoryCatalog::standard();
    double cell_size = 0.25;
    std::uint64_t seed = 0;
};

GridScene load_scene(const std::string& path);
void save_scene(const GridScene& s, const std::string& path);

// the format behind load_scene/save_scene, exposed for in-memory round trips
GridScene parse_scene(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_scene(const GridScene& s);

// Rectangular rooms carved by binary splits, connected by door gaps, objects
// placed uniformly on free cells. Pure function of the spec including seed.
GridScene generate_scene(const SceneGenSpec& spec);

// '_' <-> ' ' encoding used wherever labels appear in whitespace-separated
// text formats
std::string label_to_token(const std::string& label);
std::string token_to_label(const std::string& token);

}  // namespace multion::scene
