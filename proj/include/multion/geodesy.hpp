#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "multion/scene.hpp"

namespace multion::geodesy {

using scene::Cell;
using scene::GridScene;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Geodesic distance (meters) from every cell to the nearest source.
// Obstacles and unreachable cells hold +inf.
struct DistanceField {
    int width = 0;
    int height = 0;
    double cell_size = 0.25;
    std::vector<double> d;

    double at(const Cell& c) const {
        if (c.x < 0 || c.x >= width || c.y < 0 || c.y >= height) return kInf;
        return d[std::size_t(c.y) * std::size_t(width) + std::size_t(c.x)];
    }
    bool reachable(const Cell& c) const { return at(c) < kInf; }
};

// 8-connected Dijkstra; axis step costs cell_size, diagonal cell_size*sqrt(2).
// A diagonal step is allowed only when both adjacent axis cells are free
// (no corner cutting). Sources on obstacles are ignored.
DistanceField distance_field_dijkstra(int width, int height,
                                      const std::vector<std::uint8_t>& obstacle, double cell_size,
                                      const std::vector<Cell>& sources);

// Same metric, but seeds carry nonzero initial costs. Used to chain fields.
DistanceField distance_field_dijkstra_seeded(int width, int height,
                                             const std::vector<std::uint8_t>& obstacle,
                                             double cell_size,
                                             const std::vector<std::pair<Cell, double>>& seeds);

// First-order fast marching on |grad T| = 1 with two stencils per cell: the
// axis pair (spacing h) and the diagonal pair (spacing h*sqrt(2), gated by the
// same no-corner-cut rule). The diagonal stencil keeps the solution within
// [euclidean, dijkstra8] on open ground, which a 4-stencil solver does not.
DistanceField distance_field_fmm(int width, int height,
                                 const std::vector<std::uint8_t>& obstacle, double cell_size,
                                 const std::vector<Cell>& sources);

inline DistanceField distance_field_dijkstra(const GridScene& s, const std::vector<Cell>& sources) {
    std::vector<std::uint8_t> occ(std::size_t(s.width()) * std::size_t(s.height()));
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x) occ[s.index({x, y})] = s.obstacle({x, y}) ? 1 : 0;
    return distance_field_dijkstra(s.width(), s.height(), occ, s.cell_size(), sources);
}

// Steepest-descent walk from start toward the field's zero set, stepping to
// the 8-neighbor with the smallest value (no corner cutting; row-major order
// breaks ties). Stops at a zero cell or when no neighbor strictly improves.
std::vector<Cell> extract_path(const DistanceField& field,
                               const std::vector<std::uint8_t>& obstacle, Cell start);

// Lazily computed per-category distance-to-goal fields for one scene:
// field(id) is the dijkstra field sourced at every instance of category id.
class SceneFields {
  public:
    explicit SceneFields(std::shared_ptr<const GridScene> scene) : scene_(std::move(scene)) {}

    const GridScene& scene() const { return *scene_; }
    const DistanceField& category_field(int category_id);

    // meters from cell to the nearest instance of the category
    double dtg(int category_id, const Cell& c) { return category_field(category_id).at(c); }

  private:
    std::shared_ptr<const GridScene> scene_;
    std::unordered_map<int, DistanceField> fields_;
};

// Length (meters) of the shortest 8-connected walk from start that brings the
// agent within radius_m geodesic of at least one instance of every target
// category, in any order. Credit is automatic on entering a qualifying cell.
// Returns +inf when some target cannot be reached.
double optimal_multigoal_length(SceneFields& fields, const Cell& start,
                                const std::vector<int>& target_categories, double radius_m);

// Same quantity by a different route: for every visit order of the targets,
// chain seeded Dijkstra fields through the qualifying regions and take the
// best order. Exponential in the target count; test oracle only.
double brute_force_multigoal(SceneFields& fields, const Cell& start,
                             const std::vector<int>& target_categories, double radius_m);

// Debug dump: one CSV row per grid row, +inf rendered as "inf".
std::string field_to_csv(const DistanceField& field);

}  // namespace multion::geodesy
