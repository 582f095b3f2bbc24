#include "multion/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace multion::geodesy {

namespace {

constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

struct GridView {
    int width, height;
    const std::vector<std::uint8_t>* obstacle;

    bool free_cell(int x, int y) const {
        if (x < 0 || x >= width || y < 0 || y >= height) return false;
        return (*obstacle)[std::size_t(y) * std::size_t(width) + std::size_t(x)] == 0;
    }
    std::size_t index(int x, int y) const {
        return std::size_t(y) * std::size_t(width) + std::size_t(x);
    }
    // diagonal moves must not cut corners: both flanking axis cells free
    bool step_ok(int x, int y, int dx, int dy) const {
        if (!free_cell(x + dx, y + dy)) return false;
        if (dx != 0 && dy != 0) return free_cell(x + dx, y) && free_cell(x, y + dy);
        return true;
    }
};

using PqItem = std::pair<double, std::size_t>;
using MinPq = std::priority_queue<PqItem, std::vector<PqItem>, std::greater<PqItem>>;

}  // namespace

DistanceField distance_field_dijkstra_seeded(
    int width, int height, const std::vector<std::uint8_t>& obstacle, double cell_size,
    const std::vector<std::pair<Cell, double>>& seeds) {
    GridView g{width, height, &obstacle};
    DistanceField out;
    out.width = width;
    out.height = height;
    out.cell_size = cell_size;
    out.d.assign(std::size_t(width) * std::size_t(height), kInf);

    const double diag = cell_size * std::sqrt(2.0);
    MinPq pq;
    for (const auto& [c, v] : seeds) {
        if (!g.free_cell(c.x, c.y) || v >= kInf) continue;
        std::size_t idx = g.index(c.x, c.y);
        if (v < out.d[idx]) {
            out.d[idx] = v;
            pq.push({v, idx});
        }
    }
    while (!pq.empty()) {
        auto [dv, idx] = pq.top();
        pq.pop();
        if (dv > out.d[idx]) continue;
        int x = int(idx % std::size_t(width));
        int y = int(idx / std::size_t(width));
        for (int k = 0; k < 8; ++k) {
            if (!g.step_ok(x, y, kDx[k], kDy[k])) continue;
            std::size_t nidx = g.index(x + kDx[k], y + kDy[k]);
            double nd = dv + (k < 4 ? cell_size : diag);
            if (nd < out.d[nidx]) {
                out.d[nidx] = nd;
                pq.push({nd, nidx});
            }
        }
    }
    return out;
}

DistanceField distance_field_dijkstra(int width, int height,
                                      const std::vector<std::uint8_t>& obstacle, double cell_size,
                                      const std::vector<Cell>& sources) {
    std::vector<std::pair<Cell, double>> seeds;
    seeds.reserve(sources.size());
    for (const auto& c : sources) seeds.push_back({c, 0.0});
    return distance_field_dijkstra_seeded(width, height, obstacle, cell_size, seeds);
}

namespace {

// One-pair upwind solve: (T-a)^2 + (T-b)^2 = h^2 with a,b the smaller accepted
// value along each axis of the pair (either may be +inf).
double solve_pair(double a, double b, double h) {
    if (a > b) std::swap(a, b);
    if (a >= kInf) return kInf;
    if (b >= kInf || b - a >= h) return a + h;
    double s = a + b;
    double disc = 2.0 * h * h - (b - a) * (b - a);
    return 0.5 * (s + std::sqrt(disc));
}

struct FmmState {
    GridView g;
    double h;
    const std::vector<double>* value;
    const std::vector<std::uint8_t>* accepted;

    double accepted_value(int x, int y) const {
        if (!g.free_cell(x, y)) return kInf;
        std::size_t idx = g.index(x, y);
        return (*accepted)[idx] ? (*value)[idx] : kInf;
    }

    double solve(int x, int y) const {
        double ax = std::min(accepted_value(x - 1, y), accepted_value(x + 1, y));
        double ay = std::min(accepted_value(x, y - 1), accepted_value(x, y + 1));
        double t = solve_pair(ax, ay, h);

        // rotated stencil, spacing h*sqrt(2); each diagonal neighbor is usable
        // only when the move to it would not cut a corner
        auto diag_value = [&](int dx, int dy) {
            if (!g.free_cell(x + dx, y) || !g.free_cell(x, y + dy)) return kInf;
            return accepted_value(x + dx, y + dy);
        };
        double d1 = std::min(diag_value(1, 1), diag_value(-1, -1));
        double d2 = std::min(diag_value(-1, 1), diag_value(1, -1));
        double td = solve_pair(d1, d2, h * std::sqrt(2.0));
        return std::min(t, td);
    }
};

}  // namespace

DistanceField distance_field_fmm(int width, int height,
                                 const std::vector<std::uint8_t>& obstacle, double cell_size,
                                 const std::vector<Cell>& sources) {
    GridView g{width, height, &obstacle};
    DistanceField out;
    out.width = width;
    out.height = height;
    out.cell_size = cell_size;
    out.d.assign(std::size_t(width) * std::size_t(height), kInf);

    std::vector<std::uint8_t> accepted(out.d.size(), 0);
    FmmState st{g, cell_size, &out.d, &accepted};
    MinPq pq;
    for (const auto& c : sources) {
        if (!g.free_cell(c.x, c.y)) continue;
        std::size_t idx = g.index(c.x, c.y);
        if (out.d[idx] > 0.0) {
            out.d[idx] = 0.0;
            pq.push({0.0, idx});
        }
    }
    while (!pq.empty()) {
        auto [dv, idx] = pq.top();
        pq.pop();
        if (accepted[idx] || dv > out.d[idx]) continue;
        accepted[idx] = 1;
        int x = int(idx % std::size_t(width));
        int y = int(idx / std::size_t(width));
        for (int k = 0; k < 8; ++k) {
            int nx = x + kDx[k];
            int ny = y + kDy[k];
            if (!g.free_cell(nx, ny)) continue;
            std::size_t nidx = g.index(nx, ny);
            if (accepted[nidx]) continue;
            double t = st.solve(nx, ny);
            if (t < out.d[nidx]) {
                out.d[nidx] = t;
                pq.push({t, nidx});
            }
        }
    }
    return out;
}

std::vector<Cell> extract_path(const DistanceField& field,
                               const std::vector<std::uint8_t>& obstacle, Cell start) {
    GridView g{field.width, field.height, &obstacle};
    std::vector<Cell> path;
    Cell cur = start;
    std::size_t guard = std::size_t(field.width) * std::size_t(field.height) + 1;
    while (guard-- > 0) {
        path.push_back(cur);
        double v = field.at(cur);
        if (v <= 0.0 || v >= kInf) break;
        Cell best = cur;
        double best_v = v;
        for (int k = 0; k < 8; ++k) {
            if (!g.step_ok(cur.x, cur.y, kDx[k], kDy[k])) continue;
            Cell n{cur.x + kDx[k], cur.y + kDy[k]};
            double nv = field.at(n);
            if (nv < best_v || (nv == best_v && best != cur && scene::row_major_less(n, best))) {
                best_v = nv;
                best = n;
            }
        }
        if (best == cur) break;
        cur = best;
    }
    return path;
}

const DistanceField& SceneFields::category_field(int category_id) {
    auto it = fields_.find(category_id);
    if (it != fields_.end()) return it->second;
    auto sources = scene_->instances_of(category_id);
    auto field = distance_field_dijkstra(*scene_, sources);
    return fields_.emplace(category_id, std::move(field)).first->second;
}

namespace {

std::vector<int> unique_targets(const std::vector<int>& targets) {
    std::vector<int> t;
    for (int id : targets)
        if (std::find(t.begin(), t.end(), id) == t.end()) t.push_back(id);
    return t;
}

std::vector<std::uint8_t> scene_occupancy(const GridScene& s) {
    std::vector<std::uint8_t> occ(std::size_t(s.width()) * std::size_t(s.height()));
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x) occ[s.index({x, y})] = s.obstacle({x, y}) ? 1 : 0;
    return occ;
}

}  // namespace

double optimal_multigoal_length(SceneFields& fields, const Cell& start,
                                const std::vector<int>& target_categories, double radius_m) {
    const GridScene& s = fields.scene();
    std::vector<int> targets = unique_targets(target_categories);
    int k = int(targets.size());
    if (k == 0) return 0.0;
    if (k > 16) throw ValidationError("too many target categories for bitmask search");
    if (!s.free(start)) return kInf;

    const std::size_t cells = std::size_t(s.width()) * std::size_t(s.height());
    const unsigned full = (1u << k) - 1u;

    // precompute which target bits each cell satisfies
    std::vector<std::uint16_t> credit(cells, 0);
    for (int i = 0; i < k; ++i) {
        const DistanceField& f = fields.category_field(targets[i]);
        for (std::size_t idx = 0; idx < cells; ++idx)
            if (f.d[idx] <= radius_m) credit[idx] |= std::uint16_t(1u << i);
    }

    auto occ = scene_occupancy(s);
    GridView g{s.width(), s.height(), &occ};
    const double h = s.cell_size();
    const double diag = h * std::sqrt(2.0);

    std::vector<double> dist(cells * (full + 1u), kInf);
    auto state = [&](std::size_t cell_idx, unsigned mask) {
        return cell_idx * (full + 1u) + mask;
    };

    MinPq pq;
    {
        std::size_t si = s.index(start);
        unsigned m0 = credit[si];
        dist[state(si, m0)] = 0.0;
        pq.push({0.0, state(si, m0)});
    }
    while (!pq.empty()) {
        auto [dv, sid] = pq.top();
        pq.pop();
        if (dv > dist[sid]) continue;
        unsigned mask = unsigned(sid % (full + 1u));
        std::size_t cell_idx = sid / (full + 1u);
        if (mask == full) return dv;
        int x = int(cell_idx % std::size_t(s.width()));
        int y = int(cell_idx / std::size_t(s.width()));
        for (int dir = 0; dir < 8; ++dir) {
            if (!g.step_ok(x, y, kDx[dir], kDy[dir])) continue;
            std::size_t nidx = g.index(x + kDx[dir], y + kDy[dir]);
            unsigned nmask = mask | credit[nidx];
            double nd = dv + (dir < 4 ? h : diag);
            std::size_t nsid = state(nidx, nmask);
            if (nd < dist[nsid]) {
                dist[nsid] = nd;
                pq.push({nd, nsid});
            }
        }
    }
    return kInf;
}

double brute_force_multigoal(SceneFields& fields, const Cell& start,
                             const std::vector<int>& target_categories, double radius_m) {
    const GridScene& s = fields.scene();
    std::vector<int> targets = unique_targets(target_categories);
    int k = int(targets.size());
    if (k == 0) return 0.0;
    if (!s.free(start)) return kInf;

    auto occ = scene_occupancy(s);
    std::vector<std::vector<Cell>> regions;
    for (int id : targets) {
        const DistanceField& f = fields.category_field(id);
        std::vector<Cell> r;
        for (int y = 0; y < s.height(); ++y)
            for (int x = 0; x < s.width(); ++x)
                if (f.at({x, y}) <= radius_m) r.push_back({x, y});
        if (r.empty()) return kInf;
        regions.push_back(std::move(r));
    }

    std::vector<int> order(std::size_t(k), 0);
    for (int i = 0; i < k; ++i) order[std::size_t(i)] = i;

    DistanceField from_start =
        distance_field_dijkstra(s.width(), s.height(), occ, s.cell_size(), {start});

    double best = kInf;
    do {
        DistanceField cur = from_start;
        bool dead = false;
        for (int j = 0; j < k - 1; ++j) {
            std::vector<std::pair<Cell, double>> seeds;
            for (const auto& c : regions[std::size_t(order[std::size_t(j)])]) {
                double v = cur.at(c);
                if (v < kInf) seeds.push_back({c, v});
            }
            if (seeds.empty()) {
                dead = true;
                break;
            }
            cur = distance_field_dijkstra_seeded(s.width(), s.height(), occ, s.cell_size(), seeds);
        }
        if (dead) continue;
        double len = kInf;
        for (const auto& c : regions[std::size_t(order[std::size_t(k - 1)])])
            len = std::min(len, cur.at(c));
        best = std::min(best, len);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

std::string field_to_csv(const DistanceField& field) {
    std::string out;
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            if (x) out.push_back(',');
            double v = field.at({x, y});
            out += v >= kInf ? "inf" : format_double(v);
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace multion::geodesy
