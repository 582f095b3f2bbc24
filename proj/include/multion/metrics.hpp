#pragma once

#include <cstddef>
#include <vector>

#include "multion/env.hpp"

namespace multion::metrics {

struct EpisodeMetrics {
    int success = 0;            // 1 iff every target was credited in budget
    double sub_success = 0.0;   // found / k
    int timesteps = 0;
    double path_length_m = 0.0;
    double g = 0.0;             // shortest path meters visiting all targets
    double gspl = 0.0;          // success * g / max(g, path)
};

// g is the ground-truth shortest multi-goal path length from the episode
// start. A start already inside every success radius has g = 0; such an
// episode scores gspl = success.
EpisodeMetrics score_episode(const env::EpisodeState& final_state, std::size_t k, double g);

struct Aggregate {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;      // fraction over all episodes
    double sub_success_rate = 0.0;  // mean fraction over all episodes
    double gspl = 0.0;              // mean over all episodes, failures as zero
    // timesteps and path length average successful episodes only and are
    // absent when nothing succeeded
    bool has_success_means = false;
    double mean_timesteps = 0.0;
    double mean_path_length = 0.0;
};

Aggregate aggregate(const std::vector<EpisodeMetrics>& ms);

}  // namespace multion::metrics
