#include "multion/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "multion/util.hpp"

namespace multion::metrics {

EpisodeMetrics score_episode(const env::EpisodeState& final_state, std::size_t k, double g) {
    if (k == 0) throw ValidationError("episode must have at least one target");
    if (final_state.path_length_m < 0.0) throw ValidationError("negative path length");
    if (!std::isfinite(g) || g < 0.0) throw ValidationError("optimal length must be finite");
    if (final_state.found_log.size() > k) throw ValidationError("found more targets than k");

    EpisodeMetrics m;
    m.success = final_state.success() ? 1 : 0;
    m.sub_success = double(final_state.found_log.size()) / double(k);
    m.timesteps = final_state.t;
    m.path_length_m = final_state.path_length_m;
    m.g = g;
    if (g > 0.0)
        m.gspl = double(m.success) * g / std::max(g, m.path_length_m);
    else
        m.gspl = double(m.success);  // degenerate start: already at every goal
    return m;
}

Aggregate aggregate(const std::vector<EpisodeMetrics>& ms) {
    if (ms.empty()) throw ValidationError("aggregating zero episodes");
    Aggregate a;
    a.episodes = ms.size();
    double sub_sum = 0.0, gspl_sum = 0.0, t_sum = 0.0, p_sum = 0.0;
    for (const auto& m : ms) {
        a.successes += std::size_t(m.success);
        sub_sum += m.sub_success;
        gspl_sum += m.gspl;
        if (m.success) {
            t_sum += double(m.timesteps);
            p_sum += m.path_length_m;
        }
    }
    a.success_rate = double(a.successes) / double(a.episodes);
    a.sub_success_rate = sub_sum / double(a.episodes);
    a.gspl = gspl_sum / double(a.episodes);
    if (a.successes > 0) {
        a.has_success_means = true;
        a.mean_timesteps = t_sum / double(a.successes);
        a.mean_path_length = p_sum / double(a.successes);
    }
    return a;
}

}  // namespace multion::metrics
