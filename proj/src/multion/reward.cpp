#include "multion/reward.hpp"

#include <algorithm>
#include <cmath>

#include "multion/util.hpp"

namespace multion::reward {

namespace {

void check_aligned(const std::vector<double>& before, const std::vector<double>& after) {
    if (before.size() != after.size())
        throw ValidationError("distance snapshots differ in category count");
}

}  // namespace

double step_reward(const RewardConfig& cfg, const std::vector<double>& dtg_before,
                   const std::vector<double>& dtg_after, int subgoals_found) {
    check_aligned(dtg_before, dtg_after);
    if (subgoals_found < 0) throw ValidationError("negative sub-goal count");

    const std::size_t n_cats = dtg_before.size();
    double d_t = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < n_cats; ++i) {
        double b = dtg_before[i];
        double a = dtg_after[i];
        if (!std::isfinite(b) || !std::isfinite(a)) continue;
        double delta = b - a;
        d_t += delta;
        if (cfg.strict_decrease ? delta > 0.0 : delta >= 0.0) ++n;
    }
    double r_process = d_t;
    if (n >= 1 && n_cats > 0) r_process = double(n) / double(n_cats) + d_t;
    return cfg.r_subgoal * double(subgoals_found) + cfg.alpha_process * r_process + cfg.cnr;
}

double semexp_reward(const RewardConfig& cfg, const std::vector<double>& dtg_before,
                     const std::vector<double>& dtg_after) {
    check_aligned(dtg_before, dtg_after);
    double sum = 0.0;
    for (std::size_t i = 0; i < dtg_before.size(); ++i) {
        double b = dtg_before[i];
        double a = dtg_after[i];
        if (!std::isfinite(b) || !std::isfinite(a)) continue;
        sum += b - a;
    }
    return cfg.alpha_semexp * sum;
}

double macro_reward(const std::vector<double>& step_rewards) {
    std::vector<double> sorted = step_rewards;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double r : sorted) total += r;
    return total;
}

}  // namespace multion::reward
