#pragma once

#include <vector>

namespace multion::reward {

struct RewardConfig {
    double r_subgoal = 2.0;      // per sub-goal credited this step
    double alpha_process = 0.1;  // weight on the progress shaping term
    double cnr = -0.01;          // constant negative reward, every step
    double alpha_semexp = 1.0;   // weight of the distance-sum baseline reward
    // n counts categories whose distance strictly decreased; when false, ties
    // count too
    bool strict_decrease = true;
};

// One step of the shaped reward. `dtg_before` / `dtg_after` hold the geodesic
// distance-to-goal of each category still unfound at the start of the step,
// positionally aligned. Categories with a non-finite distance on either side
// contribute nothing to the progress term but still count toward N.
//
//   d_t       = sum_i (before_i - after_i)
//   n         = #{i : before_i - after_i > 0}        (>= 0 when strict off)
//   R_process = n/N + d_t   if n >= 1, else d_t
//   reward    = r_subgoal * found + alpha_process * R_process + cnr
double step_reward(const RewardConfig& cfg, const std::vector<double>& dtg_before,
                   const std::vector<double>& dtg_after, int subgoals_found);

// Distance-sum baseline: alpha_semexp * sum_i (before_i - after_i), no
// sub-goal bonus, no time penalty.
double semexp_reward(const RewardConfig& cfg, const std::vector<double>& dtg_before,
                     const std::vector<double>& dtg_after);

// Sum of the step rewards accumulated across one macro-action. Summed in
// ascending value order so the total is invariant to step permutation.
double macro_reward(const std::vector<double>& step_rewards);

}  // namespace multion::reward
