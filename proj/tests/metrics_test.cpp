#include "doctest.h"

#include <limits>
#include <vector>

#include "multion/env.hpp"
#include "multion/metrics.hpp"
#include "multion/util.hpp"

using namespace multion;
using env::EpisodeState;
using env::TerminationCause;
using metrics::EpisodeMetrics;

namespace {

EpisodeState final_state(bool success, int found, int t, double path) {
    EpisodeState s;
    s.cause = success ? TerminationCause::AllFound : TerminationCause::MaxSteps;
    for (int i = 0; i < found; ++i) s.found_log.push_back({i, i + 1, {0, 0}});
    s.t = t;
    s.path_length_m = path;
    return s;
}

}  // namespace

TEST_CASE("episode score: success-weighted path ratio") {
    // twice the optimal path halves the score
    auto m = metrics::score_episode(final_state(true, 2, 40, 9.0), 2, 4.5);
    CHECK(m.success == 1);
    CHECK(m.sub_success == 1.0);
    CHECK(m.timesteps == 40);
    CHECK(m.path_length_m == 9.0);
    CHECK(m.gspl == doctest::Approx(0.5).epsilon(1e-12));

    // matching the optimum exactly scores 1
    auto perfect = metrics::score_episode(final_state(true, 2, 18, 4.5), 2, 4.5);
    CHECK(perfect.gspl == doctest::Approx(1.0).epsilon(1e-12));

    // a path shorter than g cannot push the score past 1: max(g, p) = g
    auto shorter = metrics::score_episode(final_state(true, 2, 10, 2.0), 2, 4.5);
    CHECK(shorter.gspl == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("episode score: failure zeroes the ratio, not the rest") {
    auto m = metrics::score_episode(final_state(false, 1, 600, 12.0), 3, 4.5);
    CHECK(m.success == 0);
    CHECK(m.gspl == 0.0);
    CHECK(m.sub_success == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(m.timesteps == 600);
    CHECK(m.path_length_m == 12.0);
    CHECK(m.g == 4.5);
}

TEST_CASE("episode score: degenerate start inside every goal radius") {
    // g = 0 and success: the agent was born done, score 1
    auto done = metrics::score_episode(final_state(true, 2, 0, 0.0), 2, 0.0);
    CHECK(done.gspl == 1.0);
    // g = 0 without success still scores 0
    auto not_done = metrics::score_episode(final_state(false, 1, 50, 3.0), 2, 0.0);
    CHECK(not_done.gspl == 0.0);
}

TEST_CASE("episode score: input validation") {
    CHECK_THROWS_AS(metrics::score_episode(final_state(true, 1, 10, 1.0), 0, 1.0),
                    ValidationError);
    CHECK_THROWS_AS(metrics::score_episode(final_state(true, 1, 10, -1.0), 1, 1.0),
                    ValidationError);
    CHECK_THROWS_AS(
        metrics::score_episode(final_state(true, 1, 10, 1.0), 1,
                               std::numeric_limits<double>::infinity()),
        ValidationError);
    CHECK_THROWS_AS(metrics::score_episode(final_state(true, 1, 10, 1.0), 1, -0.5),
                    ValidationError);
    // more creditings than targets is a bookkeeping bug upstream
    CHECK_THROWS_AS(metrics::score_episode(final_state(true, 3, 10, 1.0), 2, 1.0),
                    ValidationError);
}

TEST_CASE("aggregate: time and distance average successes only") {
    std::vector<EpisodeMetrics> ms = {
        metrics::score_episode(final_state(true, 2, 40, 9.0), 2, 4.5),    // gspl 0.5
        metrics::score_episode(final_state(false, 1, 600, 12.0), 2, 4.5), // gspl 0
        metrics::score_episode(final_state(true, 2, 20, 4.5), 2, 4.5),    // gspl 1
    };
    auto a = metrics::aggregate(ms);
    CHECK(a.episodes == 3);
    CHECK(a.successes == 2);
    CHECK(a.success_rate == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(a.sub_success_rate == doctest::Approx((1.0 + 0.5 + 1.0) / 3.0).epsilon(1e-12));
    // failures contribute zero to the mean ratio but stay in the denominator
    CHECK(a.gspl == doctest::Approx(1.5 / 3.0).epsilon(1e-12));
    REQUIRE(a.has_success_means);
    CHECK(a.mean_timesteps == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(a.mean_path_length == doctest::Approx(6.75).epsilon(1e-12));
}

TEST_CASE("aggregate: all failures leave no success means") {
    std::vector<EpisodeMetrics> ms = {
        metrics::score_episode(final_state(false, 0, 600, 30.0), 2, 4.5),
        metrics::score_episode(final_state(false, 1, 600, 25.0), 2, 4.5),
    };
    auto a = metrics::aggregate(ms);
    CHECK(a.successes == 0);
    CHECK(a.success_rate == 0.0);
    CHECK(a.gspl == 0.0);
    CHECK_FALSE(a.has_success_means);
    CHECK(a.mean_timesteps == 0.0);
    CHECK(a.mean_path_length == 0.0);

    CHECK_THROWS_AS(metrics::aggregate({}), ValidationError);
}
