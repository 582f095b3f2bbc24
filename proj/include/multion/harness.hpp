#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "multion/agents.hpp"
#include "multion/env.hpp"
#include "multion/learn.hpp"
#include "multion/metrics.hpp"
#include "multion/reward.hpp"

namespace multion::harness {

// Flat `key = value` configuration text: one pair per line, '#' comments,
// blank lines ignored. Lookups are tracked so typo'd keys can be rejected.
class KeyValueConfig {
  public:
    KeyValueConfig() = default;
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_text(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_i64(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key) const;     // empty when absent
    std::vector<std::string> get_str_list(const std::string& key) const;

    // keys never looked up; nonempty means the file holds unknown keys
    std::vector<std::string> unused_keys() const;

  private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
};

int default_max_steps(int k);  // 600 for k <= 2, 1000 for k == 3, 800 beyond

struct RunConfig {
    // scene source: a directory of .scene files, or the generator
    std::string scenes_dir;
    int scene_count = 5;
    scene::SceneGenSpec gen;

    // episode sampling
    int episodes_per_scene = 200;
    int k_fixed = 0;  // 0 = draw from [k_min, k_max]
    int k_min = 2, k_max = 3;
    int max_steps = 0;  // 0 = default per k
    double success_radius = 1.0;
    env::SuccessMetric success_metric = env::SuccessMetric::Geodesic;
    bool require_seen = false;
    int map_side = 0;

    // agents
    std::vector<std::string> agents;  // eval/comparison list
    std::string checkpoint;
    std::string psm_order = "random";     // per-episode order for psm agents
    std::string paired_order = "realized";  // or "random"

    std::string dataset_path;  // load instead of sampling
    std::vector<int> budgets;  // ablation grid
    bool write_trajectories = true;

    reward::RewardConfig reward;
    learn::TrainConfig train;
    learn::NetConfig net;
    int train_max_steps = 0;  // episode budget while training; 0 = eval budget
    std::string train_variant;  // defaults to the variant of agents[0]

    std::uint64_t seed = 0;
    std::string out_dir = "out";
};

// Builds the run configuration, consuming keys; unknown keys raise ConfigError.
RunConfig run_config_from(const KeyValueConfig& kv);

// ---------------------------------------------------------------------------
// datasets

struct DatasetItem {
    std::string id;  // stable, scene-major: s<scene>-e<episode>
    std::size_t scene_index = 0;
    env::EpisodeSpec spec;
};

struct Dataset {
    std::vector<std::shared_ptr<const scene::GridScene>> scenes;
    std::vector<std::string> scene_names;  // without directory or extension
    std::vector<DatasetItem> items;
    std::vector<std::string> warnings;  // skipped scenes etc.
};

// Samples a dataset per cfg (or reloads cfg.dataset_path when set).
Dataset make_dataset(const RunConfig& cfg);

// Writes scenes/ and dataset.txt under dir; load resolves scene paths
// relative to the dataset file, reproducing the specs exactly.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// episode execution

struct EpisodeOutcome {
    std::string id;
    int k = 0;
    metrics::EpisodeMetrics m;
    std::vector<env::FoundRecord> found_log;
    std::vector<int> realized_order;  // categories in credit order
    double total_reward = 0.0;
    std::string trajectory;  // log text, empty unless recording
};

EpisodeOutcome run_episode(const DatasetItem& item, agents::Controller& ctl, Rng& rng,
                           const reward::RewardConfig& rcfg,
                           std::shared_ptr<geodesy::SceneFields> fields, bool record_trajectory);

bool is_psm_agent(const std::string& name);
bool is_learned_agent(const std::string& name);
// accepts "sam" | "psm" | "msemexp", with or without a "learned-" prefix
learn::LearnedVariant variant_from_agent(const std::string& agent);

// The episode spec an agent actually runs: psm-family agents get a category
// order (dataset's own, or a seeded random permutation), others run free.
env::EpisodeSpec prepare_spec(const env::EpisodeSpec& base, const std::string& agent,
                              const std::string& psm_order, Rng& order_rng);

std::unique_ptr<agents::Controller> make_controller(
    const std::string& name, const env::EpisodeSpec& spec,
    std::shared_ptr<learn::AgentNets<float>> nets);

// ---------------------------------------------------------------------------
// experiment protocols

struct AgentRun {
    std::string agent;
    std::vector<EpisodeOutcome> episodes;
};

struct ComparisonRow {
    std::string agent;
    int k = 0;  // 0 = all episodes
    metrics::Aggregate agg;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::vector<AgentRun> runs;
};

// Runs every configured agent over the dataset; rows per (agent, k) plus an
// all-k row per agent.
ComparisonReport run_comparison(const RunConfig& cfg, const Dataset& ds);

struct PairedRow {
    std::string scene;  // scene name or "overall"
    std::size_t pairs = 0;          // episodes where the first agent succeeded
    std::size_t excluded = 0;       // first-agent failures, dropped from pairing
    double sam_mean_timesteps = 0.0, sam_mean_path = 0.0;
    std::size_t psm_successes = 0;  // within the paired episodes
    double psm_mean_timesteps = 0.0, psm_mean_path = 0.0;
};

struct PairedReport {
    std::vector<PairedRow> rows;
    AgentRun sam, psm;  // psm holds paired episodes only
    std::vector<std::string> excluded_ids;
};

// Table-style pairing: run the free-order agent; on success, re-run the
// sequenced agent on the identical episode with the realized order (or a
// random one, per cfg.paired_order).
PairedReport run_paired(const RunConfig& cfg, const Dataset& ds);

struct AblationRow {
    int budget = 0;
    std::size_t episodes = 0;
    double success_rate = 0.0;
    double sub_success_rate = 0.0;
};

struct AblationReport {
    std::string agent;
    std::vector<AblationRow> rows;
    AgentRun run;  // full-budget recordings the rows are cut from
};

struct TrainOutput {
    learn::TrainResult result;
    learn::LearnedVariant variant = learn::LearnedVariant::Sam;
};

// Trains the configured variant on the dataset: the training budget override
// is applied and psm episodes get seeded category orders.
TrainOutput train_agent(const RunConfig& cfg, const Dataset& ds);

// Runs once at the recorded budget and re-scores truncations; budgets above
// the recorded budget are an error (a re-run would be required).
AblationReport run_ablation(const RunConfig& cfg, const Dataset& ds);

// ---------------------------------------------------------------------------
// report emission (deterministic bytes)

std::string comparison_csv(const ComparisonReport& r);
std::string comparison_json(const RunConfig& cfg, const ComparisonReport& r);
std::string paired_csv(const PairedReport& r);
std::string paired_json(const RunConfig& cfg, const PairedReport& r);
std::string ablation_csv(const AblationReport& r);
std::string ablation_json(const RunConfig& cfg, const AblationReport& r);

// writes report.csv, report.json, and trajectories/<agent>/<id>.log
void write_reports(const std::string& out_dir, const std::string& csv, const std::string& json,
                   const std::vector<AgentRun>& runs, bool write_trajectories);

}  // namespace multion::harness
