#include "multion/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace multion::harness {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// configuration

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    return parse_text(read_text_file(path));
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
        std::size_t b = 0, e = s.size();
        while (b < e && is_ws(s[b])) ++b;
        while (e > b && is_ws(s[e - 1])) --e;
        return s.substr(b, e - b);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.kv_.count(key))
            throw ParseError("config line " + std::to_string(lineno) + ": duplicate key " + key);
        cfg.kv_[key] = value;
    }
    return cfg;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::int64_t KeyValueConfig::get_i64(const std::string& key, std::int64_t fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_i64(it->second);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(it->second);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParseError("config key " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const std::string& tok : get_str_list(key)) out.push_back(int(parse_i64(tok)));
    return out;
}

std::vector<std::string> KeyValueConfig::get_str_list(const std::string& key) const {
    used_.insert(key);
    auto it = kv_.find(key);
    std::vector<std::string> out;
    if (it == kv_.end()) return out;
    std::string tok;
    std::istringstream in(it->second);
    while (std::getline(in, tok, ',')) {
        // tolerate spaces around commas
        std::size_t b = tok.find_first_not_of(" \t");
        std::size_t e = tok.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(tok.substr(b, e - b + 1));
    }
    return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

int default_max_steps(int k) {
    if (k <= 2) return 600;
    if (k == 3) return 1000;
    return 800;
}

namespace {

env::SuccessMetric parse_metric(const std::string& name) {
    if (name == "geodesic") return env::SuccessMetric::Geodesic;
    if (name == "euclidean") return env::SuccessMetric::Euclidean;
    throw ConfigError("unknown success metric: " + name);
}

const char* metric_name(env::SuccessMetric m) {
    return m == env::SuccessMetric::Geodesic ? "geodesic" : "euclidean";
}

}  // namespace

learn::LearnedVariant variant_from_agent(const std::string& agent) {
    std::string v = agent;
    if (v.rfind("learned-", 0) == 0) v = v.substr(8);
    if (v == "sam") return learn::LearnedVariant::Sam;
    if (v == "psm") return learn::LearnedVariant::Psm;
    if (v == "msemexp") return learn::LearnedVariant::MSemExp;
    throw ConfigError("no learned variant for agent: " + agent);
}

RunConfig run_config_from(const KeyValueConfig& kv) {
    RunConfig c;
    c.scenes_dir = kv.get_string("scenes_dir", "");
    c.scene_count = int(kv.get_i64("scene_count", 5));
    c.gen.width = int(kv.get_i64("scene_width", 32));
    c.gen.height = int(kv.get_i64("scene_height", 32));
    c.gen.room_count = int(kv.get_i64("scene_rooms", 4));
    c.gen.clutter_density = kv.get_double("scene_clutter", 0.0);
    c.gen.min_instances = int(kv.get_i64("scene_min_instances", 1));
    c.gen.max_instances = int(kv.get_i64("scene_max_instances", 3));
    c.gen.cell_size = kv.get_double("scene_cell_size", 0.25);
    for (const std::string& tok : kv.get_str_list("scene_categories")) {
        int id = c.gen.catalog.id_of(scene::token_to_label(tok));
        if (id < 0) throw ConfigError("unknown scene category: " + tok);
        c.gen.categories_present.push_back(id);
    }

    c.episodes_per_scene = int(kv.get_i64("episodes_per_scene", 200));
    c.k_fixed = int(kv.get_i64("k", 0));
    c.k_min = int(kv.get_i64("k_min", 2));
    c.k_max = int(kv.get_i64("k_max", 3));
    c.max_steps = int(kv.get_i64("max_steps", 0));
    c.success_radius = kv.get_double("success_radius", 1.0);
    c.success_metric = parse_metric(kv.get_string("success_metric", "geodesic"));
    c.require_seen = kv.get_bool("require_seen", false);
    c.map_side = int(kv.get_i64("map_side", 0));

    c.agents = kv.get_str_list("agents");
    if (c.agents.empty()) c.agents.push_back(kv.get_string("agent", "sam-oracle"));
    c.checkpoint = kv.get_string("checkpoint", "");
    c.psm_order = kv.get_string("psm_order", "random");
    if (c.psm_order != "random" && c.psm_order != "dataset")
        throw ConfigError("psm_order must be 'random' or 'dataset'");
    c.paired_order = kv.get_string("paired_order", "realized");
    if (c.paired_order != "realized" && c.paired_order != "random")
        throw ConfigError("paired_order must be 'realized' or 'random'");

    c.dataset_path = kv.get_string("dataset", "");
    c.budgets = kv.get_int_list("budgets");
    c.write_trajectories = kv.get_bool("trajectories", true);

    c.reward.r_subgoal = kv.get_double("reward.r_subgoal", 2.0);
    c.reward.alpha_process = kv.get_double("reward.alpha_process", 0.1);
    c.reward.cnr = kv.get_double("reward.cnr", -0.01);
    c.reward.alpha_semexp = kv.get_double("reward.alpha_semexp", 1.0);
    c.reward.strict_decrease = kv.get_bool("reward.strict_decrease", true);

    c.train.gamma = kv.get_double("train.gamma", 0.99);
    c.train.tau = kv.get_double("train.tau", 0.01);
    c.train.actor_period = int(kv.get_i64("train.actor_period", 2));
    c.train.expl_noise = kv.get_double("train.expl_noise", 0.2);
    c.train.smooth_noise = kv.get_double("train.smooth_noise", 0.1);
    c.train.smooth_clip = kv.get_double("train.smooth_clip", 0.3);
    c.train.batch_size = int(kv.get_i64("train.batch_size", 64));
    c.train.lr = kv.get_double("train.lr", 1e-4);
    c.train.shift_pad = int(kv.get_i64("train.shift_pad", 4));
    c.train.goal_period = int(kv.get_i64("train.goal_period", agents::kGoalPeriod));
    c.train.episodes = int(kv.get_i64("train.episodes", 1000));
    c.train.replay_capacity = std::size_t(kv.get_i64("train.replay_capacity", 50000));
    c.train.warmup_transitions = std::size_t(kv.get_i64("train.warmup", 500));
    c.train.updates_per_episode = int(kv.get_i64("train.updates_per_episode", 6));
    c.train_max_steps = int(kv.get_i64("train.max_steps", 0));
    c.train_variant = kv.get_string("train.variant", "");

    c.net.map_channels = int(kv.get_i64("net.map_channels", 11));
    c.net.m_in = int(kv.get_i64("net.m_in", 24));
    c.net.enc_width = int(kv.get_i64("net.enc_width", scene::CategoryCatalog::kDefaultEncodingWidth));
    c.net.conv_channels = int(kv.get_i64("net.conv_channels", 32));
    c.net.embed_dim = int(kv.get_i64("net.embed_dim", 50));
    c.net.hidden = int(kv.get_i64("net.hidden", 256));

    c.seed = std::uint64_t(kv.get_i64("seed", 0));
    c.train.seed = c.seed;
    c.out_dir = kv.get_string("out", "out");

    if (c.episodes_per_scene < 1) throw ConfigError("episodes_per_scene must be positive");
    if (c.k_fixed < 0 || (c.k_fixed == 0 && (c.k_min < 1 || c.k_max < c.k_min)))
        throw ConfigError("bad k range");
    if (c.success_radius <= 0.0) throw ConfigError("success_radius must be positive");

    auto unknown = kv.unused_keys();
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    return c;
}

// ---------------------------------------------------------------------------
// datasets

namespace {

scene::Cell cell_of_pose(const env::EpisodeSpec& spec) {
    double cs = spec.scene->cell_size();
    return {int(std::floor(spec.start.x / cs)), int(std::floor(spec.start.y / cs))};
}

env::Pose center_pose(const scene::GridScene& s, const scene::Cell& c, int heading) {
    return {(c.x + 0.5) * s.cell_size(), (c.y + 0.5) * s.cell_size(), heading};
}

// true when the start would trivially credit a target, under either metric
bool start_too_close(geodesy::SceneFields& fields, const scene::GridScene& s,
                     const scene::Cell& start, const std::vector<int>& targets, double radius) {
    for (int cat : targets) {
        if (fields.dtg(cat, start) <= radius) return true;
        for (const scene::Cell& inst : s.instances_of(cat)) {
            double dx = (inst.x - start.x) * s.cell_size();
            double dy = (inst.y - start.y) * s.cell_size();
            if (std::hypot(dx, dy) <= radius) return true;
        }
    }
    return false;
}

bool all_reachable(geodesy::SceneFields& fields, const scene::Cell& start,
                   const std::vector<int>& targets) {
    for (int cat : targets)
        if (!std::isfinite(fields.dtg(cat, start))) return false;
    return true;
}

std::string episode_id(std::size_t scene_idx, int ep_idx) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%03zu-e%04d", scene_idx, ep_idx);
    return buf;
}

}  // namespace

Dataset make_dataset(const RunConfig& cfg) {
    if (!cfg.dataset_path.empty()) return load_dataset(cfg.dataset_path);

    Dataset ds;
    Rng master(cfg.seed);
    Rng rng_scene = master.fork(1);
    Rng rng_eps = master.fork(2);

    // assemble candidate scenes first; seed consumption is independent of
    // which scenes end up skipped
    std::vector<std::shared_ptr<const scene::GridScene>> candidates;
    std::vector<std::string> names;
    if (!cfg.scenes_dir.empty()) {
        std::vector<fs::path> paths;
        for (const auto& e : fs::directory_iterator(cfg.scenes_dir))
            if (e.is_regular_file() && e.path().extension() == ".scene") paths.push_back(e.path());
        std::sort(paths.begin(), paths.end());
        if (paths.empty()) throw IoError("no .scene files in " + cfg.scenes_dir);
        for (const auto& p : paths) {
            candidates.push_back(std::make_shared<scene::GridScene>(scene::load_scene(p.string())));
            names.push_back(p.stem().string());
        }
    } else {
        if (cfg.scene_count < 1) throw ConfigError("scene_count must be positive");
        for (int i = 0; i < cfg.scene_count; ++i) {
            scene::SceneGenSpec gs = cfg.gen;
            gs.seed = rng_scene.next_u64();
            candidates.push_back(std::make_shared<scene::GridScene>(scene::generate_scene(gs)));
            char buf[24];
            std::snprintf(buf, sizeof buf, "scene-%03d", i);
            names.push_back(buf);
        }
    }

    const int k_needed = cfg.k_fixed > 0 ? cfg.k_fixed : cfg.k_min;
    for (std::size_t si = 0; si < candidates.size(); ++si) {
        const auto& sc = candidates[si];
        std::vector<int> present = sc->categories_present();
        if (int(present.size()) < k_needed) {
            ds.warnings.push_back("scene " + names[si] + " has " +
                                  std::to_string(present.size()) +
                                  " categories, needs " + std::to_string(k_needed) +
                                  "; skipped");
            continue;
        }
        geodesy::SceneFields fields(sc);
        std::vector<scene::Cell> free = sc->free_cells();
        std::size_t scene_pos = ds.scenes.size();
        ds.scenes.push_back(sc);
        ds.scene_names.push_back(names[si]);

        for (int e = 0; e < cfg.episodes_per_scene; ++e) {
            Rng rng = rng_eps.fork(si * std::size_t(cfg.episodes_per_scene) + std::size_t(e) + 1);
            bool placed = false;
            for (int attempt = 0; attempt < 256 && !placed; ++attempt) {
                int k = cfg.k_fixed > 0
                            ? cfg.k_fixed
                            : int(rng.uniform_int(cfg.k_min,
                                                  std::min<std::int64_t>(cfg.k_max,
                                                                         std::int64_t(present.size()))));
                // partial shuffle for k distinct categories
                std::vector<int> pool = present;
                for (int j = 0; j < k; ++j) {
                    std::size_t pick = std::size_t(rng.uniform_int(j, std::int64_t(pool.size()) - 1));
                    std::swap(pool[std::size_t(j)], pool[pick]);
                }
                std::vector<int> targets(pool.begin(), pool.begin() + k);
                std::sort(targets.begin(), targets.end());

                scene::Cell start = free[std::size_t(rng.uniform_int(0, std::int64_t(free.size()) - 1))];
                int heading = int(rng.uniform_int(0, 11)) * 30;
                if (!all_reachable(fields, start, targets)) continue;
                if (start_too_close(fields, *sc, start, targets, cfg.success_radius)) continue;

                env::EpisodeSpec spec;
                spec.scene = sc;
                spec.start = center_pose(*sc, start, heading);
                spec.targets = targets;
                spec.max_steps = cfg.max_steps > 0 ? cfg.max_steps : default_max_steps(k);
                spec.success_radius_m = cfg.success_radius;
                spec.success_metric = cfg.success_metric;
                spec.require_seen = cfg.require_seen;
                spec.map_side = cfg.map_side;
                ds.items.push_back({episode_id(scene_pos, e), scene_pos, std::move(spec)});
                placed = true;
            }
            if (!placed)
                throw GenerationError("no valid start after 256 draws in scene " + names[si]);
        }
    }
    if (ds.items.empty()) throw GenerationError("dataset is empty: every scene was skipped");
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "scenes");
    std::string text = "multion-dataset v1\n";
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        std::string rel = "scenes/" + ds.scene_names[i] + ".scene";
        scene::save_scene(*ds.scenes[i], (fs::path(dir) / rel).string());
        text += "scene " + rel + "\n";
    }
    for (const auto& item : ds.items) {
        const env::EpisodeSpec& s = item.spec;
        scene::Cell c = cell_of_pose(s);
        text += "episode " + item.id + " " + std::to_string(item.scene_index) + " " +
                std::to_string(c.x) + " " + std::to_string(c.y) + " " +
                std::to_string(s.start.heading_deg) + " ";
        for (std::size_t i = 0; i < s.targets.size(); ++i)
            text += (i ? "," : "") + std::to_string(s.targets[i]);
        text += " ";
        if (s.required_order.empty()) {
            text += "-";
        } else {
            for (std::size_t i = 0; i < s.required_order.size(); ++i)
                text += (i ? "," : "") + std::to_string(s.required_order[i]);
        }
        text += " " + std::to_string(s.max_steps) + " " + format_double(s.success_radius_m) +
                " " + metric_name(s.success_metric) + " " + (s.require_seen ? "1" : "0") + " " +
                std::to_string(s.map_side) + "\n";
    }
    write_text_file((fs::path(dir) / "dataset.txt").string(), text);
}

namespace {

std::vector<int> parse_id_list(const std::string& text) {
    std::vector<int> out;
    std::string tok;
    std::istringstream in(text);
    while (std::getline(in, tok, ',')) out.push_back(int(parse_i64(tok)));
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
    Dataset ds;
    fs::path base = fs::path(path).parent_path();
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "multion-dataset v1")
        throw ParseError(path + ": not a dataset file");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> tok = split_ws(line);
        if (tok.empty()) continue;  // whitespace-only line
        if (tok[0] == "scene") {
            if (tok.size() != 2) throw ParseError(path + ": bad scene line " + std::to_string(lineno));
            fs::path sp = fs::path(tok[1]).is_absolute() ? fs::path(tok[1]) : base / tok[1];
            ds.scenes.push_back(std::make_shared<scene::GridScene>(scene::load_scene(sp.string())));
            ds.scene_names.push_back(sp.stem().string());
        } else if (tok[0] == "episode") {
            if (tok.size() != 13)
                throw ParseError(path + ": bad episode line " + std::to_string(lineno));
            DatasetItem item;
            item.id = tok[1];
            item.scene_index = std::size_t(parse_i64(tok[2]));
            if (item.scene_index >= ds.scenes.size())
                throw ParseError(path + ": episode references scene " + tok[2] +
                                 " before its declaration");
            const auto& sc = ds.scenes[item.scene_index];
            env::EpisodeSpec& s = item.spec;
            s.scene = sc;
            scene::Cell c{int(parse_i64(tok[3])), int(parse_i64(tok[4]))};
            s.start = center_pose(*sc, c, int(parse_i64(tok[5])));
            s.targets = parse_id_list(tok[6]);
            if (tok[7] != "-") s.required_order = parse_id_list(tok[7]);
            s.max_steps = int(parse_i64(tok[8]));
            s.success_radius_m = parse_double(tok[9]);
            s.success_metric = parse_metric(tok[10]);
            s.require_seen = tok[11] == "1";
            s.map_side = int(parse_i64(tok[12]));
            ds.items.push_back(std::move(item));
        } else {
            throw ParseError(path + ": unknown record '" + tok[0] + "' at line " +
                             std::to_string(lineno));
        }
    }
    if (ds.items.empty()) throw ParseError(path + ": no episodes");
    return ds;
}

// ---------------------------------------------------------------------------
// episode execution

EpisodeOutcome run_episode(const DatasetItem& item, agents::Controller& ctl, Rng& rng,
                           const reward::RewardConfig& rcfg,
                           std::shared_ptr<geodesy::SceneFields> fields, bool record_trajectory) {
    env::Episode ep(item.spec, std::move(fields));
    EpisodeOutcome out;
    out.id = item.id;
    out.k = int(item.spec.targets.size());

    while (!ep.state().terminated()) {
        env::Action a = ctl.act(ep, rng);
        std::vector<int> cats = ep.state().remaining;
        std::vector<double> before(cats.size()), after(cats.size());
        for (std::size_t i = 0; i < cats.size(); ++i) before[i] = ep.dtg(cats[i]);
        env::StepEvents ev = ep.step(a);
        for (std::size_t i = 0; i < cats.size(); ++i) after[i] = ep.dtg(cats[i]);
        double r = reward::step_reward(rcfg, before, after, int(ev.categories_found.size()));
        out.total_reward += r;
        if (record_trajectory) {
            std::vector<std::string> labels;
            for (int id : ev.categories_found)
                labels.push_back(item.spec.scene->catalog().name(id));
            out.trajectory += env::trajectory_line(ep.state().t, a, ep.state().pose, ev.collided,
                                                   labels, r);
        }
    }

    double g = geodesy::optimal_multigoal_length(ep.fields(), cell_of_pose(item.spec),
                                                 item.spec.targets, item.spec.success_radius_m);
    out.m = metrics::score_episode(ep.state(), item.spec.targets.size(), g);
    out.found_log = ep.state().found_log;
    for (const auto& f : out.found_log) out.realized_order.push_back(f.category_id);
    return out;
}

bool is_psm_agent(const std::string& name) { return name.find("psm") != std::string::npos; }
bool is_learned_agent(const std::string& name) { return name.rfind("learned-", 0) == 0; }

env::EpisodeSpec prepare_spec(const env::EpisodeSpec& base, const std::string& agent,
                              const std::string& psm_order, Rng& order_rng) {
    env::EpisodeSpec s = base;
    if (is_psm_agent(agent)) {
        if (s.required_order.empty() || psm_order == "random") {
            std::vector<int> order = s.targets;
            for (std::size_t j = 0; j + 1 < order.size(); ++j) {
                std::size_t pick =
                    std::size_t(order_rng.uniform_int(std::int64_t(j), std::int64_t(order.size()) - 1));
                std::swap(order[j], order[pick]);
            }
            s.required_order = std::move(order);
        }
    } else {
        s.required_order.clear();
    }
    return s;
}

std::unique_ptr<agents::Controller> make_controller(
    const std::string& name, const env::EpisodeSpec& spec,
    std::shared_ptr<learn::AgentNets<float>> nets) {
    if (name == "random") return std::make_unique<agents::RandomController>();
    if (name == "sam-oracle") return std::make_unique<agents::OracleController>();
    if (name == "psm-oracle") {
        if (spec.required_order.empty())
            throw ValidationError("sequenced oracle needs a category order");
        return std::make_unique<agents::OracleController>(spec.required_order);
    }
    if (is_learned_agent(name)) {
        if (!nets) throw ConfigError("agent " + name + " needs checkpoint=<path>");
        return std::make_unique<learn::LearnedController>(nets, variant_from_agent(name));
    }
    throw ConfigError("unknown agent: " + name);
}

// ---------------------------------------------------------------------------
// protocols

namespace {

using FieldsCache =
    std::unordered_map<const scene::GridScene*, std::shared_ptr<geodesy::SceneFields>>;

std::shared_ptr<geodesy::SceneFields> fields_for(FieldsCache& cache,
                                                 const std::shared_ptr<const scene::GridScene>& sc) {
    auto& f = cache[sc.get()];
    if (!f) f = std::make_shared<geodesy::SceneFields>(sc);
    return f;
}

std::shared_ptr<learn::AgentNets<float>> nets_for(const RunConfig& cfg, const std::string& agent) {
    if (!is_learned_agent(agent)) return nullptr;
    if (cfg.checkpoint.empty()) throw ConfigError("agent " + agent + " needs checkpoint=<path>");
    std::map<std::string, std::string> meta;
    auto nets = learn::load_checkpoint(cfg.checkpoint, meta);
    auto it = meta.find("variant");
    if (it != meta.end() && it->second != learn::variant_name(variant_from_agent(agent)))
        throw ConfigError("checkpoint was trained as '" + it->second + "', agent is " + agent);
    return nets;
}

}  // namespace

ComparisonReport run_comparison(const RunConfig& cfg, const Dataset& ds) {
    if (cfg.agents.empty()) throw ConfigError("no agents configured");
    ComparisonReport report;
    Rng master(cfg.seed);
    FieldsCache cache;

    for (std::size_t ai = 0; ai < cfg.agents.size(); ++ai) {
        const std::string& agent = cfg.agents[ai];
        auto nets = nets_for(cfg, agent);
        Rng agent_rng = master.fork(ai + 1);
        AgentRun run;
        run.agent = agent;
        for (std::size_t ei = 0; ei < ds.items.size(); ++ei) {
            Rng ep_rng = agent_rng.fork(ei + 1);
            DatasetItem item = ds.items[ei];
            item.spec = prepare_spec(item.spec, agent, cfg.psm_order, ep_rng);
            auto ctl = make_controller(agent, item.spec, nets);
            run.episodes.push_back(run_episode(item, *ctl, ep_rng, cfg.reward,
                                               fields_for(cache, item.spec.scene),
                                               cfg.write_trajectories));
        }

        std::map<int, std::vector<metrics::EpisodeMetrics>> by_k;
        std::vector<metrics::EpisodeMetrics> all;
        for (const auto& o : run.episodes) {
            by_k[o.k].push_back(o.m);
            all.push_back(o.m);
        }
        for (const auto& [k, ms] : by_k)
            report.rows.push_back({agent, k, metrics::aggregate(ms)});
        report.rows.push_back({agent, 0, metrics::aggregate(all)});
        report.runs.push_back(std::move(run));
    }
    return report;
}

PairedReport run_paired(const RunConfig& cfg, const Dataset& ds) {
    std::vector<std::string> agents = cfg.agents;
    if (agents.size() == 1 && agents[0] == "sam-oracle") agents.push_back("psm-oracle");
    if (agents.size() != 2)
        throw ConfigError("paired runs take agents=<free-order agent>,<sequenced agent>");
    if (is_psm_agent(agents[0]) || !is_psm_agent(agents[1]))
        throw ConfigError("paired runs need a free-order agent first, a sequenced agent second");

    PairedReport report;
    report.sam.agent = agents[0];
    report.psm.agent = agents[1];
    auto sam_nets = nets_for(cfg, agents[0]);
    auto psm_nets = nets_for(cfg, agents[1]);

    Rng master(cfg.seed);
    Rng sam_master = master.fork(1);
    Rng psm_master = master.fork(2);
    FieldsCache cache;

    struct Acc {
        std::size_t pairs = 0, excluded = 0, psm_successes = 0;
        double sam_t = 0, sam_p = 0, psm_t = 0, psm_p = 0;
    };
    std::vector<Acc> per_scene(ds.scenes.size());

    for (std::size_t ei = 0; ei < ds.items.size(); ++ei) {
        Acc& acc = per_scene[ds.items[ei].scene_index];
        Rng sam_rng = sam_master.fork(ei + 1);
        DatasetItem sam_item = ds.items[ei];
        sam_item.spec = prepare_spec(sam_item.spec, agents[0], cfg.psm_order, sam_rng);
        auto sam_ctl = make_controller(agents[0], sam_item.spec, sam_nets);
        EpisodeOutcome sam_out =
            run_episode(sam_item, *sam_ctl, sam_rng, cfg.reward,
                        fields_for(cache, sam_item.spec.scene), cfg.write_trajectories);

        if (!sam_out.m.success) {
            ++acc.excluded;
            report.excluded_ids.push_back(sam_out.id);
            report.sam.episodes.push_back(std::move(sam_out));
            continue;
        }

        Rng psm_rng = psm_master.fork(ei + 1);
        DatasetItem psm_item = ds.items[ei];
        if (cfg.paired_order == "realized") {
            psm_item.spec.required_order = sam_out.realized_order;
        } else {
            psm_item.spec = prepare_spec(psm_item.spec, agents[1], "random", psm_rng);
        }
        auto psm_ctl = make_controller(agents[1], psm_item.spec, psm_nets);
        EpisodeOutcome psm_out =
            run_episode(psm_item, *psm_ctl, psm_rng, cfg.reward,
                        fields_for(cache, psm_item.spec.scene), cfg.write_trajectories);

        ++acc.pairs;
        acc.sam_t += double(sam_out.m.timesteps);
        acc.sam_p += sam_out.m.path_length_m;
        if (psm_out.m.success) {
            ++acc.psm_successes;
            acc.psm_t += double(psm_out.m.timesteps);
            acc.psm_p += psm_out.m.path_length_m;
        }
        report.sam.episodes.push_back(std::move(sam_out));
        report.psm.episodes.push_back(std::move(psm_out));
    }

    Acc total;
    for (std::size_t si = 0; si <= ds.scenes.size(); ++si) {
        bool overall = si == ds.scenes.size();
        Acc& a = overall ? total : per_scene[si];
        if (!overall) {
            total.pairs += a.pairs;
            total.excluded += a.excluded;
            total.psm_successes += a.psm_successes;
            total.sam_t += a.sam_t;
            total.sam_p += a.sam_p;
            total.psm_t += a.psm_t;
            total.psm_p += a.psm_p;
        }
        PairedRow row;
        row.scene = overall ? "overall" : ds.scene_names[si];
        row.pairs = a.pairs;
        row.excluded = a.excluded;
        row.psm_successes = a.psm_successes;
        if (a.pairs > 0) {
            row.sam_mean_timesteps = a.sam_t / double(a.pairs);
            row.sam_mean_path = a.sam_p / double(a.pairs);
        }
        if (a.psm_successes > 0) {
            row.psm_mean_timesteps = a.psm_t / double(a.psm_successes);
            row.psm_mean_path = a.psm_p / double(a.psm_successes);
        }
        report.rows.push_back(row);
    }
    return report;
}

AblationReport run_ablation(const RunConfig& cfg, const Dataset& ds) {
    if (cfg.budgets.empty()) throw ConfigError("ablation needs budgets=<list>");
    std::vector<int> budgets = cfg.budgets;
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
    if (budgets.front() < 1) throw ConfigError("budgets must be positive");
    for (const auto& item : ds.items)
        if (budgets.back() > item.spec.max_steps)
            throw ValidationError("budget " + std::to_string(budgets.back()) +
                                  " exceeds the recorded budget of " + item.id +
                                  "; a re-run would be required");

    AblationReport report;
    report.agent = cfg.agents.at(0);
    auto nets = nets_for(cfg, report.agent);
    Rng master(cfg.seed);
    Rng agent_rng = master.fork(1);
    FieldsCache cache;
    report.run.agent = report.agent;
    for (std::size_t ei = 0; ei < ds.items.size(); ++ei) {
        Rng ep_rng = agent_rng.fork(ei + 1);
        DatasetItem item = ds.items[ei];
        item.spec = prepare_spec(item.spec, report.agent, cfg.psm_order, ep_rng);
        auto ctl = make_controller(report.agent, item.spec, nets);
        report.run.episodes.push_back(run_episode(item, *ctl, ep_rng, cfg.reward,
                                                  fields_for(cache, item.spec.scene),
                                                  cfg.write_trajectories));
    }

    for (int b : budgets) {
        AblationRow row;
        row.budget = b;
        row.episodes = report.run.episodes.size();
        double sub_sum = 0.0;
        std::size_t successes = 0;
        for (const auto& o : report.run.episodes) {
            std::size_t found = 0;
            for (const auto& f : o.found_log)
                if (f.t <= b) ++found;
            if (int(found) == o.k) ++successes;
            sub_sum += double(found) / double(o.k);
        }
        row.success_rate = double(successes) / double(row.episodes);
        row.sub_success_rate = sub_sum / double(row.episodes);
        report.rows.push_back(row);
    }
    return report;
}

TrainOutput train_agent(const RunConfig& cfg, const Dataset& ds) {
    std::string vname = cfg.train_variant.empty() ? cfg.agents.at(0) : cfg.train_variant;
    learn::LearnedVariant variant = variant_from_agent(vname);
    Rng order_master = Rng(cfg.seed).fork(7);
    std::vector<env::EpisodeSpec> specs;
    specs.reserve(ds.items.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        env::EpisodeSpec s = ds.items[i].spec;
        if (cfg.train_max_steps > 0) s.max_steps = cfg.train_max_steps;
        if (variant == learn::LearnedVariant::Psm) {
            Rng r = order_master.fork(i + 1);
            s = prepare_spec(s, "learned-psm", cfg.psm_order, r);
        } else {
            s.required_order.clear();
        }
        specs.push_back(std::move(s));
    }
    return {learn::train(specs, cfg.train, cfg.net, variant, cfg.reward), variant};
}

// ---------------------------------------------------------------------------
// report emission

namespace {

std::string k_label(int k) { return k == 0 ? "all" : std::to_string(k); }

ordered_json episode_json(const std::string& agent, const EpisodeOutcome& o) {
    ordered_json e;
    e["agent"] = agent;
    e["id"] = o.id;
    e["k"] = o.k;
    e["success"] = o.m.success;
    e["sub_success"] = o.m.sub_success;
    e["timesteps"] = o.m.timesteps;
    e["path_length"] = o.m.path_length_m;
    e["g"] = o.m.g;
    e["gspl"] = o.m.gspl;
    e["total_reward"] = o.total_reward;
    ordered_json found = ordered_json::array();
    for (const auto& f : o.found_log)
        found.push_back({{"category", f.category_id}, {"t", f.t}});
    e["found"] = found;
    return e;
}

}  // namespace

std::string comparison_csv(const ComparisonReport& r) {
    std::string out =
        "agent,k,episodes,successes,success_rate,sub_success_rate,gspl,"
        "mean_timesteps_success,mean_path_length_success\n";
    for (const auto& row : r.rows) {
        const auto& a = row.agg;
        out += row.agent + "," + k_label(row.k) + "," + std::to_string(a.episodes) + "," +
               std::to_string(a.successes) + "," + format_double(a.success_rate) + "," +
               format_double(a.sub_success_rate) + "," + format_double(a.gspl) + ",";
        if (a.has_success_means)
            out += format_double(a.mean_timesteps) + "," + format_double(a.mean_path_length);
        else
            out += ",";
        out += "\n";
    }
    return out;
}

std::string comparison_json(const RunConfig& cfg, const ComparisonReport& r) {
    ordered_json j;
    j["protocol"] = "comparison";
    j["seed"] = cfg.seed;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json o;
        o["agent"] = row.agent;
        o["k"] = k_label(row.k);
        o["episodes"] = row.agg.episodes;
        o["successes"] = row.agg.successes;
        o["success_rate"] = row.agg.success_rate;
        o["sub_success_rate"] = row.agg.sub_success_rate;
        o["gspl"] = row.agg.gspl;
        if (row.agg.has_success_means) {
            o["mean_timesteps_success"] = row.agg.mean_timesteps;
            o["mean_path_length_success"] = row.agg.mean_path_length;
        } else {
            o["mean_timesteps_success"] = nullptr;
            o["mean_path_length_success"] = nullptr;
        }
        rows.push_back(o);
    }
    j["rows"] = rows;
    ordered_json eps = ordered_json::array();
    for (const auto& run : r.runs)
        for (const auto& o : run.episodes) eps.push_back(episode_json(run.agent, o));
    j["episodes"] = eps;
    return j.dump(2) + "\n";
}

std::string paired_csv(const PairedReport& r) {
    std::string out =
        "scene,pairs,excluded,sam_mean_timesteps,sam_mean_path_length,"
        "psm_successes,psm_mean_timesteps,psm_mean_path_length\n";
    for (const auto& row : r.rows) {
        out += row.scene + "," + std::to_string(row.pairs) + "," + std::to_string(row.excluded) +
               ",";
        if (row.pairs > 0)
            out += format_double(row.sam_mean_timesteps) + "," + format_double(row.sam_mean_path);
        else
            out += ",";
        out += "," + std::to_string(row.psm_successes) + ",";
        if (row.psm_successes > 0)
            out += format_double(row.psm_mean_timesteps) + "," + format_double(row.psm_mean_path);
        else
            out += ",";
        out += "\n";
    }
    return out;
}

std::string paired_json(const RunConfig& cfg, const PairedReport& r) {
    ordered_json j;
    j["protocol"] = "paired";
    j["seed"] = cfg.seed;
    j["free_agent"] = r.sam.agent;
    j["sequenced_agent"] = r.psm.agent;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json o;
        o["scene"] = row.scene;
        o["pairs"] = row.pairs;
        o["excluded"] = row.excluded;
        if (row.pairs > 0) {
            o["sam_mean_timesteps"] = row.sam_mean_timesteps;
            o["sam_mean_path_length"] = row.sam_mean_path;
        } else {
            o["sam_mean_timesteps"] = nullptr;
            o["sam_mean_path_length"] = nullptr;
        }
        o["psm_successes"] = row.psm_successes;
        if (row.psm_successes > 0) {
            o["psm_mean_timesteps"] = row.psm_mean_timesteps;
            o["psm_mean_path_length"] = row.psm_mean_path;
        } else {
            o["psm_mean_timesteps"] = nullptr;
            o["psm_mean_path_length"] = nullptr;
        }
        rows.push_back(o);
    }
    j["rows"] = rows;
    j["excluded_ids"] = r.excluded_ids;
    ordered_json eps = ordered_json::array();
    for (const auto& o : r.sam.episodes) eps.push_back(episode_json(r.sam.agent, o));
    for (const auto& o : r.psm.episodes) eps.push_back(episode_json(r.psm.agent, o));
    j["episodes"] = eps;
    return j.dump(2) + "\n";
}

std::string ablation_csv(const AblationReport& r) {
    std::string out = "budget,episodes,success_rate,sub_success_rate\n";
    for (const auto& row : r.rows)
        out += std::to_string(row.budget) + "," + std::to_string(row.episodes) + "," +
               format_double(row.success_rate) + "," + format_double(row.sub_success_rate) + "\n";
    return out;
}

std::string ablation_json(const RunConfig& cfg, const AblationReport& r) {
    ordered_json j;
    j["protocol"] = "ablation";
    j["seed"] = cfg.seed;
    j["agent"] = r.agent;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json o;
        o["budget"] = row.budget;
        o["episodes"] = row.episodes;
        o["success_rate"] = row.success_rate;
        o["sub_success_rate"] = row.sub_success_rate;
        rows.push_back(o);
    }
    j["rows"] = rows;
    ordered_json eps = ordered_json::array();
    for (const auto& o : r.run.episodes) eps.push_back(episode_json(r.agent, o));
    j["episodes"] = eps;
    return j.dump(2) + "\n";
}

void write_reports(const std::string& out_dir, const std::string& csv, const std::string& json,
                   const std::vector<AgentRun>& runs, bool write_trajectories) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "report.csv").string(), csv);
    write_text_file((fs::path(out_dir) / "report.json").string(), json);
    if (!write_trajectories) return;
    for (const auto& run : runs) {
        fs::path dir = fs::path(out_dir) / "trajectories" / run.agent;
        fs::create_directories(dir);
        for (const auto& o : run.episodes)
            write_text_file((dir / (o.id + ".log")).string(), o.trajectory);
    }
}

}  // namespace multion::harness
