#include <cstdio>
#include <filesystem>
#include <iostream>
#include <unordered_map>

#include "CLI11.hpp"
#include "multion/harness.hpp"

namespace fs = std::filesystem;
using namespace multion;

namespace {

struct CommonOpts {
    std::string config;
    std::string seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "key = value configuration file");
    cmd->add_option("--seed", o.seed, "master seed, overrides the config");
    cmd->add_option("--out", o.out, "output directory, overrides the config");
}

harness::RunConfig build_config(const CommonOpts& o) {
    harness::KeyValueConfig kv;
    if (!o.config.empty()) kv = harness::KeyValueConfig::parse_file(o.config);
    if (!o.seed.empty()) kv.set("seed", o.seed);
    if (!o.out.empty()) kv.set("out", o.out);
    return harness::run_config_from(kv);
}

void print_warnings(const harness::Dataset& ds) {
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
}

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
    return buf;
}

std::string fixed1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void print_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return;
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            line += r[c];
            if (c + 1 < r.size()) line += std::string(width[c] - r[c].size() + 2, ' ');
        }
        std::cout << line << "\n";
    }
}

int cmd_gen_scenes(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    Rng rng_scene = Rng(cfg.seed).fork(1);  // same stream make_dataset consumes
    fs::create_directories(fs::path(cfg.out_dir) / "scenes");
    for (int i = 0; i < cfg.scene_count; ++i) {
        scene::SceneGenSpec gs = cfg.gen;
        gs.seed = rng_scene.next_u64();
        scene::GridScene sc = scene::generate_scene(gs);
        char name[24];
        std::snprintf(name, sizeof name, "scene-%03d", i);
        fs::path path = fs::path(cfg.out_dir) / "scenes" / (std::string(name) + ".scene");
        scene::save_scene(sc, path.string());
        std::cout << path.string() << "\n";
    }
    return 0;
}

int cmd_make_dataset(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    harness::Dataset ds = harness::make_dataset(cfg);
    print_warnings(ds);
    harness::save_dataset(ds, cfg.out_dir);
    std::cout << ds.items.size() << " episodes over " << ds.scenes.size() << " scenes -> "
              << (fs::path(cfg.out_dir) / "dataset.txt").string() << "\n";
    return 0;
}

int cmd_train(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    harness::Dataset ds = harness::make_dataset(cfg);
    print_warnings(ds);
    harness::TrainOutput out = harness::train_agent(cfg, ds);

    fs::create_directories(cfg.out_dir);
    std::map<std::string, std::string> meta;
    meta["variant"] = learn::variant_name(out.variant);
    meta["seed"] = std::to_string(cfg.seed);
    std::string ckpt = (fs::path(cfg.out_dir) / "checkpoint.ckpt").string();
    learn::save_checkpoint(ckpt, *out.result.nets, meta);
    write_text_file((fs::path(cfg.out_dir) / "training_log.csv").string(),
                    learn::training_log_csv(out.result.log));

    const auto& log = out.result.log;
    std::size_t tail = std::min<std::size_t>(log.size(), 100);
    double succ = 0.0;
    for (std::size_t i = log.size() - tail; i < log.size(); ++i) succ += log[i].success;
    std::cout << "trained " << log.size() << " episodes (variant "
              << learn::variant_name(out.variant) << "), last-" << tail
              << " success " << pct(tail ? succ / double(tail) : 0.0) << "% -> " << ckpt << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    harness::Dataset ds = harness::make_dataset(cfg);
    print_warnings(ds);
    harness::ComparisonReport rep = harness::run_comparison(cfg, ds);
    harness::write_reports(cfg.out_dir, harness::comparison_csv(rep),
                           harness::comparison_json(cfg, rep), rep.runs,
                           cfg.write_trajectories);

    std::vector<std::vector<std::string>> table{
        {"agent", "k", "episodes", "success%", "sub-success%", "G-SPL%", "steps", "path(m)"}};
    for (const auto& row : rep.rows) {
        const auto& a = row.agg;
        table.push_back({row.agent, row.k == 0 ? "all" : std::to_string(row.k),
                         std::to_string(a.episodes), pct(a.success_rate),
                         pct(a.sub_success_rate), pct(a.gspl),
                         a.has_success_means ? fixed1(a.mean_timesteps) : "-",
                         a.has_success_means ? fixed2(a.mean_path_length) : "-"});
    }
    print_table(table);
    return 0;
}

int cmd_paired(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    harness::Dataset ds = harness::make_dataset(cfg);
    print_warnings(ds);
    harness::PairedReport rep = harness::run_paired(cfg, ds);
    harness::write_reports(cfg.out_dir, harness::paired_csv(rep), harness::paired_json(cfg, rep),
                           {rep.sam, rep.psm}, cfg.write_trajectories);

    std::vector<std::vector<std::string>> table{{"scene", "pairs", "excl", "sam-steps",
                                                 "sam-path", "psm-succ", "psm-steps",
                                                 "psm-path"}};
    for (const auto& row : rep.rows) {
        table.push_back({row.scene, std::to_string(row.pairs), std::to_string(row.excluded),
                         row.pairs ? fixed1(row.sam_mean_timesteps) : "-",
                         row.pairs ? fixed2(row.sam_mean_path) : "-",
                         std::to_string(row.psm_successes),
                         row.psm_successes ? fixed1(row.psm_mean_timesteps) : "-",
                         row.psm_successes ? fixed2(row.psm_mean_path) : "-"});
    }
    print_table(table);
    return 0;
}

int cmd_ablate(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    harness::Dataset ds = harness::make_dataset(cfg);
    print_warnings(ds);
    harness::AblationReport rep = harness::run_ablation(cfg, ds);
    harness::write_reports(cfg.out_dir, harness::ablation_csv(rep),
                           harness::ablation_json(cfg, rep), {rep.run}, cfg.write_trajectories);

    std::vector<std::vector<std::string>> table{{"budget", "episodes", "success%",
                                                 "sub-success%"}};
    for (const auto& row : rep.rows)
        table.push_back({std::to_string(row.budget), std::to_string(row.episodes),
                         pct(row.success_rate), pct(row.sub_success_rate)});
    print_table(table);
    return 0;
}

int cmd_gspl(const CommonOpts& o) {
    harness::RunConfig cfg = build_config(o);
    harness::Dataset ds = harness::make_dataset(cfg);
    print_warnings(ds);
    std::unordered_map<const scene::GridScene*, std::shared_ptr<geodesy::SceneFields>> cache;
    std::string csv = "id,g\n";
    for (const auto& item : ds.items) {
        auto& f = cache[item.spec.scene.get()];
        if (!f) f = std::make_shared<geodesy::SceneFields>(item.spec.scene);
        double cs = item.spec.scene->cell_size();
        scene::Cell start{int(item.spec.start.x / cs), int(item.spec.start.y / cs)};
        double g = geodesy::optimal_multigoal_length(*f, start, item.spec.targets,
                                                     item.spec.success_radius_m);
        csv += item.id + "," + format_double(g) + "\n";
    }
    std::cout << csv;
    fs::create_directories(cfg.out_dir);
    write_text_file((fs::path(cfg.out_dir) / "gspl.csv").string(), csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale multi-object navigation laboratory"};
    app.require_subcommand(1);

    CommonOpts o;
    auto* gen = app.add_subcommand("gen-scenes", "generate procedural scenes");
    auto* mkd = app.add_subcommand("make-dataset", "sample an episode dataset");
    auto* trn = app.add_subcommand("train", "train a goal-setting agent");
    auto* evl = app.add_subcommand("eval", "run agents and report metrics");
    auto* prd = app.add_subcommand("paired", "free-order vs sequenced pairing");
    auto* abl = app.add_subcommand("ablate", "re-score under timestep budgets");
    auto* gsp = app.add_subcommand("gspl", "print optimal multi-goal lengths");
    for (CLI::App* cmd : {gen, mkd, trn, evl, prd, abl, gsp}) add_common(cmd, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_scenes(o);
        if (mkd->parsed()) return cmd_make_dataset(o);
        if (trn->parsed()) return cmd_train(o);
        if (evl->parsed()) return cmd_eval(o);
        if (prd->parsed()) return cmd_paired(o);
        if (abl->parsed()) return cmd_ablate(o);
        if (gsp->parsed()) return cmd_gspl(o);
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [Unhandled]: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
