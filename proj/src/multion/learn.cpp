#include "multion/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace multion::learn {

namespace {

int input_channels(const env::SemanticMapState& map) { return map.category_count + 5; }

float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

// goal coordinates are the unit square scaled to the agent map
scene::Cell goal_cell(const std::array<float, 2>& u, int side) {
    int x = int(double(u[0]) * side);
    int y = int(double(u[1]) * side);
    return {std::min(std::max(x, 0), side - 1), std::min(std::max(y, 0), side - 1)};
}

}  // namespace

scene::Cell snap_goal_to_free(const env::SemanticMapState& map, scene::Cell raw) {
    auto blocked = [&](int x, int y) {
        return map.obstacle[std::size_t(y) * std::size_t(map.side) + std::size_t(x)] != 0;
    };
    if (!blocked(raw.x, raw.y)) return raw;
    for (int r = 1; r < map.side; ++r) {
        for (int y = std::max(0, raw.y - r); y <= std::min(map.side - 1, raw.y + r); ++y) {
            for (int x = std::max(0, raw.x - r); x <= std::min(map.side - 1, raw.x + r); ++x) {
                if (std::max(std::abs(x - raw.x), std::abs(y - raw.y)) != r) continue;
                if (!blocked(x, y)) return {x, y};
            }
        }
    }
    return raw;
}

namespace {

std::uint32_t enc_to_mask(const std::vector<float>& enc) {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < enc.size() && i < 32; ++i)
        if (enc[i] > 0.5f) m |= std::uint32_t(1) << i;
    return m;
}

std::vector<float> mask_to_enc(std::uint32_t mask, int width) {
    std::vector<float> enc(std::size_t(width), 0.0f);
    for (int i = 0; i < width && i < 32; ++i)
        if (mask & (std::uint32_t(1) << i)) enc[std::size_t(i)] = 1.0f;
    return enc;
}

}  // namespace

void build_input_planes(const env::SemanticMapState& map, int m_in, std::vector<float>& out) {
    if (m_in < 9) throw ValidationError("input side must be at least 9 cells");
    const int channels = input_channels(map);
    const std::size_t plane = std::size_t(m_in) * std::size_t(m_in);
    out.assign(std::size_t(channels) * plane, 0.0f);

    const int f = (map.side + m_in - 1) / m_in;  // pooling factor, >= 1
    const int pooled = (map.side + f - 1) / f;

    const std::uint8_t* sources[2] = {map.obstacle.data(), map.explored.data()};
    auto pool_channel = [&](const std::uint8_t* src, int ch) {
        float* dst = out.data() + std::size_t(ch) * plane;
        for (int py = 0; py < pooled; ++py) {
            for (int px = 0; px < pooled; ++px) {
                std::uint8_t v = 0;
                int y1 = std::min((py + 1) * f, map.side);
                int x1 = std::min((px + 1) * f, map.side);
                for (int y = py * f; y < y1 && !v; ++y)
                    for (int x = px * f; x < x1; ++x)
                        if (src[std::size_t(y) * map.side + x]) {
                            v = 1;
                            break;
                        }
                dst[std::size_t(py) * m_in + px] = float(v);
            }
        }
    };

    pool_channel(sources[0], 0);
    pool_channel(sources[1], 1);
    for (int c = 0; c < map.category_count; ++c)
        pool_channel(map.category.data() + std::size_t(c) * map.plane_cells(), 2 + c);
    pool_channel(map.agent.data(), 2 + map.category_count);
    pool_channel(map.trajectory.data(), 3 + map.category_count);
    pool_channel(map.found.data(), 4 + map.category_count);

    // cells beyond the pooled square are workspace boundary: explored obstacle
    for (int y = 0; y < m_in; ++y)
        for (int x = 0; x < m_in; ++x)
            if (x >= pooled || y >= pooled) {
                out[std::size_t(y) * m_in + x] = 1.0f;          // obstacle
                out[plane + std::size_t(y) * m_in + x] = 1.0f;  // explored
            }
}

void shift_planes(const std::vector<float>& in, int channels, int side, int pad, int ox, int oy,
                  std::vector<float>& out) {
    const std::size_t plane = std::size_t(side) * std::size_t(side);
    if (in.size() != std::size_t(channels) * plane)
        throw ValidationError("shift: tensor shape mismatch");
    if (pad < 0 || ox < 0 || oy < 0 || ox > 2 * pad || oy > 2 * pad)
        throw ValidationError("shift offset out of range");
    out.resize(in.size());
    for (int c = 0; c < channels; ++c) {
        const float* src = in.data() + std::size_t(c) * plane;
        float* dst = out.data() + std::size_t(c) * plane;
        for (int y = 0; y < side; ++y) {
            int sy = std::min(std::max(y + oy - pad, 0), side - 1);
            for (int x = 0; x < side; ++x) {
                int sx = std::min(std::max(x + ox - pad, 0), side - 1);
                dst[std::size_t(y) * side + x] = src[std::size_t(sy) * side + sx];
            }
        }
    }
}

std::vector<float> augment_shift(const std::vector<float>& planes, int channels, int side,
                                 int pad, Rng& rng) {
    int ox = int(rng.uniform_int(0, 2 * pad));
    int oy = int(rng.uniform_int(0, 2 * pad));
    std::vector<float> out;
    shift_planes(planes, channels, side, pad, ox, oy, out);
    return out;
}

const char* variant_name(LearnedVariant v) {
    switch (v) {
        case LearnedVariant::Sam: return "sam";
        case LearnedVariant::Psm: return "psm";
        case LearnedVariant::MSemExp: return "msemexp";
    }
    return "sam";
}

std::vector<float> target_encoding(LearnedVariant v, int enc_width,
                                   const std::vector<int>& remaining,
                                   const std::vector<int>& sequence) {
    std::vector<float> enc(std::size_t(enc_width), 0.0f);
    auto set_slot = [&](int id) {
        if (id < 0 || id >= enc_width)
            throw ValidationError("category id outside the target encoding");
        enc[std::size_t(id)] = 1.0f;
    };
    if (v == LearnedVariant::Psm) {
        if (sequence.empty())
            throw ValidationError("sequenced target encoding needs a category order");
        for (int id : sequence) {
            if (std::find(remaining.begin(), remaining.end(), id) != remaining.end()) {
                set_slot(id);
                break;
            }
        }
    } else {
        for (int id : remaining) set_slot(id);
    }
    return enc;
}

std::vector<std::uint64_t> pack_planes(const std::vector<float>& planes) {
    std::vector<std::uint64_t> bits((planes.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < planes.size(); ++i)
        if (planes[i] > 0.5f) bits[i >> 6] |= std::uint64_t(1) << (i & 63);
    return bits;
}

void unpack_planes(const std::vector<std::uint64_t>& bits, std::size_t count,
                   std::vector<float>& out) {
    if (bits.size() < (count + 63) / 64) throw ValidationError("packed tensor too short");
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = (bits[i >> 6] >> (i & 63)) & 1 ? 1.0f : 0.0f;
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
    if (data_.empty()) throw ValidationError("sampling from an empty replay buffer");
    return data_[std::size_t(rng.uniform_int(0, std::int64_t(data_.size()) - 1))];
}

void TrainConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must lie in [0, 1]");
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("tau must lie in (0, 1]");
    if (actor_period < 1) throw ConfigError("actor period must be positive");
    if (expl_noise < 0.0 || smooth_noise < 0.0 || smooth_clip < 0.0)
        throw ConfigError("noise scales must be non-negative");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (shift_pad < 0) throw ConfigError("shift pad must be non-negative");
    if (goal_period < 1) throw ConfigError("goal period must be positive");
    if (episodes < 1) throw ConfigError("episode count must be positive");
    if (replay_capacity < std::size_t(batch_size))
        throw ConfigError("replay capacity must cover one batch");
    if (updates_per_episode < 0) throw ConfigError("updates per episode must be non-negative");
}

namespace {

struct MacroScorer {
    const reward::RewardConfig& rcfg;
    LearnedVariant variant;
    env::Episode& ep;

    // steps the episode once, scoring against the categories unfound when the
    // step began
    double step(env::Action a) {
        std::vector<int> cats = ep.state().remaining;
        std::vector<double> before(cats.size()), after(cats.size());
        for (std::size_t i = 0; i < cats.size(); ++i) before[i] = ep.dtg(cats[i]);
        env::StepEvents ev = ep.step(a);
        for (std::size_t i = 0; i < cats.size(); ++i) after[i] = ep.dtg(cats[i]);
        if (variant == LearnedVariant::MSemExp) return reward::semexp_reward(rcfg, before, after);
        return reward::step_reward(rcfg, before, after, int(ev.categories_found.size()));
    }
};

struct BatchMaker {
    const ReplayBuffer& replay;
    const NetConfig& net;
    int channels;
    int pad;

    std::vector<BatchSample<float>> make(int batch_size, Rng& rng_batch, Rng& rng_aug) const {
        std::vector<BatchSample<float>> batch(static_cast<std::size_t>(batch_size));
        const std::size_t count = std::size_t(channels) * net.m_in * net.m_in;
        std::vector<float> raw;
        for (auto& b : batch) {
            const Transition& tr = replay.sample(rng_batch);
            int ox = int(rng_aug.uniform_int(0, 2 * pad));
            int oy = int(rng_aug.uniform_int(0, 2 * pad));
            unpack_planes(tr.s_bits, count, raw);
            shift_planes(raw, channels, net.m_in, pad, ox, oy, b.planes_s);
            unpack_planes(tr.s2_bits, count, raw);
            shift_planes(raw, channels, net.m_in, pad, ox, oy, b.planes_s2);
            b.enc_s = mask_to_enc(tr.enc_s, net.enc_width);
            b.enc_s2 = mask_to_enc(tr.enc_s2, net.enc_width);
            b.action = tr.action;
            b.reward = tr.reward;
            b.done = tr.done;
        }
        return batch;
    }
};

}  // namespace

TrainResult train(const std::vector<env::EpisodeSpec>& dataset, const TrainConfig& cfg,
                  const NetConfig& net_cfg, LearnedVariant variant,
                  const reward::RewardConfig& reward_cfg) {
    cfg.validate();
    if (dataset.empty()) throw ValidationError("training needs at least one episode");

    Rng master(cfg.seed);
    Rng rng_init = master.fork(1);
    Rng rng_act = master.fork(2);
    Rng rng_batch = master.fork(3);
    Rng rng_aug = master.fork(4);
    Rng rng_smooth = master.fork(5);

    auto nets = std::make_shared<AgentNets<float>>(net_cfg);
    nets->init(rng_init);
    AgentNets<float> targets(net_cfg);
    targets.copy_from(*nets);

    auto critic_ps = nets->critic_params();
    auto actor_ps = nets->actor_params();
    auto online_all = nets->all_params();
    auto target_all = targets.all_params();
    nn::Adam<float> opt_critic(critic_ps, cfg.lr);
    nn::Adam<float> opt_actor(actor_ps, cfg.lr);

    ReplayBuffer replay(cfg.replay_capacity);
    std::unordered_map<const scene::GridScene*, std::shared_ptr<geodesy::SceneFields>> fields;

    TrainResult result;
    result.nets = nets;
    std::int64_t updates = 0;
    const std::size_t min_fill = std::max(cfg.warmup_transitions, std::size_t(cfg.batch_size));
    std::vector<float> planes_s, planes_s2;

    for (int epi = 0; epi < cfg.episodes; ++epi) {
        const env::EpisodeSpec& espec = dataset[std::size_t(epi) % dataset.size()];
        auto& shared = fields[espec.scene.get()];
        if (!shared) shared = std::make_shared<geodesy::SceneFields>(espec.scene);
        env::Episode ep(espec, shared);
        MacroScorer scorer{reward_cfg, variant, ep};
        const int side = ep.map().side;
        const int channels = input_channels(ep.map());
        if (channels != net_cfg.map_channels)
            throw ValidationError("scene catalog does not fit the network input");

        const double sigma = cfg.expl_noise * (1.0 - double(epi) / double(cfg.episodes));
        double ep_return = 0.0;

        while (!ep.state().terminated()) {
            build_input_planes(ep.map(), net_cfg.m_in, planes_s);
            std::vector<float> enc_s = target_encoding(variant, net_cfg.enc_width,
                                                       ep.state().remaining, espec.required_order);
            auto u = actor_forward(*nets, planes_s, enc_s);
            std::array<float, 2> a{clamp01(u[0] + float(sigma * rng_act.gaussian())),
                                   clamp01(u[1] + float(sigma * rng_act.gaussian()))};
            scene::Cell goal = snap_goal_to_free(ep.map(), goal_cell(a, side));

            std::vector<double> step_rs;
            const std::size_t remaining_at_start = ep.state().remaining.size();
            for (int ms = 0; ms < cfg.goal_period && !ep.state().terminated(); ++ms) {
                agents::PolicyStep psr = agents::local_policy_step(
                    ep.map(), espec.scene->cell_size(), ep.state().pose, goal);
                if (psr.arrived || psr.replan_needed) {
                    // a macro must consume time even when the goal is moot
                    if (ms == 0) step_rs.push_back(scorer.step(env::Action::TurnLeft));
                    break;
                }
                env::Pose before = ep.state().pose;
                step_rs.push_back(scorer.step(psr.action));
                if (psr.action == env::Action::MoveForward && ep.state().pose == before)
                    break;  // blocked: pick a fresh goal
                if (ep.state().remaining.size() != remaining_at_start) break;
            }
            for (double r : step_rs) ep_return += r;

            build_input_planes(ep.map(), net_cfg.m_in, planes_s2);
            Transition tr;
            tr.s_bits = pack_planes(planes_s);
            tr.s2_bits = pack_planes(planes_s2);
            tr.enc_s = enc_to_mask(enc_s);
            tr.enc_s2 = enc_to_mask(target_encoding(variant, net_cfg.enc_width,
                                                    ep.state().remaining, espec.required_order));
            tr.action = a;
            tr.reward = reward::macro_reward(step_rs);
            tr.done = ep.state().success();
            replay.push(std::move(tr));
        }

        if (replay.size() >= min_fill) {
            BatchMaker maker{replay, net_cfg, net_cfg.map_channels, cfg.shift_pad};
            for (int ui = 0; ui < cfg.updates_per_episode; ++ui) {
                auto batch = maker.make(cfg.batch_size, rng_batch, rng_aug);
                std::vector<float> ys(batch.size());
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    const auto& b = batch[i];
                    auto u2 = actor_forward(targets, b.planes_s2, b.enc_s2);
                    std::array<float, 2> a2;
                    for (int d = 0; d < 2; ++d) {
                        double noise = cfg.smooth_noise * rng_smooth.gaussian();
                        noise = std::min(cfg.smooth_clip, std::max(-cfg.smooth_clip, noise));
                        a2[std::size_t(d)] = clamp01(u2[std::size_t(d)] + float(noise));
                    }
                    auto [tq1, tq2] = critic_forward(targets, b.planes_s2, b.enc_s2, a2);
                    double bootstrap = b.done ? 0.0 : cfg.gamma * double(std::min(tq1, tq2));
                    ys[i] = float(b.reward + bootstrap);
                }
                nn::zero_grads(critic_ps);
                critic_loss_and_grads(*nets, batch, ys);
                opt_critic.step();
                ++updates;
                if (updates % cfg.actor_period == 0) {
                    nn::zero_grads(online_all);
                    actor_loss_and_grads(*nets, batch, false);
                    opt_actor.step();
                    nn::soft_update(target_all, online_all, cfg.tau);
                }
            }
        }

        const auto& st = ep.state();
        double k = double(espec.targets.size());
        result.log.push_back({epi, ep_return, st.success() ? 1 : 0,
                              double(st.found_log.size()) / k, st.t, st.path_length_m});
    }
    return result;
}

std::string training_log_csv(const std::vector<EpisodeLogRow>& log) {
    std::string out = "episode,return,success,sub_success,steps,path_length\n";
    for (const auto& r : log) {
        out += std::to_string(r.episode);
        out += ',';
        out += format_double(r.ret);
        out += ',';
        out += std::to_string(r.success);
        out += ',';
        out += format_double(r.sub_success);
        out += ',';
        out += std::to_string(r.steps);
        out += ',';
        out += format_double(r.path_length);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// checkpoints: host-endian binary container of named float32 tensors

namespace {

constexpr const char* kCkptMagic = "multion-ckpt v1\n";

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("checkpoint truncated");
    return v;
}

int meta_int(const std::map<std::string, std::string>& meta, const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw ParseError("checkpoint missing key: " + key);
    return int(parse_i64(it->second));
}

}  // namespace

void save_checkpoint(const std::string& path, AgentNets<float>& nets,
                     const std::map<std::string, std::string>& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kCkptMagic, std::streamsize(std::strlen(kCkptMagic)));

    std::map<std::string, std::string> full = meta;
    const NetConfig& c = nets.cfg;
    full["net.map_channels"] = std::to_string(c.map_channels);
    full["net.m_in"] = std::to_string(c.m_in);
    full["net.enc_width"] = std::to_string(c.enc_width);
    full["net.conv_channels"] = std::to_string(c.conv_channels);
    full["net.embed_dim"] = std::to_string(c.embed_dim);
    full["net.hidden"] = std::to_string(c.hidden);
    std::string meta_text;
    for (const auto& [k, v] : full) meta_text += k + "=" + v + "\n";
    write_raw<std::uint64_t>(out, meta_text.size());
    out.write(meta_text.data(), std::streamsize(meta_text.size()));

    auto ps = nets.all_params();
    write_raw<std::uint32_t>(out, std::uint32_t(ps.size()));
    for (const auto* p : ps) {
        write_raw<std::uint32_t>(out, std::uint32_t(p->name.size()));
        out.write(p->name.data(), std::streamsize(p->name.size()));
        write_raw<std::uint32_t>(out, std::uint32_t(p->shape.size()));
        for (int d : p->shape) write_raw<std::uint32_t>(out, std::uint32_t(d));
        out.write(reinterpret_cast<const char*>(p->w.data()),
                  std::streamsize(p->w.size() * sizeof(float)));
    }
    if (!out) throw IoError("checkpoint write failed: " + path);
}

std::shared_ptr<AgentNets<float>> load_checkpoint(const std::string& path,
                                                  std::map<std::string, std::string>& meta_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint: " + path);
    std::string magic(std::strlen(kCkptMagic), '\0');
    in.read(magic.data(), std::streamsize(magic.size()));
    if (!in || magic != kCkptMagic) throw ParseError("not a checkpoint file: " + path);

    auto meta_len = read_raw<std::uint64_t>(in);
    if (meta_len > (1u << 20)) throw ParseError("checkpoint metadata oversized");
    std::string meta_text(std::size_t(meta_len), '\0');
    in.read(meta_text.data(), std::streamsize(meta_text.size()));
    if (!in) throw ParseError("checkpoint truncated");
    meta_out.clear();
    std::istringstream lines(meta_text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("bad checkpoint metadata line: " + line);
        meta_out[line.substr(0, eq)] = line.substr(eq + 1);
    }

    NetConfig c;
    c.map_channels = meta_int(meta_out, "net.map_channels");
    c.m_in = meta_int(meta_out, "net.m_in");
    c.enc_width = meta_int(meta_out, "net.enc_width");
    c.conv_channels = meta_int(meta_out, "net.conv_channels");
    c.embed_dim = meta_int(meta_out, "net.embed_dim");
    c.hidden = meta_int(meta_out, "net.hidden");
    auto nets = std::make_shared<AgentNets<float>>(c);

    std::unordered_map<std::string, nn::Param<float>*> by_name;
    for (auto* p : nets->all_params()) by_name[p->name] = p;

    auto count = read_raw<std::uint32_t>(in);
    if (count != by_name.size()) throw ParseError("checkpoint tensor count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name_len = read_raw<std::uint32_t>(in);
        if (name_len > 256) throw ParseError("checkpoint tensor name oversized");
        std::string name(name_len, '\0');
        in.read(name.data(), std::streamsize(name.size()));
        auto ndim = read_raw<std::uint32_t>(in);
        if (ndim > 8) throw ParseError("checkpoint tensor rank oversized");
        std::size_t total = 1;
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape.push_back(int(read_raw<std::uint32_t>(in)));
            total *= std::size_t(shape.back());
        }
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ParseError("unknown checkpoint tensor: " + name);
        nn::Param<float>* p = it->second;
        if (p->shape != shape || p->size() != total)
            throw ParseError("checkpoint tensor shape mismatch: " + name);
        in.read(reinterpret_cast<char*>(p->w.data()),
                std::streamsize(p->w.size() * sizeof(float)));
        if (!in) throw ParseError("checkpoint truncated");
    }
    return nets;
}

// ---------------------------------------------------------------------------
// evaluation controller

LearnedController::LearnedController(std::shared_ptr<AgentNets<float>> nets,
                                     LearnedVariant variant, std::vector<int> sequence)
    : nets_(std::move(nets)), variant_(variant), sequence_(std::move(sequence)) {
    if (!nets_) throw ValidationError("learned controller needs a network");
}

env::Action LearnedController::act(env::Episode& ep, Rng&) {
    const env::EpisodeState& st = ep.state();
    const env::SemanticMapState& map = ep.map();

    bool need = !have_goal_;
    if (have_goal_) {
        if (last_action_ == env::Action::MoveForward && st.pose == last_pose_) need = true;
        if (st.t - goal_.issued_at >= agents::kGoalPeriod) need = true;
        if (st.remaining.size() != goal_.remaining_at_issue) need = true;
    }

    auto compute_goal = [&]() -> scene::Cell {
        std::vector<float> planes;
        build_input_planes(map, nets_->cfg.m_in, planes);
        const std::vector<int>& seq =
            sequence_.empty() ? ep.spec().required_order : sequence_;
        std::vector<float> enc =
            target_encoding(variant_, nets_->cfg.enc_width, st.remaining, seq);
        auto u = actor_forward(*nets_, planes, enc);
        return snap_goal_to_free(map, goal_cell(u, map.side));
    };
    if (need) goal_dead_ = false;

    env::Action chosen = env::Action::TurnLeft;  // scan when no goal is usable
    for (int round = 0; round < 2; ++round) {
        if (need) {
            goal_ = {compute_goal(), st.t, st.remaining.size()};
            have_goal_ = true;
            need = false;
        }
        agents::PolicyStep psr =
            agents::local_policy_step(map, ep.spec().scene->cell_size(), st.pose, goal_.cell);
        if (psr.arrived || psr.replan_needed) {
            if (round == 0 && !goal_dead_) {
                need = true;  // stale goal: ask the actor again
                continue;
            }
            // scan one full revolution to grow the map, then let the period
            // trigger re-query the actor; no per-step re-queries
            if (!goal_dead_) goal_.issued_at = st.t - agents::kGoalPeriod + 12;
            goal_dead_ = true;
            break;
        }
        chosen = psr.action;
        goal_dead_ = false;
        break;
    }
    last_action_ = chosen;
    last_pose_ = st.pose;
    return chosen;
}

}  // namespace multion::learn
