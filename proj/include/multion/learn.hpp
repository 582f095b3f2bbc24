#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "multion/agents.hpp"
#include "multion/env.hpp"
#include "multion/nn.hpp"
#include "multion/reward.hpp"

namespace multion::learn {

// Architecture shape knobs. The defaults are the deployed network; tests
// shrink them to keep finite-difference sweeps fast.
struct NetConfig {
    int map_channels = 11;  // (C + 2) semantic planes + 3 aux planes
    int m_in = 24;          // downsampled map side fed to the conv stack
    int enc_width = 16;     // target-encoding width
    int conv_channels = 32;
    int embed_dim = 50;
    int hidden = 256;

    int conv_out_side() const { return m_in - 8; }  // four 3x3 valid convs
    int flat_dim() const { return conv_channels * conv_out_side() * conv_out_side(); }
};

// ---------------------------------------------------------------------------
// networks

template <typename T>
struct TrunkCache {
    std::vector<T> z1, a1, z2, a2, z3, a3, z4, a4;
};

// Four 3x3 stride-1 valid convolutions, 32 channels, ReLU after each.
template <typename T>
struct ConvTrunk {
    NetConfig cfg;
    nn::Conv2d<T> c1, c2, c3, c4;

    explicit ConvTrunk(const NetConfig& c = {})
        : cfg(c),
          c1("conv1", c.map_channels, c.conv_channels, 3),
          c2("conv2", c.conv_channels, c.conv_channels, 3),
          c3("conv3", c.conv_channels, c.conv_channels, 3),
          c4("conv4", c.conv_channels, c.conv_channels, 3) {}

    void init(Rng& rng) {
        c1.init(rng);
        c2.init(rng);
        c3.init(rng);
        c4.init(rng);
    }
    void collect(nn::ParamList<T>& ps) {
        c1.collect(ps);
        c2.collect(ps);
        c3.collect(ps);
        c4.collect(ps);
    }

    // x: map_channels * m_in * m_in; returns flat a4 in cache
    void forward(const T* x, TrunkCache<T>& k) const {
        int s0 = cfg.m_in, s1 = s0 - 2, s2 = s1 - 2, s3 = s2 - 2, s4 = s3 - 2;
        int ch = cfg.conv_channels;
        k.z1.resize(std::size_t(ch) * s1 * s1);
        k.a1.resize(k.z1.size());
        k.z2.resize(std::size_t(ch) * s2 * s2);
        k.a2.resize(k.z2.size());
        k.z3.resize(std::size_t(ch) * s3 * s3);
        k.a3.resize(k.z3.size());
        k.z4.resize(std::size_t(ch) * s4 * s4);
        k.a4.resize(k.z4.size());
        c1.forward(x, s0, s0, k.z1.data());
        nn::relu_forward(k.z1.data(), k.a1.data(), k.z1.size());
        c2.forward(k.a1.data(), s1, s1, k.z2.data());
        nn::relu_forward(k.z2.data(), k.a2.data(), k.z2.size());
        c3.forward(k.a2.data(), s2, s2, k.z3.data());
        nn::relu_forward(k.z3.data(), k.a3.data(), k.z3.size());
        c4.forward(k.a3.data(), s3, s3, k.z4.data());
        nn::relu_forward(k.z4.data(), k.a4.data(), k.z4.size());
    }

    // g_flat: grad of a4; accumulates parameter grads
    void backward(const T* x, const TrunkCache<T>& k, const T* g_flat) {
        int s0 = cfg.m_in, s1 = s0 - 2, s2 = s1 - 2, s3 = s2 - 2;
        std::vector<T> g4(k.z4.size()), g3a(k.a3.size(), T(0)), g3(k.z3.size());
        std::vector<T> g2a(k.a2.size(), T(0)), g2(k.z2.size());
        std::vector<T> g1a(k.a1.size(), T(0)), g1(k.z1.size());
        nn::relu_backward(k.z4.data(), g_flat, g4.data(), k.z4.size());
        c4.backward(k.a3.data(), s3, s3, g4.data(), g3a.data());
        nn::relu_backward(k.z3.data(), g3a.data(), g3.data(), k.z3.size());
        c3.backward(k.a2.data(), s2, s2, g3.data(), g2a.data());
        nn::relu_backward(k.z2.data(), g2a.data(), g2.data(), k.z2.size());
        c2.backward(k.a1.data(), s1, s1, g2.data(), g1a.data());
        nn::relu_backward(k.z1.data(), g1a.data(), g1.data(), k.z1.size());
        c1.backward(x, s0, s0, g1.data(), nullptr);
    }
};

template <typename T>
struct HeadCache {
    std::vector<T> in;  // flat map features then target encoding
    std::vector<T> z;
    std::vector<T> ln_out;
    std::vector<T> y;  // tanh output, the embedding
    nn::LayerNormCache<T> ln;
};

// FC to the embedding, layer-normalized, tanh. The target encoding joins the
// flattened conv features here.
template <typename T>
struct EmbedHead {
    NetConfig cfg;
    nn::Linear<T> fc;
    nn::LayerNorm<T> ln;

    explicit EmbedHead(const std::string& name, const NetConfig& c = {})
        : cfg(c),
          fc(name + ".fc", c.flat_dim() + c.enc_width, c.embed_dim),
          ln(name + ".ln", c.embed_dim) {}

    void init(Rng& rng) { fc.init(rng); }
    void collect(nn::ParamList<T>& ps) {
        fc.collect(ps);
        ln.collect(ps);
    }

    void forward(const T* flat, const T* enc, HeadCache<T>& k) const {
        k.in.resize(std::size_t(cfg.flat_dim() + cfg.enc_width));
        std::copy(flat, flat + cfg.flat_dim(), k.in.begin());
        std::copy(enc, enc + cfg.enc_width, k.in.begin() + cfg.flat_dim());
        k.z.resize(std::size_t(cfg.embed_dim));
        k.ln_out.resize(k.z.size());
        k.y.resize(k.z.size());
        fc.forward(k.in.data(), k.z.data());
        ln.forward(k.z.data(), k.ln_out.data(), k.ln);
        nn::tanh_forward(k.ln_out.data(), k.y.data(), k.y.size());
    }

    // returns grad wrt the flat features through g_flat (may be null)
    void backward(const HeadCache<T>& k, const T* g_y, T* g_flat) {
        std::vector<T> g_ln(k.y.size()), g_z(k.y.size());
        std::vector<T> g_in(k.in.size());
        nn::tanh_backward(k.y.data(), g_y, g_ln.data(), k.y.size());
        ln.backward(k.ln, g_ln.data(), g_z.data());
        fc.backward(k.in.data(), g_z.data(), g_in.data());
        if (g_flat)
            for (int i = 0; i < cfg.flat_dim(); ++i) g_flat[i] += g_in[std::size_t(i)];
    }
};

enum class OutAct { None, Sigmoid };

template <typename T>
struct MlpCache {
    std::vector<T> in, z1, a1, z2, a2, z3, y;
};

// in -> hidden -> hidden -> out, ReLU after the hidden layers.
template <typename T>
struct Mlp {
    int in_dim = 0, out_dim = 0;
    OutAct out_act = OutAct::None;
    nn::Linear<T> l1, l2, l3;

    Mlp(const std::string& name, int in, int hidden, int out, OutAct act)
        : in_dim(in),
          out_dim(out),
          out_act(act),
          l1(name + ".l1", in, hidden),
          l2(name + ".l2", hidden, hidden),
          l3(name + ".l3", hidden, out) {}

    void init(Rng& rng) {
        l1.init(rng);
        l2.init(rng);
        l3.init(rng);
    }
    void collect(nn::ParamList<T>& ps) {
        l1.collect(ps);
        l2.collect(ps);
        l3.collect(ps);
    }

    void forward(const T* x, MlpCache<T>& k) const {
        k.in.assign(x, x + in_dim);
        k.z1.resize(std::size_t(l1.out_dim));
        k.a1.resize(k.z1.size());
        k.z2.resize(std::size_t(l2.out_dim));
        k.a2.resize(k.z2.size());
        k.z3.resize(std::size_t(out_dim));
        k.y.resize(k.z3.size());
        l1.forward(k.in.data(), k.z1.data());
        nn::relu_forward(k.z1.data(), k.a1.data(), k.z1.size());
        l2.forward(k.a1.data(), k.z2.data());
        nn::relu_forward(k.z2.data(), k.a2.data(), k.z2.size());
        l3.forward(k.a2.data(), k.z3.data());
        if (out_act == OutAct::Sigmoid)
            nn::sigmoid_forward(k.z3.data(), k.y.data(), k.z3.size());
        else
            k.y = k.z3;
    }

    // g_x may be null
    void backward(const MlpCache<T>& k, const T* g_y, T* g_x) {
        std::vector<T> g3(k.z3.size()), g2a(k.a2.size()), g2(k.z2.size());
        std::vector<T> g1a(k.a1.size()), g1(k.z1.size());
        if (out_act == OutAct::Sigmoid)
            nn::sigmoid_backward(k.y.data(), g_y, g3.data(), k.y.size());
        else
            std::copy(g_y, g_y + out_dim, g3.begin());
        l3.backward(k.a2.data(), g3.data(), g2a.data());
        nn::relu_backward(k.z2.data(), g2a.data(), g2.data(), k.z2.size());
        l2.backward(k.a1.data(), g2.data(), g1a.data());
        nn::relu_backward(k.z1.data(), g1a.data(), g1.data(), k.z1.size());
        l1.backward(k.in.data(), g1.data(), g_x);
    }
};

// The full parameter set: one shared conv trunk, separate embedding heads for
// actor and critic, the actor MLP (2-D sigmoid goal), and twin Q MLPs.
// Convolution weights belong to the critic optimizer only.
template <typename T>
struct AgentNets {
    NetConfig cfg;
    ConvTrunk<T> trunk;
    EmbedHead<T> actor_head, critic_head;
    Mlp<T> actor, q1, q2;

    explicit AgentNets(const NetConfig& c = {})
        : cfg(c),
          trunk(c),
          actor_head("actor_head", c),
          critic_head("critic_head", c),
          actor("actor", c.embed_dim + c.enc_width, c.hidden, 2, OutAct::Sigmoid),
          q1("q1", c.embed_dim + c.enc_width + 2, c.hidden, 1, OutAct::None),
          q2("q2", c.embed_dim + c.enc_width + 2, c.hidden, 1, OutAct::None) {}

    void init(Rng& rng) {
        trunk.init(rng);
        actor_head.init(rng);
        critic_head.init(rng);
        actor.init(rng);
        q1.init(rng);
        q2.init(rng);
    }

    nn::ParamList<T> all_params() {
        nn::ParamList<T> ps;
        trunk.collect(ps);
        actor_head.collect(ps);
        critic_head.collect(ps);
        actor.collect(ps);
        q1.collect(ps);
        q2.collect(ps);
        return ps;
    }
    nn::ParamList<T> critic_params() {  // conv trunk included here only
        nn::ParamList<T> ps;
        trunk.collect(ps);
        critic_head.collect(ps);
        q1.collect(ps);
        q2.collect(ps);
        return ps;
    }
    nn::ParamList<T> actor_params() {
        nn::ParamList<T> ps;
        actor_head.collect(ps);
        actor.collect(ps);
        return ps;
    }
    nn::ParamList<T> conv_params() {
        nn::ParamList<T> ps;
        trunk.collect(ps);
        return ps;
    }

    void copy_from(AgentNets<T>& other) {
        auto dst = all_params();
        auto src = other.all_params();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->w = src[i]->w;
    }
};

// ---------------------------------------------------------------------------
// forward utilities

// 50-dim embedding through the chosen head; planes sized per cfg.
template <typename T>
std::vector<T> forward_embed(const AgentNets<T>& nets, const std::vector<T>& planes,
                             const std::vector<T>& enc, bool use_critic_head) {
    const NetConfig& c = nets.cfg;
    if (int(planes.size()) != c.map_channels * c.m_in * c.m_in)
        throw ValidationError("map tensor shape mismatch");
    if (int(enc.size()) != c.enc_width) throw ValidationError("target encoding width mismatch");
    TrunkCache<T> tk;
    nets.trunk.forward(planes.data(), tk);
    HeadCache<T> hk;
    (use_critic_head ? nets.critic_head : nets.actor_head).forward(tk.a4.data(), enc.data(), hk);
    return hk.y;
}

// actor output in (0,1)^2
template <typename T>
std::array<T, 2> actor_forward(const AgentNets<T>& nets, const std::vector<T>& planes,
                               const std::vector<T>& enc) {
    auto emb = forward_embed(nets, planes, enc, false);
    std::vector<T> in(emb.begin(), emb.end());
    in.insert(in.end(), enc.begin(), enc.end());
    MlpCache<T> mk;
    nets.actor.forward(in.data(), mk);
    return {mk.y[0], mk.y[1]};
}

template <typename T>
std::pair<T, T> critic_forward(const AgentNets<T>& nets, const std::vector<T>& planes,
                               const std::vector<T>& enc, const std::array<T, 2>& action) {
    auto emb = forward_embed(nets, planes, enc, true);
    std::vector<T> in(emb.begin(), emb.end());
    in.insert(in.end(), enc.begin(), enc.end());
    in.push_back(action[0]);
    in.push_back(action[1]);
    MlpCache<T> k1, k2;
    nets.q1.forward(in.data(), k1);
    nets.q2.forward(in.data(), k2);
    return {k1.y[0], k2.y[0]};
}

// ---------------------------------------------------------------------------
// batch updates (shared by the trainer and the gradient-check tests)

template <typename T>
struct BatchSample {
    std::vector<T> planes_s, planes_s2;  // augmented input tensors
    std::vector<T> enc_s, enc_s2;
    std::array<T, 2> action{};
    double reward = 0.0;
    bool done = false;
};

// Squared-error loss of both Q heads against fixed targets y; accumulates
// grads into trunk, critic head, and both Q MLPs. Returns the mean loss.
template <typename T>
double critic_loss_and_grads(AgentNets<T>& nets, const std::vector<BatchSample<T>>& batch,
                             const std::vector<T>& ys) {
    if (batch.empty()) throw ValidationError("empty critic batch");
    const NetConfig& c = nets.cfg;
    const T invb = T(1.0 / double(batch.size()));
    double loss = 0.0;
    TrunkCache<T> tk;
    HeadCache<T> hk;
    MlpCache<T> k1, k2;
    std::vector<T> qin, g_qin1(std::size_t(c.embed_dim + c.enc_width + 2)),
        g_qin2(g_qin1.size()), g_emb(std::size_t(c.embed_dim)),
        g_flat(std::size_t(c.flat_dim()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = batch[i];
        nets.trunk.forward(s.planes_s.data(), tk);
        nets.critic_head.forward(tk.a4.data(), s.enc_s.data(), hk);
        qin.assign(hk.y.begin(), hk.y.end());
        qin.insert(qin.end(), s.enc_s.begin(), s.enc_s.end());
        qin.push_back(s.action[0]);
        qin.push_back(s.action[1]);
        nets.q1.forward(qin.data(), k1);
        nets.q2.forward(qin.data(), k2);
        T e1 = k1.y[0] - ys[i];
        T e2 = k2.y[0] - ys[i];
        loss += double(e1) * double(e1) + double(e2) * double(e2);

        T g1 = T(2) * e1 * invb;
        T g2 = T(2) * e2 * invb;
        nets.q1.backward(k1, &g1, g_qin1.data());
        nets.q2.backward(k2, &g2, g_qin2.data());
        for (int j = 0; j < c.embed_dim; ++j) g_emb[std::size_t(j)] = g_qin1[std::size_t(j)] + g_qin2[std::size_t(j)];
        std::fill(g_flat.begin(), g_flat.end(), T(0));
        nets.critic_head.backward(hk, g_emb.data(), g_flat.data());
        nets.trunk.backward(s.planes_s.data(), tk, g_flat.data());
    }
    return loss / double(batch.size());
}

// Deterministic-policy-gradient loss: -mean Q1(s, actor(s)). Accumulates
// grads into the actor head and MLP; when through_trunk is set the conv and
// critic-side grads are accumulated too (finite-difference checks need them;
// the optimizer step never touches them).
template <typename T>
double actor_loss_and_grads(AgentNets<T>& nets, const std::vector<BatchSample<T>>& batch,
                            bool through_trunk) {
    if (batch.empty()) throw ValidationError("empty actor batch");
    const NetConfig& c = nets.cfg;
    const T invb = T(1.0 / double(batch.size()));
    double loss = 0.0;
    TrunkCache<T> tk;
    HeadCache<T> ahk, chk;
    MlpCache<T> ak, k1;
    std::vector<T> ain, qin, g_qin(std::size_t(c.embed_dim + c.enc_width + 2)),
        g_act(2), g_ain(std::size_t(c.embed_dim + c.enc_width)),
        g_emb_a(std::size_t(c.embed_dim)), g_emb_c(std::size_t(c.embed_dim)),
        g_flat(std::size_t(c.flat_dim()));
    for (const auto& s : batch) {
        nets.trunk.forward(s.planes_s.data(), tk);
        nets.actor_head.forward(tk.a4.data(), s.enc_s.data(), ahk);
        ain.assign(ahk.y.begin(), ahk.y.end());
        ain.insert(ain.end(), s.enc_s.begin(), s.enc_s.end());
        nets.actor.forward(ain.data(), ak);
        nets.critic_head.forward(tk.a4.data(), s.enc_s.data(), chk);
        qin.assign(chk.y.begin(), chk.y.end());
        qin.insert(qin.end(), s.enc_s.begin(), s.enc_s.end());
        qin.push_back(ak.y[0]);
        qin.push_back(ak.y[1]);
        nets.q1.forward(qin.data(), k1);
        loss -= double(k1.y[0]);

        // q1 param grads picked up here are stray for the actor step; the
        // critic zeroes its grads before every update, so they never land
        T gq = -invb;
        nets.q1.backward(k1, &gq, g_qin.data());
        g_act[0] = g_qin[std::size_t(c.embed_dim + c.enc_width)];
        g_act[1] = g_qin[std::size_t(c.embed_dim + c.enc_width + 1)];
        nets.actor.backward(ak, g_act.data(), g_ain.data());
        for (int j = 0; j < c.embed_dim; ++j) g_emb_a[std::size_t(j)] = g_ain[std::size_t(j)];
        if (through_trunk) {
            for (int j = 0; j < c.embed_dim; ++j) g_emb_c[std::size_t(j)] = g_qin[std::size_t(j)];
            std::fill(g_flat.begin(), g_flat.end(), T(0));
            nets.actor_head.backward(ahk, g_emb_a.data(), g_flat.data());
            nets.critic_head.backward(chk, g_emb_c.data(), g_flat.data());
            nets.trunk.backward(s.planes_s.data(), tk, g_flat.data());
        } else {
            nets.actor_head.backward(ahk, g_emb_a.data(), nullptr);
        }
    }
    return loss / double(batch.size());
}

// ---------------------------------------------------------------------------
// input pipeline

// Flattens the binary map planes (channel order: obstacle, explored, C
// categories, agent, trajectory, found), max-pooling down to m_in cells per
// side when the map is larger; padding fills as explored obstacle.
void build_input_planes(const env::SemanticMapState& map, int m_in, std::vector<float>& out);

// Replicate-pad by `pad` cells and crop back at offset (ox, oy), both in
// [0, 2*pad]. All channels shift coherently.
void shift_planes(const std::vector<float>& in, int channels, int side, int pad, int ox, int oy,
                  std::vector<float>& out);

// Spec'd entry point: draws the offset from rng, returns the shifted tensor.
std::vector<float> augment_shift(const std::vector<float>& planes, int channels, int side,
                                 int pad, Rng& rng);

enum class LearnedVariant { Sam, Psm, MSemExp };
const char* variant_name(LearnedVariant v);

// Multi-hot remaining targets; PSM keeps a single active slot: the earliest
// unfound category of the required sequence.
std::vector<float> target_encoding(LearnedVariant v, int enc_width,
                                   const std::vector<int>& remaining,
                                   const std::vector<int>& sequence);

// ---------------------------------------------------------------------------
// replay buffer

struct Transition {
    std::vector<std::uint64_t> s_bits, s2_bits;  // bit-packed binary planes
    std::uint32_t enc_s = 0, enc_s2 = 0;         // target-encoding bitmask
    std::array<float, 2> action{};
    double reward = 0.0;
    bool done = false;
};

std::vector<std::uint64_t> pack_planes(const std::vector<float>& planes);
void unpack_planes(const std::vector<std::uint64_t>& bits, std::size_t count,
                   std::vector<float>& out);

class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw ValidationError("replay capacity must be positive");
    }
    void push(Transition t);
    const Transition& sample(Rng& rng) const;
    std::size_t size() const { return data_.size(); }

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// ---------------------------------------------------------------------------
// training

struct TrainConfig {
    double gamma = 0.99;
    double tau = 0.01;
    int actor_period = 2;         // critic updates per actor update
    double expl_noise = 0.2;      // goal-space sigma, linearly decayed to 0
    double smooth_noise = 0.1;    // target policy smoothing sigma
    double smooth_clip = 0.3;
    int batch_size = 64;
    double lr = 1e-4;
    int shift_pad = 4;
    int goal_period = agents::kGoalPeriod;
    int episodes = 1000;
    std::size_t replay_capacity = 50000;
    std::size_t warmup_transitions = 500;
    int updates_per_episode = 6;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpisodeLogRow {
    int episode = 0;
    double ret = 0.0;
    int success = 0;
    double sub_success = 0.0;
    int steps = 0;
    double path_length = 0.0;
};

struct TrainResult {
    std::shared_ptr<AgentNets<float>> nets;
    std::vector<EpisodeLogRow> log;
};

// Runs the macro-action TD3-style loop over the episode specs (cycled in
// order). Deterministic under cfg.seed.
TrainResult train(const std::vector<env::EpisodeSpec>& dataset, const TrainConfig& cfg,
                  const NetConfig& net_cfg, LearnedVariant variant,
                  const reward::RewardConfig& reward_cfg);

std::string training_log_csv(const std::vector<EpisodeLogRow>& log);

// ---------------------------------------------------------------------------
// checkpoints

void save_checkpoint(const std::string& path, AgentNets<float>& nets,
                     const std::map<std::string, std::string>& meta);
std::shared_ptr<AgentNets<float>> load_checkpoint(const std::string& path,
                                                  std::map<std::string, std::string>& meta_out);

// ---------------------------------------------------------------------------
// evaluation-time controller

class LearnedController : public agents::Controller {
  public:
    LearnedController(std::shared_ptr<AgentNets<float>> nets, LearnedVariant variant,
                      std::vector<int> sequence = {});

    env::Action act(env::Episode& ep, Rng& rng) override;

  private:
    std::shared_ptr<AgentNets<float>> nets_;
    LearnedVariant variant_;
    std::vector<int> sequence_;
    agents::LongTermGoal goal_;
    bool have_goal_ = false;
    bool goal_dead_ = false;  // refresh already failed; wait for a regular trigger
    env::Action last_action_ = env::Action::Stop;
    env::Pose last_pose_;
};

// Nearest plan-free cell to `raw` on the agent map (expanding Chebyshev rings,
// row-major within a ring); returns `raw` when the whole map is blocked.
scene::Cell snap_goal_to_free(const env::SemanticMapState& map, scene::Cell raw);

}  // namespace multion::learn
