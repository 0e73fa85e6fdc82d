#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "risnoma/autodiff.hpp"
#include "risnoma/channel.hpp"
#include "risnoma/precoding.hpp"
#include "risnoma/risnet.hpp"

namespace risnoma {

// Everything the per-sample objective depends on besides the channel.
struct ObjectiveSettings {
    SinrTargets targets;
    double epsilon = 0.1;      // weight of the power term
    double q_cap = 1e6;        // Q is clamped here before the penalty ReLU
    bool reorder_users = true; // stronger user first, per RIS configuration

    void validate() const;
};

struct TrainingConfig {
    ObjectiveSettings objective;
    double learning_rate = 5e-6;
    std::size_t batch_size = 512;
    std::size_t iterations = 25000;
    std::uint64_t seed = 1;
    std::size_t threads = 1;  // 0: hardware concurrency; never changes results

    std::string checkpoint_path;   // empty: no checkpoints
    std::string metrics_path;      // empty: no metrics file
    std::size_t checkpoint_every = 500;

    void validate() const;
};

// Per-sample objective on the tape:
//   L = log(1 + ReLU(min(Q, cap) - ||h1||^2/||h2||^2)) + epsilon * P
struct ObjectiveTerms {
    grad::Var loss;
    grad::Var penalty;
    grad::Var power;
    double q_value = 0.0;  // unclamped, +inf when orthogonal
    double gain_ratio = 0.0;
    bool is_qd = false;
    bool swapped = false;
};

// A sample together with its (precomputed) feature matrix.
struct BatchItem {
    const ChannelSample* sample = nullptr;
    const ChannelFeature* feature = nullptr;
};

ObjectiveTerms sample_objective(grad::Tape& tape, const ChannelSample& sample, const grad::Var& phases,
                                const ObjectiveSettings& settings);

struct BatchEvaluation {
    double loss = 0.0;         // mean objective over the batch
    double mean_power = 0.0;
    double qd_fraction = 0.0;
    RisnetParams gradient;     // d loss / d params; empty unless requested
};

// Phases from RISnet(Gamma) on the tape, then sample_objective.
ObjectiveTerms network_objective(grad::Tape& tape, const RisnetConfig& config, std::span<const grad::Var> params,
                                 const BatchItem& item, const ObjectiveSettings& settings);

// Mean objective over the batch with Phi = RISnet(Gamma) per sample.
// Per-sample work may run on several threads; the reduction always runs in
// ascending sample order, so results do not depend on `threads`.
BatchEvaluation batch_loss(const RisnetParams& params, std::span<const BatchItem> batch,
                           const ObjectiveSettings& settings, bool with_gradient, std::size_t threads = 1);

struct AdamState {
    RisnetParams first_moment;
    RisnetParams second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double stability = 1e-8;

    static AdamState for_params(const RisnetParams& params);
};

// One bias-corrected Adam descent step. Throws TrainingError on non-finite
// gradients; `iteration` is only used in that message.
void adam_step(RisnetParams& params, const RisnetParams& gradient, AdamState& state, double learning_rate,
               std::size_t iteration = 0);

struct IterationRecord {
    std::size_t iteration = 0;
    double mean_loss = 0.0;
    double mean_power = 0.0;
    double qd_fraction = 0.0;
};

struct TrainingHistory {
    std::vector<IterationRecord> records;
};

struct TrainingResult {
    RisnetParams params;
    TrainingHistory history;
};

// Dataset samples paired with their features, computed once.
class PreparedSamples {
public:
    explicit PreparedSamples(const Dataset& dataset);

    std::size_t size() const { return samples_.size(); }
    BatchItem item(std::size_t i) const { return {&samples_.at(i), &features_.at(i)}; }
    std::vector<BatchItem> all() const;

private:
    std::vector<ChannelSample> samples_;
    std::vector<ChannelFeature> features_;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

// Unsupervised training loop. Parameters start from init_params(network,
// config.seed); each iteration draws a random batch (uniform, with replacement),
// forward, objective, backward, Adam. Writes periodic checkpoints to
// `<checkpoint_path>.partial` and the final one to `checkpoint_path`.
TrainingResult train(const Dataset& dataset, const RisnetConfig& network, const TrainingConfig& config,
                     const IterationCallback& on_iteration = {});

// CSV text for a training history (header plus one row per iteration).
std::string format_metrics(const TrainingHistory& history);

} // namespace risnoma
