#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "risnoma/autodiff.hpp"
#include "risnoma/channel.hpp"

namespace risnoma {

struct RisnetConfig {
    std::size_t layers = 8;       // L, counting the output layer
    std::size_t local_dim = 16;   // d_l
    std::size_t global_dim = 16;  // d_g
    // Identity instead of ReLU on the output layer. Not stored in checkpoints.
    bool identity_head = false;

    static constexpr std::size_t kInputDim = kFeatureRows;

    void validate() const;
    // Width B_i of the input to layer i (1-based).
    std::size_t input_width(std::size_t layer) const;
};

// Weights of hidden layer i < L. Biases are column vectors.
struct HiddenLayer {
    grad::Tensor local_weight;   // d_l × B_i
    grad::Tensor local_bias;     // d_l × 1
    grad::Tensor global_weight;  // d_g × B_i
    grad::Tensor global_bias;    // d_g × 1
};

struct RisnetParams {
    RisnetConfig config;
    std::vector<HiddenLayer> hidden;  // L - 1 entries
    grad::Tensor head_weight;         // 1 × B_L
    grad::Tensor head_bias;           // 1 × 1

    // Blocks in canonical order: per hidden layer local W, local b, global W,
    // global b; then head W, head b. Checkpoints and optimizer state use it.
    std::vector<grad::Tensor*> blocks();
    std::vector<const grad::Tensor*> blocks() const;
    std::string block_name(std::size_t block) const;

    std::size_t count() const;
    // Same layout, every entry zero.
    RisnetParams zeros_like() const;

    bool operator==(const RisnetParams& other) const;
};

std::size_t param_count(const RisnetConfig& config);

// Glorot-uniform weights, zero biases.
RisnetParams init_params(const RisnetConfig& config, std::uint64_t seed);

// Parameters as tape leaves, in canonical block order.
std::vector<grad::Var> bind_params(grad::Tape& tape, const RisnetParams& params, bool track);

// Phase row (1×N) for a feature matrix (8×N) held on the same tape.
grad::Var forward(const RisnetConfig& config, std::span<const grad::Var> params, const grad::Var& gamma);

// Untracked convenience wrapper.
std::vector<double> forward(const RisnetParams& params, const ChannelFeature& feature);

// Diagonal N×N matrix with entries cos f_n + j sin f_n.
CMatrix phases_to_phi(std::span<const double> phases);

// RNCK little-endian layout:
//   "RNCK" | u32 version=1 | u32 L | u32 d_l | u32 d_g | u32 input_dim=8
//   per hidden layer: local W, local b, global W, global b (row-major f64)
//   head W, head b
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<char> encode_checkpoint(const RisnetParams& params);
RisnetParams decode_checkpoint(std::vector<char> bytes);
void write_checkpoint(const RisnetParams& params, const std::string& path);
RisnetParams read_checkpoint(const std::string& path);

} // namespace risnoma
