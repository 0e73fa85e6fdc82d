#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "risnoma/channel.hpp"
#include "risnoma/precoding.hpp"
#include "risnoma/risnet.hpp"

namespace risnoma {

struct SampleRecord {
    std::size_t sample_index = 0;
    double power = 0.0;         // closed-form power, training mode
    bool is_qd = false;
    bool swapped = false;
    double inference_us = 0.0;  // 0 unless timing was requested
};

struct EvalReport {
    std::vector<SampleRecord> records;
    double mean_power_qd_only = 0.0;       // NaN when no sample is QD
    double mean_power_all_penalized = 0.0; // NaN when there are no samples
    double qd_percentage = 0.0;            // 0..100
    std::size_t trial_count = 0;           // 0 for network evaluations

    // Recomputes the summary fields from `records`.
    void summarize();
};

struct EvaluationOptions {
    SinrTargets targets;
    bool reorder_users = true;
    bool timing = false;   // wall clock of the forward pass per sample
    std::size_t threads = 1;
};

// Phi = RISnet(Gamma) per sample, then QD test and closed-form power.
EvalReport evaluate(const RisnetParams& params, const Dataset& dataset, const EvaluationOptions& options);

struct BaselineResult {
    RisConfiguration phi;
    double power = 0.0;
    double penalty = 0.0;   // log(1 + ReLU(Q - gain ratio)); 0 when QD
    bool is_qd = false;
    bool swapped = false;
};

// Best of `trials` phase vectors drawn uniform on [0, 2pi)^N from Rng(seed).
// Minimum power among QD trials; if none is QD, the smallest penalty.
// Trials are drawn sequentially, so a larger count extends the same stream.
BaselineResult random_phase_baseline(const ChannelSample& sample, std::size_t trials, const SinrTargets& targets,
                                     std::uint64_t seed, bool reorder_users = true);

// Baseline for every sample; sample i uses seed derive_seed(seed, i).
EvalReport evaluate_baseline(const Dataset& dataset, std::size_t trials, std::uint64_t seed,
                             const EvaluationOptions& options);

// CSV layout:
//   sample_index,power_w,is_qd,swapped,inference_us
//   one row per record
//   # mean_power_qd_only=<x>
//   # mean_power_all_penalized=<x>
//   # qd_percentage=<x>
//   # trial_count=<n>
std::string format_report(const EvalReport& report);
EvalReport parse_report(const std::string& text);
void write_report(const EvalReport& report, const std::string& path);
EvalReport read_report(const std::string& path);

} // namespace risnoma
