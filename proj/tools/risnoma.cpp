// risnoma: data generation, training, evaluation and baselines.
//
// Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
// 3 malformed input file, 4 numerical or training failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risnoma/dataset_io.hpp"
#include "risnoma/error.hpp"
#include "risnoma/evaluation.hpp"
#include "risnoma/precoding.hpp"
#include "risnoma/risnet.hpp"
#include "risnoma/run_config.hpp"
#include "risnoma/training.hpp"

namespace {

using namespace risnoma;

enum ExitCode : int { kOk = 0, kIo = 1, kUsage = 2, kFormat = 3, kNumerical = 4 };

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--config", common.config_path, "flat key = value configuration file");
    cmd->add_option("--set", common.overrides, "override a configuration key, KEY=VALUE (repeatable)");
    cmd->add_option("--threads", common.threads, "worker threads, 0 = one per hardware thread");
}

RunConfig load_config(const CommonOptions& common) {
    RunConfig config;
    if (!common.config_path.empty()) config.apply_file(common.config_path);
    config.apply_environment();
    for (const std::string& kv : common.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
        }
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (common.threads) config.training.threads = *common.threads;
    return config;
}

EvaluationOptions evaluation_options(const RunConfig& config) {
    EvaluationOptions options;
    options.targets = config.training.objective.targets;
    options.reorder_users = config.training.objective.reorder_users;
    options.threads = config.training.threads;
    return options;
}

void print_summary(const EvalReport& report) {
    std::printf("power=%.6g qd=%.4g%%\n", report.mean_power_qd_only, report.qd_percentage);
}

int run(int argc, char** argv) {
    CLI::App app{"RIS-assisted NOMA phase optimization"};
    app.require_subcommand(1);

    CommonOptions common;

    std::string gen_out;
    std::optional<std::size_t> gen_samples;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic RNDS dataset");
    add_common(gen, common);
    gen->add_option("--out", gen_out, "output dataset path")->required();
    gen->add_option("--samples", gen_samples, "number of samples (default: train_samples)");
    gen->add_option("--seed", gen_seed, "dataset seed (default: seed)");
    std::string gen_test_out;
    std::optional<std::size_t> gen_test_samples;
    gen->add_option("--test-out", gen_test_out, "also write a test split sharing the same H");
    gen->add_option("--test-samples", gen_test_samples, "test split size (default: test_samples)");

    std::string train_dataset;
    std::string train_checkpoint;
    std::string train_metrics;
    std::optional<double> epsilon;
    std::optional<double> lr;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> batch;
    std::optional<std::uint64_t> train_seed;
    auto* train_cmd = app.add_subcommand("train", "train RISnet on a dataset");
    add_common(train_cmd, common);
    train_cmd->add_option("--dataset", train_dataset, "training dataset (RNDS)")->required();
    train_cmd->add_option("--out-checkpoint", train_checkpoint, "checkpoint output path (RNCK)")->required();
    train_cmd->add_option("--out-metrics", train_metrics, "per-iteration metrics CSV");
    train_cmd->add_option("--epsilon", epsilon, "power weight in the objective");
    train_cmd->add_option("--lr", lr, "learning rate");
    train_cmd->add_option("--iterations", iterations, "training iterations");
    train_cmd->add_option("--batch", batch, "batch size");
    train_cmd->add_option("--seed", train_seed, "initialization and batch sampling seed");

    std::string eval_checkpoint;
    std::string eval_dataset;
    std::string eval_report;
    bool timing = false;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint (RNCK)")->required();
    eval_cmd->add_option("--dataset", eval_dataset, "test dataset (RNDS)")->required();
    eval_cmd->add_option("--out-report", eval_report, "report CSV output path");
    eval_cmd->add_flag("--timing", timing, "record per-sample inference time (output is then not reproducible)");

    std::string base_dataset;
    std::string base_report;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> base_seed;
    auto* base_cmd = app.add_subcommand("baseline", "best-of-K random phase baseline");
    add_common(base_cmd, common);
    base_cmd->add_option("--dataset", base_dataset, "test dataset (RNDS)")->required();
    base_cmd->add_option("--trials", trials, "random trials per sample (default: baseline_trials)");
    base_cmd->add_option("--seed", base_seed, "baseline seed (default: seed)");
    base_cmd->add_option("--out-report", base_report, "report CSV output path");

    std::string inspect_checkpoint;
    std::string inspect_dataset;
    auto* inspect_cmd = app.add_subcommand("inspect", "print checkpoint or dataset metadata");
    auto* ick = inspect_cmd->add_option("--checkpoint", inspect_checkpoint, "checkpoint (RNCK)");
    auto* ids = inspect_cmd->add_option("--dataset", inspect_dataset, "dataset (RNDS)");
    ick->excludes(ids);
    inspect_cmd->require_option(1);

    auto* config_cmd = app.add_subcommand("config", "print the merged configuration");
    add_common(config_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (*gen) {
        RunConfig config = load_config(common);
        config.geometry.validate();
        const std::size_t count = gen_samples.value_or(config.train_samples);
        const std::size_t test_count = gen_test_out.empty() ? 0 : gen_test_samples.value_or(config.test_samples);
        if (!gen_test_out.empty() && test_count == 0) {
            throw UsageError("--test-samples must be at least 1");
        }
        const std::uint64_t seed = gen_seed.value_or(config.training.seed);
        const Dataset all = generate_synthetic_dataset(config.geometry, count + test_count, seed);
        const Dataset dataset = all.head(count);
        write_dataset(dataset, gen_out);
        if (test_count > 0) write_dataset(all.slice(count, test_count), gen_test_out);
        std::printf("M=%zu N=%zu samples=%zu seed=%llu\n", dataset.bs_antennas(), dataset.ris_elements(),
                    dataset.size(), static_cast<unsigned long long>(seed));
        if (test_count > 0) std::printf("test_samples=%zu\n", test_count);
    } else if (*train_cmd) {
        RunConfig config = load_config(common);
        if (epsilon) config.training.objective.epsilon = *epsilon;
        if (lr) config.training.learning_rate = *lr;
        if (iterations) config.training.iterations = *iterations;
        if (batch) config.training.batch_size = *batch;
        if (train_seed) config.training.seed = *train_seed;
        config.network.validate();
        config.training.validate();
        config.training.checkpoint_path = train_checkpoint;
        config.training.metrics_path = train_metrics;

        const Dataset dataset = read_dataset(train_dataset);
        const TrainingResult result = train(dataset, config.network, config.training);
        const auto& records = result.history.records;
        if (records.empty()) {
            std::printf("iterations=0 params=%zu\n", result.params.count());
        } else {
            std::printf("iterations=%zu loss=%.6g power=%.6g qd=%.4g%%\n", records.size(), records.back().mean_loss,
                        records.back().mean_power, 100.0 * records.back().qd_fraction);
        }
    } else if (*eval_cmd) {
        const RunConfig config = load_config(common);
        config.training.objective.targets.validate();
        const RisnetParams params = read_checkpoint(eval_checkpoint);
        const Dataset dataset = read_dataset(eval_dataset);
        EvaluationOptions options = evaluation_options(config);
        options.timing = timing;
        const EvalReport report = evaluate(params, dataset, options);
        if (!eval_report.empty()) write_report(report, eval_report);
        print_summary(report);
    } else if (*base_cmd) {
        const RunConfig config = load_config(common);
        config.training.objective.targets.validate();
        const Dataset dataset = read_dataset(base_dataset);
        const EvalReport report = evaluate_baseline(dataset, trials.value_or(config.baseline_trials),
                                                    base_seed.value_or(config.training.seed),
                                                    evaluation_options(config));
        if (!base_report.empty()) write_report(report, base_report);
        print_summary(report);
    } else if (*inspect_cmd) {
        if (!inspect_checkpoint.empty()) {
            const RisnetParams params = read_checkpoint(inspect_checkpoint);
            std::printf("format=RNCK version=%u layers=%zu local_dim=%zu global_dim=%zu input_dim=%zu\n",
                        kCheckpointVersion, params.config.layers, params.config.local_dim,
                        params.config.global_dim, RisnetConfig::kInputDim);
            std::printf("params=%zu\n", params.count());
        } else {
            const Dataset dataset = read_dataset(inspect_dataset);
            std::printf("format=RNDS version=%u M=%zu N=%zu samples=%zu seed=%llu\n", kDatasetVersion,
                        dataset.bs_antennas(), dataset.ris_elements(), dataset.size(),
                        static_cast<unsigned long long>(dataset.seed()));
        }
    } else if (*config_cmd) {
        const RunConfig config = load_config(common);
        std::fputs(config.dump().c_str(), stdout);
    }
    return kOk;
}

int fail(int code, const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return code;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const risnoma::UsageError& e) {
        return fail(kUsage, e);
    } catch (const risnoma::ConfigurationError& e) {
        return fail(kUsage, e);
    } catch (const risnoma::FormatError& e) {
        return fail(kFormat, e);
    } catch (const risnoma::IoError& e) {
        return fail(kIo, e);
    } catch (const risnoma::Error& e) {
        return fail(kNumerical, e);
    } catch (const std::exception& e) {
        return fail(kNumerical, e);
    }
}
