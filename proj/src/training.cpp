#include "risnoma/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "risnoma/binary_io.hpp"
#include "risnoma/error.hpp"
#include "risnoma/parallel.hpp"
#include "risnoma/random.hpp"

namespace risnoma {

namespace {

struct SampleResult {
    double loss = 0.0;
    double power = 0.0;
    bool is_qd = false;
    std::vector<grad::Tensor> grads;
};

SampleResult run_sample(const RisnetParams& params, const BatchItem& item, const ObjectiveSettings& settings,
                        bool with_gradient) {
    grad::Tape tape(with_gradient);
    const auto vars = bind_params(tape, params, with_gradient);
    const ObjectiveTerms terms = network_objective(tape, params.config, vars, item, settings);

    SampleResult r;
    r.loss = terms.loss.value().item();
    r.power = terms.power.value().item();
    r.is_qd = terms.is_qd;
    if (with_gradient) {
        const grad::Gradients g = tape.backward(terms.loss);
        r.grads.reserve(vars.size());
        for (const grad::Var& v : vars) r.grads.push_back(g.at(v));
    }
    return r;
}

std::string partial_path(const std::string& path) { return path + ".partial"; }

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void ObjectiveSettings::validate() const {
    targets.validate();
    if (!(epsilon > 0.0)) {
        throw ConfigurationError("epsilon must be positive");
    }
    if (!(q_cap > 0.0) || !std::isfinite(q_cap)) {
        throw ConfigurationError("Q cap must be positive and finite");
    }
}

void TrainingConfig::validate() const {
    objective.validate();
    if (!(learning_rate > 0.0)) {
        throw ConfigurationError("learning rate must be positive");
    }
    if (batch_size < 1) {
        throw ConfigurationError("batch size must be at least 1");
    }
    if (checkpoint_every < 1) {
        throw ConfigurationError("checkpoint interval must be at least 1");
    }
}

ObjectiveTerms sample_objective(grad::Tape& tape, const ChannelSample& sample, const grad::Var& phases,
                                const ObjectiveSettings& settings) {
    using namespace grad;
    settings.validate();
    const auto rows = compose_channel(tape, sample, phases);
    const PrecodingTerms p = precoding_terms(rows, settings.targets, settings.reorder_users);

    const double rho1 = settings.targets.sinr(1);
    const double rho2 = settings.targets.sinr(2);
    const double c = p.cos_sq.value().item();
    auto k = [&](double v) { return scalar_like(p.cos_sq, v); };

    ObjectiveTerms t;
    t.swapped = p.swapped;
    t.power = p.power;
    t.q_value = quasi_degradation_threshold(c, settings.targets);
    t.gain_ratio = p.gain_strong.value().item() / p.gain_weak.value().item();
    t.is_qd = t.q_value <= t.gain_ratio;

    Var q_clamped;
    if (c <= 0.0 || c <= (1.0 + rho1) / (settings.q_cap + rho1)) {
        q_clamped = k(settings.q_cap);
    } else {
        const Var den = square(add(k(1.0 + rho2), mul(k(-rho2), p.cos_sq)));
        const Var q = sub(mul(k(1.0 + rho1), reciprocal(p.cos_sq)), divide(mul(k(rho1), p.cos_sq), den));
        q_clamped = sub(q, relu(sub(q, k(settings.q_cap))));
    }
    const Var ratio = divide(p.gain_strong, p.gain_weak);
    t.penalty = log(add(k(1.0), relu(sub(q_clamped, ratio))));
    t.loss = add(t.penalty, mul(k(settings.epsilon), t.power));
    return t;
}

ObjectiveTerms network_objective(grad::Tape& tape, const RisnetConfig& config, std::span<const grad::Var> params,
                                 const BatchItem& item, const ObjectiveSettings& settings) {
    const grad::Var gamma = tape.constant(item.feature->gamma);
    const grad::Var phases = forward(config, params, gamma);
    return sample_objective(tape, *item.sample, phases, settings);
}

BatchEvaluation batch_loss(const RisnetParams& params, std::span<const BatchItem> batch,
                           const ObjectiveSettings& settings, bool with_gradient, std::size_t threads) {
    if (batch.empty()) {
        throw ConfigurationError("batch must not be empty");
    }
    settings.validate();
    std::vector<SampleResult> results(batch.size());
    parallel_for(batch.size(), threads,
                 [&](std::size_t i) { results[i] = run_sample(params, batch[i], settings, with_gradient); });

    BatchEvaluation out;
    const double n = static_cast<double>(batch.size());
    std::size_t qd = 0;
    for (const SampleResult& r : results) {
        out.loss += r.loss;
        out.mean_power += r.power;
        qd += r.is_qd ? 1 : 0;
    }
    out.loss /= n;
    out.mean_power /= n;
    out.qd_fraction = static_cast<double>(qd) / n;

    if (with_gradient) {
        out.gradient = params.zeros_like();
        auto blocks = out.gradient.blocks();
        for (const SampleResult& r : results) {
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                auto dst = blocks[b]->data();
                const auto src = r.grads[b].data();
                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
            }
        }
        for (grad::Tensor* t : blocks) {
            for (double& v : t->data()) v /= n;
        }
    }
    return out;
}

AdamState AdamState::for_params(const RisnetParams& params) {
    AdamState s;
    s.first_moment = params.zeros_like();
    s.second_moment = params.zeros_like();
    return s;
}

void adam_step(RisnetParams& params, const RisnetParams& gradient, AdamState& state, double learning_rate,
               std::size_t iteration) {
    auto p = params.blocks();
    const auto g = gradient.blocks();
    auto m = state.first_moment.blocks();
    auto v = state.second_moment.blocks();
    if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
        throw ConfigurationError("Adam state does not match the parameter layout");
    }
    for (std::size_t b = 0; b < p.size(); ++b) {
        if (!g[b]->same_shape(*p[b]) || !m[b]->same_shape(*p[b]) || !v[b]->same_shape(*p[b])) {
            throw ConfigurationError("Adam shape mismatch in " + params.block_name(b) + ": parameter " +
                                     p[b]->shape_string() + ", gradient " + g[b]->shape_string());
        }
        if (!g[b]->all_finite()) {
            throw TrainingError("non-finite gradient at iteration " + std::to_string(iteration) + " in " +
                                params.block_name(b));
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t b = 0; b < p.size(); ++b) {
        auto pd = p[b]->data();
        const auto gd = g[b]->data();
        auto md = m[b]->data();
        auto vd = v[b]->data();
        for (std::size_t j = 0; j < pd.size(); ++j) {
            md[j] = state.beta1 * md[j] + (1.0 - state.beta1) * gd[j];
            vd[j] = state.beta2 * vd[j] + (1.0 - state.beta2) * gd[j] * gd[j];
            const double m_hat = md[j] / correction1;
            const double v_hat = vd[j] / correction2;
            pd[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.stability);
        }
    }
}

PreparedSamples::PreparedSamples(const Dataset& dataset) {
    if (dataset.empty()) return;
    const CMatrix pinv = pseudo_inverse(dataset.bs_ris());
    samples_.reserve(dataset.size());
    features_.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        samples_.push_back(dataset.sample(i));
        features_.push_back(extract_features(samples_.back(), pinv));
    }
}

std::vector<BatchItem> PreparedSamples::all() const {
    std::vector<BatchItem> items;
    items.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) items.push_back(item(i));
    return items;
}

TrainingResult train(const Dataset& dataset, const RisnetConfig& network, const TrainingConfig& config,
                     const IterationCallback& on_iteration) {
    config.validate();
    network.validate();
    if (dataset.empty()) {
        throw ConfigurationError("training dataset is empty");
    }

    TrainingResult result;
    result.params = init_params(network, config.seed);
    result.history.records.reserve(config.iterations);
    const PreparedSamples prepared(dataset);
    AdamState state = AdamState::for_params(result.params);
    Rng batch_rng(derive_seed(config.seed, 1));
    std::vector<BatchItem> batch(config.batch_size);

    const bool checkpointing = !config.checkpoint_path.empty();
    std::size_t iteration = 0;
    try {
        for (iteration = 1; iteration <= config.iterations; ++iteration) {
            for (BatchItem& item : batch) item = prepared.item(batch_rng.index(prepared.size()));
            const BatchEvaluation eval =
                batch_loss(result.params, batch, config.objective, true, config.threads);
            if (!std::isfinite(eval.loss)) {
                throw TrainingError("non-finite loss at iteration " + std::to_string(iteration));
            }
            adam_step(result.params, eval.gradient, state, config.learning_rate, iteration);

            const IterationRecord record{iteration, eval.loss, eval.mean_power, eval.qd_fraction};
            result.history.records.push_back(record);
            if (on_iteration) on_iteration(record);
            if (checkpointing && iteration % config.checkpoint_every == 0 && iteration < config.iterations) {
                write_checkpoint(result.params, partial_path(config.checkpoint_path));
            }
        }
    } catch (const Error&) {
        if (checkpointing) {
            try {
                write_checkpoint(result.params, partial_path(config.checkpoint_path));
            } catch (const Error&) {
            }
        }
        throw;
    }

    if (!config.metrics_path.empty()) {
        io::write_file_atomic(config.metrics_path, format_metrics(result.history));
    }
    if (checkpointing) {
        write_checkpoint(result.params, config.checkpoint_path);
        std::error_code ec;
        std::filesystem::remove(partial_path(config.checkpoint_path), ec);
    }
    return result;
}

std::string format_metrics(const TrainingHistory& history) {
    std::string out = "iteration,mean_loss,mean_power,qd_fraction\n";
    for (const IterationRecord& r : history.records) {
        out += std::to_string(r.iteration) + ',' + format_g17(r.mean_loss) + ',' + format_g17(r.mean_power) + ',' +
               format_g17(r.qd_fraction) + '\n';
    }
    return out;
}

} // namespace risnoma
