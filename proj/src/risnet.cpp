#include "risnoma/risnet.hpp"

#include <cmath>

#include "risnoma/binary_io.hpp"
#include "risnoma/error.hpp"
#include "risnoma/random.hpp"

namespace risnoma {

namespace {

constexpr std::string_view kMagic = "RNCK";

grad::Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    grad::Tensor t(rows, cols);
    for (double& v : t.data()) v = rng.uniform(-a, a);
    return t;
}

RisnetParams allocate(const RisnetConfig& config) {
    config.validate();
    RisnetParams p;
    p.config = config;
    p.hidden.resize(config.layers - 1);
    for (std::size_t i = 0; i + 1 < config.layers; ++i) {
        const std::size_t width = config.input_width(i + 1);
        p.hidden[i].local_weight = grad::Tensor(config.local_dim, width);
        p.hidden[i].local_bias = grad::Tensor(config.local_dim, 1);
        p.hidden[i].global_weight = grad::Tensor(config.global_dim, width);
        p.hidden[i].global_bias = grad::Tensor(config.global_dim, 1);
    }
    p.head_weight = grad::Tensor(1, config.input_width(config.layers));
    p.head_bias = grad::Tensor(1, 1);
    return p;
}

} // namespace

void RisnetConfig::validate() const {
    if (layers < 2) {
        throw ConfigurationError("RISnet needs at least 2 layers, got " + std::to_string(layers));
    }
    if (local_dim < 1 || global_dim < 1) {
        throw ConfigurationError("RISnet feature dimensions must be at least 1");
    }
}

std::size_t RisnetConfig::input_width(std::size_t layer) const {
    return layer == 1 ? kInputDim : kInputDim + local_dim + global_dim;
}

std::vector<grad::Tensor*> RisnetParams::blocks() {
    std::vector<grad::Tensor*> out;
    out.reserve(hidden.size() * 4 + 2);
    for (HiddenLayer& h : hidden) {
        out.push_back(&h.local_weight);
        out.push_back(&h.local_bias);
        out.push_back(&h.global_weight);
        out.push_back(&h.global_bias);
    }
    out.push_back(&head_weight);
    out.push_back(&head_bias);
    return out;
}

std::vector<const grad::Tensor*> RisnetParams::blocks() const {
    std::vector<const grad::Tensor*> out;
    out.reserve(hidden.size() * 4 + 2);
    for (const HiddenLayer& h : hidden) {
        out.push_back(&h.local_weight);
        out.push_back(&h.local_bias);
        out.push_back(&h.global_weight);
        out.push_back(&h.global_bias);
    }
    out.push_back(&head_weight);
    out.push_back(&head_bias);
    return out;
}

std::string RisnetParams::block_name(std::size_t block) const {
    static constexpr const char* kinds[] = {"local weight", "local bias", "global weight", "global bias"};
    if (block < hidden.size() * 4) {
        return "layer " + std::to_string(block / 4 + 1) + " " + kinds[block % 4];
    }
    return block == hidden.size() * 4 ? "output weight" : "output bias";
}

std::size_t RisnetParams::count() const {
    std::size_t n = 0;
    for (const grad::Tensor* t : blocks()) n += t->size();
    return n;
}

RisnetParams RisnetParams::zeros_like() const { return allocate(config); }

bool RisnetParams::operator==(const RisnetParams& other) const {
    if (config.layers != other.config.layers || config.local_dim != other.config.local_dim ||
        config.global_dim != other.config.global_dim) {
        return false;
    }
    const auto a = blocks();
    const auto b = other.blocks();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(*a[i] == *b[i])) return false;
    }
    return true;
}

std::size_t param_count(const RisnetConfig& config) {
    config.validate();
    std::size_t n = 0;
    for (std::size_t i = 1; i < config.layers; ++i) {
        const std::size_t width = config.input_width(i);
        n += config.local_dim * width + config.local_dim;
        n += config.global_dim * width + config.global_dim;
    }
    return n + config.input_width(config.layers) + 1;
}

RisnetParams init_params(const RisnetConfig& config, std::uint64_t seed) {
    RisnetParams p = allocate(config);
    Rng rng(seed);
    for (HiddenLayer& h : p.hidden) {
        h.local_weight = glorot(h.local_weight.rows(), h.local_weight.cols(), rng);
        h.global_weight = glorot(h.global_weight.rows(), h.global_weight.cols(), rng);
    }
    p.head_weight = glorot(1, p.head_weight.cols(), rng);
    return p;
}

std::vector<grad::Var> bind_params(grad::Tape& tape, const RisnetParams& params, bool track) {
    std::vector<grad::Var> vars;
    for (const grad::Tensor* t : params.blocks()) vars.push_back(tape.leaf(*t, track));
    return vars;
}

grad::Var forward(const RisnetConfig& config, std::span<const grad::Var> params, const grad::Var& gamma) {
    using namespace grad;
    config.validate();
    const std::size_t expected = (config.layers - 1) * 4 + 2;
    if (params.size() != expected) {
        throw ConfigurationError("RISnet expects " + std::to_string(expected) + " parameter blocks, got " +
                                 std::to_string(params.size()));
    }
    if (gamma.value().rows() != RisnetConfig::kInputDim || gamma.value().cols() == 0) {
        throw ConfigurationError("channel feature must be 8xN with N >= 1, got " +
                                 gamma.value().shape_string());
    }
    Tape& tape = gamma.tape();
    const std::size_t n = gamma.value().cols();
    const Var ones = tape.constant(Tensor(1, n, 1.0));

    Var features = gamma;
    for (std::size_t i = 0; i + 1 < config.layers; ++i) {
        const Var& lw = params[4 * i + 0];
        const Var& lb = params[4 * i + 1];
        const Var& gw = params[4 * i + 2];
        const Var& gb = params[4 * i + 3];
        const Var local = relu(add_broadcast(matmul(lw, features), lb));
        const Var pooled = mean_cols(relu(add_broadcast(matmul(gw, features), gb)));
        const Var global = matmul(pooled, ones);
        const Var parts[] = {gamma, local, global};
        features = concat_rows(parts);
    }
    const Var& hw = params[expected - 2];
    const Var& hb = params[expected - 1];
    const Var out = add_broadcast(matmul(hw, features), hb);
    return config.identity_head ? out : relu(out);
}

std::vector<double> forward(const RisnetParams& params, const ChannelFeature& feature) {
    grad::Tape tape(false);
    const auto vars = bind_params(tape, params, false);
    const grad::Var gamma = tape.constant(feature.gamma);
    const grad::Var f = forward(params.config, vars, gamma);
    const auto d = f.value().data();
    return {d.begin(), d.end()};
}

CMatrix phases_to_phi(std::span<const double> phases) {
    const auto n = static_cast<Eigen::Index>(phases.size());
    CMatrix phi = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        phi(i, i) = {std::cos(phases[static_cast<std::size_t>(i)]),
                     std::sin(phases[static_cast<std::size_t>(i)])};
    }
    return phi;
}

std::vector<char> encode_checkpoint(const RisnetParams& params) {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(params.config.layers));
    w.u32(static_cast<std::uint32_t>(params.config.local_dim));
    w.u32(static_cast<std::uint32_t>(params.config.global_dim));
    w.u32(static_cast<std::uint32_t>(RisnetConfig::kInputDim));
    for (const grad::Tensor* t : params.blocks()) {
        for (double v : t->data()) w.f64(v);
    }
    return w.buffer();
}

RisnetParams decode_checkpoint(std::vector<char> bytes) {
    io::ByteReader r(std::move(bytes));
    r.expect_magic(kMagic, "checkpoint header");
    const std::uint64_t version_at = r.offset();
    const std::uint32_t version = r.u32("checkpoint header");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
    }
    const std::uint64_t dims_at = r.offset();
    RisnetConfig config;
    config.layers = r.u32("checkpoint header");
    config.local_dim = r.u32("checkpoint header");
    config.global_dim = r.u32("checkpoint header");
    const std::uint32_t input_dim = r.u32("checkpoint header");
    if (input_dim != RisnetConfig::kInputDim) {
        throw FormatError("checkpoint input dimension " + std::to_string(input_dim) + " is not 8", dims_at + 12);
    }
    try {
        config.validate();
    } catch (const ConfigurationError& e) {
        throw FormatError(std::string("invalid checkpoint header: ") + e.what(), dims_at);
    }
    constexpr std::size_t kMaxDim = 1U << 16;
    if (config.layers > kMaxDim || config.local_dim > kMaxDim || config.global_dim > kMaxDim) {
        throw FormatError("implausible checkpoint dimensions", dims_at);
    }
    r.require(8ULL * param_count(config), "checkpoint parameters");
    RisnetParams params = allocate(config);
    for (grad::Tensor* t : params.blocks()) {
        for (double& v : t->data()) v = r.f64("checkpoint parameters");
    }
    r.expect_end("checkpoint");
    return params;
}

void write_checkpoint(const RisnetParams& params, const std::string& path) {
    io::write_file_atomic(path, encode_checkpoint(params));
}

RisnetParams read_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

} // namespace risnoma
