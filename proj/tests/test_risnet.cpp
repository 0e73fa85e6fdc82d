#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "risnoma/binary_io.hpp"
#include "risnoma/error.hpp"
#include "risnoma/risnet.hpp"
#include "support.hpp"

using namespace risnoma;
using namespace risnoma::testing;

namespace {

grad::Tensor random_gamma(Rng& rng, std::size_t n) {
    grad::Tensor g(8, n);
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            g(r, c) = r % 2 == 0 ? rng.uniform(0.0, 2.0) : rng.uniform(-std::numbers::pi, std::numbers::pi);
        }
    }
    return g;
}

// Random parameters with nonzero biases, so the test does not depend on
// the zero-bias initialization.
RisnetParams random_params(const RisnetConfig& config, Rng& rng) {
    RisnetParams p = init_params(config, rng.next());
    for (grad::Tensor* t : p.blocks()) {
        if (t->cols() == 1) {
            for (double& v : t->data()) v = rng.uniform(-0.5, 0.5);
        }
    }
    p.head_bias[0] = 1.0;
    return p;
}

} // namespace

TEST_SUITE("risnet") {

TEST_CASE("parameter counts") {
    CHECK(param_count(RisnetConfig{}) == 8201);
    CHECK(param_count(RisnetConfig{8, 8, 8}) == 2569);
    CHECK(param_count(RisnetConfig{2, 1, 1}) == 29);
    CHECK(init_params(RisnetConfig{}, 1).count() == 8201);
    CHECK_THROWS_AS(param_count(RisnetConfig{1, 16, 16}), ConfigurationError);
    CHECK_THROWS_AS(param_count(RisnetConfig{8, 0, 16}), ConfigurationError);
}

TEST_CASE("parameter count does not depend on N") {
    const RisnetParams p = init_params(RisnetConfig{}, 3);
    for (std::size_t n : {9, 64, 256}) {
        ChannelFeature f{grad::Tensor(8, n, 0.5)};
        CHECK(forward(p, f).size() == n);
    }
    CHECK(p.count() == 8201);
}

TEST_CASE("initialization") {
    const RisnetConfig config;
    CHECK(init_params(config, 5) == init_params(config, 5));
    CHECK_FALSE(init_params(config, 5) == init_params(config, 6));
    const RisnetParams p = init_params(config, 5);
    CHECK(p.hidden.size() == 7);
    CHECK(p.hidden[0].local_weight.shape_string() == "16x8");
    CHECK(p.hidden[1].global_weight.shape_string() == "16x40");
    CHECK(p.head_weight.shape_string() == "1x40");
    const double a1 = std::sqrt(6.0 / (16 + 8));
    for (double v : p.hidden[0].local_weight.data()) {
        CHECK(std::abs(v) < a1);
    }
    for (const grad::Tensor* t : p.blocks()) {
        if (t->cols() == 1) {
            for (double v : t->data()) CHECK(v == 0.0);
        }
    }
}

TEST_CASE("block names") {
    const RisnetParams p = init_params(RisnetConfig{}, 1);
    CHECK(p.block_name(0) == "layer 1 local weight");
    CHECK(p.block_name(7) == "layer 2 global bias");
    CHECK(p.block_name(28) == "output weight");
    CHECK(p.block_name(29) == "output bias");
}

TEST_CASE("zero parameters give zero phases") {
    Rng rng(1);
    const RisnetParams p = init_params(RisnetConfig{}, 1).zeros_like();
    const std::vector<double> f = forward(p, ChannelFeature{random_gamma(rng, 10)});
    for (double v : f) CHECK(v == 0.0);
    const CMatrix phi = phases_to_phi(f);
    CHECK((phi - CMatrix::Identity(10, 10)).norm() == 0.0);
}

TEST_CASE("single antenna: the global mean is the local pre-activation") {
    Rng rng(2);
    const RisnetConfig config{3, 4, 4};
    const RisnetParams p = random_params(config, rng);
    const grad::Tensor gamma = random_gamma(rng, 1);
    grad::Tape tape(false);
    const auto vars = bind_params(tape, p, false);
    const grad::Var g = tape.constant(gamma);
    const grad::Var pre = grad::add_broadcast(grad::matmul(vars[2], g), vars[3]);
    const grad::Var pooled = grad::mean_cols(grad::relu(pre));
    const grad::Var local = grad::relu(pre);
    CHECK(pooled.value() == local.value());
}

TEST_CASE("phases are non-negative and the global block is constant across antennas") {
    Rng rng(3);
    const RisnetConfig config;
    const RisnetParams p = random_params(config, rng);
    const grad::Tensor gamma = random_gamma(rng, 12);
    for (double v : forward(p, ChannelFeature{gamma})) CHECK(v >= 0.0);

    grad::Tape tape(false);
    const auto vars = bind_params(tape, p, false);
    const grad::Var g = tape.constant(gamma);
    const grad::Var pooled = grad::mean_cols(grad::relu(grad::add_broadcast(grad::matmul(vars[2], g), vars[3])));
    const grad::Var broadcast = grad::matmul(pooled, tape.constant(grad::Tensor(1, 12, 1.0)));
    for (std::size_t r = 0; r < broadcast.value().rows(); ++r) {
        for (std::size_t c = 1; c < 12; ++c) CHECK(broadcast.value()(r, c) == broadcast.value()(r, 0));
    }
}

TEST_CASE("swapping two antenna columns swaps the phases") {
    Rng rng(4);
    const RisnetParams p = random_params(RisnetConfig{}, rng);
    const grad::Tensor gamma = random_gamma(rng, 2);
    grad::Tensor swapped(8, 2);
    for (std::size_t r = 0; r < 8; ++r) {
        swapped(r, 0) = gamma(r, 1);
        swapped(r, 1) = gamma(r, 0);
    }
    const auto a = forward(p, ChannelFeature{gamma});
    const auto b = forward(p, ChannelFeature{swapped});
    CHECK(std::abs(a[0] - b[1]) <= 1e-12);
    CHECK(std::abs(a[1] - b[0]) <= 1e-12);
}

TEST_CASE("forward shape checks") {
    const RisnetParams p = init_params(RisnetConfig{}, 1);
    CHECK_THROWS_AS(forward(p, ChannelFeature{grad::Tensor(7, 4)}), ConfigurationError);
    CHECK_THROWS_AS(forward(p, ChannelFeature{grad::Tensor(8, 0)}), ConfigurationError);
    grad::Tape tape(false);
    auto vars = bind_params(tape, p, false);
    vars.pop_back();
    CHECK_THROWS_AS(forward(p.config, vars, tape.constant(grad::Tensor(8, 3))), ConfigurationError);
}

TEST_CASE("identity head can emit negative phases") {
    Rng rng(5);
    RisnetConfig config{3, 4, 4};
    RisnetParams p = random_params(config, rng);
    p.head_bias[0] = -100.0;
    const grad::Tensor gamma = random_gamma(rng, 5);
    for (double v : forward(p, ChannelFeature{gamma})) CHECK(v == 0.0);
    p.config.identity_head = true;
    for (double v : forward(p, ChannelFeature{gamma})) CHECK(v < 0.0);
}

TEST_CASE("phases to Phi") {
    CHECK((phases_to_phi(std::vector<double>{0.0, 0.0}) - CMatrix::Identity(2, 2)).norm() == 0.0);
    const CMatrix pi = phases_to_phi(std::vector<double>{std::numbers::pi});
    CHECK(std::abs(pi(0, 0) - std::complex<double>(-1.0, 0.0)) <= 1e-15);
    Rng rng(6);
    const CMatrix phi = phases_to_phi(random_phases(rng, 50));
    for (Eigen::Index i = 0; i < 50; ++i) {
        CHECK(std::abs(std::abs(phi(i, i)) - 1.0) < 1e-15);
        for (Eigen::Index j = 0; j < 50; ++j) {
            if (i != j) CHECK(phi(i, j) == std::complex<double>(0.0, 0.0));
        }
    }
}

TEST_CASE("network gradient matches finite differences") {
    Rng rng(7);
    const RisnetConfig config{3, 3, 2};
    const RisnetParams p = random_params(config, rng);
    const grad::Tensor gamma = random_gamma(rng, 4);
    const grad::Tensor weights = [&] {
        grad::Tensor w(1, 4);
        for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
        return w;
    }();
    std::vector<grad::Tensor> leaves;
    for (const grad::Tensor* t : p.blocks()) leaves.push_back(*t);
    auto fn = [&](grad::Tape& tape, std::span<const grad::Var> in) {
        const grad::Var f = forward(config, in, tape.constant(gamma));
        return grad::sum_all(grad::mul(grad::sin(f), tape.constant(weights)));
    };
    CHECK(grad::finite_diff_check(fn, leaves, 1e-6) < 1e-5);
}

TEST_CASE("checkpoint round trip and layout") {
    Rng rng(8);
    const RisnetParams p = random_params(RisnetConfig{}, rng);
    const std::vector<char> bytes = encode_checkpoint(p);
    CHECK(bytes.size() == 4 + 5 * 4 + 8 * 8201);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RNCK");
    const RisnetParams back = decode_checkpoint(bytes);
    CHECK(back == p);
    CHECK(encode_checkpoint(back) == bytes);

    const std::string path = (std::filesystem::temp_directory_path() / "risnoma_test.rnck").string();
    write_checkpoint(p, path);
    CHECK(read_checkpoint(path) == p);
    CHECK(io::read_file(path) == bytes);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint decoding errors") {
    Rng rng(9);
    const std::vector<char> bytes = encode_checkpoint(random_params(RisnetConfig{2, 2, 2}, rng));

    std::vector<char> truncated(bytes.begin(), bytes.end() - 3);
    CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);

    std::vector<char> magic = bytes;
    magic[3] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);

    std::vector<char> layers = bytes;
    layers[8] = 1;  // L = 1
    CHECK_THROWS_AS(decode_checkpoint(layers), FormatError);

    std::vector<char> input_dim = bytes;
    input_dim[20] = 9;
    try {
        decode_checkpoint(input_dim);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 20);
    }

    std::vector<char> huge = bytes;
    huge[15] = 0x10;  // d_l in the hundreds of millions
    CHECK_THROWS_AS(decode_checkpoint(huge), FormatError);

    std::vector<char> trailing = bytes;
    trailing.push_back(1);
    CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);
}

} // TEST_SUITE
