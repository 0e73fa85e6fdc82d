#include <doctest.h>

#include <cmath>
#include <limits>

#include "risnoma/error.hpp"
#include "risnoma/precoding.hpp"
#include "support.hpp"

using namespace risnoma;
using namespace risnoma::testing;

namespace {

CVector vec2(std::complex<double> a, std::complex<double> b) {
    CVector v(2);
    v << a, b;
    return v;
}

// h1 = (2, 0), h2 = (sqrt 0.8, sqrt 0.2)
struct WorkedExample {
    CVector h1 = vec2(2.0, 0.0);
    CVector h2 = vec2(std::sqrt(0.8), std::sqrt(0.2));
    SinrTargets targets{1.0, 1.0, 1.0};
};

} // namespace

TEST_SUITE("precoding") {

TEST_CASE("targets") {
    const SinrTargets t{1.0, 2.0, 0.5};
    CHECK(t.sinr(1) == 1.0);
    CHECK(t.sinr(2) == 3.0);
    CHECK(t.scaled(2) == 1.5);
    CHECK_THROWS_AS((SinrTargets{0.0, 1.0, 1.0}.validate()), ConfigurationError);
    CHECK_THROWS_AS((SinrTargets{1.0, 1.0, 0.0}.validate()), ConfigurationError);
}

TEST_CASE("cos^2 psi examples") {
    Rng rng(1);
    const CVector h = random_cvector(rng, 3);
    CHECK(cos_sq_psi(h, std::complex<double>(0.3, -2.0) * h) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cos_sq_psi(vec2(1.0, 0.0), vec2(0.0, 1.0)) == 0.0);
    const WorkedExample ex;
    CHECK(cos_sq_psi(ex.h1, ex.h2) == doctest::Approx(0.8).epsilon(1e-14));
    CHECK_THROWS_AS(cos_sq_psi(CVector::Zero(2), ex.h2), DegenerateInputError);
    CHECK_THROWS_AS(cos_sq_psi(ex.h1, CVector::Zero(3)), ConfigurationError);
}

TEST_CASE("cos^2 psi ignores independent complex scaling") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const CVector a = random_cvector(rng, 4);
        const CVector b = random_cvector(rng, 4);
        const double c = cos_sq_psi(a, b);
        CHECK(cos_sq_psi(rng.complex_normal() * a, rng.complex_normal() * b) ==
              doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("quasi-degradation limits") {
    const SinrTargets t{1.3, 0.7, 1.0};
    CHECK(quasi_degradation_threshold(1.0, t) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::isinf(quasi_degradation_threshold(0.0, t)));

    // Collinear pair: QD exactly when user 1 is at least as strong.
    const CVector h = vec2(1.0, std::complex<double>(0.5, 0.5));
    CHECK(quasi_degradation(2.0 * h, h, t).is_qd);
    CHECK(quasi_degradation(h, h, t).is_qd);

    const QdReport orth = quasi_degradation(vec2(3.0, 0.0), vec2(0.0, 1.0), t);
    CHECK(std::isinf(orth.q_value));
    CHECK_FALSE(orth.is_qd);
}

TEST_CASE("worked example: Q, gain ratio and QD flag") {
    const WorkedExample ex;
    const QdReport r = quasi_degradation(ex.h1, ex.h2, ex.targets);
    CHECK(r.q_value == doctest::Approx(2.0 / 0.8 - 0.8 / 1.44).epsilon(1e-14));
    CHECK(r.q_value == doctest::Approx(1.9444).epsilon(1e-4));
    CHECK(r.gain_ratio == doctest::Approx(4.0));
    CHECK(r.is_qd);
}

TEST_CASE("worked example: precoders, power and SINRs") {
    const WorkedExample ex;
    const PrecodingSolution s = optimal_precoding(ex.h1, ex.h2, ex.targets);
    CHECK(s.w1.squaredNorm() == doctest::Approx(0.27778).epsilon(1e-4));
    CHECK(s.w2.squaredNorm() == doctest::Approx(1.13889).epsilon(1e-4));
    CHECK(s.power == doctest::Approx(1.41667).epsilon(1e-4));
    CHECK(s.power == doctest::Approx(17.0 / 12.0).epsilon(1e-13));
    CHECK(s.sinr.s1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.sinr.s22 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.sinr.s21 == doctest::Approx(1.8223).epsilon(1e-4));
    CHECK(s.rates.r1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.rates.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(optimal_power(4.0, 1.0, 0.8, ex.targets) == doctest::Approx(s.power).epsilon(1e-13));
}

TEST_CASE("collinear example collapses the alpha formulas") {
    const CVector h1 = vec2(2.0, 0.0);
    const CVector h2 = 0.5 * std::polar(1.0, 0.9) * h1;
    const PrecodingSolution s = optimal_precoding(h1, h2, SinrTargets{1.0, 1.0, 1.0});
    CHECK(s.w1.squaredNorm() == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(s.w2.squaredNorm() == doctest::Approx(1.25).epsilon(1e-13));
    CHECK(s.power == doctest::Approx(1.5).epsilon(1e-13));
}

TEST_CASE("strict mode rejects non-QD channels with the report attached") {
    const CVector h1 = vec2(1.0, 0.0);
    const CVector h2 = vec2(0.1, 0.9);
    const SinrTargets t{1.0, 1.0, 1.0};
    try {
        optimal_precoding(h1, h2, t);
        FAIL("expected NotQuasiDegradedError");
    } catch (const NotQuasiDegradedError& e) {
        CHECK_FALSE(e.report().is_qd);
        CHECK(e.report().q_value > e.report().gain_ratio);
    }
    const PrecodingSolution s = optimal_precoding(h1, h2, t, PrecodingMode::Training);
    CHECK_FALSE(s.qd.is_qd);
    CHECK(std::isfinite(s.power));
    CHECK_THROWS_AS(optimal_precoding(CVector::Zero(2), h2, t, PrecodingMode::Training), DegenerateInputError);
}

TEST_CASE("constraint activeness on random QD channels") {
    Rng rng(3);
    for (int i = 0; i < 300; ++i) {
        const std::size_t m = std::array<std::size_t, 3>{2, 4, 9}[i % 3];
        const SinrTargets t = targets_from_sinr(rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0),
                                                std::array<double, 3>{0.5, 1.0, 2.0}[(i / 3) % 3]);
        const QdPair p = random_qd_pair(rng, m, t);
        const PrecodingSolution s = optimal_precoding(p.h1, p.h2, t);
        CHECK(relative_error(s.sinr.s1 * t.noise_power, t.scaled(1)) <= 1e-9);
        CHECK(relative_error(s.sinr.s22, t.sinr(2)) <= 1e-9);
        CHECK(s.sinr.s21 >= t.sinr(2) - 1e-9);
        CHECK(s.power == doctest::Approx(s.w1.squaredNorm() + s.w2.squaredNorm()).epsilon(1e-15));
        CHECK(optimal_power(p.h1.squaredNorm(), p.h2.squaredNorm(), s.qd.cos_sq_psi, t) ==
              doctest::Approx(s.power).epsilon(1e-12));
    }
}

TEST_CASE("power scales as 1/t^2 under real channel scaling") {
    Rng rng(4);
    const SinrTargets t{1.2, 0.8, 1.0};
    const QdPair p = random_qd_pair(rng, 4, t);
    const double base = optimal_precoding(p.h1, p.h2, t).power;
    for (double scale : {1.5, 3.0, 10.0}) {
        CHECK(optimal_precoding(scale * p.h1, scale * p.h2, t).power * scale * scale ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("QD test is invariant under common unitary rotation and scaling") {
    Rng rng(5);
    const SinrTargets t{1.0, 1.0, 1.0};
    for (int i = 0; i < 20; ++i) {
        const CVector a = random_cvector(rng, 3);
        const CVector b = random_cvector(rng, 3);
        const CMatrix u = random_cmatrix(rng, 3, 3).householderQr().householderQ();
        const QdReport r = quasi_degradation(a, b, t);
        const QdReport ru = quasi_degradation(2.5 * u * a, 2.5 * u * b, t);
        CHECK(ru.q_value == doctest::Approx(r.q_value).epsilon(1e-10));
        CHECK(ru.gain_ratio == doctest::Approx(r.gain_ratio).epsilon(1e-12));
    }
}

TEST_CASE("sinr metrics and rates") {
    const CVector h1 = vec2(1.0, 2.0);
    const CVector h2 = vec2(0.5, -1.0);
    const CVector w1 = vec2(0.3, 0.1);
    const SinrValues zero = sinr_metrics(h1, h2, w1, CVector::Zero(2), 1.0);
    CHECK(zero.s21 == 0.0);
    CHECK(zero.s22 == 0.0);

    const CVector orth = vec2(2.0, -1.0);  // h1^H orth = 0
    const CVector w2 = vec2(0.7, 0.2);
    const SinrValues s = sinr_metrics(h1, h2, orth, w2, 1.0);
    CHECK(s.s21 == doctest::Approx(std::norm(h1.dot(w2))));
    CHECK_THROWS_AS(sinr_metrics(h1, h2, w1, w2, 0.0), ConfigurationError);

    CHECK(achievable_rates({3.0, 1.0, 1.0}).r1 == 1.0);
    CHECK(achievable_rates({3.0, 1.0, 1.0}).r2 == 1.0);
    CHECK(achievable_rates({1.0, 3.0, 7.0}).r2 == 1.0);
}

TEST_CASE("user ordering") {
    CompositeChannel c;
    c.h = {vec2(2.0, 0.0), vec2(1.0, 0.0)};
    CHECK_FALSE(order_users(c).swapped);
    c.h = {vec2(1.0, 0.0), vec2(0.0, 2.0)};
    const OrderedChannels o = order_users(c);
    CHECK(o.swapped);
    CHECK(o.strong == c.h[1]);
    CHECK_FALSE(order_users(c, false).swapped);
    c.h = {vec2(1.0, 0.0), vec2(0.0, 1.0)};
    CHECK_FALSE(order_users(c).swapped);
}

TEST_CASE("tape precoding terms match the Eigen path") {
    Rng rng(6);
    const SinrTargets t{1.4, 0.6, 0.8};
    const ChannelSample s = random_sample(rng, 4, 3);
    const std::vector<double> f = random_phases(rng, 4);
    grad::Tape tape;
    const auto rows = compose_channel(tape, s, tape.leaf(grad::Tensor::row(f)));
    const PrecodingTerms terms = precoding_terms(rows, t);
    const OrderedChannels o = order_users(s, RisConfiguration{f});
    CHECK(terms.swapped == o.swapped);
    CHECK(terms.gain_strong.value().item() == doctest::Approx(o.strong.squaredNorm()).epsilon(1e-12));
    CHECK(terms.cos_sq.value().item() == doctest::Approx(cos_sq_psi(o.strong, o.weak)).epsilon(1e-12));
    const PrecodingSolution sol = optimal_precoding(o.strong, o.weak, t, PrecodingMode::Training);
    CHECK(terms.power.value().item() == doctest::Approx(sol.power).epsilon(1e-10));
}

TEST_CASE("numerical oracle reaches but never beats the closed form (M = 4)") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const SinrTargets t = targets_from_sinr(rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), 1.0);
        const QdPair p = random_qd_pair(rng, 4, t);
        const double closed = optimal_precoding(p.h1, p.h2, t).power;
        const PrecodingOracle oracle(p.h1, p.h2, t);
        const auto best = oracle.solve(rng);
        const SinrValues s = sinr_metrics(p.h1, p.h2, best.w1, best.w2, t.noise_power);
        CHECK(s.s1 >= t.sinr(1) * (1 - 1e-9));
        CHECK(s.s21 >= t.sinr(2) * (1 - 1e-9));
        CHECK(s.s22 >= t.sinr(2) * (1 - 1e-9));
        CHECK(closed <= best.power + 1e-6);
        CHECK(relative_error(best.power, closed) < 1e-4);
    }
}

} // TEST_SUITE
