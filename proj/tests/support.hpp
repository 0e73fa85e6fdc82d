#pragma once

// Shared helpers for the unit and acceptance tests: random instances and the
// independent numerical oracles the library results are checked against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "risnoma/channel.hpp"
#include "risnoma/precoding.hpp"
#include "risnoma/random.hpp"

namespace risnoma::testing {

inline CVector random_cvector(Rng& rng, std::size_t n, double scale = 1.0) {
    CVector v(static_cast<Eigen::Index>(n));
    for (auto& z : v) z = scale * rng.complex_normal();
    return v;
}

inline CMatrix random_cmatrix(Rng& rng, std::size_t rows, std::size_t cols) {
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.complex_normal();
    return m;
}

inline ChannelSample random_sample(Rng& rng, std::size_t n, std::size_t m) {
    ChannelSample s;
    s.bs_ris = random_cmatrix(rng, n, m);
    for (int k = 0; k < 2; ++k) {
        s.direct[k] = random_cvector(rng, m);
        s.ris_user[k] = random_cvector(rng, n);
    }
    return s;
}

inline std::vector<double> random_phases(Rng& rng, std::size_t n) {
    std::vector<double> f(n);
    for (double& x : f) x = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return f;
}

inline SinrTargets targets_from_sinr(double rho1, double rho2, double noise_power) {
    return {std::log2(1.0 + rho1), std::log2(1.0 + rho2), noise_power};
}

struct QdPair {
    CVector h1;
    CVector h2;
};

// Draws unit-scale complex Gaussian pairs, strong user first, until one is
// quasi-degraded under `targets`. The weak user is drawn partly aligned
// with the strong one so QD instances are not vanishingly rare.
inline QdPair random_qd_pair(Rng& rng, std::size_t m, const SinrTargets& targets) {
    for (;;) {
        CVector a = random_cvector(rng, m);
        const double mix = rng.uniform();
        CVector b = mix * a * rng.uniform(0.2, 1.0) + (1.0 - mix) * random_cvector(rng, m);
        if (b.squaredNorm() > a.squaredNorm()) std::swap(a, b);
        if (b.squaredNorm() == 0.0) continue;
        if (quasi_degradation(a, b, targets).is_qd) return {a, b};
    }
}

// Minimum transmit power over precoder pairs with unit directions u1, u2
// in span{h1, h2}, by random restarts plus cyclic coordinate descent over
// the four direction angles. For fixed directions the smallest feasible
// powers follow exactly from the three SINR constraints, so every value
// returned is attained by a feasible precoder pair.
class PrecodingOracle {
public:
    PrecodingOracle(const CVector& h1, const CVector& h2, const SinrTargets& targets)
        : h1_(h1), h2_(h2), rho1_(targets.sinr(1)), rho2_(targets.sinr(2)), sigma2_(targets.noise_power) {
        b1_ = h1.normalized();
        CVector rest = h2 - b1_.dot(h2) * b1_;
        b2_ = rest.norm() > 1e-12 * h2.norm() ? CVector(rest.normalized()) : CVector::Zero(h1.size());
    }

    struct Result {
        double power = std::numeric_limits<double>::infinity();
        CVector w1;
        CVector w2;
    };

    Result solve(Rng& rng, int restarts = 24, int sweeps = 60) const {
        Result best;
        for (int r = 0; r < restarts; ++r) {
            double x[4] = {rng.uniform(0.0, std::numbers::pi / 2), rng.uniform(-std::numbers::pi, std::numbers::pi),
                           rng.uniform(0.0, std::numbers::pi / 2), rng.uniform(-std::numbers::pi, std::numbers::pi)};
            double value = power(x);
            double step = 0.5;
            for (int s = 0; s < sweeps && step > 1e-12; ++s) {
                bool improved = false;
                for (double& xi : x) {
                    for (double dir : {+1.0, -1.0}) {
                        const double saved = xi;
                        xi = saved + dir * step;
                        const double v = power(x);
                        if (v < value) {
                            value = v;
                            improved = true;
                            break;
                        }
                        xi = saved;
                    }
                }
                if (!improved) step *= 0.5;
            }
            if (value < best.power) {
                best.power = value;
                build(x, best.w1, best.w2);
            }
        }
        return best;
    }

    double power(const double* x) const {
        CVector w1, w2;
        return build(x, w1, w2);
    }

private:
    CVector direction(double theta, double phase) const {
        return std::cos(theta) * b1_ + std::sin(theta) * std::polar(1.0, phase) * b2_;
    }

    double build(const double* x, CVector& w1, CVector& w2) const {
        const CVector u1 = direction(x[0], x[1]);
        const CVector u2 = direction(x[2], x[3]);
        const double a11 = std::norm(h1_.dot(u1));
        const double a12 = std::norm(h1_.dot(u2));
        const double a21 = std::norm(h2_.dot(u1));
        const double a22 = std::norm(h2_.dot(u2));
        if (a11 <= 0.0 || a12 <= 0.0 || a22 <= 0.0) return std::numeric_limits<double>::infinity();
        const double p1 = sigma2_ * rho1_ / a11;
        const double p2 = std::max(rho2_ * (p1 * a11 + sigma2_) / a12, rho2_ * (p1 * a21 + sigma2_) / a22);
        w1 = std::sqrt(p1) * u1;
        w2 = std::sqrt(p2) * u2;
        return p1 + p2;
    }

    CVector h1_, h2_, b1_, b2_;
    double rho1_, rho2_, sigma2_;
};

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace risnoma::testing
