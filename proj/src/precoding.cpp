#include "risnoma/precoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace risnoma {

namespace {

void require_nonzero(double gain, const char* which) {
    if (!(gain > 0.0)) {
        throw DegenerateInputError(std::string("zero-norm channel for ") + which);
    }
}

void require_same_length(const CVector& a, const CVector& b, const char* what) {
    if (a.size() != b.size()) {
        throw ConfigurationError(std::string(what) + ": length mismatch " + std::to_string(a.size()) +
                                 " vs " + std::to_string(b.size()));
    }
}

std::string describe(const QdReport& r) {
    std::ostringstream s;
    s << "channel is not quasi-degraded: Q=" << r.q_value << " > gain ratio " << r.gain_ratio
      << " (cos^2 psi=" << r.cos_sq_psi << ")";
    return s.str();
}

} // namespace

void SinrTargets::validate() const {
    if (!(rate1 > 0.0) || !(rate2 > 0.0)) {
        throw ConfigurationError("rate targets must be positive");
    }
    if (!(noise_power > 0.0)) {
        throw ConfigurationError("noise power must be positive");
    }
}

double SinrTargets::sinr(int user) const {
    return std::exp2(user == 1 ? rate1 : rate2) - 1.0;
}

double SinrTargets::scaled(int user) const { return noise_power * sinr(user); }

NotQuasiDegradedError::NotQuasiDegradedError(const QdReport& report)
    : Error(describe(report)), report_(report) {}

double cos_sq_psi(const CVector& h1, const CVector& h2) {
    require_same_length(h1, h2, "cos_sq_psi");
    const double g1 = h1.squaredNorm();
    const double g2 = h2.squaredNorm();
    require_nonzero(g1, "user 1");
    require_nonzero(g2, "user 2");
    const double c = std::norm(h1.dot(h2)) / (g1 * g2);
    return std::clamp(c, 0.0, 1.0);
}

double quasi_degradation_threshold(double cos_sq, const SinrTargets& targets) {
    if (cos_sq <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double rho1 = targets.sinr(1);
    const double rho2 = targets.sinr(2);
    const double den = 1.0 + rho2 * (1.0 - cos_sq);
    return (1.0 + rho1) / cos_sq - rho1 * cos_sq / (den * den);
}

QdReport quasi_degradation(const CVector& h1, const CVector& h2, const SinrTargets& targets) {
    targets.validate();
    QdReport r;
    r.cos_sq_psi = cos_sq_psi(h1, h2);
    r.gain_ratio = h1.squaredNorm() / h2.squaredNorm();
    r.q_value = quasi_degradation_threshold(r.cos_sq_psi, targets);
    r.is_qd = r.q_value <= r.gain_ratio;
    return r;
}

double optimal_power(double gain1, double gain2, double cos_sq, const SinrTargets& targets) {
    require_nonzero(gain1, "user 1");
    require_nonzero(gain2, "user 2");
    const double rho1 = targets.sinr(1);
    const double rho2 = targets.sinr(2);
    const double sigma2 = targets.noise_power;
    const double den = 1.0 + rho2 * (1.0 - cos_sq);
    const double alpha1_sq = sigma2 * rho1 / gain1 / (den * den);
    const double alpha2_sq = sigma2 * rho2 / gain2 + alpha1_sq * rho2 * cos_sq;
    const double bracket = (1.0 + rho2) * (1.0 + rho2) - rho2 * (2.0 + rho2) * cos_sq;
    return alpha1_sq * bracket + alpha2_sq;
}

PrecodingSolution optimal_precoding(const CVector& h1, const CVector& h2, const SinrTargets& targets,
                                    PrecodingMode mode) {
    PrecodingSolution sol;
    sol.qd = quasi_degradation(h1, h2, targets);
    if (mode == PrecodingMode::Strict && !sol.qd.is_qd) {
        throw NotQuasiDegradedError(sol.qd);
    }

    const double rho1 = targets.sinr(1);
    const double rho2 = targets.sinr(2);
    const double sigma2 = targets.noise_power;
    const double g1 = h1.squaredNorm();
    const double g2 = h2.squaredNorm();
    const double c = sol.qd.cos_sq_psi;

    const CVector e1 = h1 / std::sqrt(g1);
    const CVector e2 = h2 / std::sqrt(g2);
    const double den = 1.0 + rho2 * (1.0 - c);
    const double alpha1_sq = sigma2 * rho1 / g1 / (den * den);
    const double alpha2_sq = sigma2 * rho2 / g2 + alpha1_sq * rho2 * c;

    const std::complex<double> e2h_e1 = e2.dot(e1);  // Eigen's dot conjugates the left operand
    sol.w1 = std::sqrt(alpha1_sq) * ((1.0 + rho2) * e1 - rho2 * e2h_e1 * e2);
    sol.w2 = std::sqrt(alpha2_sq) * e2;
    sol.power = sol.w1.squaredNorm() + sol.w2.squaredNorm();
    sol.sinr = sinr_metrics(h1, h2, sol.w1, sol.w2, sigma2);
    sol.rates = achievable_rates(sol.sinr);
    return sol;
}

SinrValues sinr_metrics(const CVector& h1, const CVector& h2, const CVector& w1, const CVector& w2,
                        double noise_power) {
    require_same_length(h1, h2, "sinr_metrics");
    require_same_length(h1, w1, "sinr_metrics");
    require_same_length(h1, w2, "sinr_metrics");
    if (!(noise_power > 0.0)) {
        throw ConfigurationError("noise power must be positive");
    }
    const double p11 = std::norm(h1.dot(w1));
    const double p12 = std::norm(h1.dot(w2));
    const double p21 = std::norm(h2.dot(w1));
    const double p22 = std::norm(h2.dot(w2));
    return {p12 / (p11 + noise_power), p11 / noise_power, p22 / (p21 + noise_power)};
}

AchievableRates achievable_rates(const SinrValues& s) {
    return {std::log2(1.0 + s.s1), std::min(std::log2(1.0 + s.s21), std::log2(1.0 + s.s22))};
}

OrderedChannels order_users(const CompositeChannel& channel, bool reorder) {
    const bool swap = reorder && channel.h[1].squaredNorm() > channel.h[0].squaredNorm();
    if (swap) {
        return {channel.h[1], channel.h[0], true};
    }
    return {channel.h[0], channel.h[1], false};
}

OrderedChannels order_users(const ChannelSample& sample, const RisConfiguration& phi, bool reorder) {
    return order_users(compose_channel(sample, phi), reorder);
}

PrecodingTerms precoding_terms(const std::array<grad::ComplexVar, 2>& rows, const SinrTargets& targets,
                               bool reorder) {
    using namespace grad;
    Var g1 = squared_norm(rows[0]);
    Var g2 = squared_norm(rows[1]);
    require_nonzero(g1.value().item(), "user 1");
    require_nonzero(g2.value().item(), "user 2");

    PrecodingTerms t;
    t.swapped = reorder && g2.value().item() > g1.value().item();
    const ComplexVar& strong = t.swapped ? rows[1] : rows[0];
    const ComplexVar& weak = t.swapped ? rows[0] : rows[1];
    t.gain_strong = t.swapped ? g2 : g1;
    t.gain_weak = t.swapped ? g1 : g2;

    const ComplexVar cross = inner(strong, weak);
    const Var cross_sq = add(square(cross.re), square(cross.im));
    t.cos_sq = divide(cross_sq, mul(t.gain_strong, t.gain_weak));

    const double rho1 = targets.sinr(1);
    const double rho2 = targets.sinr(2);
    const double sigma2 = targets.noise_power;
    auto k = [&](double v) { return scalar_like(t.cos_sq, v); };

    // den = (1 + rho2 (1 - c))^2
    const Var den = square(add(k(1.0 + rho2), mul(k(-rho2), t.cos_sq)));
    const Var alpha1_sq = divide(mul(k(sigma2 * rho1), reciprocal(t.gain_strong)), den);
    const Var alpha2_sq =
        add(mul(k(sigma2 * rho2), reciprocal(t.gain_weak)), mul(alpha1_sq, mul(k(rho2), t.cos_sq)));
    const Var bracket = add(k((1.0 + rho2) * (1.0 + rho2)), mul(k(-rho2 * (2.0 + rho2)), t.cos_sq));
    t.power = add(mul(alpha1_sq, bracket), alpha2_sq);
    return t;
}

} // namespace risnoma
