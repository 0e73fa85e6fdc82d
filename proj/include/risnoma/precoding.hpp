#pragma once

#include "risnoma/autodiff.hpp"
#include "risnoma/channel.hpp"
#include "risnoma/error.hpp"

namespace risnoma {

// Per-user rate requirements (bits per channel use) and receiver noise power.
struct SinrTargets {
    double rate1 = 1.0;
    double rate2 = 1.0;
    double noise_power = 1.0;

    void validate() const;
    // rho_k = 2^{rate_k} - 1
    double sinr(int user) const;
    // r_k = sigma^2 rho_k, the minimum received signal power for user k.
    double scaled(int user) const;
};

struct QdReport {
    double q_value = 0.0;     // +inf when the channels are orthogonal
    double gain_ratio = 0.0;  // ||h1||^2 / ||h2||^2
    double cos_sq_psi = 0.0;
    bool is_qd = false;
};

struct SinrValues {
    double s21 = 0.0;  // user-2 signal at user 1 (decoded first for SIC)
    double s1 = 0.0;   // user-1 signal at user 1 after SIC
    double s22 = 0.0;  // user-2 signal at user 2
};

struct AchievableRates {
    double r1 = 0.0;
    double r2 = 0.0;
};

struct PrecodingSolution {
    CVector w1;
    CVector w2;
    double power = 0.0;
    SinrValues sinr;
    AchievableRates rates;
    QdReport qd;
};

// Strict rejects channels that are not quasi-degraded; Training evaluates
// the closed form regardless.
enum class PrecodingMode { Strict, Training };

class NotQuasiDegradedError : public Error {
public:
    explicit NotQuasiDegradedError(const QdReport& report);
    const QdReport& report() const noexcept { return report_; }

private:
    QdReport report_;
};

// |h1^H h2|^2 / (||h1||^2 ||h2||^2), clamped to [0, 1].
double cos_sq_psi(const CVector& h1, const CVector& h2);

// Quasi-degradation test. Expects h1 to be the stronger user.
QdReport quasi_degradation(const CVector& h1, const CVector& h2, const SinrTargets& targets);

// Q as a function of cos^2(psi) alone.
double quasi_degradation_threshold(double cos_sq, const SinrTargets& targets);

// Closed-form minimum-power precoders for a quasi-degraded pair.
PrecodingSolution optimal_precoding(const CVector& h1, const CVector& h2, const SinrTargets& targets,
                                    PrecodingMode mode = PrecodingMode::Strict);

// Closed-form power from the channel gains and correlation alone.
double optimal_power(double gain1, double gain2, double cos_sq, const SinrTargets& targets);

SinrValues sinr_metrics(const CVector& h1, const CVector& h2, const CVector& w1, const CVector& w2,
                        double noise_power);

AchievableRates achievable_rates(const SinrValues& sinr);

struct OrderedChannels {
    CVector strong;
    CVector weak;
    bool swapped = false;
};

// Stronger user first; ties keep dataset label order. With reorder = false
// the label order is always kept.
OrderedChannels order_users(const CompositeChannel& channel, bool reorder = true);
OrderedChannels order_users(const ChannelSample& sample, const RisConfiguration& phi,
                            bool reorder = true);

// Same quantities on the tape, from the rows h_k^H.
struct PrecodingTerms {
    grad::Var gain_strong;  // ||h_strong||^2
    grad::Var gain_weak;
    grad::Var cos_sq;
    grad::Var power;        // closed-form P, training mode
    bool swapped = false;
};

PrecodingTerms precoding_terms(const std::array<grad::ComplexVar, 2>& rows, const SinrTargets& targets,
                               bool reorder = true);

} // namespace risnoma
