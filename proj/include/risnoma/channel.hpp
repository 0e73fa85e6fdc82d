#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "risnoma/autodiff.hpp"
#include "risnoma/complex_ops.hpp"
#include "risnoma/tensor.hpp"

namespace risnoma {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// One realization of every link in the two-user scenario.
struct ChannelSample {
    CMatrix bs_ris;                   // H, N×M
    std::array<CVector, 2> direct;    // h_d1, h_d2, length M
    std::array<CVector, 2> ris_user;  // h_r1, h_r2, length N

    std::size_t bs_antennas() const { return static_cast<std::size_t>(bs_ris.cols()); }
    std::size_t ris_elements() const { return static_cast<std::size_t>(bs_ris.rows()); }

    // Throws ConfigurationError if the vector lengths disagree with H.
    void validate() const;
};

// Phase shift per RIS element, in radians. Phi = diag(e^{j f}).
struct RisConfiguration {
    std::vector<double> phases;

    std::size_t size() const { return phases.size(); }
    // Diagonal of Phi.
    CVector diagonal() const;
};

// Effective BS->user channels after the RIS: h_k^H = h_rk^H Phi H + h_dk^H.
struct CompositeChannel {
    std::array<CVector, 2> h;
};

// 8×N feature, one column per RIS element. Rows: |h_r1^H|, arg(h_r1^H),
// |j_1^H|, arg(j_1^H), |h_r2^H|, arg(h_r2^H), |j_2^H|, arg(j_2^H).
struct ChannelFeature {
    grad::Tensor gamma;
};

inline constexpr std::size_t kFeatureRows = 8;

// Relative singular-value cutoff used when inverting.
inline constexpr double kPinvCutoff = 1e-12;
// Largest accepted condition number of H.
inline constexpr double kMaxConditionNumber = 1e10;

CompositeChannel compose_channel(const ChannelSample& sample, const RisConfiguration& phi);

// Same composition on the tape. Returns the rows h_k^H (1×M each) so the
// result is differentiable with respect to `phases` (1×N).
std::array<grad::ComplexVar, 2> compose_channel(grad::Tape& tape, const ChannelSample& sample,
                                                const grad::Var& phases);

// Moore-Penrose pseudo-inverse (M×N) of a tall matrix via SVD.
CMatrix pseudo_inverse(const CMatrix& h);

// j_k with j_k^H = h_dk^H H^+, so that (h_rk^H Phi + j_k^H) H = h_k^H.
std::array<CVector, 2> equivalent_direct(const ChannelSample& sample);
std::array<CVector, 2> equivalent_direct(const ChannelSample& sample, const CMatrix& pinv);

// Two-argument arctangent folded into (-pi, pi].
double wrapped_arg(std::complex<double> z);

ChannelFeature extract_features(const ChannelSample& sample);
ChannelFeature extract_features(const ChannelSample& sample, const CMatrix& pinv);

// Links that vary between samples. H is shared across a dataset.
struct UserLinks {
    std::array<CVector, 2> direct;
    std::array<CVector, 2> ris_user;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(CMatrix bs_ris, std::vector<UserLinks> links, std::uint64_t seed);

    std::size_t bs_antennas() const { return static_cast<std::size_t>(bs_ris_.cols()); }
    std::size_t ris_elements() const { return static_cast<std::size_t>(bs_ris_.rows()); }
    std::size_t size() const { return links_.size(); }
    bool empty() const { return links_.empty(); }
    std::uint64_t seed() const { return seed_; }

    const CMatrix& bs_ris() const { return bs_ris_; }
    const UserLinks& links(std::size_t i) const { return links_.at(i); }
    ChannelSample sample(std::size_t i) const;

    // First `count` samples, same H.
    Dataset head(std::size_t count) const;
    // Samples [begin, begin + count).
    Dataset slice(std::size_t begin, std::size_t count) const;

    bool operator==(const Dataset& other) const;

private:
    CMatrix bs_ris_;
    std::vector<UserLinks> links_;
    std::uint64_t seed_ = 0;
};

// Synthetic geometric channel model. H = LoS between two uniform planar
// arrays plus Rician scatter; RIS->user links are Rician with distance-based
// path gain; BS->user links are Rayleigh with extra blockage attenuation.
struct GeometryConfig {
    std::size_t bs_antennas = 9;
    std::size_t ris_elements = 64;
    std::size_t bs_rows = 0;   // 0: most square factorization
    std::size_t ris_rows = 0;  // 0: most square factorization
    double element_spacing = 0.5;  // wavelengths

    double bs_ris_aod_azimuth_deg = 30.0;
    double bs_ris_aod_elevation_deg = 0.0;
    double bs_ris_aoa_azimuth_deg = -40.0;
    double bs_ris_aoa_elevation_deg = 10.0;
    double bs_ris_gain = 1.0;         // mean power per entry of H
    double bs_ris_k_factor = 30.0;    // linear; infinity gives a pure LoS H

    double reference_distance = 10.0;
    double user_distance_min = 20.0;
    double user_distance_max = 60.0;
    double user_azimuth_min_deg = -60.0;
    double user_azimuth_max_deg = 60.0;
    double user_elevation_min_deg = -30.0;
    double user_elevation_max_deg = 0.0;
    double path_loss_exponent = 2.2;
    double ris_user_gain_ref = 0.1;   // per element, at reference distance
    double ris_user_k_factor = 3.0;   // linear; 0 gives Rayleigh

    double direct_gain_ref = 0.1;     // per antenna, at reference distance
    double direct_attenuation_db = 10.0;

    void validate() const;

    // E[(d / d_ref)^-eta] for d uniform on [min, max].
    double mean_distance_gain() const;
    // Expected ||h_rk||^2 implied by the configuration.
    double expected_ris_user_power() const;
};

// One H for the whole set, then `count` independent user drops.
// Deterministic for a given (config, count, seed).
Dataset generate_synthetic_dataset(const GeometryConfig& config, std::size_t count,
                                   std::uint64_t seed);

// Full column rank check of H against kMaxConditionNumber.
void require_full_column_rank(const CMatrix& h);

} // namespace risnoma
