#include "risnoma/channel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "risnoma/error.hpp"
#include "risnoma/random.hpp"

namespace risnoma {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }

std::size_t square_rows(std::size_t count) {
    std::size_t best = 1;
    for (std::size_t r = 1; r * r <= count; ++r) {
        if (count % r == 0) best = r;
    }
    return best;
}

// Uniform planar array response, unit modulus per element. Element n sits
// at row n / cols, column n % cols.
CVector planar_response(std::size_t count, std::size_t rows, double spacing, double azimuth,
                        double elevation) {
    const std::size_t cols = count / rows;
    const double kx = 2.0 * kPi * spacing * std::sin(azimuth) * std::cos(elevation);
    const double ky = 2.0 * kPi * spacing * std::sin(elevation);
    CVector a(static_cast<Eigen::Index>(count));
    for (std::size_t n = 0; n < count; ++n) {
        const double p = static_cast<double>(n / cols);
        const double q = static_cast<double>(n % cols);
        a[static_cast<Eigen::Index>(n)] = std::polar(1.0, kx * q + ky * p);
    }
    return a;
}

grad::Tensor real_part(const CMatrix& m) {
    grad::Tensor t(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t(r, c) = m(r, c).real();
    return t;
}

grad::Tensor imag_part(const CMatrix& m) {
    grad::Tensor t(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t(r, c) = m(r, c).imag();
    return t;
}

// Row vector v^H as (re, im) constants.
grad::ComplexVar hermitian_row(grad::Tape& tape, const CVector& v) {
    grad::Tensor re(1, static_cast<std::size_t>(v.size()));
    grad::Tensor im(1, static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re[i] = v[i].real();
        im[i] = -v[i].imag();
    }
    return {tape.constant(std::move(re)), tape.constant(std::move(im))};
}

std::size_t resolve_rows(std::size_t count, std::size_t rows, const char* what) {
    if (rows == 0) return square_rows(count);
    if (count % rows != 0) {
        throw ConfigurationError(std::string(what) + " rows " + std::to_string(rows) +
                                 " do not divide element count " + std::to_string(count));
    }
    return rows;
}

} // namespace

void ChannelSample::validate() const {
    const auto m = bs_ris.cols();
    const auto n = bs_ris.rows();
    if (m == 0 || n == 0) {
        throw ConfigurationError("empty BS-RIS channel");
    }
    for (int k = 0; k < 2; ++k) {
        if (direct[k].size() != m) {
            throw ConfigurationError("direct channel " + std::to_string(k + 1) + " has length " +
                                     std::to_string(direct[k].size()) + ", expected M=" +
                                     std::to_string(m));
        }
        if (ris_user[k].size() != n) {
            throw ConfigurationError("RIS-user channel " + std::to_string(k + 1) + " has length " +
                                     std::to_string(ris_user[k].size()) + ", expected N=" +
                                     std::to_string(n));
        }
    }
}

CVector RisConfiguration::diagonal() const {
    CVector d(static_cast<Eigen::Index>(phases.size()));
    for (std::size_t n = 0; n < phases.size(); ++n) {
        d[static_cast<Eigen::Index>(n)] = {std::cos(phases[n]), std::sin(phases[n])};
    }
    return d;
}

CompositeChannel compose_channel(const ChannelSample& sample, const RisConfiguration& phi) {
    sample.validate();
    if (phi.size() != sample.ris_elements()) {
        throw ConfigurationError("RIS configuration has " + std::to_string(phi.size()) +
                                 " phases, channel has N=" + std::to_string(sample.ris_elements()));
    }
    const CVector diag = phi.diagonal();
    CompositeChannel out;
    for (int k = 0; k < 2; ++k) {
        // h_k = H^H conj(Phi) h_rk + h_dk
        const CVector reflected = diag.conjugate().cwiseProduct(sample.ris_user[k]);
        out.h[k] = sample.bs_ris.adjoint() * reflected + sample.direct[k];
    }
    return out;
}

std::array<grad::ComplexVar, 2> compose_channel(grad::Tape& tape, const ChannelSample& sample,
                                                const grad::Var& phases) {
    sample.validate();
    const grad::Tensor& f = phases.value();
    if (f.rows() != 1 || f.cols() != sample.ris_elements()) {
        throw ConfigurationError("phase row has shape " + f.shape_string() + ", expected 1x" +
                                 std::to_string(sample.ris_elements()));
    }
    const grad::ComplexVar h{tape.constant(real_part(sample.bs_ris)),
                             tape.constant(imag_part(sample.bs_ris))};
    const grad::ComplexVar phi = grad::expj(phases);

    std::array<grad::ComplexVar, 2> rows;
    for (int k = 0; k < 2; ++k) {
        const grad::ComplexVar reflected = grad::cmul(hermitian_row(tape, sample.ris_user[k]), phi);
        const grad::ComplexVar via_ris = grad::cmatmul(reflected, h);
        const grad::ComplexVar direct = hermitian_row(tape, sample.direct[k]);
        rows[k] = {grad::add(via_ris.re, direct.re), grad::add(via_ris.im, direct.im)};
    }
    return rows;
}

void require_full_column_rank(const CMatrix& h) {
    if (h.rows() < h.cols()) {
        throw ConfigurationError("H must have at least as many rows as columns, got " +
                                 std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
    }
    const Eigen::VectorXd s = h.jacobiSvd().singularValues();
    const double largest = s.size() > 0 ? s[0] : 0.0;
    const double smallest = s.size() > 0 ? s[s.size() - 1] : 0.0;
    if (!(largest > 0.0) || !(smallest > largest / kMaxConditionNumber)) {
        std::ostringstream msg;
        msg << "H is rank deficient: smallest/largest singular value ratio "
            << (largest > 0.0 ? smallest / largest : 0.0) << " below " << 1.0 / kMaxConditionNumber;
        throw DegenerateInputError(msg.str());
    }
}

CMatrix pseudo_inverse(const CMatrix& h) {
    if (h.rows() < h.cols()) {
        throw ConfigurationError("pseudo_inverse expects N >= M, got " + std::to_string(h.rows()) +
                                 "x" + std::to_string(h.cols()));
    }
    Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double largest = s.size() > 0 ? s[0] : 0.0;
    const double smallest = s.size() > 0 ? s[s.size() - 1] : 0.0;
    if (!(largest > 0.0) || !(smallest > largest / kMaxConditionNumber)) {
        std::ostringstream msg;
        msg << "pseudo_inverse: condition number exceeds " << kMaxConditionNumber
            << " (singular value ratio " << (largest > 0.0 ? smallest / largest : 0.0) << ")";
        throw DegenerateInputError(msg.str());
    }
    Eigen::VectorXd inv(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        inv[i] = s[i] > kPinvCutoff * largest ? 1.0 / s[i] : 0.0;
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

std::array<CVector, 2> equivalent_direct(const ChannelSample& sample) {
    sample.validate();
    return equivalent_direct(sample, pseudo_inverse(sample.bs_ris));
}

std::array<CVector, 2> equivalent_direct(const ChannelSample& sample, const CMatrix& pinv) {
    sample.validate();
    if (pinv.rows() != sample.bs_ris.cols() || pinv.cols() != sample.bs_ris.rows()) {
        throw ConfigurationError("pseudo-inverse shape does not match H");
    }
    // j_k^H = h_dk^H H^+  <=>  j_k = (H^+)^H h_dk
    return {pinv.adjoint() * sample.direct[0], pinv.adjoint() * sample.direct[1]};
}

double wrapped_arg(std::complex<double> z) {
    const double a = std::atan2(z.imag(), z.real());
    return a <= -kPi ? kPi : a;
}

ChannelFeature extract_features(const ChannelSample& sample) {
    sample.validate();
    return extract_features(sample, pseudo_inverse(sample.bs_ris));
}

ChannelFeature extract_features(const ChannelSample& sample, const CMatrix& pinv) {
    const auto j = equivalent_direct(sample, pinv);
    const std::size_t n = sample.ris_elements();
    grad::Tensor gamma(kFeatureRows, n);
    for (int k = 0; k < 2; ++k) {
        const std::size_t base = 4 * static_cast<std::size_t>(k);
        for (std::size_t c = 0; c < n; ++c) {
            const auto idx = static_cast<Eigen::Index>(c);
            const std::complex<double> r = std::conj(sample.ris_user[k][idx]);
            const std::complex<double> e = std::conj(j[k][idx]);
            gamma(base + 0, c) = std::abs(r);
            gamma(base + 1, c) = wrapped_arg(r);
            gamma(base + 2, c) = std::abs(e);
            gamma(base + 3, c) = wrapped_arg(e);
        }
    }
    return {std::move(gamma)};
}

Dataset::Dataset(CMatrix bs_ris, std::vector<UserLinks> links, std::uint64_t seed)
    : bs_ris_(std::move(bs_ris)), links_(std::move(links)), seed_(seed) {
    for (std::size_t i = 0; i < links_.size(); ++i) {
        ChannelSample s = sample(i);
        s.validate();
    }
}

ChannelSample Dataset::sample(std::size_t i) const {
    const UserLinks& l = links_.at(i);
    return ChannelSample{bs_ris_, l.direct, l.ris_user};
}

Dataset Dataset::head(std::size_t count) const { return slice(0, count); }

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
    if (begin + count > links_.size()) {
        throw ConfigurationError("dataset slice out of range");
    }
    return Dataset(bs_ris_,
                   std::vector<UserLinks>(links_.begin() + static_cast<std::ptrdiff_t>(begin),
                                          links_.begin() + static_cast<std::ptrdiff_t>(begin + count)),
                   seed_);
}

bool Dataset::operator==(const Dataset& other) const {
    if (seed_ != other.seed_ || bs_ris_.rows() != other.bs_ris_.rows() ||
        bs_ris_.cols() != other.bs_ris_.cols() || bs_ris_ != other.bs_ris_ ||
        links_.size() != other.links_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < links_.size(); ++i) {
        for (int k = 0; k < 2; ++k) {
            if (links_[i].direct[k] != other.links_[i].direct[k] ||
                links_[i].ris_user[k] != other.links_[i].ris_user[k]) {
                return false;
            }
        }
    }
    return true;
}

void GeometryConfig::validate() const {
    if (bs_antennas == 0 || ris_elements == 0) {
        throw ConfigurationError("antenna counts must be positive");
    }
    if (ris_elements < bs_antennas) {
        throw ConfigurationError("RIS must have at least as many elements as BS antennas (N >= M)");
    }
    resolve_rows(bs_antennas, bs_rows, "BS");
    resolve_rows(ris_elements, ris_rows, "RIS");
    if (!(user_distance_min > 0.0) || user_distance_max < user_distance_min) {
        throw ConfigurationError("user distance range must satisfy 0 < min <= max");
    }
    if (!(reference_distance > 0.0)) {
        throw ConfigurationError("reference distance must be positive");
    }
    if (bs_ris_k_factor < 0.0 || ris_user_k_factor < 0.0) {
        throw ConfigurationError("Rician K-factors must be non-negative");
    }
    if (!std::isfinite(ris_user_k_factor)) {
        throw ConfigurationError("RIS-user K-factor must be finite");
    }
    if (bs_ris_gain <= 0.0 || ris_user_gain_ref <= 0.0 || direct_gain_ref < 0.0) {
        throw ConfigurationError("path gains must be positive");
    }
}

double GeometryConfig::mean_distance_gain() const {
    const double a = user_distance_min;
    const double b = user_distance_max;
    const double eta = path_loss_exponent;
    if (b == a) return std::pow(a / reference_distance, -eta);
    const double scale = std::pow(reference_distance, eta) / (b - a);
    if (std::abs(eta - 1.0) < 1e-12) return scale * std::log(b / a);
    return scale * (std::pow(b, 1.0 - eta) - std::pow(a, 1.0 - eta)) / (1.0 - eta);
}

double GeometryConfig::expected_ris_user_power() const {
    return static_cast<double>(ris_elements) * ris_user_gain_ref * mean_distance_gain();
}

Dataset generate_synthetic_dataset(const GeometryConfig& config, std::size_t count,
                                   std::uint64_t seed) {
    config.validate();
    if (count == 0) {
        throw ConfigurationError("sample count must be at least 1");
    }
    const std::size_t m = config.bs_antennas;
    const std::size_t n = config.ris_elements;
    const std::size_t bs_rows = resolve_rows(m, config.bs_rows, "BS");
    const std::size_t ris_rows = resolve_rows(n, config.ris_rows, "RIS");
    const auto em = static_cast<Eigen::Index>(m);
    const auto en = static_cast<Eigen::Index>(n);

    Rng rng(seed);

    const bool pure_los = std::isinf(config.bs_ris_k_factor);
    const double los_w = pure_los ? 1.0 : std::sqrt(config.bs_ris_k_factor / (config.bs_ris_k_factor + 1.0));
    const double nlos_w = pure_los ? 0.0 : std::sqrt(1.0 / (config.bs_ris_k_factor + 1.0));
    const CVector a_ris = planar_response(n, ris_rows, config.element_spacing,
                                          deg2rad(config.bs_ris_aoa_azimuth_deg),
                                          deg2rad(config.bs_ris_aoa_elevation_deg));
    const CVector a_bs = planar_response(m, bs_rows, config.element_spacing,
                                         deg2rad(config.bs_ris_aod_azimuth_deg),
                                         deg2rad(config.bs_ris_aod_elevation_deg));
    const CMatrix los = a_ris * a_bs.adjoint();

    CMatrix h;
    constexpr int kAttempts = 10;
    for (int attempt = 0;; ++attempt) {
        CMatrix scatter(en, em);
        for (Eigen::Index r = 0; r < en; ++r)
            for (Eigen::Index c = 0; c < em; ++c) scatter(r, c) = rng.complex_normal();
        h = std::sqrt(config.bs_ris_gain) * (los_w * los + nlos_w * scatter);
        try {
            require_full_column_rank(h);
            break;
        } catch (const DegenerateInputError& e) {
            if (attempt + 1 >= kAttempts) {
                throw DegenerateInputError(std::string("BS-RIS geometry still rank deficient after ") +
                                           std::to_string(kAttempts) + " attempts: " + e.what());
            }
        }
    }

    const double kr = config.ris_user_k_factor;
    const double r_los = std::sqrt(kr / (kr + 1.0));
    const double r_nlos = std::sqrt(1.0 / (kr + 1.0));
    const double blockage = std::pow(10.0, -config.direct_attenuation_db / 10.0);

    std::vector<UserLinks> links(count);
    for (std::size_t s = 0; s < count; ++s) {
        for (int k = 0; k < 2; ++k) {
            const double d = rng.uniform(config.user_distance_min, config.user_distance_max);
            const double az = deg2rad(rng.uniform(config.user_azimuth_min_deg, config.user_azimuth_max_deg));
            const double el = deg2rad(rng.uniform(config.user_elevation_min_deg, config.user_elevation_max_deg));
            const double offset = rng.uniform(-kPi, kPi);
            const double distance_gain = std::pow(d / config.reference_distance, -config.path_loss_exponent);

            const CVector steer = planar_response(n, ris_rows, config.element_spacing, az, el);
            CVector hr(en);
            const double gr = std::sqrt(config.ris_user_gain_ref * distance_gain);
            const std::complex<double> rot = std::polar(1.0, offset);
            for (Eigen::Index i = 0; i < en; ++i) {
                hr[i] = gr * (r_los * rot * steer[i] + r_nlos * rng.complex_normal());
            }

            CVector hd(em);
            const double gd = std::sqrt(config.direct_gain_ref * distance_gain * blockage);
            for (Eigen::Index i = 0; i < em; ++i) hd[i] = gd * rng.complex_normal();

            links[s].ris_user[k] = std::move(hr);
            links[s].direct[k] = std::move(hd);
        }
    }
    return Dataset(std::move(h), std::move(links), seed);
}

} // namespace risnoma
