#include "risnoma/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>

#include "risnoma/binary_io.hpp"
#include "risnoma/error.hpp"
#include "risnoma/parallel.hpp"
#include "risnoma/random.hpp"

namespace risnoma {

namespace {

constexpr double kPenaltyCap = 1e6;
constexpr const char* kHeader = "sample_index,power_w,is_qd,swapped,inference_us";

struct Assessment {
    double power = 0.0;
    double penalty = 0.0;
    bool is_qd = false;
    bool swapped = false;
};

Assessment assess(const ChannelSample& sample, const RisConfiguration& phi, const SinrTargets& targets,
                  bool reorder) {
    const OrderedChannels ch = order_users(sample, phi, reorder);
    const QdReport qd = quasi_degradation(ch.strong, ch.weak, targets);
    Assessment a;
    a.is_qd = qd.is_qd;
    a.swapped = ch.swapped;
    a.power = optimal_power(ch.strong.squaredNorm(), ch.weak.squaredNorm(), qd.cos_sq_psi, targets);
    a.penalty = std::log1p(std::max(0.0, std::min(qd.q_value, kPenaltyCap) - qd.gain_ratio));
    return a;
}

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, std::uint64_t offset) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size()) {
        throw FormatError("invalid number '" + s + "' in report", offset);
    }
    return v;
}

std::size_t parse_size(const std::string& s, std::uint64_t offset) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw FormatError("invalid integer '" + s + "' in report", offset);
    }
    return static_cast<std::size_t>(std::stoull(s));
}

bool parse_flag(const std::string& s, std::uint64_t offset) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw FormatError("invalid flag '" + s + "' in report", offset);
}

} // namespace

void EvalReport::summarize() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double all = 0.0;
    double qd_sum = 0.0;
    std::size_t qd = 0;
    for (const SampleRecord& r : records) {
        all += r.power;
        if (r.is_qd) {
            qd_sum += r.power;
            ++qd;
        }
    }
    const double n = static_cast<double>(records.size());
    mean_power_all_penalized = records.empty() ? nan : all / n;
    mean_power_qd_only = qd == 0 ? nan : qd_sum / static_cast<double>(qd);
    qd_percentage = records.empty() ? 0.0 : 100.0 * static_cast<double>(qd) / n;
}

EvalReport evaluate(const RisnetParams& params, const Dataset& dataset, const EvaluationOptions& options) {
    options.targets.validate();
    if (dataset.empty()) {
        throw ConfigurationError("evaluation dataset is empty");
    }
    const CMatrix pinv = pseudo_inverse(dataset.bs_ris());
    EvalReport report;
    report.records.resize(dataset.size());
    parallel_for(dataset.size(), options.threads, [&](std::size_t i) {
        const ChannelSample sample = dataset.sample(i);
        const ChannelFeature feature = extract_features(sample, pinv);
        const auto start = std::chrono::steady_clock::now();
        RisConfiguration phi{forward(params, feature)};
        const auto stop = std::chrono::steady_clock::now();
        const Assessment a = assess(sample, phi, options.targets, options.reorder_users);

        SampleRecord& r = report.records[i];
        r.sample_index = i;
        r.power = a.power;
        r.is_qd = a.is_qd;
        r.swapped = a.swapped;
        if (options.timing) {
            r.inference_us = std::chrono::duration<double, std::micro>(stop - start).count();
        }
    });
    report.summarize();
    return report;
}

BaselineResult random_phase_baseline(const ChannelSample& sample, std::size_t trials, const SinrTargets& targets,
                                     std::uint64_t seed, bool reorder_users) {
    sample.validate();
    targets.validate();
    if (trials < 1) {
        throw ConfigurationError("baseline needs at least one trial");
    }
    const std::size_t n = sample.ris_elements();
    if (n == 0) {
        throw ConfigurationError("baseline needs at least one RIS element");
    }
    Rng rng(seed);
    BaselineResult best;
    bool have = false;
    RisConfiguration phi{std::vector<double>(n)};
    for (std::size_t t = 0; t < trials; ++t) {
        for (double& f : phi.phases) f = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Assessment a = assess(sample, phi, targets, reorder_users);
        bool better = false;
        if (!have) {
            better = true;
        } else if (a.is_qd != best.is_qd) {
            better = a.is_qd;
        } else if (a.is_qd) {
            better = a.power < best.power;
        } else {
            better = a.penalty < best.penalty;
        }
        if (better) {
            best.phi = phi;
            best.power = a.power;
            best.penalty = a.penalty;
            best.is_qd = a.is_qd;
            best.swapped = a.swapped;
            have = true;
        }
    }
    return best;
}

EvalReport evaluate_baseline(const Dataset& dataset, std::size_t trials, std::uint64_t seed,
                             const EvaluationOptions& options) {
    if (dataset.empty()) {
        throw ConfigurationError("evaluation dataset is empty");
    }
    EvalReport report;
    report.trial_count = trials;
    report.records.resize(dataset.size());
    parallel_for(dataset.size(), options.threads, [&](std::size_t i) {
        const BaselineResult b = random_phase_baseline(dataset.sample(i), trials, options.targets,
                                                       derive_seed(seed, i), options.reorder_users);
        report.records[i] = {i, b.power, b.is_qd, b.swapped, 0.0};
    });
    report.summarize();
    return report;
}

std::string format_report(const EvalReport& report) {
    std::string out = std::string(kHeader) + '\n';
    for (const SampleRecord& r : report.records) {
        out += std::to_string(r.sample_index) + ',' + g17(r.power) + ',' + (r.is_qd ? '1' : '0') + ',' +
               (r.swapped ? '1' : '0') + ',' + g17(r.inference_us) + '\n';
    }
    out += "# mean_power_qd_only=" + g17(report.mean_power_qd_only) + '\n';
    out += "# mean_power_all_penalized=" + g17(report.mean_power_all_penalized) + '\n';
    out += "# qd_percentage=" + g17(report.qd_percentage) + '\n';
    out += "# trial_count=" + std::to_string(report.trial_count) + '\n';
    return out;
}

EvalReport parse_report(const std::string& text) {
    EvalReport report;
    std::istringstream in(text);
    std::string line;
    std::uint64_t offset = 0;
    bool header = false;
    int footer = 0;
    while (std::getline(in, line)) {
        const std::uint64_t at = offset;
        offset += line.size() + 1;
        if (!header) {
            if (line != kHeader) throw FormatError("missing report header", at);
            header = true;
            continue;
        }
        if (line.starts_with("# ")) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw FormatError("malformed footer line", at);
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key == "mean_power_qd_only") {
                report.mean_power_qd_only = parse_double(value, at);
            } else if (key == "mean_power_all_penalized") {
                report.mean_power_all_penalized = parse_double(value, at);
            } else if (key == "qd_percentage") {
                report.qd_percentage = parse_double(value, at);
            } else if (key == "trial_count") {
                report.trial_count = parse_size(value, at);
            } else {
                throw FormatError("unknown footer key '" + key + "'", at);
            }
            ++footer;
            continue;
        }
        if (footer > 0) throw FormatError("data row after footer", at);
        std::vector<std::string> fields;
        std::istringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw FormatError("report row needs 5 fields", at);
        report.records.push_back({parse_size(fields[0], at), parse_double(fields[1], at),
                                  parse_flag(fields[2], at), parse_flag(fields[3], at),
                                  parse_double(fields[4], at)});
    }
    if (!header) throw FormatError("missing report header", 0);
    if (footer != 4) throw FormatError("report footer is incomplete", offset);
    return report;
}

void write_report(const EvalReport& report, const std::string& path) {
    io::write_file_atomic(path, format_report(report));
}

EvalReport read_report(const std::string& path) {
    const std::vector<char> bytes = io::read_file(path);
    return parse_report(std::string(bytes.begin(), bytes.end()));
}

} // namespace risnoma
