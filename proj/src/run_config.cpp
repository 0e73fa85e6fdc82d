#include "risnoma/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <type_traits>
#include <variant>

#include "risnoma/binary_io.hpp"
#include "risnoma/error.hpp"

namespace risnoma {

namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is stored as std::size_t");
using Field = std::variant<double*, std::size_t*, bool*>;

struct Binding {
    const char* name;
    const char* description;
    Field field;
};

std::vector<Binding> bindings(RunConfig& c) {
    GeometryConfig& g = c.geometry;
    TrainingConfig& t = c.training;
    ObjectiveSettings& o = t.objective;
    return {
        {"bs_antennas", "BS antennas M", &g.bs_antennas},
        {"ris_elements", "RIS elements N", &g.ris_elements},
        {"bs_rows", "rows of the BS planar array (0 = most square)", &g.bs_rows},
        {"ris_rows", "rows of the RIS planar array (0 = most square)", &g.ris_rows},
        {"element_spacing", "array element spacing in wavelengths", &g.element_spacing},
        {"bs_ris_aod_azimuth_deg", "BS->RIS departure azimuth", &g.bs_ris_aod_azimuth_deg},
        {"bs_ris_aod_elevation_deg", "BS->RIS departure elevation", &g.bs_ris_aod_elevation_deg},
        {"bs_ris_aoa_azimuth_deg", "BS->RIS arrival azimuth", &g.bs_ris_aoa_azimuth_deg},
        {"bs_ris_aoa_elevation_deg", "BS->RIS arrival elevation", &g.bs_ris_aoa_elevation_deg},
        {"bs_ris_gain", "mean power per entry of H", &g.bs_ris_gain},
        {"bs_ris_k_factor", "Rician K-factor of H (inf = pure LoS)", &g.bs_ris_k_factor},
        {"reference_distance", "path-loss reference distance", &g.reference_distance},
        {"user_distance_min", "minimum RIS->user distance", &g.user_distance_min},
        {"user_distance_max", "maximum RIS->user distance", &g.user_distance_max},
        {"user_azimuth_min_deg", "minimum user azimuth", &g.user_azimuth_min_deg},
        {"user_azimuth_max_deg", "maximum user azimuth", &g.user_azimuth_max_deg},
        {"user_elevation_min_deg", "minimum user elevation", &g.user_elevation_min_deg},
        {"user_elevation_max_deg", "maximum user elevation", &g.user_elevation_max_deg},
        {"path_loss_exponent", "path-loss exponent", &g.path_loss_exponent},
        {"ris_user_gain_ref", "RIS->user gain per element at the reference distance", &g.ris_user_gain_ref},
        {"ris_user_k_factor", "Rician K-factor of RIS->user links", &g.ris_user_k_factor},
        {"direct_gain_ref", "BS->user gain per antenna at the reference distance", &g.direct_gain_ref},
        {"direct_attenuation_db", "extra blockage loss on BS->user links", &g.direct_attenuation_db},
        {"layers", "RISnet layers L", &c.network.layers},
        {"local_dim", "local feature width", &c.network.local_dim},
        {"global_dim", "global feature width", &c.network.global_dim},
        {"epsilon", "power weight in the objective", &o.epsilon},
        {"q_cap", "clamp on Q inside the penalty", &o.q_cap},
        {"reorder_users", "order users by composite channel gain", &o.reorder_users},
        {"rate1", "rate target of user 1 (bit/s/Hz)", &o.targets.rate1},
        {"rate2", "rate target of user 2 (bit/s/Hz)", &o.targets.rate2},
        {"noise_power", "receiver noise power", &o.targets.noise_power},
        {"learning_rate", "Adam learning rate", &t.learning_rate},
        {"batch_size", "samples per iteration", &t.batch_size},
        {"iterations", "training iterations", &t.iterations},
        {"seed", "seed for initialization and batch sampling", &t.seed},
        {"threads", "worker threads (0 = auto)", &t.threads},
        {"checkpoint_every", "iterations between partial checkpoints", &t.checkpoint_every},
        {"train_samples", "samples generated for training", &c.train_samples},
        {"test_samples", "samples generated for testing", &c.test_samples},
        {"baseline_trials", "random phase trials per sample", &c.baseline_trials},
    };
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
    throw ConfigurationError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                             expected);
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
    T v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "a non-negative integer");
    return v;
}

double parse_real(std::string_view key, std::string_view value) {
    const std::string s(value);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) bad_value(key, value, "a number");
    return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value, "true or false");
}

std::string render(const Field& field) {
    struct Visitor {
        std::string operator()(const double* v) const {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof buf, *v);
            return std::string(buf, res.ptr);
        }
        std::string operator()(const std::size_t* v) const { return std::to_string(*v); }
        std::string operator()(const bool* v) const { return *v ? "true" : "false"; }
    };
    return std::visit(Visitor{}, field);
}

const Binding& find(const std::vector<Binding>& table, std::string_view key) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const Binding& b) { return key == b.name; });
    if (it == table.end()) {
        throw UsageError("unknown configuration key '" + std::string(key) + "'");
    }
    return *it;
}

} // namespace

const std::vector<RunConfig::KeyInfo>& RunConfig::keys() {
    static const std::vector<KeyInfo> info = [] {
        RunConfig scratch;
        std::vector<KeyInfo> out;
        for (const Binding& b : bindings(scratch)) out.push_back({b.name, b.description});
        return out;
    }();
    return info;
}

void RunConfig::set(std::string_view key, std::string_view value) {
    const auto table = bindings(*this);
    const Binding& b = find(table, key);
    value = trim(value);
    struct Visitor {
        std::string_view key;
        std::string_view value;
        void operator()(double* v) const { *v = parse_real(key, value); }
        void operator()(std::size_t* v) const { *v = parse_unsigned<std::size_t>(key, value); }
        void operator()(bool* v) const { *v = parse_bool(key, value); }
    };
    std::visit(Visitor{key, value}, b.field);
}

std::string RunConfig::get(std::string_view key) const {
    const auto table = bindings(const_cast<RunConfig&>(*this));
    return render(find(table, key).field);
}

void RunConfig::apply_text(std::string_view text, const std::string& source) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) {
            throw ConfigurationError(where + "expected 'key = value'");
        }
        try {
            set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const UsageError& e) {
            throw UsageError(where + e.what());
        } catch (const ConfigurationError& e) {
            throw ConfigurationError(where + e.what());
        }
    }
}

void RunConfig::apply_file(const std::string& path) {
    const std::vector<char> bytes = io::read_file(path);
    apply_text(std::string_view(bytes.data(), bytes.size()), path);
}

void RunConfig::apply_environment(const EnvLookup& lookup) {
    for (const KeyInfo& k : keys()) {
        const std::string name = env_name(k.name);
        if (const char* value = lookup(name.c_str())) {
            try {
                set(k.name, value);
            } catch (const ConfigurationError& e) {
                throw ConfigurationError(name + ": " + e.what());
            }
        }
    }
}

void RunConfig::apply_environment() {
    apply_environment([](const char* name) { return std::getenv(name); });
}

std::string RunConfig::dump() const {
    std::string out;
    for (const KeyInfo& k : keys()) out += k.name + " = " + get(k.name) + '\n';
    return out;
}

void RunConfig::validate() const {
    geometry.validate();
    network.validate();
    training.validate();
}

std::string RunConfig::env_name(std::string_view key) {
    std::string out = "RISNOMA_";
    for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

} // namespace risnoma
