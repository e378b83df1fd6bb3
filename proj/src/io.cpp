#include "iotra/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace iotra {

namespace {

using boost::property_tree::ptree;

enum class Unit { none, density, length, power, bits, frequency, time };

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Converts to SI. Sub-unit prefixes divide by an exact power of ten so that
// "200 /km2" reads back as 2e-4 rather than 200 * 1e-6.
double to_si(double value, Unit unit, const std::string& suffix, const std::string& key) {
    struct Scale {
        double factor;
        bool divide;
    };
    static const std::map<Unit, std::map<std::string, Scale>> table{
        {Unit::density, {{"/m2", {1.0, false}}, {"/km2", {1e6, true}}}},
        {Unit::length, {{"m", {1.0, false}}, {"km", {1e3, false}}}},
        {Unit::power, {{"W", {1.0, false}}, {"mW", {1e3, true}}, {"uW", {1e6, true}}}},
        {Unit::bits, {{"bit", {1.0, false}}, {"bits", {1.0, false}}, {"B", {8.0, false}}, {"bytes", {8.0, false}}}},
        {Unit::frequency, {{"Hz", {1.0, false}}, {"kHz", {1e3, false}}, {"MHz", {1e6, false}}}},
        {Unit::time, {{"s", {1.0, false}}, {"ms", {1e3, true}}, {"us", {1e6, true}}}},
    };
    if (suffix.empty()) return value;
    const auto kind = table.find(unit);
    if (kind != table.end()) {
        const auto hit = kind->second.find(suffix);
        if (hit != kind->second.end())
            return hit->second.divide ? value / hit->second.factor : value * hit->second.factor;
    }
    throw ConfigError(key, "unsupported unit '" + suffix + "'");
}

double parse_quantity(const std::string& text, Unit unit, const std::string& key) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || t.empty())
        throw ConfigError(key, "expected a number, got '" + t + "'");
    const std::string suffix =
        trim(std::string_view(end, static_cast<std::size_t>(t.data() + t.size() - end)));
    return to_si(value, unit, suffix, key);
}

template <typename Int>
Int parse_integer(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    Int value{};
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || end != t.data() + t.size() || t.empty())
        throw ConfigError(key, "expected an integer, got '" + t + "'");
    return value;
}

std::vector<double> parse_list(const std::string& text, Unit unit, const std::string& key) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_quantity(item, unit, key));
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

using Setter = std::function<void(NetworkConfig&, const std::string& value, const std::string& key)>;

struct Field {
    const char* key;
    Setter set;
};

template <typename Section>
Setter quantity(Section NetworkConfig::*section, double Section::*field, Unit unit) {
    return [=](NetworkConfig& c, const std::string& v, const std::string& k) {
        c.*section.*field = parse_quantity(v, unit, k);
    };
}

template <typename Section, typename Int>
Setter integer(Section NetworkConfig::*section, Int Section::*field) {
    return [=](NetworkConfig& c, const std::string& v, const std::string& k) {
        c.*section.*field = parse_integer<Int>(v, k);
    };
}

Setter list(std::vector<double> SpatialConfig::*field, Unit unit) {
    return [=](NetworkConfig& c, const std::string& v, const std::string& k) {
        c.spatial.*field = parse_list(v, unit, k);
    };
}

// Marker value resolved once the type count is known.
constexpr double kUniform = -1.0;

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        {"spatial.density", quantity(&NetworkConfig::spatial, &SpatialConfig::density, Unit::density)},
        {"spatial.path_loss_exponent",
         quantity(&NetworkConfig::spatial, &SpatialConfig::path_loss_exponent, Unit::none)},
        {"spatial.link_distance",
         quantity(&NetworkConfig::spatial, &SpatialConfig::link_distance, Unit::length)},
        {"spatial.type_pmf",
         [](NetworkConfig& c, const std::string& v, const std::string& k) {
             if (lower(trim(v)) == "uniform") c.spatial.type_pmf = {kUniform};
             else c.spatial.type_pmf = parse_list(v, Unit::none, k);
         }},
        {"spatial.activity", list(&SpatialConfig::activity, Unit::none)},
        {"spatial.interferer_power", list(&SpatialConfig::interferer_power, Unit::power)},
        {"spatial.tx_power", quantity(&NetworkConfig::spatial, &SpatialConfig::tx_power, Unit::power)},

        {"radio.packet_length", quantity(&NetworkConfig::radio, &RadioConfig::packet_bits, Unit::bits)},
        {"radio.bandwidth", quantity(&NetworkConfig::radio, &RadioConfig::bandwidth, Unit::frequency)},
        {"radio.slot_duration",
         quantity(&NetworkConfig::radio, &RadioConfig::slot_duration, Unit::time)},
        {"radio.deadline", integer(&NetworkConfig::radio, &RadioConfig::deadline)},
        {"radio.fragments", integer(&NetworkConfig::radio, &RadioConfig::fragments)},

        {"feedback.ack_length", quantity(&NetworkConfig::feedback, &FeedbackConfig::ack_bits, Unit::bits)},
        {"feedback.ack_duration",
         quantity(&NetworkConfig::feedback, &FeedbackConfig::ack_duration, Unit::time)},
        {"feedback.p_ack",
         [](NetworkConfig& c, const std::string& v, const std::string& k) {
             if (lower(trim(v)) == "formula") c.feedback.fixed_p_ack.reset();
             else c.feedback.fixed_p_ack = parse_quantity(v, Unit::none, k);
         }},

        {"energy.rx_circuit_power",
         quantity(&NetworkConfig::energy, &EnergyConfig::rx_circuit_power, Unit::power)},
        {"energy.tx_circuit_power",
         quantity(&NetworkConfig::energy, &EnergyConfig::tx_circuit_power, Unit::power)},
        {"energy.feedback_power",
         quantity(&NetworkConfig::energy, &EnergyConfig::feedback_power, Unit::power)},
        {"energy.amplifier_factor",
         quantity(&NetworkConfig::energy, &EnergyConfig::amplifier_factor, Unit::none)},

        {"analysis.classes", integer(&NetworkConfig::analysis, &AnalysisConfig::classes)},
        {"analysis.tolerance",
         quantity(&NetworkConfig::analysis, &AnalysisConfig::tolerance, Unit::none)},
        {"analysis.realizations", integer(&NetworkConfig::analysis, &AnalysisConfig::realizations)},
        {"analysis.packets", integer(&NetworkConfig::analysis, &AnalysisConfig::packets)},
        {"analysis.seed", integer(&NetworkConfig::analysis, &AnalysisConfig::seed)},
        {"analysis.window_radius",
         quantity(&NetworkConfig::analysis, &AnalysisConfig::window_radius, Unit::length)},
        {"analysis.threads", integer(&NetworkConfig::analysis, &AnalysisConfig::threads)},
        {"analysis.latency",
         [](NetworkConfig& c, const std::string& v, const std::string& k) {
             const std::string t = lower(trim(v));
             if (t == "unconditional") c.analysis.latency = LatencyMode::unconditional;
             else if (t == "success_conditional") c.analysis.latency = LatencyMode::success_conditional;
             else throw ConfigError(k, "expected unconditional or success_conditional, got '" + t + "'");
         }},
        {"analysis.extra_copies",
         [](NetworkConfig& c, const std::string& v, const std::string& k) {
             const std::string t = lower(trim(v));
             if (t == "first") c.analysis.extra_copies = ExtraCopyPolicy::first;
             else if (t == "averaged") c.analysis.extra_copies = ExtraCopyPolicy::averaged;
             else throw ConfigError(k, "expected first or averaged, got '" + t + "'");
         }},
    };
    return table;
}

const Field& find_field(const std::string& key) {
    for (const Field& f : fields())
        if (key == f.key) return f;
    throw ConfigError(key, "unknown configuration key");
}

std::string strip_comment(const std::string& value) {
    const auto cut = value.find_first_of(";#");
    return trim(value.substr(0, cut));
}

NetworkConfig build(const ptree& tree) {
    NetworkConfig config = reference_config();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(section, "key outside of any section");
        for (const auto& [name, leaf] : body) {
            const std::string key = section + "." + name;
            find_field(key).set(config, strip_comment(leaf.data()), key);
        }
    }
    auto& pmf = config.spatial.type_pmf;
    if (pmf.size() == 1 && pmf.front() == kUniform)
        pmf.assign(config.spatial.activity.size(),
                   1.0 / static_cast<double>(config.spatial.activity.size()));
    config.validate();
    return config;
}

void apply(ptree& tree, const std::vector<Override>& overrides) {
    for (const Override& o : overrides) {
        find_field(o.key);
        tree.put(ptree::path_type(o.key, '.'), o.value);
    }
}

}  // namespace

Override parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw ConfigError(trim(text), "override must look like section.key=value");
    Override o{trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    find_field(o.key);
    return o;
}

NetworkConfig load_config(std::istream& in, const std::vector<Override>& overrides) {
    ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config", e.message() + " at line " + std::to_string(e.line()));
    }
    apply(tree, overrides);
    return build(tree);
}

NetworkConfig load_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    return load_config(in, overrides);
}

NetworkConfig config_from_overrides(const std::vector<Override>& overrides) {
    ptree tree;
    apply(tree, overrides);
    return build(tree);
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, end);
}

namespace {

std::string join(const std::vector<double>& values, double scale, const char* unit) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_number(scale < 1.0 ? values[i] * std::round(1.0 / scale) : values[i] / scale) + unit;
    }
    return out;
}

}  // namespace

std::string to_ini(const NetworkConfig& c) {
    std::ostringstream out;
    auto q = [](double v, double scale, const char* unit) {
        return format_number(scale < 1.0 ? v * std::round(1.0 / scale) : v / scale) + unit;
    };
    out << "[spatial]\n"
        << "density = " << q(c.spatial.density, 1e-6, " /km2") << '\n'
        << "path_loss_exponent = " << format_number(c.spatial.path_loss_exponent) << '\n'
        << "link_distance = " << q(c.spatial.link_distance, 1.0, " m") << '\n'
        << "type_pmf = " << join(c.spatial.type_pmf, 1.0, "") << '\n'
        << "activity = " << join(c.spatial.activity, 1.0, "") << '\n'
        << "interferer_power = " << join(c.spatial.interferer_power, 1e-3, " mW") << '\n'
        << "tx_power = " << q(c.spatial.tx_power, 1e-3, " mW") << "\n\n";
    out << "[radio]\n"
        << "packet_length = " << q(c.radio.packet_bits, 1.0, " bits") << '\n'
        << "bandwidth = " << q(c.radio.bandwidth, 1e3, " kHz") << '\n'
        << "slot_duration = " << q(c.radio.slot_duration, 1e-3, " ms") << '\n'
        << "deadline = " << c.radio.deadline << '\n'
        << "fragments = " << c.radio.fragments << "\n\n";
    out << "[feedback]\n"
        << "ack_length = " << q(c.feedback.ack_bits, 1.0, " bits") << '\n'
        << "ack_duration = " << q(c.feedback.ack_duration, 1e-3, " ms") << '\n'
        << "p_ack = "
        << (c.feedback.fixed_p_ack ? format_number(*c.feedback.fixed_p_ack) : std::string("formula"))
        << "\n\n";
    out << "[energy]\n"
        << "rx_circuit_power = " << q(c.energy.rx_circuit_power, 1e-3, " mW") << '\n'
        << "tx_circuit_power = " << q(c.energy.tx_circuit_power, 1e-3, " mW") << '\n'
        << "feedback_power = " << q(c.energy.feedback_power, 1e-3, " mW") << '\n'
        << "amplifier_factor = " << format_number(c.energy.amplifier_factor) << "\n\n";
    out << "[analysis]\n"
        << "classes = " << c.analysis.classes << '\n'
        << "tolerance = " << format_number(c.analysis.tolerance) << '\n'
        << "realizations = " << c.analysis.realizations << '\n'
        << "packets = " << c.analysis.packets << '\n'
        << "seed = " << c.analysis.seed << '\n'
        << "window_radius = " << q(c.analysis.window_radius, 1.0, " m") << '\n'
        << "threads = " << c.analysis.threads << '\n'
        << "latency = " << to_string(c.analysis.latency) << '\n'
        << "extra_copies = " << to_string(c.analysis.extra_copies) << '\n';
    return out.str();
}

std::string_view to_string(LatencyMode mode) {
    return mode == LatencyMode::unconditional ? "unconditional" : "success_conditional";
}

std::string_view to_string(ExtraCopyPolicy policy) {
    return policy == ExtraCopyPolicy::first ? "first" : "averaged";
}

std::string_view to_string(Objective objective) {
    switch (objective) {
        case Objective::max_psd: return "max-psd";
        case Objective::min_latency: return "min-latency";
        case Objective::min_energy: return "min-energy";
    }
    return "?";
}

Objective parse_objective(std::string_view text) {
    for (Objective o : {Objective::max_psd, Objective::min_latency, Objective::min_energy})
        if (text == to_string(o)) return o;
    throw ConfigError("objective", "expected max-psd, min-latency or min-energy, got '" +
                                       std::string(text) + "'");
}

namespace {

double grid_point(int k, int points) { return static_cast<double>(k) / (points - 1); }

double analytic_ccdf(const MetaDistribution& meta, double delta) {
    if (meta.degenerate) return delta < meta.m1 ? 1.0 : 0.0;
    return meta_ccdf(meta, delta);
}

}  // namespace

void write_meta_csv(std::ostream& out, const MetaDistribution& meta, int points) {
    out << "delta,ccdf\n";
    for (int k = 0; k < points; ++k) {
        const double d = grid_point(k, points);
        out << format_number(d) << ',' << format_number(analytic_ccdf(meta, d)) << '\n';
    }
}

void write_meta_overlay_csv(std::ostream& out, const EmpiricalMeta& empirical,
                            const MetaDistribution& meta, int points) {
    out << "delta,ccdf_empirical,ccdf_analytic\n";
    for (int k = 0; k < points; ++k) {
        const double d = grid_point(k, points);
        out << format_number(d) << ',' << format_number(empirical.ccdf(d)) << ','
            << format_number(analytic_ccdf(meta, d)) << '\n';
    }
}

void write_samples(std::ostream& out, const EmpiricalMeta& empirical) {
    for (double s : empirical.samples()) out << format_number(s) << '\n';
}

void write_kpi_csv(std::ostream& out, const std::vector<KpiReport>& reports) {
    const std::size_t classes = reports.empty() ? 0 : reports.front().classes.size();
    out << "scheme,n,deadline,p_ack,psd,latency_slots,latency_s,energy_J";
    for (std::size_t m = 1; m <= classes; ++m) out << ",p_" << m;
    for (std::size_t m = 1; m <= classes; ++m) out << ",psd_" << m;
    out << '\n';
    for (const KpiReport& r : reports) {
        if (r.classes.size() != classes)
            throw std::invalid_argument("kpi rows must share the class count");
        out << to_string(r.scheme) << ',' << r.fragments << ',' << r.deadline << ','
            << format_number(r.p_ack) << ',' << format_number(r.psd()) << ','
            << format_number(r.latency_slots()) << ',' << format_number(r.latency_seconds()) << ','
            << format_number(r.energy_joules);
        for (const auto& k : r.classes) out << ',' << format_number(k.fragment_success);
        for (const auto& k : r.classes) out << ',' << format_number(k.absorption.success);
        out << '\n';
    }
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const NetworkConfig& c) {
    nlohmann::ordered_json j;
    j["spatial"] = {{"density_per_m2", c.spatial.density},
                    {"path_loss_exponent", c.spatial.path_loss_exponent},
                    {"link_distance_m", c.spatial.link_distance},
                    {"type_pmf", c.spatial.type_pmf},
                    {"activity", c.spatial.activity},
                    {"interferer_power_W", c.spatial.interferer_power},
                    {"tx_power_W", c.spatial.tx_power}};
    j["radio"] = {{"packet_bits", c.radio.packet_bits},
                  {"bandwidth_Hz", c.radio.bandwidth},
                  {"slot_duration_s", c.radio.slot_duration},
                  {"deadline", c.radio.deadline},
                  {"fragments", c.radio.fragments}};
    j["feedback"] = {{"ack_bits", c.feedback.ack_bits},
                     {"ack_duration_s", c.feedback.ack_duration},
                     {"p_ack", c.feedback.fixed_p_ack ? nlohmann::ordered_json(*c.feedback.fixed_p_ack)
                                                      : nlohmann::ordered_json("formula")}};
    j["energy"] = {{"rx_circuit_power_W", c.energy.rx_circuit_power},
                   {"tx_circuit_power_W", c.energy.tx_circuit_power},
                   {"feedback_power_W", c.energy.feedback_power},
                   {"amplifier_factor", c.energy.amplifier_factor}};
    j["analysis"] = {{"classes", c.analysis.classes},
                     {"tolerance", c.analysis.tolerance},
                     {"realizations", c.analysis.realizations},
                     {"packets", c.analysis.packets},
                     {"seed", c.analysis.seed},
                     {"window_radius_m", c.analysis.window_radius},
                     {"latency", to_string(c.analysis.latency)},
                     {"extra_copies", to_string(c.analysis.extra_copies)}};
    return j;
}

nlohmann::ordered_json to_json(const KpiReport& r) {
    nlohmann::ordered_json j;
    j["scheme"] = to_string(r.scheme);
    j["n"] = r.fragments;
    j["deadline"] = r.deadline;
    j["threshold"] = r.threshold;
    j["m1"] = r.m1;
    j["m2"] = r.m2;
    j["p_ack"] = r.p_ack;
    j["psd"] = r.psd();
    j["latency_mode"] = to_string(r.latency_mode);
    j["latency_slots"] = number_or_null(r.latency_slots());
    j["latency_s"] = number_or_null(r.latency_seconds());
    j["unconditional_latency_slots"] = r.unconditional_latency_slots();
    j["success_latency_slots"] = number_or_null(r.success_latency_slots().value_or(NAN));
    j["energy_J"] = r.energy_joules;
    j["absorption"] = {{"A_s", r.mean.success},
                       {"A_f", r.mean.timeout},
                       {"D_s", r.mean.delay_success},
                       {"D_f", r.mean.delay_timeout}};
    auto classes = nlohmann::ordered_json::array();
    for (const auto& k : r.classes)
        classes.push_back({{"p", k.fragment_success},
                           {"psd", k.absorption.success},
                           {"mean_slots", k.absorption.mean_slots()},
                           {"energy_J", k.energy_joules}});
    j["classes"] = std::move(classes);
    return j;
}

SimulatedKpi summarize(const NetworkConfig& config, const EmpiricalKpi& empirical,
                       KpiReport analytic) {
    SimulatedKpi row;
    row.scheme = analytic.scheme;
    row.fragments = analytic.fragments;
    row.deadline = analytic.deadline;
    row.p_ack = analytic.p_ack;
    row.empirical = empirical;
    if (config.analysis.latency == LatencyMode::unconditional) {
        row.latency_slots = empirical.estimate.mean_slots();
        row.latency_stderr = empirical.latency_stderr;
    } else {
        row.latency_slots = empirical.success_latency.value_or(NAN);
        row.latency_stderr = empirical.success_latency_stderr.value_or(NAN);
    }
    row.latency_seconds = row.latency_slots * analytic.slot_seconds;
    row.energy_joules = energy(empirical.estimate, config.energy, analytic.scheme,
                               config.radio.slot_duration, config.feedback.ack_duration);
    row.analytic = std::move(analytic);
    return row;
}

void write_simulated_kpi_csv(std::ostream& out, const std::vector<SimulatedKpi>& rows) {
    out << "scheme,n,deadline,p_ack,psd,psd_stderr,latency_slots,latency_stderr,latency_s,energy_J,"
           "psd_analytic,latency_slots_analytic,latency_s_analytic,energy_J_analytic\n";
    for (const SimulatedKpi& r : rows) {
        out << to_string(r.scheme) << ',' << r.fragments << ',' << r.deadline << ','
            << format_number(r.p_ack) << ',' << format_number(r.empirical.estimate.success) << ','
            << format_number(r.empirical.psd_stderr) << ',' << format_number(r.latency_slots) << ','
            << format_number(r.latency_stderr) << ',' << format_number(r.latency_seconds) << ','
            << format_number(r.energy_joules) << ',' << format_number(r.analytic.psd()) << ','
            << format_number(r.analytic.latency_slots()) << ','
            << format_number(r.analytic.latency_seconds()) << ','
            << format_number(r.analytic.energy_joules) << '\n';
    }
}

nlohmann::ordered_json to_json(const SimulatedKpi& r) {
    nlohmann::ordered_json j;
    j["scheme"] = to_string(r.scheme);
    j["n"] = r.fragments;
    j["deadline"] = r.deadline;
    j["p_ack"] = r.p_ack;
    j["packets"] = r.empirical.packets;
    j["psd"] = r.empirical.estimate.success;
    j["psd_stderr"] = r.empirical.psd_stderr;
    j["latency_slots"] = number_or_null(r.latency_slots);
    j["latency_stderr"] = number_or_null(r.latency_stderr);
    j["latency_s"] = number_or_null(r.latency_seconds);
    j["energy_J"] = r.energy_joules;
    j["analytic"] = to_json(r.analytic);
    return j;
}

}  // namespace iotra
