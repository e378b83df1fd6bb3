#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "iotra/config.hpp"
#include "iotra/metrics.hpp"
#include "iotra/sim.hpp"
#include "iotra/spatial.hpp"

namespace iotra {

/// "section.key=value" from the command line.
struct Override {
    std::string key;
    std::string value;
};

Override parse_override(const std::string& text);

/// Reads an INI file with sections spatial, radio, feedback, energy and
/// analysis. Values may carry unit suffixes (e.g. "200 /km2", "0.15 ms",
/// "10 mW", "5 B"); lists are comma separated. Missing keys keep their
/// reference values. Unknown sections or keys, bad numbers and wrong units
/// raise ConfigError naming the dotted key. Overrides are applied on top
/// of the file before conversion, and the result is validated.
NetworkConfig load_config(const std::filesystem::path& path,
                          const std::vector<Override>& overrides = {});
NetworkConfig load_config(std::istream& in, const std::vector<Override>& overrides = {});

/// Reference values with overrides only.
NetworkConfig config_from_overrides(const std::vector<Override>& overrides);

/// Canonical INI text for a configuration; reads back to the same values.
std::string to_ini(const NetworkConfig& config);

std::string_view to_string(LatencyMode mode);
std::string_view to_string(ExtraCopyPolicy policy);
std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

/// Shortest text that reads back to exactly `value`; "nan" for NaN.
std::string format_number(double value);

/// delta,ccdf on an evenly spaced grid of `points` deltas in [0, 1]. A
/// degenerate distribution is written as the step of a point mass at M1.
void write_meta_csv(std::ostream& out, const MetaDistribution& meta, int points = 101);

/// delta,ccdf_empirical,ccdf_analytic on the same grid.
void write_meta_overlay_csv(std::ostream& out, const EmpiricalMeta& empirical,
                            const MetaDistribution& meta, int points = 101);

/// One sample per line.
void write_samples(std::ostream& out, const EmpiricalMeta& empirical);

/// Header plus one row per report. All reports must share the class count.
/// Columns: scheme,n,deadline,p_ack,psd,latency_slots,latency_s,energy_J,
/// then p_<m> and psd_<m> for each class m.
void write_kpi_csv(std::ostream& out, const std::vector<KpiReport>& reports);

nlohmann::ordered_json to_json(const NetworkConfig& config);
nlohmann::ordered_json to_json(const KpiReport& report);

/// Empirical counterpart of a KpiReport row, paired with the analysis.
struct SimulatedKpi {
    Scheme scheme = Scheme::clra;
    int fragments = 1;
    int deadline = 1;
    double p_ack = 1.0;
    EmpiricalKpi empirical;
    double latency_slots = 0.0;
    double latency_stderr = 0.0;
    double latency_seconds = 0.0;
    double energy_joules = 0.0;
    KpiReport analytic;
};

SimulatedKpi summarize(const NetworkConfig& config, const EmpiricalKpi& empirical,
                       KpiReport analytic);

/// scheme,n,deadline,p_ack,psd,psd_stderr,latency_slots,latency_stderr,
/// latency_s,energy_J,psd_analytic,latency_slots_analytic,latency_s_analytic,
/// energy_J_analytic
void write_simulated_kpi_csv(std::ostream& out, const std::vector<SimulatedKpi>& rows);
nlohmann::ordered_json to_json(const SimulatedKpi& row);

}  // namespace iotra
