#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotra {

/// Raised for invalid parameters; key() names the offending field as a
/// dotted path (e.g. "spatial.path_loss_exponent").
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Raised when a numerical procedure cannot meet its contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Marked Poisson field of interferers around the test link. All fields SI.
struct SpatialConfig {
    double density = 200e-6;             // devices per m^2
    double path_loss_exponent = 4.0;
    double link_distance = 20.0;         // m
    std::vector<double> type_pmf{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::vector<double> activity{0.1, 0.3, 0.5};
    std::vector<double> interferer_power{10e-3, 7e-3, 5e-3};  // W
    double tx_power = 10e-3;             // W, power of the test transmitter

    std::size_t type_count() const noexcept { return type_pmf.size(); }

    /// Per-type intensity f_v(v) * density.
    std::vector<double> type_density() const;

    void validate() const;
};

struct RadioConfig {
    double packet_bits = 2400.0;
    double bandwidth = 250e3;      // Hz
    double slot_duration = 1e-3;   // s
    int deadline = 15;             // slots
    int fragments = 1;

    void validate() const;
};

struct FeedbackConfig {
    double ack_bits = 40.0;
    double ack_duration = 0.15e-3;  // s
    /// When set, used verbatim in place of the stochastic-geometry formula.
    std::optional<double> fixed_p_ack;

    void validate() const;
};

struct EnergyConfig {
    double rx_circuit_power = 45e-3;  // W
    double tx_circuit_power = 38e-3;  // W
    double feedback_power = 10e-3;    // W
    double amplifier_factor = 4.0;

    void validate() const;
};

enum class LatencyMode { unconditional, success_conditional };

/// How the tau leftover OLRA copies are placed on fragments.
enum class ExtraCopyPolicy {
    first,     // the first tau fragments get kappa+1 copies
    averaged,  // expectation over a uniformly random choice of tau fragments
};

struct AnalysisConfig {
    int classes = 20;
    double tolerance = 1e-10;
    std::int64_t realizations = 5000;
    std::int64_t packets = 200;     // per realization
    std::uint64_t seed = 1;
    double window_radius = 2000.0;  // m
    unsigned threads = 0;           // 0 = hardware concurrency
    LatencyMode latency = LatencyMode::unconditional;
    ExtraCopyPolicy extra_copies = ExtraCopyPolicy::first;

    void validate(double link_distance) const;
};

struct NetworkConfig {
    SpatialConfig spatial;
    RadioConfig radio;
    FeedbackConfig feedback;
    EnergyConfig energy;
    AnalysisConfig analysis;

    void validate() const;
};

/// Network, radio, traffic, feedback and energy parameters of the reference
/// deployment (5-byte acknowledgments).
NetworkConfig reference_config();

/// SIR threshold 2^(L / (n W T_s)) - 1 needed to decode a fragment at rate
/// L / (n T_s). Throws ConfigError if the exponent overflows a double.
double detection_threshold(const RadioConfig& radio);
double detection_threshold(const RadioConfig& radio, int fragments);

/// Acknowledgment SIR threshold 2^(L_ack / (W T_ack)) - 1.
double ack_threshold(const FeedbackConfig& feedback, double bandwidth);

struct RepetitionPlan {
    int kappa = 0;                // floor(T / n)
    int tau = 0;                  // T mod n
    std::vector<int> copies;      // epsilon_i per fragment

    int total_slots() const;
};

/// Copies per fragment for OLRA: extra copies go to the first tau fragments.
RepetitionPlan repetition_plan(int fragments, int deadline);

/// Copies per fragment for OLRA-ES: kappa copies each, tau slots stay silent.
RepetitionPlan repetition_plan_energy_saving(int fragments, int deadline);

/// Plan with extra copies on the fragments flagged in `extra` (size n,
/// exactly tau flags set).
RepetitionPlan repetition_plan(int fragments, int deadline,
                               const std::vector<bool>& extra);

}  // namespace iotra
