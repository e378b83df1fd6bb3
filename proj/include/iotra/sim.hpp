#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "iotra/chain.hpp"
#include "iotra/config.hpp"
#include "iotra/metrics.hpp"
#include "iotra/spatial.hpp"

namespace iotra {

using Rng = std::mt19937_64;

/// Independent generator for work item (index, stream) under `master_seed`.
/// Seeds depend only on the three integers, never on scheduling.
Rng stream_rng(std::uint64_t master_seed, std::uint64_t index, std::uint64_t stream = 0);

struct SimulationRun {
    std::uint64_t master_seed = 1;
    std::int64_t realizations = 5000;
    std::int64_t packets_per_realization = 1000;
    double window_radius = 2000.0;
    unsigned threads = 0;  // 0 = hardware concurrency

    static SimulationRun from(const AnalysisConfig& analysis);
};

/// Poisson(lambda pi R^2) interferers placed uniformly in the disk of radius
/// `window_radius` around the receiver, types drawn from f_v.
Realization sample_realization(const SpatialConfig& spatial, double window_radius, Rng& rng);

/// Sorted sample of realization-conditional success probabilities.
class EmpiricalMeta {
public:
    explicit EmpiricalMeta(std::vector<double> samples);

    /// Fraction of samples strictly greater than delta.
    double ccdf(double delta) const;
    double mean() const noexcept { return mean_; }
    double second_moment() const noexcept { return second_moment_; }
    std::size_t size() const noexcept { return samples_.size(); }
    std::span<const double> samples() const noexcept { return samples_; }

    /// Largest |empirical CCDF - reference| over the given delta points.
    double max_gap(const std::function<double(double)>& reference_ccdf,
                   std::span<const double> deltas) const;
    /// Supremum distance to a continuous reference CDF, including both sides
    /// of every jump.
    double kolmogorov_distance(const std::function<double(double)>& reference_cdf) const;

private:
    std::vector<double> samples_;
    double mean_ = 0.0;
    double second_moment_ = 0.0;
};

/// Conditional success probability of the test link for each threshold,
/// evaluated on the same `run.realizations` sampled fields. Realization r
/// uses stream_rng(seed, r).
std::vector<EmpiricalMeta> empirical_meta(const SpatialConfig& spatial,
                                          std::span<const double> thresholds,
                                          const SimulationRun& run);
EmpiricalMeta empirical_meta(const SpatialConfig& spatial, double threshold,
                             const SimulationRun& run);

/// Estimates the success probability of one realization by drawing fading
/// and activity afresh in each of `slots` slots.
double slot_sampled_fsd(const Realization& realization, double threshold,
                        const SpatialConfig& spatial, std::int64_t slots, Rng& rng);

/// Fragment outcomes drawn as Bernoulli(p).
struct MarginalChannel {
    double p = 1.0;
};

/// Fragment outcomes decided by thresholding the SIR of a fixed field with
/// fresh Rayleigh fading and activity draws in every slot.
class PhysicalChannel {
public:
    PhysicalChannel(const SpatialConfig& spatial, const Realization& realization,
                    double threshold);
    bool decode(Rng& rng) const;

private:
    struct Source {
        double activity;
        double mean_power;  // p_v r^-eta, infinite for a co-located interferer
    };
    std::vector<Source> sources_;
    double signal_mean_ = 0.0;  // p_o R_o^-eta
    double threshold_ = 0.0;
};

using FragmentChannel = std::variant<MarginalChannel, PhysicalChannel>;

struct ProtocolSpec {
    Scheme scheme = Scheme::olra;
    int fragments = 1;
    int deadline = 1;
    double p_ack = 1.0;         // CLRA only
    bool random_extras = false; // OLRA: fresh uniform choice of tau fragments per packet
};

/// Per-packet averages with standard errors. `estimate` holds the empirical
/// A_s, A_f, D_s, D_f so the latency/energy helpers apply unchanged.
struct EmpiricalKpi {
    std::int64_t packets = 0;
    AbsorptionResult estimate;
    double psd_stderr = 0.0;
    double latency_stderr = 0.0;  // unconditional absorption slot
    std::optional<double> success_latency;  // slots, given success
    std::optional<double> success_latency_stderr;
};

/// Runs `packets` independent packets of the protocol over the channel.
/// Packets are processed in fixed blocks with per-block streams so results
/// do not depend on `threads`.
EmpiricalKpi simulate_protocol(const ProtocolSpec& protocol, const FragmentChannel& channel,
                               std::int64_t packets, std::uint64_t seed, unsigned threads = 0);

enum class ChannelMode {
    conditional,  // Bernoulli(p_n(realization)) per fragment
    physical,     // SIR thresholding with per-slot fading and activity
};

/// End-to-end run: for each realization, sample the field and push
/// `run.packets_per_realization` packets through it. Standard errors are
/// computed across realizations.
EmpiricalKpi simulate_network(const SpatialConfig& spatial, double threshold,
                              const ProtocolSpec& protocol, const SimulationRun& run,
                              ChannelMode mode = ChannelMode::conditional);

}  // namespace iotra
