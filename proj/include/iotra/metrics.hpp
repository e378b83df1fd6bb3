#pragma once

#include <optional>
#include <vector>

#include "iotra/chain.hpp"
#include "iotra/config.hpp"

namespace iotra {

/// Absorption probabilities and slot-weighted absorption times of a chain.
/// delay_success / success is the mean slot of successful delivery.
struct AbsorptionResult {
    double success = 0.0;        // A_s
    double timeout = 0.0;        // A_f
    double delay_success = 0.0;  // D_s (slots x probability)
    double delay_timeout = 0.0;  // D_f

    double mean_slots() const noexcept { return delay_success + delay_timeout; }

    AbsorptionResult& operator+=(const AbsorptionResult& other);
    AbsorptionResult& operator*=(double weight);
};

/// Propagates the one-row occupancy vector through the per-slot blocks:
///   A = sum_i (prod_{t<i} Q_t) H_i,   D = sum_i i (prod_{t<i} Q_t) H_i.
/// Throws ChainError on a block size mismatch.
AbsorptionResult absorb(const AbsorbingChain& chain);

/// Exact expectation of OLRA absorption over a uniformly random choice of
/// the tau fragments that receive an extra copy.
AbsorptionResult absorb_olra_random_extras(int fragments, int deadline, double p);

struct LatencySeconds {
    double unconditional = 0.0;             // (D_s + D_f) x slot time
    std::optional<double> given_success;    // D_s/A_s x slot time, unset if A_s = 0
    std::optional<double> given_timeout;    // D_f/A_f x slot time, unset if A_f = 0
};

/// Seconds per chain slot: T_s + T_ack with feedback, T_s without.
double slot_seconds(Scheme scheme, double slot_duration, double ack_duration);

LatencySeconds latency_seconds(const AbsorptionResult& result, Scheme scheme,
                               double slot_duration, double ack_duration);

/// Receiver energy in joules. Every slot up to absorption costs
/// E_r = p_cr T_s; with feedback each also costs E_ack = (gamma p_t + p_ct) T_ack.
double energy(const AbsorptionResult& result, const EnergyConfig& energy, Scheme scheme,
              double slot_duration, double ack_duration);

double reception_energy(const EnergyConfig& energy, double slot_duration);
double acknowledgment_energy(const EnergyConfig& energy, double ack_duration);

struct ClassKpi {
    double fragment_success = 0.0;  // p_{n,m}
    AbsorptionResult absorption;
    double energy_joules = 0.0;
};

struct KpiReport {
    Scheme scheme = Scheme::clra;
    int fragments = 1;
    int deadline = 1;
    double threshold = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double p_ack = 1.0;
    LatencyMode latency_mode = LatencyMode::unconditional;
    std::vector<ClassKpi> classes;

    // Equal-weight averages over classes.
    AbsorptionResult mean;
    double energy_joules = 0.0;
    double slot_seconds = 0.0;

    double psd() const noexcept { return mean.success; }
    /// Mean absorption latency in slots under `latency_mode`; for the
    /// success-conditional mode this is mean(D_s) / mean(A_s) and is NaN
    /// when no class ever succeeds.
    double latency_slots() const;
    double latency_seconds() const { return latency_slots() * slot_seconds; }
    double unconditional_latency_slots() const noexcept { return mean.mean_slots(); }
    std::optional<double> success_latency_slots() const;
};

/// Builds and absorbs one chain per equiprobable class of the meta
/// distribution at threshold theta_n and averages the results.
KpiReport evaluate_scheme(const NetworkConfig& config, Scheme scheme, int fragments);

/// Class-level evaluation for a known per-fragment success probability
/// (before p_ack for CLRA).
ClassKpi evaluate_class(const NetworkConfig& config, Scheme scheme, int fragments,
                        double fragment_success, double p_ack);

enum class Objective { max_psd, min_latency, min_energy };

struct OptimizationResult {
    bool feasible = false;
    int fragments = 0;                 // n*, 0 when infeasible
    std::optional<KpiReport> best;
    double best_achievable_psd = 0.0;  // max PSD over the scan
    int best_psd_fragments = 0;
    std::vector<KpiReport> scan;       // one report per n = 1..T
};

/// Exhaustive scan over n = 1..T. Latency and energy objectives only admit
/// n with PSD >= psd_target; ties resolve to the smaller n.
OptimizationResult optimize_fragments(const NetworkConfig& config, Scheme scheme,
                                      Objective objective, double psd_target = 0.0);

}  // namespace iotra
