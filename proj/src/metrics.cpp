#include "iotra/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iotra/spatial.hpp"

namespace iotra {

AbsorptionResult& AbsorptionResult::operator+=(const AbsorptionResult& other) {
    success += other.success;
    timeout += other.timeout;
    delay_success += other.delay_success;
    delay_timeout += other.delay_timeout;
    return *this;
}

AbsorptionResult& AbsorptionResult::operator*=(double weight) {
    success *= weight;
    timeout *= weight;
    delay_success *= weight;
    delay_timeout *= weight;
    return *this;
}

AbsorptionResult absorb(const AbsorbingChain& chain) {
    chain.check_dimensions();
    AbsorptionResult result;
    Eigen::RowVectorXd occupancy = Eigen::RowVectorXd::Ones(
        static_cast<Eigen::Index>(chain.states.front().size()));
    if (occupancy.size() != 1) throw ChainError("chain must start from a single state");

    for (std::size_t t = 0; t < chain.states.size(); ++t) {
        const Eigen::RowVector2d absorbed = occupancy * chain.absorbing[t];
        const double slot = static_cast<double>(t + 1);
        result.success += absorbed(0);
        result.timeout += absorbed(1);
        result.delay_success += slot * absorbed(0);
        result.delay_timeout += slot * absorbed(1);
        if (t < chain.transient.size()) occupancy = occupancy * chain.transient[t];
    }
    return result;
}

AbsorptionResult absorb_olra_random_extras(int fragments, int deadline, double p) {
    const RepetitionPlan base = repetition_plan_energy_saving(fragments, deadline);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p", "probability must lie in [0, 1]");
    const int n = fragments;
    const int kappa = base.kappa;
    const int tau = base.tau;
    const double q = 1.0 - p;

    // alive[j]: probability that every earlier fragment decoded and j of the
    // extra copies went to those earlier fragments.
    std::vector<double> alive(static_cast<std::size_t>(tau) + 1, 0.0);
    alive[0] = 1.0;
    AbsorptionResult result;
    for (int i = 0; i < n; ++i) {
        std::vector<double> next(alive.size(), 0.0);
        const int left = n - i;
        for (int j = 0; j <= tau; ++j) {
            const double mass = alive[static_cast<std::size_t>(j)];
            if (mass == 0.0) continue;
            const double extra_prob = static_cast<double>(tau - j) / left;
            for (int extra = 0; extra <= 1; ++extra) {
                const double w = mass * (extra ? extra_prob : 1.0 - extra_prob);
                if (w == 0.0) continue;
                const int start = i * kappa + j;
                const int copies = kappa + extra;
                const double all_lost = std::pow(q, copies);
                result.timeout += w * all_lost;
                result.delay_timeout += w * all_lost * (start + copies);
                if (i + 1 == n) {
                    double lost_so_far = 1.0;
                    for (int k = 1; k <= copies; ++k) {
                        const double hit = w * lost_so_far * p;
                        result.success += hit;
                        result.delay_success += hit * (start + k);
                        lost_so_far *= q;
                    }
                } else {
                    next[static_cast<std::size_t>(j + extra)] += w * (1.0 - all_lost);
                }
            }
        }
        alive = std::move(next);
    }
    return result;
}

double slot_seconds(Scheme scheme, double slot_duration, double ack_duration) {
    return scheme == Scheme::clra ? slot_duration + ack_duration : slot_duration;
}

LatencySeconds latency_seconds(const AbsorptionResult& result, Scheme scheme,
                               double slot_duration, double ack_duration) {
    const double scale = slot_seconds(scheme, slot_duration, ack_duration);
    LatencySeconds out;
    out.unconditional = result.mean_slots() * scale;
    if (result.success > 0.0) out.given_success = result.delay_success / result.success * scale;
    if (result.timeout > 0.0) out.given_timeout = result.delay_timeout / result.timeout * scale;
    return out;
}

double reception_energy(const EnergyConfig& energy, double slot_duration) {
    return energy.rx_circuit_power * slot_duration;
}

double acknowledgment_energy(const EnergyConfig& energy, double ack_duration) {
    return (energy.amplifier_factor * energy.feedback_power + energy.tx_circuit_power) *
           ack_duration;
}

double energy(const AbsorptionResult& result, const EnergyConfig& energy, Scheme scheme,
              double slot_duration, double ack_duration) {
    double per_slot = reception_energy(energy, slot_duration);
    if (scheme == Scheme::clra) per_slot += acknowledgment_energy(energy, ack_duration);
    return per_slot * result.mean_slots();
}

std::optional<double> KpiReport::success_latency_slots() const {
    if (!(mean.success > 0.0)) return std::nullopt;
    return mean.delay_success / mean.success;
}

double KpiReport::latency_slots() const {
    if (latency_mode == LatencyMode::unconditional) return unconditional_latency_slots();
    return success_latency_slots().value_or(std::numeric_limits<double>::quiet_NaN());
}

ClassKpi evaluate_class(const NetworkConfig& config, Scheme scheme, int fragments,
                        double fragment_success, double p_ack) {
    const int deadline = config.radio.deadline;
    ClassKpi kpi;
    kpi.fragment_success = fragment_success;
    switch (scheme) {
        case Scheme::clra:
            kpi.absorption = absorb(build_clra(fragments, deadline, fragment_success * p_ack));
            break;
        case Scheme::olra:
            kpi.absorption =
                config.analysis.extra_copies == ExtraCopyPolicy::averaged
                    ? absorb_olra_random_extras(fragments, deadline, fragment_success)
                    : absorb(build_olra(fragments, deadline, fragment_success));
            break;
        case Scheme::olra_es:
            kpi.absorption = absorb(build_olra_es(fragments, deadline, fragment_success));
            break;
    }
    kpi.energy_joules = energy(kpi.absorption, config.energy, scheme,
                               config.radio.slot_duration, config.feedback.ack_duration);
    return kpi;
}

KpiReport evaluate_scheme(const NetworkConfig& config, Scheme scheme, int fragments) {
    config.validate();
    if (fragments < 1 || fragments > config.radio.deadline)
        throw ConfigError("radio.fragments", "n=" + std::to_string(fragments) +
                                                 " outside [1, " +
                                                 std::to_string(config.radio.deadline) + "]");
    KpiReport report;
    report.scheme = scheme;
    report.fragments = fragments;
    report.deadline = config.radio.deadline;
    report.latency_mode = config.analysis.latency;
    report.threshold = detection_threshold(config.radio, fragments);
    report.slot_seconds =
        slot_seconds(scheme, config.radio.slot_duration, config.feedback.ack_duration);

    const MetaDistribution meta = make_meta_distribution(config.spatial, report.threshold);
    report.m1 = meta.m1;
    report.m2 = meta.m2;
    const FsdClassSet classes =
        discretize_classes(meta, config.analysis.classes, config.analysis.tolerance);
    report.p_ack = feedback_success_prob(config.spatial, config.feedback, config.radio.bandwidth);

    const double weight = 1.0 / static_cast<double>(classes.size());
    for (std::size_t m = 0; m < classes.size(); ++m) {
        ClassKpi kpi;
        try {
            kpi = evaluate_class(config, scheme, fragments, classes.medians[m], report.p_ack);
        } catch (const NumericalError& e) {
            throw NumericalError("class " + std::to_string(m + 1) + ": " + e.what());
        } catch (const ChainError& e) {
            throw ChainError("class " + std::to_string(m + 1) + ": " + e.what());
        }
        AbsorptionResult share = kpi.absorption;
        share *= weight;
        report.mean += share;
        report.energy_joules += weight * kpi.energy_joules;
        report.classes.push_back(kpi);
    }
    return report;
}

OptimizationResult optimize_fragments(const NetworkConfig& config, Scheme scheme,
                                      Objective objective, double psd_target) {
    OptimizationResult result;
    double best_score = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= config.radio.deadline; ++n) {
        KpiReport report = evaluate_scheme(config, scheme, n);
        const double psd = report.psd();
        if (psd > result.best_achievable_psd || result.best_psd_fragments == 0) {
            result.best_achievable_psd = psd;
            result.best_psd_fragments = n;
        }
        if (psd >= psd_target) {
            double score = 0.0;
            switch (objective) {
                case Objective::max_psd: score = -psd; break;
                case Objective::min_latency: score = report.latency_slots(); break;
                case Objective::min_energy: score = report.energy_joules; break;
            }
            // Strict comparison keeps the smaller n on ties.
            if (score < best_score) {
                best_score = score;
                result.feasible = true;
                result.fragments = n;
                result.best = report;
            }
        }
        result.scan.push_back(std::move(report));
    }
    return result;
}

}  // namespace iotra
