#include "iotra/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iotra {

namespace {

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// 2^x - 1 with an explicit overflow check.
double pow2_minus_one(double exponent, const char* key) {
    if (!(exponent < std::numeric_limits<double>::max_exponent))
        throw ConfigError(key, "rate exponent " + std::to_string(exponent) +
                                   " overflows the SIR threshold");
    return std::expm1(exponent * std::log(2.0));
}

}  // namespace

std::vector<double> SpatialConfig::type_density() const {
    std::vector<double> out(type_pmf.size());
    for (std::size_t v = 0; v < type_pmf.size(); ++v) out[v] = type_pmf[v] * density;
    return out;
}

void SpatialConfig::validate() const {
    require(std::isfinite(density) && density >= 0.0, "spatial.density",
            "must be a nonnegative number");
    require(std::isfinite(path_loss_exponent) && path_loss_exponent > 2.0,
            "spatial.path_loss_exponent", "must exceed 2");
    require(finite_positive(link_distance), "spatial.link_distance", "must be positive");
    require(!type_pmf.empty(), "spatial.type_pmf", "needs at least one type");
    require(activity.size() == type_pmf.size(), "spatial.activity",
            "needs one entry per type");
    require(interferer_power.size() == type_pmf.size(), "spatial.interferer_power",
            "needs one entry per type");
    double total = 0.0;
    for (double f : type_pmf) {
        require(std::isfinite(f) && f >= 0.0, "spatial.type_pmf", "entries must be >= 0");
        total += f;
    }
    require(std::abs(total - 1.0) <= 1e-9, "spatial.type_pmf", "must sum to 1");
    for (double a : activity)
        require(a >= 0.0 && a <= 1.0, "spatial.activity", "entries must lie in [0, 1]");
    for (double p : interferer_power)
        require(finite_positive(p), "spatial.interferer_power", "entries must be positive");
    require(finite_positive(tx_power), "spatial.tx_power", "must be positive");
}

void RadioConfig::validate() const {
    require(finite_positive(packet_bits), "radio.packet_length", "must be positive");
    require(finite_positive(bandwidth), "radio.bandwidth", "must be positive");
    require(finite_positive(slot_duration), "radio.slot_duration", "must be positive");
    require(deadline >= 1, "radio.deadline", "must be at least one slot");
    require(fragments >= 1 && fragments <= deadline, "radio.fragments",
            "must satisfy 1 <= n <= deadline");
}

void FeedbackConfig::validate() const {
    require(finite_positive(ack_bits), "feedback.ack_length", "must be positive");
    require(finite_positive(ack_duration), "feedback.ack_duration", "must be positive");
    if (fixed_p_ack)
        require(*fixed_p_ack >= 0.0 && *fixed_p_ack <= 1.0, "feedback.p_ack",
                "must lie in [0, 1]");
}

void EnergyConfig::validate() const {
    require(finite_positive(rx_circuit_power), "energy.rx_circuit_power", "must be positive");
    require(finite_positive(tx_circuit_power), "energy.tx_circuit_power", "must be positive");
    require(finite_positive(feedback_power), "energy.feedback_power", "must be positive");
    require(std::isfinite(amplifier_factor) && amplifier_factor >= 1.0,
            "energy.amplifier_factor", "must be at least 1");
}

void AnalysisConfig::validate(double link_distance) const {
    require(classes >= 1, "analysis.classes", "must be at least 1");
    require(finite_positive(tolerance), "analysis.tolerance", "must be positive");
    require(realizations >= 1, "analysis.realizations", "must be at least 1");
    require(packets >= 1, "analysis.packets", "must be at least 1");
    require(std::isfinite(window_radius) && window_radius > 10.0 * link_distance,
            "analysis.window_radius", "must be much larger than the link distance");
}

void NetworkConfig::validate() const {
    spatial.validate();
    radio.validate();
    feedback.validate();
    energy.validate();
    analysis.validate(spatial.link_distance);
    ack_threshold(feedback, radio.bandwidth);
}

NetworkConfig reference_config() { return NetworkConfig{}; }

double detection_threshold(const RadioConfig& radio) {
    return detection_threshold(radio, radio.fragments);
}

double detection_threshold(const RadioConfig& radio, int fragments) {
    require(fragments >= 1, "radio.fragments", "must be at least 1");
    const double exponent =
        radio.packet_bits / (fragments * radio.bandwidth * radio.slot_duration);
    return pow2_minus_one(exponent, "radio.packet_length");
}

double ack_threshold(const FeedbackConfig& feedback, double bandwidth) {
    return pow2_minus_one(feedback.ack_bits / (bandwidth * feedback.ack_duration),
                          "feedback.ack_length");
}

int RepetitionPlan::total_slots() const {
    return std::accumulate(copies.begin(), copies.end(), 0);
}

namespace {

RepetitionPlan base_plan(int fragments, int deadline) {
    if (fragments < 1 || fragments > deadline)
        throw ConfigError("radio.fragments", "must satisfy 1 <= n <= deadline (n=" +
                                                 std::to_string(fragments) + ", T=" +
                                                 std::to_string(deadline) + ")");
    RepetitionPlan plan;
    plan.kappa = deadline / fragments;
    plan.tau = deadline % fragments;
    plan.copies.assign(static_cast<std::size_t>(fragments), plan.kappa);
    return plan;
}

}  // namespace

RepetitionPlan repetition_plan(int fragments, int deadline) {
    RepetitionPlan plan = base_plan(fragments, deadline);
    for (int i = 0; i < plan.tau; ++i) ++plan.copies[static_cast<std::size_t>(i)];
    return plan;
}

RepetitionPlan repetition_plan_energy_saving(int fragments, int deadline) {
    return base_plan(fragments, deadline);
}

RepetitionPlan repetition_plan(int fragments, int deadline, const std::vector<bool>& extra) {
    RepetitionPlan plan = base_plan(fragments, deadline);
    const auto chosen = std::count(extra.begin(), extra.end(), true);
    if (extra.size() != plan.copies.size() || chosen != plan.tau)
        throw ConfigError("radio.fragments", "extra-copy selection must flag exactly tau=" +
                                                 std::to_string(plan.tau) + " of " +
                                                 std::to_string(fragments) + " fragments");
    for (std::size_t i = 0; i < extra.size(); ++i)
        if (extra[i]) ++plan.copies[i];
    return plan;
}

}  // namespace iotra
