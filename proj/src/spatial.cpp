#include "iotra/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "iotra/beta.hpp"

namespace iotra {

namespace {

void require_model(const SpatialConfig& spatial) {
    if (!(spatial.path_loss_exponent > 2.0))
        throw ConfigError("spatial.path_loss_exponent",
                          "model requires eta > 2 for the interference integral to converge");
}

// 2 pi^2 R_o^2 theta^(2/eta) / (eta sin(2 pi / eta)).
double field_constant(const SpatialConfig& spatial, double threshold) {
    if (!(threshold >= 0.0)) throw ConfigError("radio.threshold", "SIR threshold must be >= 0");
    const double eta = spatial.path_loss_exponent;
    const double pi = std::numbers::pi;
    return 2.0 * pi * pi * spatial.link_distance * spatial.link_distance *
           std::pow(threshold, 2.0 / eta) / (eta * std::sin(2.0 * pi / eta));
}

// sum_v (p_v/p_o)^(2/eta) lambda_v alpha_v weight(alpha_v)
template <typename Weight>
double type_sum(const SpatialConfig& spatial, Weight weight) {
    const double delta = 2.0 / spatial.path_loss_exponent;
    const auto lambda = spatial.type_density();
    double sum = 0.0;
    for (std::size_t v = 0; v < lambda.size(); ++v) {
        const double alpha = spatial.activity[v];
        sum += std::pow(spatial.interferer_power[v] / spatial.tx_power, delta) * lambda[v] *
               alpha * weight(alpha);
    }
    return sum;
}

}  // namespace

double moment_m1(const SpatialConfig& spatial, double threshold) {
    require_model(spatial);
    return std::exp(-field_constant(spatial, threshold) *
                    type_sum(spatial, [](double) { return 1.0; }));
}

double moment_m2(const SpatialConfig& spatial, double threshold) {
    require_model(spatial);
    const double delta = 2.0 / spatial.path_loss_exponent;
    return std::exp(-field_constant(spatial, threshold) *
                    type_sum(spatial, [delta](double alpha) {
                        return 2.0 - alpha * (1.0 - delta);
                    }));
}

MetaDistribution make_meta_distribution(const SpatialConfig& spatial, double threshold,
                                        double tolerance) {
    MetaDistribution meta;
    meta.threshold = threshold;
    meta.m1 = moment_m1(spatial, threshold);
    meta.m2 = moment_m2(spatial, threshold);
    const double variance = meta.variance();
    if (variance > tolerance && meta.m1 < 1.0 && meta.m1 > 0.0) {
        const double x = (meta.m1 - meta.m2) / variance;
        meta.shape_a = meta.m1 * x;
        meta.shape_b = (1.0 - meta.m1) * x;
        meta.degenerate = !(meta.shape_a > 0.0 && meta.shape_b > 0.0);
    }
    return meta;
}

double meta_ccdf(const MetaDistribution& meta, double delta) {
    if (meta.degenerate)
        throw DegenerateDistribution("meta distribution has no spread (M1=" +
                                     std::to_string(meta.m1) + ", M2=" +
                                     std::to_string(meta.m2) + ")");
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::domain_error("meta_ccdf: delta outside [0, 1]");
    return 1.0 - incomplete_beta(meta.shape_a, meta.shape_b, delta);
}

FsdClassSet discretize_classes(const MetaDistribution& meta, int classes, double tolerance) {
    if (classes < 1) throw ConfigError("analysis.classes", "must be at least 1");
    const auto count = static_cast<std::size_t>(classes);
    FsdClassSet set;
    set.boundaries.resize(count + 1);
    set.medians.resize(count);
    set.boundaries.front() = 0.0;
    set.boundaries.back() = 1.0;

    if (meta.degenerate) {
        for (std::size_t m = 1; m < count; ++m)
            set.boundaries[m] = static_cast<double>(m) / classes;
        std::fill(set.medians.begin(), set.medians.end(), meta.m1);
        return set;
    }

    auto quantile = [&](double q) {
        return incomplete_beta_inverse(meta.shape_a, meta.shape_b, q, tolerance);
    };
    for (std::size_t m = 1; m < count; ++m)
        set.boundaries[m] = quantile(static_cast<double>(m) / classes);
    for (std::size_t m = 0; m < count; ++m)
        set.medians[m] = quantile((static_cast<double>(m) + 0.5) / classes);

    for (std::size_t m = 0; m < count; ++m) {
        const bool inside = set.boundaries[m] <= set.medians[m] &&
                            set.medians[m] <= set.boundaries[m + 1] &&
                            set.boundaries[m] <= set.boundaries[m + 1];
        if (!inside)
            throw NumericalError("class discretization failed at class " +
                                 std::to_string(m + 1) + " (a=" +
                                 std::to_string(meta.shape_a) + ", b=" +
                                 std::to_string(meta.shape_b) + ")");
    }
    return set;
}

double feedback_success_prob(const SpatialConfig& spatial, const FeedbackConfig& feedback,
                             double bandwidth) {
    if (feedback.fixed_p_ack) return *feedback.fixed_p_ack;
    require_model(spatial);
    // Every interfering receiver acknowledges at the same power, always on.
    return std::exp(-field_constant(spatial, ack_threshold(feedback, bandwidth)) *
                    spatial.density);
}

double conditional_fsd(const Realization& realization, double threshold,
                       const SpatialConfig& spatial) {
    const double eta = spatial.path_loss_exponent;
    const double scale = threshold * std::pow(spatial.link_distance, eta) / spatial.tx_power;
    if (threshold == 0.0) return 1.0;  // any SIR clears a zero threshold
    double product = 1.0;
    for (const Interferer& i : realization.interferers) {
        const double alpha = spatial.activity[i.type];
        double term = 1.0 - alpha;
        if (i.distance > 0.0)
            term += alpha / (1.0 + scale * spatial.interferer_power[i.type] /
                                       std::pow(i.distance, eta));
        product *= term;
    }
    return product;
}

}  // namespace iotra
