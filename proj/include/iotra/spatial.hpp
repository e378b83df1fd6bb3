#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "iotra/config.hpp"

namespace iotra {

/// One interferer of a sampled field: distance to the test receiver and
/// its type index into SpatialConfig's per-type vectors.
struct Interferer {
    double distance = 0.0;
    std::size_t type = 0;
};

/// A sampled interferer field inside a disk centred on the test receiver.
struct Realization {
    std::vector<Interferer> interferers;
    double window_radius = 0.0;
};

/// Thrown when M2 <= M1^2 (within tolerance): the success probability has
/// no spread and the beta fit is undefined.
class DegenerateDistribution : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Beta-approximated distribution of the realization-conditional fragment
/// success probability at one SIR threshold.
struct MetaDistribution {
    double threshold = 0.0;
    double m1 = 1.0;
    double m2 = 1.0;
    double shape_a = 0.0;  // M1 * X
    double shape_b = 0.0;  // (1 - M1) * X
    bool degenerate = true;

    double variance() const noexcept { return m2 - m1 * m1; }
};

/// Equal-mass partition of the meta distribution with one representative
/// (class median) per class.
struct FsdClassSet {
    std::vector<double> boundaries;  // w_0 = 0 < ... < w_M = 1
    std::vector<double> medians;     // p_{n,m}, m = 1..M

    std::size_t size() const noexcept { return medians.size(); }
};

/// E[p_n] over the marked Poisson field.
double moment_m1(const SpatialConfig& spatial, double threshold);

/// E[p_n^2] over the marked Poisson field.
double moment_m2(const SpatialConfig& spatial, double threshold);

/// Moments plus beta shape parameters. `tolerance` is the variance floor
/// below which the distribution is flagged degenerate.
MetaDistribution make_meta_distribution(const SpatialConfig& spatial, double threshold,
                                        double tolerance = 1e-12);

/// P{p_n > delta} = 1 - I_delta(a, b). Throws DegenerateDistribution when
/// the beta fit is undefined.
double meta_ccdf(const MetaDistribution& meta, double delta);

/// M equiprobable classes: CDF(w_m) = m/M and CDF(p_{n,m}) = (m - 1/2)/M.
/// A degenerate distribution collapses every class onto M1.
FsdClassSet discretize_classes(const MetaDistribution& meta, int classes,
                               double tolerance = 1e-10);

/// Mean-field acknowledgment success probability. Returns the fixed
/// override when one is configured.
double feedback_success_prob(const SpatialConfig& spatial, const FeedbackConfig& feedback,
                             double bandwidth);

/// Success probability of the test link given the interferer positions and
/// types, with Rayleigh fading and Bernoulli activity averaged out:
///   prod_i [ (1 - a_i) + a_i / (1 + theta p_i R_o^eta / (p_o r_i^eta)) ].
double conditional_fsd(const Realization& realization, double threshold,
                       const SpatialConfig& spatial);

}  // namespace iotra
