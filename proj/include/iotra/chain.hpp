#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "iotra/config.hpp"

namespace iotra {

enum class Scheme { clra, olra, olra_es };

std::string_view to_string(Scheme scheme);
/// Accepts "clra", "olra", "olra-es" (case-sensitive).
Scheme parse_scheme(std::string_view text);

/// Transient state occupied during one slot.
struct StateLabel {
    int fragment = 1;    // 1-based fragment being received
    int attempt = 0;     // 1-based copy index (OLRA); 0 for CLRA
    bool logic = false;  // success logic state holding a decoded fragment
    int attempts_used = 0;  // reference chains only: failed tries so far

    friend bool operator==(const StateLabel&, const StateLabel&) = default;
};

std::string label_name(const StateLabel& label, Scheme scheme);

/// Raised when consecutive blocks of a chain do not line up.
class ChainError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Time-indexed absorbing chain of one packet. Slot t (1-based) has the
/// transient states states[t-1]; transient[t-1] maps slot t to slot t+1 and
/// absorbing[t-1] holds the (success, timeout) absorption probabilities
/// out of slot t. No dense full transition matrix is ever formed.
struct AbsorbingChain {
    Scheme scheme = Scheme::clra;
    int fragments = 1;
    int deadline = 1;
    double success_prob = 0.0;  // rho = p * p_ack for CLRA, p for OLRA variants
    std::vector<int> copies;    // OLRA variants only
    std::vector<std::vector<StateLabel>> states;
    std::vector<Eigen::MatrixXd> transient;
    std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>> absorbing;

    int slots() const noexcept { return static_cast<int>(states.size()); }

    /// Throws ChainError if block dimensions disagree.
    void check_dimensions() const;

    /// Largest |row sum - 1| over every [Q_t | H_t] row.
    double max_row_defect() const;
};

/// Closed-loop chain: a fragment advances only on joint decoding and
/// acknowledgment (probability rho); the packet times out as soon as the
/// remaining slots cannot carry the pending fragments.
AbsorbingChain build_clra(int fragments, int deadline, double rho);

/// Open-loop chain with the copy counts of `plan` (must use all T slots).
AbsorbingChain build_olra(int fragments, int deadline, double p, const RepetitionPlan& plan);
AbsorbingChain build_olra(int fragments, int deadline, double p);

/// Open-loop chain with kappa copies per fragment; the tau leftover slots
/// are silent and not part of the chain.
AbsorbingChain build_olra_es(int fragments, int deadline, double p);

/// Oracle builder: explores the protocol state (fragments delivered,
/// attempts used, decoded flag) slot by slot from the initial state,
/// applying the delivery and timeout rules directly. Its state space
/// differs from the closed-form builders but its absorption behaviour
/// must not. `copies` overrides the OLRA plan.
AbsorbingChain build_reference_chain(Scheme scheme, int fragments, int deadline, double p,
                                     double p_ack,
                                     std::optional<std::vector<int>> copies = std::nullopt);

/// Plain-text dump of the block matrix with slot-labelled rows and columns.
/// In symbolic mode entries equal to rho / 1-rho print as "r" / "~r".
void print_chain(std::ostream& out, const AbsorbingChain& chain, bool symbolic = true);

}  // namespace iotra
