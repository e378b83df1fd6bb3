#include "iotra/chain.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace iotra {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::clra: return "clra";
        case Scheme::olra: return "olra";
        case Scheme::olra_es: return "olra-es";
    }
    return "?";
}

Scheme parse_scheme(std::string_view text) {
    if (text == "clra") return Scheme::clra;
    if (text == "olra") return Scheme::olra;
    if (text == "olra-es") return Scheme::olra_es;
    throw ConfigError("scheme", "unknown scheme '" + std::string(text) +
                                    "' (expected clra, olra or olra-es)");
}

std::string label_name(const StateLabel& label, Scheme scheme) {
    if (label.logic) return "LS";
    std::string name = label.fragment <= 26
                           ? std::string(1, static_cast<char>('a' + label.fragment - 1))
                           : "f" + std::to_string(label.fragment);
    if (scheme != Scheme::clra) name += std::to_string(label.attempt);
    return name;
}

void AbsorbingChain::check_dimensions() const {
    const auto n = states.size();
    if (n == 0) throw ChainError("chain has no slots");
    if (absorbing.size() != n || transient.size() + 1 != n)
        throw ChainError("chain block counts disagree with slot count");
    for (std::size_t t = 0; t < n; ++t) {
        const auto rows = static_cast<Eigen::Index>(states[t].size());
        if (absorbing[t].rows() != rows)
            throw ChainError("H block of slot " + std::to_string(t + 1) + " has " +
                             std::to_string(absorbing[t].rows()) + " rows, expected " +
                             std::to_string(rows));
        if (t + 1 < n) {
            const auto next = static_cast<Eigen::Index>(states[t + 1].size());
            if (transient[t].rows() != rows || transient[t].cols() != next)
                throw ChainError("Q block of slot " + std::to_string(t + 1) + " is " +
                                 std::to_string(transient[t].rows()) + "x" +
                                 std::to_string(transient[t].cols()) + ", expected " +
                                 std::to_string(rows) + "x" + std::to_string(next));
        }
    }
}

double AbsorbingChain::max_row_defect() const {
    double worst = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        for (Eigen::Index i = 0; i < absorbing[t].rows(); ++i) {
            double sum = absorbing[t].row(i).sum();
            if (t < transient.size()) sum += transient[t].row(i).sum();
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    }
    return worst;
}

namespace {

void require_probability(double p, const char* key) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(key, "probability must lie in [0, 1]");
}

void require_fragments(int fragments, int deadline) {
    if (fragments < 1 || fragments > deadline)
        throw ConfigError("radio.fragments", "must satisfy 1 <= n <= deadline");
}

// Allocates zeroed Q/H blocks matching the per-slot state lists.
void allocate_blocks(AbsorbingChain& chain) {
    const auto slots = chain.states.size();
    chain.transient.clear();
    chain.absorbing.clear();
    for (std::size_t t = 0; t < slots; ++t) {
        const auto rows = static_cast<Eigen::Index>(chain.states[t].size());
        chain.absorbing.emplace_back(Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(rows, 2));
        if (t + 1 < slots)
            chain.transient.emplace_back(Eigen::MatrixXd::Zero(
                rows, static_cast<Eigen::Index>(chain.states[t + 1].size())));
    }
}

constexpr Eigen::Index kSuccess = 0;
constexpr Eigen::Index kTimeout = 1;

AbsorbingChain build_open_loop(Scheme scheme, int fragments, int deadline, double p,
                               const std::vector<int>& copies) {
    AbsorbingChain chain;
    chain.scheme = scheme;
    chain.fragments = fragments;
    chain.deadline = deadline;
    chain.success_prob = p;
    chain.copies = copies;
    const double q = 1.0 - p;

    // Slot layout: fragment i occupies copies[i] consecutive slots. Non-final
    // fragments carry a logic state from their second copy onwards.
    for (int i = 1; i <= fragments; ++i) {
        const int eps = copies[static_cast<std::size_t>(i - 1)];
        for (int k = 1; k <= eps; ++k) {
            std::vector<StateLabel> slot{{i, k, false}};
            if (i < fragments && k >= 2) slot.push_back({i, k, true});
            chain.states.push_back(std::move(slot));
        }
    }
    allocate_blocks(chain);

    std::size_t t = 0;
    for (int i = 1; i <= fragments; ++i) {
        const int eps = copies[static_cast<std::size_t>(i - 1)];
        const bool last_fragment = i == fragments;
        for (int k = 1; k <= eps; ++k, ++t) {
            auto& h = chain.absorbing[t];
            const bool last_copy = k == eps;
            if (last_fragment) {
                // Every copy of the final fragment can complete the packet.
                h(0, kSuccess) = p;
                if (last_copy)
                    h(0, kTimeout) = q;
                else
                    chain.transient[t](0, 0) = q;
                continue;
            }
            auto& qt = chain.transient[t];
            const bool has_logic = k >= 2;
            if (!last_copy) {
                qt(0, 0) = q;  // next copy, still undecoded
                qt(0, 1) = p;  // decoded: hold in the logic state
                if (has_logic) qt(1, 1) = 1.0;
            } else {
                qt(0, 0) = p;  // decoded on the final copy: first copy of next fragment
                h(0, kTimeout) = q;
                if (has_logic) qt(1, 0) = 1.0;
            }
        }
    }
    chain.check_dimensions();
    return chain;
}

}  // namespace

AbsorbingChain build_clra(int fragments, int deadline, double rho) {
    require_fragments(fragments, deadline);
    require_probability(rho, "rho");
    const int n = fragments;
    const int T = deadline;
    const double fail = 1.0 - rho;

    AbsorbingChain chain;
    chain.scheme = Scheme::clra;
    chain.fragments = n;
    chain.deadline = T;
    chain.success_prob = rho;

    // Fragment j can be pending at slot t only if j-1 <= t-1 deliveries have
    // happened and the T-t+1 slots left still fit the n-j+1 pending ones.
    auto lowest = [&](int t) { return std::max(1, n - T + t); };
    auto highest = [&](int t) { return std::min(t, n); };
    for (int t = 1; t <= T; ++t) {
        std::vector<StateLabel> slot;
        for (int j = lowest(t); j <= highest(t); ++j) slot.push_back({j, 0, false});
        chain.states.push_back(std::move(slot));
    }
    allocate_blocks(chain);

    for (int t = 1; t <= T; ++t) {
        const auto ti = static_cast<std::size_t>(t - 1);
        const int lo = lowest(t);
        for (int j = lo; j <= highest(t); ++j) {
            const Eigen::Index row = j - lo;
            if (j == n)
                chain.absorbing[ti](row, kSuccess) = rho;
            else
                chain.transient[ti](row, j + 1 - lowest(t + 1)) = rho;

            const bool fits = T - t >= n - j + 1;
            if (fits)
                chain.transient[ti](row, j - lowest(t + 1)) = fail;
            else
                chain.absorbing[ti](row, kTimeout) = fail;
        }
    }
    chain.check_dimensions();
    return chain;
}

AbsorbingChain build_olra(int fragments, int deadline, double p, const RepetitionPlan& plan) {
    require_fragments(fragments, deadline);
    require_probability(p, "p");
    if (plan.copies.size() != static_cast<std::size_t>(fragments) ||
        plan.total_slots() != deadline)
        throw ConfigError("radio.fragments",
                          "OLRA copy counts must cover all T slots with one entry per fragment");
    if (std::any_of(plan.copies.begin(), plan.copies.end(), [](int c) { return c < 1; }))
        throw ConfigError("radio.fragments", "every fragment needs at least one copy");
    return build_open_loop(Scheme::olra, fragments, deadline, p, plan.copies);
}

AbsorbingChain build_olra(int fragments, int deadline, double p) {
    return build_olra(fragments, deadline, p, repetition_plan(fragments, deadline));
}

AbsorbingChain build_olra_es(int fragments, int deadline, double p) {
    require_fragments(fragments, deadline);
    require_probability(p, "p");
    return build_open_loop(Scheme::olra_es, fragments, deadline, p,
                           repetition_plan_energy_saving(fragments, deadline).copies);
}

namespace {

struct ProtocolState {
    int fragment;       // 1-based fragment being sent/received
    int attempts_used;  // slots already spent on this fragment
    bool decoded;       // OLRA: fragment already decoded, waiting out copies

    auto key() const { return std::tie(fragment, attempts_used, decoded); }
    bool operator<(const ProtocolState& other) const { return key() < other.key(); }
};

enum class Outcome { pending, success, timeout };

struct Step {
    double probability;
    Outcome outcome;
    ProtocolState next;
};

// One slot of the closed-loop protocol, applied literally: the fragment is
// delivered with probability rho; on failure the packet is dropped as soon
// as the slots left cannot carry the fragments still pending.
std::vector<Step> clra_step(const ProtocolState& s, int slot, int n, int T, double rho) {
    std::vector<Step> steps;
    if (s.fragment == n)
        steps.push_back({rho, Outcome::success, s});
    else
        steps.push_back({rho, Outcome::pending, {s.fragment + 1, 0, false}});
    const int pending = n - s.fragment + 1;
    const int remaining = T - slot;
    if (remaining < pending)
        steps.push_back({1.0 - rho, Outcome::timeout, s});
    else
        steps.push_back({1.0 - rho, Outcome::pending, {s.fragment, s.attempts_used + 1, false}});
    return steps;
}

// One slot of the open-loop receiver: it listens to copy attempts_used+1 of
// the current fragment; a packet fails when every copy of some fragment is
// lost, and succeeds the moment any copy of the final fragment decodes.
std::vector<Step> olra_step(const ProtocolState& s, int n, const std::vector<int>& copies,
                            double p) {
    std::vector<std::pair<double, bool>> draws;
    if (s.decoded)
        draws.emplace_back(1.0, true);
    else
        draws = {{p, true}, {1.0 - p, false}};

    const int copies_of_fragment = copies[static_cast<std::size_t>(s.fragment - 1)];
    const bool final_copy = s.attempts_used + 1 == copies_of_fragment;
    std::vector<Step> steps;
    for (const auto& [prob, decoded] : draws) {
        if (decoded && s.fragment == n) {
            steps.push_back({prob, Outcome::success, s});
        } else if (final_copy) {
            if (decoded)
                steps.push_back({prob, Outcome::pending, {s.fragment + 1, 0, false}});
            else
                steps.push_back({prob, Outcome::timeout, s});
        } else {
            steps.push_back({prob, Outcome::pending, {s.fragment, s.attempts_used + 1, decoded}});
        }
    }
    return steps;
}

}  // namespace

AbsorbingChain build_reference_chain(Scheme scheme, int fragments, int deadline, double p,
                                     double p_ack, std::optional<std::vector<int>> copies) {
    require_fragments(fragments, deadline);
    require_probability(p, "p");
    require_probability(p_ack, "p_ack");

    AbsorbingChain chain;
    chain.scheme = scheme;
    chain.fragments = fragments;
    chain.deadline = deadline;
    int horizon = deadline;
    if (scheme == Scheme::clra) {
        chain.success_prob = p * p_ack;
    } else {
        chain.success_prob = p;
        if (!copies)
            copies = scheme == Scheme::olra
                         ? repetition_plan(fragments, deadline).copies
                         : repetition_plan_energy_saving(fragments, deadline).copies;
        if (copies->size() != static_cast<std::size_t>(fragments))
            throw ConfigError("radio.fragments", "one copy count per fragment required");
        chain.copies = *copies;
        horizon = std::accumulate(chain.copies.begin(), chain.copies.end(), 0);
        if (horizon > deadline)
            throw ConfigError("radio.fragments", "copy counts exceed the deadline");
    }

    // Frontier states in discovery order; `index` maps a state to its row.
    std::vector<ProtocolState> current{{1, 0, false}};
    for (int slot = 1; slot <= horizon && !current.empty(); ++slot) {
        std::vector<StateLabel> labels;
        for (const auto& s : current)
            labels.push_back({s.fragment, s.attempts_used + 1, s.decoded, s.attempts_used});
        chain.states.push_back(std::move(labels));

        std::vector<ProtocolState> next;
        std::map<ProtocolState, Eigen::Index> index;
        struct Edge {
            Eigen::Index row;
            double probability;
            Outcome outcome;
            Eigen::Index column;
        };
        std::vector<Edge> edges;
        for (std::size_t row = 0; row < current.size(); ++row) {
            const auto steps =
                scheme == Scheme::clra
                    ? clra_step(current[row], slot, fragments, deadline, chain.success_prob)
                    : olra_step(current[row], fragments, chain.copies, p);
            for (const Step& step : steps) {
                Eigen::Index column = -1;
                if (step.outcome == Outcome::pending) {
                    auto [it, inserted] =
                        index.emplace(step.next, static_cast<Eigen::Index>(next.size()));
                    if (inserted) next.push_back(step.next);
                    column = it->second;
                }
                edges.push_back({static_cast<Eigen::Index>(row), step.probability, step.outcome,
                                 column});
            }
        }
        if (slot == horizon && !next.empty())
            throw ChainError("reference chain still has transient states after the last slot");

        const auto rows = static_cast<Eigen::Index>(current.size());
        Eigen::Matrix<double, Eigen::Dynamic, 2> h =
            Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(rows, 2);
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(next.size()));
        for (const Edge& e : edges) {
            switch (e.outcome) {
                case Outcome::pending: q(e.row, e.column) += e.probability; break;
                case Outcome::success: h(e.row, kSuccess) += e.probability; break;
                case Outcome::timeout: h(e.row, kTimeout) += e.probability; break;
            }
        }
        chain.absorbing.push_back(std::move(h));
        if (!next.empty()) chain.transient.push_back(std::move(q));
        current = std::move(next);
    }
    chain.check_dimensions();
    return chain;
}

void print_chain(std::ostream& out, const AbsorbingChain& chain, bool symbolic) {
    const double r = chain.success_prob;
    auto cell = [&](double value) -> std::string {
        if (value == 0.0) return ".";
        if (symbolic) {
            if (value == r) return "r";
            if (value == 1.0 - r) return "~r";
            if (value == 1.0) return "1";
        }
        std::ostringstream s;
        s << std::setprecision(4) << value;
        return s.str();
    };

    std::vector<std::string> columns;
    for (std::size_t t = 1; t < chain.states.size(); ++t)
        for (const auto& label : chain.states[t])
            columns.push_back("t" + std::to_string(t + 1) + ":" + label_name(label, chain.scheme));
    columns.emplace_back("S");
    columns.emplace_back("t-out");

    constexpr int width = 8;
    out << std::setw(width) << "" << ' ';
    for (const auto& c : columns) out << std::setw(width) << c;
    out << '\n';

    std::size_t offset = 0;  // column offset of slot t+1 states
    for (std::size_t t = 0; t < chain.states.size(); ++t) {
        const std::size_t next_size = t + 1 < chain.states.size() ? chain.states[t + 1].size() : 0;
        for (std::size_t i = 0; i < chain.states[t].size(); ++i) {
            out << std::setw(width)
                << ("t" + std::to_string(t + 1) + ":" + label_name(chain.states[t][i], chain.scheme))
                << ' ';
            for (std::size_t c = 0; c + 2 < columns.size(); ++c) {
                std::string text = "";
                if (c >= offset && c < offset + next_size)
                    text = cell(chain.transient[t](static_cast<Eigen::Index>(i),
                                                   static_cast<Eigen::Index>(c - offset)));
                out << std::setw(width) << text;
            }
            out << std::setw(width) << cell(chain.absorbing[t](static_cast<Eigen::Index>(i), 0))
                << std::setw(width) << cell(chain.absorbing[t](static_cast<Eigen::Index>(i), 1))
                << '\n';
        }
        offset += next_size;
    }
}

}  // namespace iotra
