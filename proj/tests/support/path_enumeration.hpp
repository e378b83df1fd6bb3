#pragma once

// Brute-force oracle: enumerates every slot-outcome sequence of a packet
// and replays the protocol rules on it. Exponential in T; test use only.

#include <cstdint>
#include <functional>
#include <vector>

#include "iotra/chain.hpp"
#include "iotra/metrics.hpp"

namespace iotra::oracle {

struct Outcome {
    bool success = false;
    int slot = 0;
};

// bits[t] is the outcome of slot t+1 (true = fragment got through).
using Replay = std::function<Outcome(const std::vector<bool>& bits)>;

inline AbsorptionResult enumerate_paths(int slots, double p, const Replay& replay) {
    AbsorptionResult out;
    std::vector<bool> bits(static_cast<std::size_t>(slots));
    const std::uint64_t count = std::uint64_t{1} << slots;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        double weight = 1.0;
        for (int t = 0; t < slots; ++t) {
            const bool hit = (mask >> t) & 1U;
            bits[static_cast<std::size_t>(t)] = hit;
            weight *= hit ? p : 1.0 - p;
        }
        if (weight == 0.0) continue;
        const Outcome o = replay(bits);
        if (o.success) {
            out.success += weight;
            out.delay_success += weight * o.slot;
        } else {
            out.timeout += weight;
            out.delay_timeout += weight * o.slot;
        }
    }
    return out;
}

// Closed loop: a slot "hits" when the fragment is decoded and acknowledged.
inline Outcome replay_clra(const std::vector<bool>& bits, int fragments) {
    const int deadline = static_cast<int>(bits.size());
    int delivered = 0;
    for (int t = 1; t <= deadline; ++t) {
        if (bits[static_cast<std::size_t>(t - 1)]) ++delivered;
        if (delivered == fragments) return {true, t};
        if (deadline - t < fragments - delivered) return {false, t};
    }
    return {false, deadline};
}

inline Outcome replay_olra(const std::vector<bool>& bits, const std::vector<int>& copies) {
    int t = 0;
    for (std::size_t i = 0; i < copies.size(); ++i) {
        bool decoded = false;
        for (int k = 0; k < copies[i]; ++k) {
            decoded = decoded || bits[static_cast<std::size_t>(t)];
            ++t;
            if (decoded && i + 1 == copies.size()) return {true, t};
        }
        if (!decoded) return {false, t};
    }
    return {false, t};
}

inline AbsorptionResult enumerate_clra(int fragments, int deadline, double rho) {
    return enumerate_paths(deadline, rho, [fragments](const std::vector<bool>& bits) {
        return replay_clra(bits, fragments);
    });
}

inline AbsorptionResult enumerate_olra(const std::vector<int>& copies, double p) {
    int slots = 0;
    for (int c : copies) slots += c;
    return enumerate_paths(slots, p, [&copies](const std::vector<bool>& bits) {
        return replay_olra(bits, copies);
    });
}

// CLRA with decode and acknowledgment drawn separately: 4^T paths.
inline AbsorptionResult enumerate_clra_joint(int fragments, int deadline, double p,
                                             double p_ack) {
    AbsorptionResult out;
    std::vector<bool> bits(static_cast<std::size_t>(deadline));
    const std::uint64_t count = std::uint64_t{1} << (2 * deadline);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        double weight = 1.0;
        for (int t = 0; t < deadline; ++t) {
            const bool decoded = (mask >> (2 * t)) & 1U;
            const bool acked = (mask >> (2 * t + 1)) & 1U;
            weight *= (decoded ? p : 1.0 - p) * (acked ? p_ack : 1.0 - p_ack);
            bits[static_cast<std::size_t>(t)] = decoded && acked;
        }
        if (weight == 0.0) continue;
        const Outcome o = replay_clra(bits, fragments);
        (o.success ? out.success : out.timeout) += weight;
        (o.success ? out.delay_success : out.delay_timeout) += weight * o.slot;
    }
    return out;
}

// CLRA over the three distinguishable slot events: decoded and acknowledged,
// decoded but the acknowledgment lost, not decoded. 3^T paths.
inline AbsorptionResult enumerate_clra_events(int fragments, int deadline, double p,
                                              double p_ack) {
    AbsorptionResult out;
    const double weight_of[3] = {p * p_ack, p * (1.0 - p_ack), 1.0 - p};
    std::vector<bool> bits(static_cast<std::size_t>(deadline));
    std::function<void(int, double)> walk = [&](int t, double weight) {
        if (weight == 0.0) return;
        if (t == deadline) {
            const Outcome o = replay_clra(bits, fragments);
            (o.success ? out.success : out.timeout) += weight;
            (o.success ? out.delay_success : out.delay_timeout) += weight * o.slot;
            return;
        }
        for (int e = 0; e < 3; ++e) {
            bits[static_cast<std::size_t>(t)] = e == 0;
            walk(t + 1, weight * weight_of[e]);
        }
    };
    walk(0, 1.0);
    return out;
}

// Every way of handing the tau extra copies to fragments.
inline std::vector<std::vector<int>> all_assignments(int fragments, int deadline) {
    const int kappa = deadline / fragments;
    const int tau = deadline % fragments;
    std::vector<std::vector<int>> out;
    for (std::uint32_t mask = 0; mask < (1U << fragments); ++mask) {
        if (__builtin_popcount(mask) != tau) continue;
        std::vector<int> copies(static_cast<std::size_t>(fragments), kappa);
        for (int i = 0; i < fragments; ++i)
            if ((mask >> i) & 1U) ++copies[static_cast<std::size_t>(i)];
        out.push_back(std::move(copies));
    }
    return out;
}

}  // namespace iotra::oracle
