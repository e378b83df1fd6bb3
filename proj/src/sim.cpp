#include "iotra/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

namespace iotra {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

unsigned worker_count(unsigned requested, std::size_t items) {
    unsigned threads = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(items, 1)));
}

// Runs body(i) for i in [0, count) on striped workers. Bodies must only
// write to slots owned by their index.
template <typename Body>
void parallel_for(std::size_t count, unsigned requested, Body body) {
    const unsigned threads = worker_count(requested, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += threads) body(i);
        });
}

constexpr std::uint64_t kFieldStream = 0;
constexpr std::uint64_t kPacketStream = 1;
constexpr std::int64_t kPacketBlock = 4096;

}  // namespace

Rng stream_rng(std::uint64_t master_seed, std::uint64_t index, std::uint64_t stream) {
    const std::uint64_t a = splitmix64(master_seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(index));
    const std::uint64_t c = splitmix64(b ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    return Rng(seq);
}

SimulationRun SimulationRun::from(const AnalysisConfig& analysis) {
    SimulationRun run;
    run.master_seed = analysis.seed;
    run.realizations = analysis.realizations;
    run.packets_per_realization = analysis.packets;
    run.window_radius = analysis.window_radius;
    run.threads = analysis.threads;
    return run;
}

Realization sample_realization(const SpatialConfig& spatial, double window_radius, Rng& rng) {
    Realization realization;
    realization.window_radius = window_radius;
    const double mean_count = spatial.density * std::numbers::pi * window_radius * window_radius;
    if (!(mean_count > 0.0)) return realization;

    const auto count = std::poisson_distribution<std::int64_t>(mean_count)(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::discrete_distribution<std::size_t> type(spatial.type_pmf.begin(), spatial.type_pmf.end());
    realization.interferers.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const double radius = window_radius * std::sqrt(unit(rng));
        realization.interferers.push_back({radius, type(rng)});
    }
    return realization;
}

EmpiricalMeta::EmpiricalMeta(std::vector<double> samples) : samples_(std::move(samples)) {
    std::sort(samples_.begin(), samples_.end());
    if (samples_.empty()) return;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double s : samples_) {
        sum += s;
        sum_sq += s * s;
    }
    mean_ = sum / static_cast<double>(samples_.size());
    second_moment_ = sum_sq / static_cast<double>(samples_.size());
}

double EmpiricalMeta::ccdf(double delta) const {
    if (samples_.empty()) return 0.0;
    const auto above = samples_.end() - std::upper_bound(samples_.begin(), samples_.end(), delta);
    return static_cast<double>(above) / static_cast<double>(samples_.size());
}

double EmpiricalMeta::max_gap(const std::function<double(double)>& reference_ccdf,
                              std::span<const double> deltas) const {
    double gap = 0.0;
    for (double d : deltas) gap = std::max(gap, std::abs(ccdf(d) - reference_ccdf(d)));
    return gap;
}

double EmpiricalMeta::kolmogorov_distance(const std::function<double(double)>& reference_cdf) const {
    const double n = static_cast<double>(samples_.size());
    double distance = 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const double f = reference_cdf(samples_[i]);
        distance = std::max({distance, std::abs(static_cast<double>(i + 1) / n - f),
                             std::abs(f - static_cast<double>(i) / n)});
    }
    return distance;
}

std::vector<EmpiricalMeta> empirical_meta(const SpatialConfig& spatial,
                                          std::span<const double> thresholds,
                                          const SimulationRun& run) {
    spatial.validate();
    const auto count = static_cast<std::size_t>(run.realizations);
    std::vector<std::vector<double>> samples(thresholds.size(), std::vector<double>(count));
    parallel_for(count, run.threads, [&](std::size_t r) {
        Rng rng = stream_rng(run.master_seed, r, kFieldStream);
        const Realization field = sample_realization(spatial, run.window_radius, rng);
        for (std::size_t k = 0; k < thresholds.size(); ++k)
            samples[k][r] = conditional_fsd(field, thresholds[k], spatial);
    });
    std::vector<EmpiricalMeta> out;
    out.reserve(thresholds.size());
    for (auto& s : samples) out.emplace_back(std::move(s));
    return out;
}

EmpiricalMeta empirical_meta(const SpatialConfig& spatial, double threshold,
                             const SimulationRun& run) {
    const std::array<double, 1> one{threshold};
    return std::move(empirical_meta(spatial, one, run).front());
}

PhysicalChannel::PhysicalChannel(const SpatialConfig& spatial, const Realization& realization,
                                 double threshold)
    : threshold_(threshold) {
    const double eta = spatial.path_loss_exponent;
    signal_mean_ = spatial.tx_power * std::pow(spatial.link_distance, -eta);
    sources_.reserve(realization.interferers.size());
    for (const Interferer& i : realization.interferers) {
        const double power = i.distance > 0.0
                                 ? spatial.interferer_power[i.type] * std::pow(i.distance, -eta)
                                 : std::numeric_limits<double>::infinity();
        sources_.push_back({spatial.activity[i.type], power});
    }
    // Strongest first so a failed slot is usually decided early.
    std::sort(sources_.begin(), sources_.end(),
              [](const Source& a, const Source& b) { return a.mean_power > b.mean_power; });
}

bool PhysicalChannel::decode(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> fading(1.0);
    const double signal = signal_mean_ * fading(rng);
    double interference = 0.0;
    for (const Source& s : sources_) {
        if (unit(rng) < s.activity) interference += s.mean_power * fading(rng);
        if (threshold_ * interference > signal) return false;
    }
    return true;
}

double slot_sampled_fsd(const Realization& realization, double threshold,
                        const SpatialConfig& spatial, std::int64_t slots, Rng& rng) {
    const PhysicalChannel channel(spatial, realization, threshold);
    std::int64_t hits = 0;
    for (std::int64_t s = 0; s < slots; ++s) hits += channel.decode(rng) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(slots);
}

namespace {

struct PacketOutcome {
    bool success = false;
    int slot = 0;  // slot of absorption
};

template <typename Decode>
PacketOutcome run_clra(const ProtocolSpec& spec, Decode&& decode, Rng& rng) {
    std::bernoulli_distribution ack(spec.p_ack);
    int delivered = 0;
    for (int t = 1; t <= spec.deadline; ++t) {
        const bool decoded = decode(rng);
        const bool acknowledged = ack(rng);
        if (decoded && acknowledged && ++delivered == spec.fragments) return {true, t};
        // Drop as soon as the slots left cannot carry what is still pending.
        if (spec.deadline - t < spec.fragments - delivered) return {false, t};
    }
    return {false, spec.deadline};
}

template <typename Decode>
PacketOutcome run_olra(const ProtocolSpec& spec, const std::vector<int>& copies,
                       Decode&& decode, Rng& rng) {
    int t = 0;
    for (int i = 0; i < spec.fragments; ++i) {
        bool decoded = false;
        const bool last = i + 1 == spec.fragments;
        for (int k = 0; k < copies[static_cast<std::size_t>(i)]; ++k) {
            ++t;
            if (!decoded) decoded = decode(rng);  // holding a decoded copy: no further decoding
            if (decoded && last) return {true, t};
        }
        if (!decoded) return {false, t};  // receiver sleeps for the rest of the packet
    }
    return {false, t};
}

struct Tally {
    std::int64_t packets = 0;
    std::int64_t successes = 0;
    double success_slots = 0.0;
    double success_slots_sq = 0.0;
    double timeout_slots = 0.0;
    double slots_sq = 0.0;

    void add(const PacketOutcome& o) {
        ++packets;
        const double s = o.slot;
        if (o.success) {
            ++successes;
            success_slots += s;
            success_slots_sq += s * s;
        } else {
            timeout_slots += s;
        }
        slots_sq += s * s;
    }

    Tally& operator+=(const Tally& o) {
        packets += o.packets;
        successes += o.successes;
        success_slots += o.success_slots;
        success_slots_sq += o.success_slots_sq;
        timeout_slots += o.timeout_slots;
        slots_sq += o.slots_sq;
        return *this;
    }

    AbsorptionResult estimate() const {
        const double n = static_cast<double>(packets);
        AbsorptionResult r;
        r.success = static_cast<double>(successes) / n;
        r.timeout = 1.0 - r.success;
        r.delay_success = success_slots / n;
        r.delay_timeout = timeout_slots / n;
        return r;
    }
};

template <typename Decode>
void run_block(const ProtocolSpec& spec, Decode&& decode, std::int64_t packets, Rng& rng,
               Tally& tally) {
    std::vector<int> copies;
    std::vector<std::size_t> order;
    if (spec.scheme == Scheme::olra) {
        copies = repetition_plan(spec.fragments, spec.deadline).copies;
        order.resize(copies.size());
    } else if (spec.scheme == Scheme::olra_es) {
        copies = repetition_plan_energy_saving(spec.fragments, spec.deadline).copies;
    }
    const RepetitionPlan base = spec.scheme == Scheme::olra
                                    ? repetition_plan_energy_saving(spec.fragments, spec.deadline)
                                    : RepetitionPlan{};
    for (std::int64_t k = 0; k < packets; ++k) {
        if (spec.scheme == Scheme::clra) {
            tally.add(run_clra(spec, decode, rng));
            continue;
        }
        if (spec.scheme == Scheme::olra && spec.random_extras && base.tau > 0) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);
            std::fill(copies.begin(), copies.end(), base.kappa);
            for (int e = 0; e < base.tau; ++e) ++copies[order[static_cast<std::size_t>(e)]];
        }
        tally.add(run_olra(spec, copies, decode, rng));
    }
}

void validate(const ProtocolSpec& spec) {
    if (spec.fragments < 1 || spec.fragments > spec.deadline)
        throw ConfigError("radio.fragments", "must satisfy 1 <= n <= deadline");
    if (!(spec.p_ack >= 0.0 && spec.p_ack <= 1.0))
        throw ConfigError("feedback.p_ack", "must lie in [0, 1]");
}

template <typename Decode>
Tally simulate_tally(const ProtocolSpec& spec, Decode decode, std::int64_t packets,
                     std::uint64_t seed, std::uint64_t index, unsigned threads) {
    const auto blocks = static_cast<std::size_t>((packets + kPacketBlock - 1) / kPacketBlock);
    std::vector<Tally> partial(blocks);
    parallel_for(blocks, threads, [&](std::size_t b) {
        Rng rng = stream_rng(seed, index, kPacketStream + (static_cast<std::uint64_t>(b) << 8));
        const std::int64_t begin = static_cast<std::int64_t>(b) * kPacketBlock;
        run_block(spec, decode, std::min(kPacketBlock, packets - begin), rng, partial[b]);
    });
    Tally total;
    for (const Tally& t : partial) total += t;
    return total;
}

EmpiricalKpi finish(const Tally& t) {
    EmpiricalKpi kpi;
    kpi.packets = t.packets;
    kpi.estimate = t.estimate();
    const double n = static_cast<double>(t.packets);
    const double psd = kpi.estimate.success;
    kpi.psd_stderr = std::sqrt(psd * (1.0 - psd) / n);
    const double mean_slot = kpi.estimate.mean_slots();
    kpi.latency_stderr = std::sqrt(std::max(0.0, t.slots_sq / n - mean_slot * mean_slot) / n);
    if (t.successes > 0) {
        const double ns = static_cast<double>(t.successes);
        const double mean = t.success_slots / ns;
        kpi.success_latency = mean;
        kpi.success_latency_stderr =
            std::sqrt(std::max(0.0, t.success_slots_sq / ns - mean * mean) / ns);
    }
    return kpi;
}

}  // namespace

EmpiricalKpi simulate_protocol(const ProtocolSpec& protocol, const FragmentChannel& channel,
                               std::int64_t packets, std::uint64_t seed, unsigned threads) {
    validate(protocol);
    if (packets < 1) throw ConfigError("analysis.packets", "must be at least 1");
    const Tally tally = std::visit(
        [&](const auto& ch) {
            using T = std::decay_t<decltype(ch)>;
            if constexpr (std::is_same_v<T, MarginalChannel>) {
                if (!(ch.p >= 0.0 && ch.p <= 1.0))
                    throw ConfigError("p", "probability must lie in [0, 1]");
                return simulate_tally(
                    protocol, [p = ch.p](Rng& rng) { return std::bernoulli_distribution(p)(rng); },
                    packets, seed, 0, threads);
            } else {
                return simulate_tally(
                    protocol, [&ch](Rng& rng) { return ch.decode(rng); }, packets, seed, 0,
                    threads);
            }
        },
        channel);
    return finish(tally);
}

EmpiricalKpi simulate_network(const SpatialConfig& spatial, double threshold,
                              const ProtocolSpec& protocol, const SimulationRun& run,
                              ChannelMode mode) {
    validate(protocol);
    spatial.validate();
    const auto count = static_cast<std::size_t>(run.realizations);
    std::vector<Tally> per_field(count);
    parallel_for(count, run.threads, [&](std::size_t r) {
        Rng field_rng = stream_rng(run.master_seed, r, kFieldStream);
        const Realization field = sample_realization(spatial, run.window_radius, field_rng);
        Rng rng = stream_rng(run.master_seed, r, kPacketStream);
        if (mode == ChannelMode::conditional) {
            const double p = conditional_fsd(field, threshold, spatial);
            run_block(protocol, [p](Rng& g) { return std::bernoulli_distribution(p)(g); },
                      run.packets_per_realization, rng, per_field[r]);
        } else {
            const PhysicalChannel channel(spatial, field, threshold);
            run_block(protocol, [&channel](Rng& g) { return channel.decode(g); },
                      run.packets_per_realization, rng, per_field[r]);
        }
    });

    Tally total;
    for (const Tally& t : per_field) total += t;
    EmpiricalKpi kpi = finish(total);

    // Packets sharing a field are correlated: use the spread of per-field
    // means for the standard errors.
    const double fields = static_cast<double>(count);
    if (count > 1) {
        double psd_sum = 0.0, psd_sq = 0.0, lat_sum = 0.0, lat_sq = 0.0;
        for (const Tally& t : per_field) {
            const auto e = t.estimate();
            psd_sum += e.success;
            psd_sq += e.success * e.success;
            lat_sum += e.mean_slots();
            lat_sq += e.mean_slots() * e.mean_slots();
        }
        auto stderr_of = [fields](double sum, double sq) {
            const double mean = sum / fields;
            return std::sqrt(std::max(0.0, (sq / fields - mean * mean) / (fields - 1.0)));
        };
        kpi.psd_stderr = stderr_of(psd_sum, psd_sq);
        kpi.latency_stderr = stderr_of(lat_sum, lat_sq);
    }
    return kpi;
}

}  // namespace iotra
