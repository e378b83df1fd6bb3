// Command-line front end: analysis, simulation and parameter studies.
//
//   iotra analyze  --config net.ini --scheme olra --scheme olra-es --n-range 1..10 --out out/
//   iotra simulate --config net.ini --n-range 1..4 --seed 7 --out sim/
//   iotra compare  --config net.ini --p-ack 1,0.7,0.5 --out cmp/
//   iotra sweep    --param spatial.density --values "100 /km2" "200 /km2" --out sweep/
//   iotra optimize --objective min-latency --psd-target 0.95
//   iotra chain    --scheme clra --n 3 --deadline 8 --p 0.4
//
// Exit codes: 0 success, 1 output error, 2 invalid input, 3 numerical or
// internal consistency failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iotra/chain.hpp"
#include "iotra/config.hpp"
#include "iotra/io.hpp"
#include "iotra/metrics.hpp"
#include "iotra/sim.hpp"
#include "iotra/spatial.hpp"

namespace fs = std::filesystem;
using namespace iotra;

namespace {

struct OutputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::vector<std::string> schemes;
    std::string n_range;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "INI configuration file (reference values if omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--scheme", c.schemes, "clra, olra or olra-es (repeatable; default all)");
    cmd->add_option("--n-range", c.n_range, "fragment counts A..B or a single n (default 1..T)");
    cmd->add_option("--seed", c.seed, "master seed for all randomness");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--set", c.overrides, "override section.key=value (repeatable)");
}

NetworkConfig load(const Common& c, const std::vector<Override>& extra = {}) {
    std::vector<Override> overrides;
    for (const auto& text : c.overrides) overrides.push_back(parse_override(text));
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    NetworkConfig config = c.config_path.empty() ? config_from_overrides(overrides)
                                                 : load_config(c.config_path, overrides);
    if (c.seed) config.analysis.seed = *c.seed;
    return config;
}

std::vector<Scheme> schemes_of(const Common& c) {
    if (c.schemes.empty()) return {Scheme::clra, Scheme::olra, Scheme::olra_es};
    std::vector<Scheme> out;
    for (const auto& s : c.schemes) out.push_back(parse_scheme(s));
    return out;
}

std::vector<int> fragments_of(const Common& c, int deadline) {
    int lo = 1, hi = deadline;
    if (!c.n_range.empty()) {
        const auto dots = c.n_range.find("..");
        try {
            if (dots == std::string::npos) {
                lo = hi = std::stoi(c.n_range);
            } else {
                lo = std::stoi(c.n_range.substr(0, dots));
                hi = std::stoi(c.n_range.substr(dots + 2));
            }
        } catch (const std::exception&) {
            throw ConfigError("n-range", "expected A..B, got '" + c.n_range + "'");
        }
    }
    if (lo < 1 || hi > deadline || lo > hi)
        throw ConfigError("n-range", "must lie within 1.." + std::to_string(deadline));
    std::vector<int> out;
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError("cannot write " + path.string());
    body(out);
    out.close();
    if (!out) throw OutputError("failed writing " + path.string());
}

fs::path prepare(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw OutputError("cannot create " + dir + ": " + ec.message());
    return fs::path(dir);
}

void check(const KpiReport& r) {
    const double total = r.mean.success + r.mean.timeout;
    if (!(std::abs(total - 1.0) <= 1e-9) || !(r.psd() >= 0.0 && r.psd() <= 1.0))
        throw InvariantError(std::string(to_string(r.scheme)) + " n=" + std::to_string(r.fragments) +
                             ": absorption probabilities sum to " + format_number(total));
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

int run_analyze(const Common& c) {
    const NetworkConfig config = load(c);
    const fs::path dir = prepare(c.out);
    const auto fragments = fragments_of(c, config.radio.deadline);
    for (int n : fragments) {
        const auto meta = make_meta_distribution(config.spatial, detection_threshold(config.radio, n));
        write_file(dir / ("meta_" + std::to_string(n) + ".csv"),
                   [&](std::ostream& out) { write_meta_csv(out, meta); });
    }
    std::vector<KpiReport> reports;
    auto results = nlohmann::ordered_json::array();
    for (Scheme s : schemes_of(c))
        for (int n : fragments) {
            reports.push_back(evaluate_scheme(config, s, n));
            check(reports.back());
            results.push_back(to_json(reports.back()));
        }
    write_file(dir / "kpi.csv", [&](std::ostream& out) { write_kpi_csv(out, reports); });
    nlohmann::ordered_json report;
    report["command"] = "analyze";
    report["config"] = to_json(config);
    report["results"] = std::move(results);
    write_json(dir / "report.json", report);
    std::cout << "wrote " << fragments.size() + 2 << " files to " << dir.string() << '\n';
    return 0;
}

int run_simulate(const Common& c, std::optional<std::int64_t> realizations,
                 std::optional<std::int64_t> packets, const std::string& mode_text) {
    std::vector<Override> extra;
    if (realizations) extra.push_back({"analysis.realizations", std::to_string(*realizations)});
    if (packets) extra.push_back({"analysis.packets", std::to_string(*packets)});
    const NetworkConfig config = load(c, extra);
    const ChannelMode mode = mode_text == "physical" ? ChannelMode::physical : ChannelMode::conditional;
    const fs::path dir = prepare(c.out);
    const auto fragments = fragments_of(c, config.radio.deadline);
    const SimulationRun run = SimulationRun::from(config.analysis);

    std::vector<double> thresholds;
    for (int n : fragments) thresholds.push_back(detection_threshold(config.radio, n));
    const auto metas = empirical_meta(config.spatial, thresholds, run);
    for (std::size_t k = 0; k < fragments.size(); ++k) {
        const auto meta = make_meta_distribution(config.spatial, thresholds[k]);
        const std::string n = std::to_string(fragments[k]);
        write_file(dir / ("meta_" + n + ".csv"),
                   [&](std::ostream& out) { write_meta_overlay_csv(out, metas[k], meta); });
        write_file(dir / ("samples_" + n + ".txt"),
                   [&](std::ostream& out) { write_samples(out, metas[k]); });
    }

    const double p_ack = feedback_success_prob(config.spatial, config.feedback, config.radio.bandwidth);
    std::vector<SimulatedKpi> rows;
    auto results = nlohmann::ordered_json::array();
    for (Scheme s : schemes_of(c))
        for (std::size_t k = 0; k < fragments.size(); ++k) {
            const int n = fragments[k];
            const ProtocolSpec spec{s, n, config.radio.deadline, s == Scheme::clra ? p_ack : 1.0,
                                    config.analysis.extra_copies == ExtraCopyPolicy::averaged};
            KpiReport analytic = evaluate_scheme(config, s, n);
            check(analytic);
            rows.push_back(summarize(config, simulate_network(config.spatial, thresholds[k], spec, run, mode),
                                     std::move(analytic)));
            results.push_back(to_json(rows.back()));
        }
    write_file(dir / "kpi.csv", [&](std::ostream& out) { write_simulated_kpi_csv(out, rows); });
    nlohmann::ordered_json report;
    report["command"] = "simulate";
    report["mode"] = mode_text;
    report["config"] = to_json(config);
    report["results"] = std::move(results);
    write_json(dir / "report.json", report);
    std::cout << "wrote " << 2 * fragments.size() + 2 << " files to " << dir.string() << '\n';
    return 0;
}

int run_compare(const Common& c, const std::vector<double>& p_acks) {
    const NetworkConfig base = load(c);
    const fs::path dir = prepare(c.out);
    const auto fragments = fragments_of(c, base.radio.deadline);
    std::vector<KpiReport> reports;
    auto results = nlohmann::ordered_json::array();
    for (Scheme s : schemes_of(c)) {
        const std::vector<double> acks = s == Scheme::clra ? p_acks : std::vector<double>{1.0};
        for (double ack : acks) {
            NetworkConfig config = base;
            config.feedback.fixed_p_ack = ack;
            config.validate();
            for (int n : fragments) {
                reports.push_back(evaluate_scheme(config, s, n));
                check(reports.back());
                results.push_back(to_json(reports.back()));
            }
        }
    }
    write_file(dir / "kpi.csv", [&](std::ostream& out) { write_kpi_csv(out, reports); });
    nlohmann::ordered_json report;
    report["command"] = "compare";
    report["p_ack"] = p_acks;
    report["config"] = to_json(base);
    report["results"] = std::move(results);
    write_json(dir / "report.json", report);
    std::cout << "wrote 2 files to " << dir.string() << '\n';
    return 0;
}

int run_sweep(const Common& c, const std::string& param, const std::vector<std::string>& values) {
    const fs::path dir = prepare(c.out);
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    if (!csv) throw OutputError("cannot write " + (dir / "sweep.csv").string());
    auto results = nlohmann::ordered_json::array();
    bool header = true;
    for (const auto& value : values) {
        const NetworkConfig config = load(c, {parse_override(param + "=" + value)});
        std::vector<KpiReport> reports;
        for (Scheme s : schemes_of(c))
            for (int n : fragments_of(c, config.radio.deadline)) {
                reports.push_back(evaluate_scheme(config, s, n));
                check(reports.back());
                auto j = to_json(reports.back());
                j["value"] = value;
                results.push_back(std::move(j));
            }
        std::ostringstream block;
        write_kpi_csv(block, reports);
        std::istringstream lines(block.str());
        std::string line;
        std::getline(lines, line);
        if (header) csv << "param,value," << line << '\n';
        header = false;
        while (std::getline(lines, line)) csv << param << ",\"" << value << "\"," << line << '\n';
    }
    csv.close();
    if (!csv) throw OutputError("failed writing sweep.csv");
    nlohmann::ordered_json report;
    report["command"] = "sweep";
    report["param"] = param;
    report["values"] = values;
    report["results"] = std::move(results);
    write_json(dir / "report.json", report);
    std::cout << "wrote 2 files to " << dir.string() << '\n';
    return 0;
}

int run_optimize(const Common& c, const std::string& objective_text, double target) {
    const NetworkConfig config = load(c);
    const Objective objective = parse_objective(objective_text);
    const fs::path dir = prepare(c.out);
    std::vector<KpiReport> scans;
    auto results = nlohmann::ordered_json::array();
    for (Scheme s : schemes_of(c)) {
        const auto r = optimize_fragments(config, s, objective, target);
        for (const auto& k : r.scan) check(k);
        scans.insert(scans.end(), r.scan.begin(), r.scan.end());
        nlohmann::ordered_json j;
        j["scheme"] = to_string(s);
        j["feasible"] = r.feasible;
        j["n"] = r.fragments;
        j["best_achievable_psd"] = r.best_achievable_psd;
        j["best_psd_n"] = r.best_psd_fragments;
        j["best"] = r.best ? to_json(*r.best) : nlohmann::ordered_json(nullptr);
        results.push_back(std::move(j));
        if (r.feasible)
            std::cout << to_string(s) << ": n* = " << r.fragments << " (psd "
                      << format_number(r.best->psd()) << ")\n";
        else
            std::cout << to_string(s) << ": infeasible, best psd " << format_number(r.best_achievable_psd)
                      << " at n = " << r.best_psd_fragments << '\n';
    }
    write_file(dir / "kpi.csv", [&](std::ostream& out) { write_kpi_csv(out, scans); });
    nlohmann::ordered_json report;
    report["command"] = "optimize";
    report["objective"] = objective_text;
    report["psd_target"] = target;
    report["config"] = to_json(config);
    report["results"] = std::move(results);
    write_json(dir / "optimize.json", report);
    return 0;
}

int run_chain(const Common& c, std::optional<int> fragments, std::optional<int> deadline,
              double p, double p_ack, bool numeric) {
    const NetworkConfig config = load(c);
    const int n = fragments.value_or(config.radio.fragments);
    const Scheme s = c.schemes.empty() ? Scheme::clra : parse_scheme(c.schemes.front());
    const int T = deadline.value_or(config.radio.deadline);
    AbsorbingChain chain;
    switch (s) {
        case Scheme::clra: chain = build_clra(n, T, p * p_ack); break;
        case Scheme::olra: chain = build_olra(n, T, p); break;
        case Scheme::olra_es: chain = build_olra_es(n, T, p); break;
    }
    print_chain(std::cout, chain, !numeric);
    const auto a = absorb(chain);
    std::cout << "A_s=" << format_number(a.success) << " A_f=" << format_number(a.timeout)
              << " D_s=" << format_number(a.delay_success) << " D_f=" << format_number(a.delay_timeout)
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rate adaptation analysis and simulation for large IoT networks"};
    app.require_subcommand(1);

    Common analyze_opts, simulate_opts, compare_opts, sweep_opts, optimize_opts, chain_opts;

    auto* analyze = app.add_subcommand("analyze", "Analytic meta distribution and KPIs");
    add_common(analyze, analyze_opts);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo meta distribution and KPIs");
    add_common(simulate, simulate_opts);
    std::optional<std::int64_t> realizations, packets;
    std::string mode = "conditional";
    simulate->add_option("--realizations", realizations, "field realizations");
    simulate->add_option("--packets", packets, "packets per realization");
    simulate->add_option("--mode", mode, "conditional or physical")
        ->check(CLI::IsMember({"conditional", "physical"}))
        ->capture_default_str();

    auto* compare = app.add_subcommand("compare", "Closed loop at several p_ack against open loop");
    add_common(compare, compare_opts);
    std::vector<double> p_acks{1.0, 0.7, 0.5};
    compare->add_option("--p-ack", p_acks, "comma-separated p_ack values")
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Repeat the analysis over values of one parameter");
    add_common(sweep, sweep_opts);
    std::string param;
    std::vector<std::string> values;
    sweep->add_option("--param", param, "dotted configuration key")->required();
    sweep->add_option("--values", values, "values with optional units")->required()->expected(1, -1);

    auto* optimize = app.add_subcommand("optimize", "Best fragment count per scheme");
    add_common(optimize, optimize_opts);
    std::string objective = "max-psd";
    double target = 0.0;
    optimize->add_option("--objective", objective, "max-psd, min-latency or min-energy")->capture_default_str();
    optimize->add_option("--psd-target", target, "minimum PSD for the constrained objectives")
        ->capture_default_str();

    auto* chain = app.add_subcommand("chain", "Print the block matrix of one chain");
    add_common(chain, chain_opts);
    std::optional<int> chain_n, chain_deadline;
    double chain_p = 0.3, chain_ack = 1.0;
    bool numeric = false;
    chain->add_option("--n", chain_n, "fragments (default radio.fragments)");
    chain->add_option("--deadline", chain_deadline, "slots (default from config)");
    chain->add_option("--p", chain_p, "fragment success probability")->capture_default_str();
    chain->add_option("--p-ack", chain_ack, "acknowledgment success probability")->capture_default_str();
    chain->add_flag("--numeric", numeric, "print numbers instead of symbols");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) return run_analyze(analyze_opts);
        if (*simulate) return run_simulate(simulate_opts, realizations, packets, mode);
        if (*compare) return run_compare(compare_opts, p_acks);
        if (*sweep) return run_sweep(sweep_opts, param, values);
        if (*optimize) return run_optimize(optimize_opts, objective, target);
        if (*chain) return run_chain(chain_opts, chain_n, chain_deadline, chain_p, chain_ack, numeric);
    } catch (const ConfigError& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const OutputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const InvariantError& e) {
        std::cerr << "error: consistency check failed: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const ChainError& e) {
        std::cerr << "error: chain construction: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
