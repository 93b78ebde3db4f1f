#pragma once

#include "remocom/evaluate.hpp"
#include "remocom/generators.hpp"
#include "remocom/io.hpp"
#include "remocom/jpo.hpp"
#include "remocom/pull.hpp"
#include "remocom/push.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace remocom {

enum class Solver { mpi, periodic, api_pe0, api_pe1, jpo };

inline constexpr std::array<Solver, 5> kAllSolvers = {
    Solver::mpi, Solver::periodic, Solver::api_pe0, Solver::api_pe1, Solver::jpo};

inline const char* solver_name(Solver s) {
    switch (s) {
        case Solver::mpi: return "mpi";
        case Solver::periodic: return "periodic";
        case Solver::api_pe0: return "api_pe0";
        case Solver::api_pe1: return "api_pe1";
        default: return "jpo";
    }
}

/// Encoder starting point the solver uses, "-" where the notion does not apply.
inline const char* solver_init_name(Solver s) {
    switch (s) {
        case Solver::api_pe0: return "pe0";
        case Solver::api_pe1: return "pe1";
        default: return "-";
    }
}

inline Solver parse_solver(const std::string& name) {
    for (Solver s : kAllSolvers)
        if (name == solver_name(s)) return s;
    throw std::invalid_argument("unknown solver: " + name);
}

struct SweepGrid {
    std::vector<double> betas;
    std::vector<double> densities;
    std::vector<std::uint64_t> seeds;
};

inline void require_grid(const SweepGrid& grid) {
    if (grid.betas.empty() || grid.densities.empty() || grid.seeds.empty())
        throw std::invalid_argument("sweep grid axes must be nonempty");
    if (!std::is_sorted(grid.betas.begin(), grid.betas.end()))
        throw std::invalid_argument("sweep betas must be sorted");
    if (!std::is_sorted(grid.densities.begin(), grid.densities.end()))
        throw std::invalid_argument("sweep densities must be sorted");
    for (double b : grid.betas)
        if (b < 0.0) throw std::invalid_argument("sweep betas must be nonnegative");
}

/// Fig.-style default axes: 21 cost points in [0, 2] and 14 density rows.
inline SweepGrid default_grid(int n_states, std::vector<std::uint64_t> seeds) {
    SweepGrid g;
    for (int i = 0; i <= 20; ++i) g.betas.push_back(0.1 * i);
    const double lo = 1.0 / n_states;
    const double hi = 29.0 / 30.0;
    for (int i = 0; i < 14; ++i) g.densities.push_back(lo + (hi - lo) * i / 13.0);
    g.seeds = std::move(seeds);
    return g;
}

struct SweepRow {
    Solver solver = Solver::mpi;
    std::string init = "-";
    std::uint64_t seed = 0;
    double d = 0.0;
    double beta = 0.0;
    double reward = 0.0;       // long-run average reward per step
    double channel_use = 0.0;  // long-run average transmissions per step
    int rounds = 0;
    double wall_ms = 0.0;
    bool converged = false;
    Eigen::MatrixXd paoi;      // row s_last, col delta+1; not part of the raw CSV
};

struct SweepFailure {
    Solver solver = Solver::mpi;
    std::uint64_t seed = 0;
    double d = 0.0;
    double beta = 0.0;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRow> rows;      // every completed cell, fixed key order
    std::vector<SweepRow> frontier;  // per (solver, seed, d) convex hull over the cost axis
    std::vector<SweepFailure> failures;
};

using ModelFactory = std::function<ControlledMarkovProcess(std::uint64_t seed, double density)>;

struct SweepConfig {
    HorizonConfig horizon;
    int workers = 1;
    JpoConfig jpo;
    EvalConfig eval;
};

namespace detail {

struct SolveOutcome {
    JointPolicy joint;
    int rounds = 0;
    bool converged = false;
};

inline SolveOutcome run_solver(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                               Solver solver, const SweepConfig& cfg) {
    SolveOutcome out;
    switch (solver) {
        case Solver::mpi: {
            const auto r = solve_mpi(mdp, cost, cfg.horizon);
            out.joint = pull_joint(r.decoder, r.schedule);
            out.rounds = r.iterations;
            out.converged = true;
            break;
        }
        case Solver::periodic: {
            const auto r = solve_periodic(mdp, cost, cfg.horizon);
            out.joint = pull_joint(r.decoder, constant_schedule(mdp.n_states, r.period));
            out.rounds = r.period;
            out.converged = true;
            break;
        }
        case Solver::api_pe0:
        case Solver::api_pe1: {
            const auto inits = standard_inits(mdp, cfg.horizon);
            const EncoderPolicy& init =
                solver == Solver::api_pe0 ? inits.first : inits.second;
            const auto r = solve_api(mdp, cost, init, cfg.horizon);
            out.joint.architecture = Architecture::push;
            out.joint.decoder = r.decoder;
            out.joint.encoder = r.encoder;
            out.rounds = r.report.rounds;
            out.converged = r.report.converged;
            break;
        }
        default: {
            const auto r = solve_jpo(mdp, cost, cfg.horizon.epsilon, cfg.horizon, cfg.jpo);
            out.joint.architecture = Architecture::push;
            out.joint.decoder = r.policies.decoder;
            out.joint.encoder = r.policies.encoder;
            out.rounds = r.backups;
            out.converged = r.converged;
            break;
        }
    }
    return out;
}

inline double cross(const SweepRow* o, const SweepRow* a, const SweepRow* b) {
    return (a->channel_use - o->channel_use) * (b->reward - o->reward) -
           (a->reward - o->reward) * (b->channel_use - o->channel_use);
}

/// Monotone-chain upper hull over (channel_use, reward), trimmed to the
/// Pareto-efficient ascent: past the reward peak, extra channel use only
/// buys dominated points.
inline std::vector<SweepRow> hull_frontier(std::vector<const SweepRow*> pts) {
    std::sort(pts.begin(), pts.end(), [](const SweepRow* a, const SweepRow* b) {
        if (a->channel_use != b->channel_use) return a->channel_use < b->channel_use;
        return a->reward < b->reward;
    });
    std::vector<const SweepRow*> hull;
    for (const SweepRow* p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0.0)
            hull.pop_back();
        hull.push_back(p);
    }
    std::vector<SweepRow> out;
    for (const SweepRow* p : hull) {
        if (!out.empty() && p->reward <= out.back().reward + 1e-12) break;
        out.push_back(*p);
    }
    return out;
}

}  // namespace detail

/// Solves and exactly evaluates every (seed, density, beta, solver) cell.
/// Cells are independent tasks on a bounded worker pool; rows come back in
/// fixed key order regardless of scheduling, so equal seeds reproduce every
/// non-timing column byte for byte. A cell failure is recorded and the sweep
/// continues. Evaluation falls back to seeded Monte Carlo when the induced
/// chain would exceed the node cap.
inline SweepResult pareto_sweep(const ModelFactory& factory, const SweepGrid& grid,
                                const std::vector<Solver>& solvers, const SweepConfig& cfg) {
    require_grid(grid);
    if (solvers.empty()) throw std::invalid_argument("sweep needs at least one solver");
    if (cfg.workers < 1) throw std::invalid_argument("worker count must be >= 1");

    struct Cell {
        std::uint64_t seed;
        double d;
        double beta;
        Solver solver;
    };
    std::vector<Cell> cells;
    for (std::uint64_t seed : grid.seeds)
        for (double d : grid.densities)
            for (double beta : grid.betas)
                for (Solver s : solvers) cells.push_back({seed, d, beta, s});

    std::vector<std::optional<SweepRow>> slot(cells.size());
    std::vector<std::optional<SweepFailure>> fail(cells.size());

    auto run_cell = [&](size_t i) {
        const Cell& c = cells[i];
        try {
            const ControlledMarkovProcess mdp = factory(c.seed, c.d);
            CommunicationCost cost;
            cost.beta = c.beta;
            const auto t0 = std::chrono::steady_clock::now();
            const detail::SolveOutcome solved = detail::run_solver(mdp, cost, c.solver, cfg);
            EvalResult ev;
            try {
                ev = evaluate_exact(mdp, cost, solved.joint, cfg.eval);
            } catch (const ChainSizeExceeded&) {
                ev = simulate(mdp, cost, solved.joint, mix_seed(c.seed, i));
            }
            const auto t1 = std::chrono::steady_clock::now();
            SweepRow row;
            row.solver = c.solver;
            row.init = solver_init_name(c.solver);
            row.seed = c.seed;
            row.d = c.d;
            row.beta = c.beta;
            row.reward = ev.reward_rate;
            row.channel_use = ev.channel_rate;
            row.rounds = solved.rounds;
            row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            row.converged = solved.converged;
            row.paoi = ev.paoi;
            slot[i] = std::move(row);
        } catch (const std::exception& e) {
            fail[i] = SweepFailure{c.solver, c.seed, c.d, c.beta, e.what()};
        }
    };

    if (cfg.workers == 1) {
        for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<size_t> next{0};
        auto drain = [&] {
            for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                run_cell(i);
        };
        std::vector<std::thread> pool;
        const int n_workers = std::min<int>(cfg.workers, static_cast<int>(cells.size()));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }

    SweepResult out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (slot[i]) out.rows.push_back(std::move(*slot[i]));
        if (fail[i]) out.failures.push_back(std::move(*fail[i]));
    }
    for (std::uint64_t seed : grid.seeds)
        for (double d : grid.densities)
            for (Solver s : solvers) {
                std::vector<const SweepRow*> pts;
                for (const SweepRow& r : out.rows)
                    if (r.solver == s && r.seed == seed && r.d == d) pts.push_back(&r);
                if (pts.empty()) continue;
                for (SweepRow& r : detail::hull_frontier(std::move(pts)))
                    out.frontier.push_back(std::move(r));
            }
    return out;
}

inline constexpr const char* kSweepCsvHeader =
    "solver,init,seed,d,beta,reward,channel_use,rounds,wall_ms,converged";

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const SweepRow& r : rows) {
        out += solver_name(r.solver);
        out += ',';
        out += r.init;
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += format_double(r.d);
        out += ',';
        out += format_double(r.beta);
        out += ',';
        out += format_double(r.reward);
        out += ',';
        out += format_double(r.channel_use);
        out += ',';
        out += std::to_string(r.rounds);
        out += ',';
        out += format_double(r.wall_ms);
        out += ',';
        out += r.converged ? "1" : "0";
        out += '\n';
    }
    return out;
}

/// Long-format peak-age histograms for one row per solver, zero-mass cells
/// omitted.
inline std::string paoi_csv(const std::vector<SweepRow>& rows) {
    std::string out = "solver,s_last,peak,mass\n";
    for (const SweepRow& r : rows) {
        for (int s = 0; s < r.paoi.rows(); ++s)
            for (int peak = 1; peak < r.paoi.cols(); ++peak) {
                const double mass = r.paoi(s, peak);
                if (mass <= 0.0) continue;
                out += solver_name(r.solver);
                out += ',';
                out += std::to_string(s);
                out += ',';
                out += std::to_string(peak);
                out += ',';
                out += format_double(mass);
                out += '\n';
            }
    }
    return out;
}

/// Sidecar written next to every emitted file: what produced it and from
/// which seeds, so reruns can be matched to their inputs.
inline Json metadata_sidecar(const std::string& config_hash,
                             const std::vector<std::uint64_t>& seeds) {
    Json j;
    j["config_hash"] = config_hash;
    j["seeds"] = seeds;
    j["library_version"] = kLibraryVersion;
    j["format_version"] = kFormatVersion;
    return j;
}

struct BenchRow {
    Solver solver = Solver::mpi;
    int n_states = 0;
    int reps = 0;
    double median_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    std::uint64_t value_checksum = 0;  // equal seeds must reproduce it; times may differ
};

struct BenchConfig {
    int n_actions = 2;
    double gamma = 0.9;
    double density = 0.5;
    HorizonConfig horizon{5, 1e-2};
    JpoConfig jpo;
    std::uint64_t seed = 1;
};

/// Median and spread of solver wall time per instance size over seeded
/// control instances. The joint solver is skipped past its state cap.
inline std::vector<BenchRow> runtime_bench(const std::vector<int>& sizes, int reps,
                                           const std::vector<Solver>& solvers,
                                           const BenchConfig& cfg = {}) {
    if (!std::is_sorted(sizes.begin(), sizes.end()))
        throw std::invalid_argument("bench sizes must be sorted");
    if (sizes.empty() || sizes.front() < 2)
        throw std::invalid_argument("bench sizes must start at 2 or more");
    if (reps < 1) throw std::invalid_argument("bench reps must be >= 1");

    std::vector<BenchRow> out;
    for (Solver s : solvers) {
        for (int n : sizes) {
            if (s == Solver::jpo && n > cfg.jpo.state_cap) continue;
            BenchRow row;
            row.solver = s;
            row.n_states = n;
            row.reps = reps;
            std::vector<double> times;
            std::uint64_t checksum = kFnvOffset;
            for (int rep = 0; rep < reps; ++rep) {
                auto mdp = densify(generate_deterministic_base(mix_seed(cfg.seed, rep), n,
                                                               cfg.n_actions, cfg.gamma),
                                   cfg.density);
                mdp.reward = two_peak_reward(n, cfg.n_actions, 0, n / 2);
                CommunicationCost cost;
                cost.beta = 0.3;
                SweepConfig scfg;
                scfg.horizon = cfg.horizon;
                scfg.jpo = cfg.jpo;
                const auto t0 = std::chrono::steady_clock::now();
                const auto solved = detail::run_solver(mdp, cost, s, scfg);
                const auto t1 = std::chrono::steady_clock::now();
                times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                checksum = fnv1a64_mix(solved.joint.decoder.fingerprint(), checksum);
                checksum = fnv1a64_mix(solved.joint.encoder.fingerprint(), checksum);
            }
            std::sort(times.begin(), times.end());
            row.min_ms = times.front();
            row.max_ms = times.back();
            const size_t mid = times.size() / 2;
            row.median_ms = times.size() % 2 == 1 ? times[mid]
                                                  : 0.5 * (times[mid - 1] + times[mid]);
            row.value_checksum = checksum;
            out.push_back(row);
        }
    }
    return out;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out = "solver,n_states,reps,median_ms,min_ms,max_ms,value_checksum\n";
    for (const BenchRow& r : rows) {
        out += solver_name(r.solver);
        out += ',';
        out += std::to_string(r.n_states);
        out += ',';
        out += std::to_string(r.reps);
        out += ',';
        out += format_double(r.median_ms);
        out += ',';
        out += format_double(r.min_ms);
        out += ',';
        out += format_double(r.max_ms);
        out += ',';
        out += to_hex16(r.value_checksum);
        out += '\n';
    }
    return out;
}

/// Least-squares slope of log(time) against log(size), the polynomial-trend
/// summary used by the runtime comparisons.
inline double loglog_slope(const std::vector<BenchRow>& rows, Solver solver) {
    std::vector<double> xs, ys;
    for (const BenchRow& r : rows)
        if (r.solver == solver && r.median_ms > 0.0) {
            xs.push_back(std::log(static_cast<double>(r.n_states)));
            ys.push_back(std::log(r.median_ms));
        }
    if (xs.size() < 2) throw std::invalid_argument("slope needs at least two sizes");
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace remocom
