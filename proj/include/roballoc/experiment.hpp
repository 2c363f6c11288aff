#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "roballoc/baselines.hpp"
#include "roballoc/io.hpp"
#include "roballoc/robust.hpp"
#include "roballoc/synthetic.hpp"

// Experiment orchestration: a flat key=value configuration, one runner per
// mode, plot-ready CSV outputs. All emitted files are deterministic for a
// fixed seed and configuration.

namespace roballoc {

struct RunConfig {
    std::string mode = "solve-robust";
    double cap = 1.0;
    double delta = 1e-3;
    double epsilon = 1e-2;
    UncertaintyKind kind = UncertaintyKind::DNorm;
    double gamma = 1.0;
    std::vector<double> gamma_grid;     // compare mode; empty: gamma x {0, 1/2, 1, 2, 4}
    double epsilon_fw = -1.0;           // inner Frank-Wolfe tolerance; -1: epsilon/10
    double inner_tol = -1.0;            // concave-max tolerance; -1: epsilon/10
    int max_outer = 500;
    int max_fw_iters = 20000;
    int max_inner_iters = 5000;
    int fw_compare_iters = 200;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string budget_path;            // adversary mode: budget.csv to respond to
    unsigned threads = 0;               // 0: ROBUST_ALLOC_THREADS or hardware
    // gen mode
    std::size_t gen_channels = 6;
    std::size_t gen_customers = 2;
    std::size_t gen_edges = 0;          // 0: complete bipartite
};

inline UncertaintyKind parse_kind(const std::string& s) {
    if (s == "ellipsoid" || s == "ellipsoidal") return UncertaintyKind::Ellipsoidal;
    if (s == "dnorm") return UncertaintyKind::DNorm;
    throw std::invalid_argument("unknown uncertainty set kind: " + s);
}

/// Flat key = value file; '#' starts a comment. Unknown keys are errors.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos) throw parse_error(path, line_no, "expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "mode") cfg.mode = val;
            else if (key == "cap") cfg.cap = std::stod(val);
            else if (key == "delta") cfg.delta = std::stod(val);
            else if (key == "epsilon") cfg.epsilon = std::stod(val);
            else if (key == "set") cfg.kind = parse_kind(val);
            else if (key == "gamma") cfg.gamma = std::stod(val);
            else if (key == "gamma_grid") {
                cfg.gamma_grid.clear();
                std::stringstream ss(val);
                std::string tok;
                while (std::getline(ss, tok, ' '))
                    if (!tok.empty()) cfg.gamma_grid.push_back(std::stod(tok));
            }
            else if (key == "epsilon_fw") cfg.epsilon_fw = std::stod(val);
            else if (key == "inner_tol") cfg.inner_tol = std::stod(val);
            else if (key == "max_outer") cfg.max_outer = std::stoi(val);
            else if (key == "max_fw_iters") cfg.max_fw_iters = std::stoi(val);
            else if (key == "max_inner_iters") cfg.max_inner_iters = std::stoi(val);
            else if (key == "fw_compare_iters") cfg.fw_compare_iters = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "out") cfg.out_dir = val;
            else if (key == "budget") cfg.budget_path = val;
            else if (key == "threads") cfg.threads = unsigned(std::stoul(val));
            else if (key == "gen_channels") cfg.gen_channels = std::stoul(val);
            else if (key == "gen_customers") cfg.gen_customers = std::stoul(val);
            else if (key == "gen_edges") cfg.gen_edges = std::stoul(val);
            else throw std::invalid_argument("unknown config key: " + key);
        } catch (const std::invalid_argument& e) {
            throw parse_error(path, line_no, e.what());
        }
    }
}

inline unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ROBUST_ALLOC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return unsigned(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Run fn(i) for i in [0, n) on up to `threads` workers. Exceptions from
/// tasks are rethrown on the caller after all workers join.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::min<std::size_t>(std::max(1u, threads), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

enum class ExperimentStatus { Converged, Flagged, Error };

struct ExperimentResult {
    ExperimentStatus status = ExperimentStatus::Converged;
    std::string detail;
};

namespace detail {

inline std::string fmt(double v) { return format_number(v); }

inline void write_status(const std::string& dir, ExperimentStatus st, const std::string& msg) {
    CsvWriter w(dir + "/status.csv", {"field", "value"});
    const char* name = st == ExperimentStatus::Converged ? "converged"
                     : st == ExperimentStatus::Flagged   ? "flagged"
                                                         : "error";
    w.row({"status", name});
    w.row({"detail", msg});
    w.flush();
}

inline void write_budget(const std::string& dir, const InfluenceInstance& inst, std::span<const double> y) {
    CsvWriter w(dir + "/budget.csv", {"channel", "y"});
    for (std::size_t s = 0; s < inst.num_channels(); ++s) w.row({inst.channels()[s], fmt(y[s])});
    w.flush();
}

inline void write_trace(const std::string& dir, const std::vector<IterationRecord>& trace) {
    CsvWriter w(dir + "/trace.csv", {"iter", "L", "U", "gap", "step", "seconds"});
    for (const IterationRecord& r : trace)
        w.row({std::to_string(r.iter), fmt(r.lower), fmt(r.upper), fmt(r.gap), fmt(r.step), fmt(r.seconds)});
    w.flush();
}

inline void write_bounds(const std::string& dir, const std::vector<CsfmCertificate>& certs) {
    CsvWriter w(dir + "/bounds.csv", {"iter", "theory_gap", "bracket_gap", "lagrangian_gap", "fw_dual_gap"});
    for (std::size_t k = 0; k < certs.size(); ++k) {
        const CsfmCertificate& c = certs[k];
        w.row({std::to_string(k), fmt(c.theory_gap), fmt(c.bracket_gap), fmt(c.lagrangian_gap), fmt(c.fw_dual_gap)});
    }
    w.flush();
}

inline void write_rho(const std::string& dir, std::vector<double> rho, double lambda_star) {
    std::sort(rho.begin(), rho.end(), std::greater<>());
    CsvWriter w(dir + "/rho.csv", {"rank", "value", "kind"});
    w.row({"0", fmt(lambda_star), "lambda_star"});
    for (std::size_t i = 0; i < rho.size(); ++i) w.row({std::to_string(i + 1), fmt(rho[i]), "rho"});
    w.flush();
}

inline std::vector<double> load_budget(const std::string& path, const InfluenceInstance& inst) {
    const CsvTable t = read_csv(path);
    const std::size_t ch = t.column("channel"), yc = t.column("y");
    std::unordered_map<std::string, double> by_name;
    for (const auto& r : t.rows) by_name[r[ch]] = std::stod(r[yc]);
    std::vector<double> y(inst.num_channels(), 0.0);
    for (std::size_t s = 0; s < inst.num_channels(); ++s) {
        auto it = by_name.find(inst.channels()[s]);
        if (it != by_name.end()) y[s] = it->second;
    }
    return y;
}

} // namespace detail

/**
 * Execute one experiment mode and emit its CSV outputs under
 * config.out_dir. Solver failures are recorded in status.csv with partial
 * outputs preserved; the returned status maps onto the CLI exit code.
 */
inline ExperimentResult run_experiment(const RunConfig& cfg, const InfluenceInstance* inst) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string& dir = cfg.out_dir;

    FwOptions fw_opt;
    fw_opt.epsilon_fw = cfg.epsilon_fw > 0.0 ? cfg.epsilon_fw : cfg.epsilon / 10.0;
    fw_opt.max_iters = cfg.max_fw_iters;
    const double inner_tol = cfg.inner_tol > 0.0 ? cfg.inner_tol : cfg.epsilon / 10.0;

    RobustOptions ropt;
    ropt.epsilon = cfg.epsilon;
    ropt.delta = cfg.delta;
    ropt.epsilon_fw = fw_opt.epsilon_fw;
    ropt.inner_tol = inner_tol;
    ropt.max_outer = cfg.max_outer;
    ropt.max_fw_iters = cfg.max_fw_iters;
    ropt.max_inner_iters = cfg.max_inner_iters;

    ExperimentResult out;
    try {
        if (cfg.mode == "gen") {
            SyntheticSpec spec;
            spec.n_channels = cfg.gen_channels;
            spec.n_customers = cfg.gen_customers;
            spec.n_edges = cfg.gen_edges;
            SyntheticInstance gen = gen_synthetic(spec, cfg.seed);
            write_instance(gen.instance, dir + "/instance.csv");
            CsvWriter truth(dir + "/truth.csv", {"s", "t", "x_true"});
            for (std::size_t e = 0; e < gen.instance.num_edges(); ++e) {
                const EdgeData& ed = gen.instance.edge(e);
                truth.row({gen.instance.channels()[ed.channel], gen.instance.customers()[ed.customer],
                           detail::fmt(gen.x_true[e])});
            }
            truth.flush();
        } else if (cfg.mode == "solve-robust") {
            const UncertaintySet uset = UncertaintySet::make(cfg.kind, *inst, cfg.gamma);
            SolveReport rep;
            try {
                rep = solve_robust(*inst, uset, cfg.cap, ropt);
            } catch (const stalled_error& e) {
                rep = e.report;
            }
            detail::write_trace(dir, rep.trace);
            detail::write_budget(dir, *inst, rep.y_robust);
            detail::write_bounds(dir, rep.inner_certs);
            detail::write_rho(dir, rep.rho_best, rep.rho_lambda_star);
            if (rep.status != SolveStatus::Converged) {
                out.status = ExperimentStatus::Flagged;
                out.detail = to_string(rep.status);
            }
        } else if (cfg.mode == "solve-nominal" || cfg.mode == "solve-expected") {
            const ConcaveMaxResult r = cfg.mode == "solve-nominal"
                                           ? solve_nominal(*inst, cfg.cap, inner_tol, cfg.max_inner_iters)
                                           : solve_expected(*inst, cfg.cap, inner_tol, cfg.max_inner_iters);
            detail::write_budget(dir, *inst, r.y);
            if (!r.converged) {
                out.status = ExperimentStatus::Flagged;
                out.detail = "inner maximization hit its iteration cap";
            }
        } else if (cfg.mode == "adversary") {
            const UncertaintySet uset = UncertaintySet::make(cfg.kind, *inst, cfg.gamma);
            std::vector<double> y;
            if (cfg.budget_path.empty())
                y.assign(inst->num_channels(), cfg.cap / double(inst->num_channels()));
            else
                y = detail::load_budget(cfg.budget_path, *inst);
            const auto t0 = std::chrono::steady_clock::now();
            AdversaryResult adv = adversary_best_response(*inst, uset, y, cfg.delta, fw_opt);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            detail::write_bounds(dir, {adv.cert});
            detail::write_rho(dir, adv.rho, adv.lambda_star);
            CsvWriter tr(dir + "/trace.csv", {"iter", "L", "U", "gap", "step", "seconds"});
            tr.row({"0", detail::fmt(adv.value), detail::fmt(adv.value), "0", "0", detail::fmt(secs)});
            tr.flush();
            if (!adv.cert.fw_converged) {
                out.status = ExperimentStatus::Flagged;
                out.detail = "inner Frank-Wolfe hit its iteration cap";
            }
        } else if (cfg.mode == "compare") {
            std::vector<double> grid = cfg.gamma_grid;
            if (grid.empty()) grid = {0.0, 0.5 * cfg.gamma, cfg.gamma, 2.0 * cfg.gamma, 4.0 * cfg.gamma};
            const UncertaintySet train = UncertaintySet::make(cfg.kind, *inst, cfg.gamma);
            SolveReport rep;
            try {
                rep = solve_robust(*inst, train, cfg.cap, ropt);
            } catch (const stalled_error& e) {
                rep = e.report;
            }
            if (rep.status != SolveStatus::Converged) {
                out.status = ExperimentStatus::Flagged;
                out.detail = std::string("robust training: ") + to_string(rep.status);
            }
            const ConcaveMaxResult nom = solve_nominal(*inst, cfg.cap, inner_tol, cfg.max_inner_iters);
            const ConcaveMaxResult expc = solve_expected(*inst, cfg.cap, inner_tol, cfg.max_inner_iters);
            const std::vector<std::pair<std::string, std::vector<double>>> candidates = {
                {"robust", rep.y_robust}, {"nominal", nom.y}, {"expected", expc.y}};

            std::vector<std::vector<AllocationRow>> cells(grid.size());
            parallel_for(grid.size(), worker_count(cfg.threads), [&](std::size_t gi) {
                const UncertaintyKind kinds[1] = {cfg.kind};
                const double gs[1] = {grid[gi]};
                cells[gi] = evaluate_allocations(*inst, kinds, gs, candidates, cfg.delta, fw_opt);
            });
            CsvWriter w(dir + "/compare.csv", {"kind", "gamma", "candidate", "worst_case"});
            std::vector<CsfmCertificate> certs;
            for (const auto& rows : cells) {
                for (const AllocationRow& r : rows) {
                    w.row({to_string(r.kind), detail::fmt(r.gamma), r.candidate, detail::fmt(r.worst_case)});
                    certs.push_back(r.cert);
                }
            }
            w.flush();
            detail::write_bounds(dir, certs);
        } else if (cfg.mode == "fw-compare") {
            if (cfg.kind != UncertaintyKind::DNorm)
                throw unsupported_set_error("fw-compare requires --set dnorm");
            const UncertaintySet uset = UncertaintySet::make(cfg.kind, *inst, cfg.gamma);
            std::vector<double> y(inst->num_channels(), cfg.cap / double(inst->num_channels()));
            if (!cfg.budget_path.empty()) y = detail::load_budget(cfg.budget_path, *inst);

            // the reference side of the comparison is solved tight unless
            // the configuration explicitly picks a tolerance
            FwOptions ref_opt = fw_opt;
            if (cfg.epsilon_fw <= 0.0) {
                ref_opt.epsilon_fw = 1e-8;
                ref_opt.max_iters = std::max(cfg.max_fw_iters, 100000);
            }
            AdversaryResult certified = adversary_best_response(*inst, uset, y, cfg.delta, ref_opt);
            const FwAdversaryResult from_center = fw_adversary(*inst, y, uset, cfg.fw_compare_iters, uset.lo);
            const FwAdversaryResult from_upper = fw_adversary(*inst, y, uset, cfg.fw_compare_iters, uset.hi);

            auto dump_trace = [&](const std::string& name, const FwAdversaryResult& fw) {
                CsvWriter tr(dir + "/" + name, {"iter", "L", "U", "gap", "step", "seconds"});
                for (std::size_t k = 0; k < fw.trace.size(); ++k) {
                    const double step = k == 0 ? 0.0 : 2.0 / double(k + 1);
                    tr.row({std::to_string(k), detail::fmt(fw.trace[k]), detail::fmt(certified.value),
                            detail::fmt(fw.trace[k] - certified.value), detail::fmt(step), "0"});
                }
                tr.flush();
            };
            dump_trace("trace_center.csv", from_center);
            dump_trace("trace_upper.csv", from_upper);

            CsvWriter w(dir + "/compare.csv", {"kind", "gamma", "candidate", "worst_case"});
            w.row({to_string(cfg.kind), detail::fmt(cfg.gamma), "csfm", detail::fmt(certified.value)});
            w.row({to_string(cfg.kind), detail::fmt(cfg.gamma), "fw-from-center", detail::fmt(from_center.trace.back())});
            w.row({to_string(cfg.kind), detail::fmt(cfg.gamma), "fw-from-upper", detail::fmt(from_upper.trace.back())});
            w.flush();
            detail::write_bounds(dir, {certified.cert});
        } else {
            throw std::invalid_argument("unknown mode: " + cfg.mode);
        }
    } catch (const std::exception& e) {
        out.status = ExperimentStatus::Error;
        out.detail = e.what();
    }
    detail::write_status(dir, out.status, out.detail);
    return out;
}

} // namespace roballoc
