#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// tolerances are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "roballoc/baselines.hpp"
#include "roballoc/csfm.hpp"
#include "roballoc/io.hpp"
#include "roballoc/robust.hpp"
#include "roballoc/synthetic.hpp"

using namespace roballoc;

namespace {

struct Criterion {
    int number;
    bool ok = true;
    std::string note;

    explicit Criterion(int n) : number(n) {}
    void expect(bool cond) {
        ok &= cond;
        CHECK(cond);
    }
    ~Criterion() {
        std::printf("[criterion %2d] %s%s%s\n", number, ok ? "PASS" : "FAIL", note.empty() ? "" : " — ",
                    note.c_str());
        std::fflush(stdout);
    }
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

struct TinyInstance {
    InfluenceInstance instance;
    std::vector<double> y;
};

// random instance with at most three edges and a feasible random budget
TinyInstance random_tiny(std::mt19937_64& rng) {
    const std::size_t n_edges = 1 + std::size_t(oracles::uniform01(rng) * 3.0) % 3;
    const std::size_t n_channels = 1 + std::size_t(oracles::uniform01(rng) * double(n_edges)) % n_edges;
    const std::size_t n_customers = 1 + std::size_t(oracles::uniform01(rng) * 2.0) % 2;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    while (pairs.size() < n_edges) {
        const std::uint32_t s = std::uint32_t(oracles::uniform01(rng) * double(n_channels)) % n_channels;
        const std::uint32_t t = std::uint32_t(oracles::uniform01(rng) * double(n_customers)) % n_customers;
        if (std::find(pairs.begin(), pairs.end(), std::make_pair(s, t)) == pairs.end()) pairs.emplace_back(s, t);
        if (pairs.size() == n_channels * n_customers) break;
    }
    std::set<std::uint32_t> chs, cus;
    for (auto [s, t] : pairs) {
        chs.insert(s);
        cus.insert(t);
    }
    // compact ids so every channel/customer is used
    std::vector<EdgeData> edges;
    for (auto [s, t] : pairs) {
        EdgeData e;
        e.channel = std::uint32_t(std::distance(chs.begin(), chs.find(s)));
        e.customer = std::uint32_t(std::distance(cus.begin(), cus.find(t)));
        e.alpha = 1.0 + std::floor(9.0 * oracles::uniform01(rng));
        e.beta = 1.0 + std::floor(9.0 * oracles::uniform01(rng));
        e.n_obs = e.alpha + e.beta - 2.0;
        e.x_hat = e.alpha / (e.alpha + e.beta);
        edges.push_back(e);
    }
    std::vector<std::string> channels, customers;
    for (std::size_t s = 0; s < chs.size(); ++s) channels.push_back("s" + std::to_string(s));
    for (std::size_t t = 0; t < cus.size(); ++t) customers.push_back("t" + std::to_string(t));
    std::vector<double> y(channels.size());
    for (double& v : y) v = 0.3 + 2.2 * oracles::uniform01(rng);
    return {InfluenceInstance(std::move(channels), std::move(customers), std::move(edges)), std::move(y)};
}

struct SolvedTiny {
    TinyInstance prob;
    UncertaintySet uset;
    CsfmSolution sol;
    double grid_best;
};

SolvedTiny solve_tiny(std::mt19937_64& rng, UncertaintyKind kind) {
    TinyInstance prob = random_tiny(rng);
    const std::size_t m = prob.instance.num_edges();
    const double gamma = kind == UncertaintyKind::DNorm ? 0.3 + 0.7 * double(m) * oracles::uniform01(rng)
                                                        : 0.3 + 2.7 * oracles::uniform01(rng);
    UncertaintySet uset = UncertaintySet::make(kind, prob.instance, gamma);

    double span_max = 0.0;
    for (std::size_t e = 0; e < m; ++e) span_max = std::max(span_max, uset.hi[e] - uset.lo[e]);
    const double delta = std::max(span_max / 10.0, 1e-9); // k_i <= 11

    const AdversaryObjective h(prob.instance, prob.y);
    FwOptions opt;
    opt.epsilon_fw = 1e-11;
    opt.max_iters = 200000;
    const double lips = influence_lipschitz_bound(prob.instance, prob.y, uset.lo);
    CsfmSolution sol = constrained_min(
        h, [&](std::size_t e, double x) { return uset.regularizer(e, x); }, uset.gamma, uset.lo, uset.hi, delta,
        lips, opt);

    const auto best = oracles::lattice_minimum(
        sol.grid, [&](std::span<const double> xc) { return influence_eval(prob.instance, prob.y, xc); },
        [&](std::span<const double> xc) {
            double rv = 0.0;
            for (std::size_t e = 0; e < xc.size(); ++e) rv += uset.regularizer(e, xc[e]);
            return rv <= uset.gamma;
        });
    return {std::move(prob), std::move(uset), std::move(sol), best.value};
}

} // namespace

TEST_CASE("criterion 1: oracle optimality on tiny instances") {
    Criterion crit(1);
    const double t_start = now_seconds();
    std::mt19937_64 rng(20250401);
    int distinct_cases = 0, within_theory = 0;
    for (int trial = 0; trial < 50; ++trial) {
        for (UncertaintyKind kind : {UncertaintyKind::Ellipsoidal, UncertaintyKind::DNorm}) {
            const SolvedTiny st = solve_tiny(rng, kind);
            if (st.sol.cert.bracket_distance <= 1) ++distinct_cases;
            if (st.sol.value <= st.grid_best + st.sol.cert.theory_gap + 1e-12) ++within_theory;
            crit.expect(st.sol.value <= st.grid_best + st.sol.cert.theory_gap + 1e-12);
            crit.expect(st.sol.value <=
                        st.grid_best + std::min(st.sol.cert.bracket_gap, st.sol.cert.lagrangian_gap) + 1e-6);
            const auto [rv, feasible] = regularizer_eval(st.uset, st.sol.x);
            crit.expect(feasible);
        }
    }
    const double elapsed = now_seconds() - t_start;
    crit.expect(elapsed < 60.0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "100 solves, %d/100 within 2 G delta, %d in the distinct-profile regime, %.1fs", within_theory,
                  distinct_cases, elapsed);
    crit.note = buf;
}

TEST_CASE("criterion 2: solution-path correctness on tiny instances") {
    Criterion crit(2);
    std::mt19937_64 rng(20250402);
    int scanned = 0, exceptions = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const UncertaintyKind kind = trial % 2 ? UncertaintyKind::Ellipsoidal : UncertaintyKind::DNorm;
        const SolvedTiny st = solve_tiny(rng, kind);
        const std::vector<double>& rho = st.sol.rho; // already tie-snapped
        std::vector<double> lambdas(rho.begin(), rho.end());
        lambdas.push_back(0.0);
        std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
        lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
        double scale = 1.0;
        for (double v : rho) scale = std::max(scale, std::fabs(v));

        for (double lambda : lambdas) {
            if (lambda < 0.0) continue;
            ++scanned;
            const std::vector<int> xl = threshold_profile(st.sol.layout, rho, lambda);
            auto obj = [&](std::span<const double> xc) {
                double rv = 0.0;
                for (std::size_t e = 0; e < xc.size(); ++e) rv += st.uset.regularizer(e, xc[e]);
                return influence_eval(st.prob.instance, st.prob.y, xc) + lambda * rv;
            };
            const auto best =
                oracles::lattice_minimum(st.sol.grid, obj, [](std::span<const double>) { return true; });
            const std::vector<double> xc = st.sol.grid.interpolate(xl);
            const bool attained = obj(xc) <= best.value + 1e-9 * std::max(1.0, std::fabs(best.value));
            if (attained) continue;
            // exact match is only promised for distinct entries near lambda
            bool near_tie = false;
            for (double v : rho) near_tie |= v != lambda && std::fabs(v - lambda) <= 1e-6 * scale;
            if (near_tie) {
                ++exceptions;
            } else {
                crit.expect(false);
            }
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d thresholds scanned, %d logged near-tie exceptions", scanned, exceptions);
    crit.note = buf;
}

namespace {

struct SuiteCell {
    UncertaintyKind kind;
    double cap, gamma;
    SolveReport report;
    bool converged = false;
};

std::vector<SuiteCell> run_saddle_suite(const InfluenceInstance& inst) {
    const double gammas[5] = {0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<SuiteCell> cells;
    for (UncertaintyKind kind : {UncertaintyKind::Ellipsoidal, UncertaintyKind::DNorm}) {
        for (double cap : {0.4, 4.0}) {
            for (double gamma : gammas) {
                SuiteCell cell;
                cell.kind = kind;
                cell.cap = cap;
                cell.gamma = gamma;
                RobustOptions opt;
                opt.epsilon = 1e-2;
                opt.delta = 1e-3;
                opt.max_outer = 500;
                const UncertaintySet uset = UncertaintySet::make(kind, inst, gamma);
                try {
                    cell.report = solve_robust(inst, uset, cap, opt);
                    cell.converged = cell.report.status == SolveStatus::Converged;
                } catch (const stalled_error& e) {
                    cell.report = e.report;
                    cell.converged = false;
                }
                std::printf("  cell %-9s C=%.1f gamma=%.2f: %s in %zu iters, gap %.2e, L %.4f (%.0fs)\n",
                            to_string(kind), cap, gamma, cell.converged ? "converged" : "NOT converged",
                            cell.report.trace.size(), cell.report.gap(), cell.report.lower_best, now_seconds());
                std::fflush(stdout);
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

} // namespace

TEST_CASE("criteria 3 and 4: saddle-point suite and robust dominance") {
    const double t_start = now_seconds();
    SyntheticSpec spec;
    spec.n_channels = 6;
    spec.n_customers = 2;
    const SyntheticInstance gen = gen_synthetic(spec, 20170301);
    const InfluenceInstance& inst = gen.instance;

    const std::vector<SuiteCell> cells = run_saddle_suite(inst);
    const double suite_seconds = now_seconds() - t_start;

    {
        Criterion crit(3);
        int converged = 0;
        for (const SuiteCell& c : cells) {
            if (c.converged) ++converged;
            crit.expect(c.report.trace.size() <= 500);
        }
        crit.expect(converged >= int(std::ceil(0.95 * double(cells.size()))));
        crit.expect(suite_seconds <= 1800.0);
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%d/%zu cells converged to gap <= 1e-2, %.0fs total", converged,
                      cells.size(), suite_seconds);
        crit.note = buf;
    }

    {
        Criterion crit(4);
        FwOptions fw_opt;
        fw_opt.epsilon_fw = 1e-4;
        fw_opt.max_iters = 50000;
        int checked = 0;
        for (const SuiteCell& c : cells) {
            if (!c.converged) continue;
            const ConcaveMaxResult nom = solve_nominal(inst, c.cap, 1e-5);
            const ConcaveMaxResult expc = solve_expected(inst, c.cap, 1e-5);
            const UncertaintySet uset = UncertaintySet::make(c.kind, inst, c.gamma);
            // the dominance margin is pure discretization error (2 G delta),
            // so the compared budget must be trained well inside it; the
            // epsilon = 1e-2 suite solution can trail the optimum by more
            std::vector<double> y_rob = c.report.y_robust;
            {
                RobustOptions tight;
                tight.epsilon = 1e-3;
                tight.delta = 1e-3;
                tight.max_outer = 2000;
                tight.y0 = y_rob;
                try {
                    const SolveReport rep = solve_robust(inst, uset, c.cap, tight);
                    y_rob = rep.y_robust;
                } catch (const stalled_error&) {
                    // keep the suite solution
                }
            }
            // all three candidates go through the same worst-case evaluator
            const AdversaryResult wc_rob = adversary_best_response(inst, uset, y_rob, 1e-3, fw_opt);
            const AdversaryResult wc_nom = adversary_best_response(inst, uset, nom.y, 1e-3, fw_opt);
            const AdversaryResult wc_exp = adversary_best_response(inst, uset, expc.y, 1e-3, fw_opt);
            const double tol = std::max({wc_rob.cert.theory_gap, wc_nom.cert.theory_gap, wc_exp.cert.theory_gap});
            const bool dom_nom = wc_rob.value >= wc_nom.value - tol;
            const bool dom_exp = wc_rob.value >= wc_exp.value - tol;
            if (!dom_nom || !dom_exp) {
                std::printf("  dominance miss %-9s C=%.1f gamma=%.2f: robust %.4f nominal %.4f expected %.4f "
                            "tol %.4f\n",
                            to_string(c.kind), c.cap, c.gamma, wc_rob.value, wc_nom.value, wc_exp.value, tol);
            }
            crit.expect(dom_nom);
            crit.expect(dom_exp);
            ++checked;
        }
        char buf[120];
        std::snprintf(buf, sizeof(buf), "robust weakly dominates nominal and expected on %d cells (tol 2 G delta)",
                      checked);
        crit.note = buf;
    }
}

TEST_CASE("criterion 5: submodularity, monotonicity and gradient property suites") {
    Criterion crit(5);
    std::mt19937_64 rng(20250405);
    SyntheticSpec spec;
    spec.n_channels = 4;
    spec.n_customers = 3;
    spec.n_obs_fixed = 40.0;
    const InfluenceInstance inst = gen_synthetic(spec, 5).instance;
    const std::size_t m = inst.num_edges();

    std::vector<double> y(inst.num_channels());
    for (double& v : y) v = 2.0 * oracles::uniform01(rng);

    int lattice_ok = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a(m), b(m), top(m), bot(m);
        for (std::size_t e = 0; e < m; ++e) {
            a[e] = oracles::uniform01(rng);
            b[e] = oracles::uniform01(rng);
            top[e] = std::max(a[e], b[e]);
            bot[e] = std::min(a[e], b[e]);
        }
        const double lhs = influence_eval(inst, y, a) + influence_eval(inst, y, b);
        const double rhs = influence_eval(inst, y, top) + influence_eval(inst, y, bot);
        if (lhs >= rhs - 1e-9) ++lattice_ok;
    }
    crit.expect(lattice_ok == 1000);

    int grad_ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> yy(inst.num_channels()), xx(m);
        for (double& v : yy) v = 0.2 + 2.0 * oracles::uniform01(rng);
        for (double& v : xx) v = 0.25 + 0.6 * oracles::uniform01(rng);

        bool ok = true;
        const std::vector<double> gy = influence_grad_y(inst, yy, xx);
        const auto fdy = oracles::fd_gradient(
            [&](std::span<const double> v) { return influence_eval(inst, v, xx); }, yy, 1e-6);
        for (std::size_t s = 0; s < yy.size(); ++s)
            ok &= std::fabs(gy[s] - fdy[s]) <= 1e-5 * std::max(1.0, std::fabs(fdy[s]));

        const std::vector<double> gb = beta_expected_influence_grad(inst, yy);
        const auto fdb = oracles::fd_gradient(
            [&](std::span<const double> v) { return beta_expected_influence(inst, v); }, yy, 1e-6);
        for (std::size_t s = 0; s < yy.size(); ++s)
            ok &= std::fabs(gb[s] - fdb[s]) <= 1e-5 * std::max(1.0, std::fabs(fdb[s]));
        if (ok) ++grad_ok;
    }
    crit.expect(grad_ok == 100);

    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d/1000 lattice inequalities, %d/100 gradient checks", lattice_ok, grad_ok);
    crit.note = buf;
}

TEST_CASE("criterion 6: PAV exactness against the QP enumeration oracle") {
    Criterion crit(6);
    std::mt19937_64 rng(20250406);
    int ok_count = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + std::size_t(oracles::uniform01(rng) * 12.0) % 12;
        std::vector<double> z(n), r(n);
        for (std::size_t j = 0; j < n; ++j) {
            z[j] = -4.0 + 8.0 * oracles::uniform01(rng);
            r[j] = 0.05 + 4.0 * oracles::uniform01(rng);
        }
        const std::vector<double> fast = pav_isotonic(z, r);
        const std::vector<double> exact = oracles::isotonic_by_enumeration(z, r);
        bool ok = true;
        for (std::size_t j = 0; j < n; ++j) ok &= std::fabs(fast[j] - exact[j]) <= 1e-8;
        crit.expect(ok);
        if (ok) ++ok_count;
    }
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%d/100 problems within 1e-8 of the oracle", ok_count);
    crit.note = buf;
}

TEST_CASE("criterion 7: worst-case value versus worst-case ratio fixture") {
    Criterion crit(7);
    const std::vector<std::vector<double>> payoff{{1.0, 1.0}, {0.6, 2.0}};
    const SelectionComparison cmp = compare_selection_criteria(payoff);
    crit.expect(cmp.worst_case_action == 0);
    crit.expect(cmp.worst_case_value == 1.0);
    crit.expect(cmp.ratio_action == 1);
    crit.expect(cmp.ratio_value == 0.6);
    crit.expect(cmp.ratio_action_worst_case == 0.6);
    crit.note = "worst-case pick guarantees 1.0; ratio pick guarantees 0.6";
}

TEST_CASE("criterion 8: sqrt-variance curvature reproduction") {
    Criterion crit(8);
    const InfluenceInstance inst({"s0", "s1"}, {"t0"},
                                 {{0, 0, 0.5, 1.0, 1.0, 0.0}, {1, 0, 0.5, 1.0, 1.0, 0.0}});
    auto sqrt_var = [&](std::span<const double> y) { return std::sqrt(beta_variance_influence(inst, y)); };

    const auto h1 = oracles::fd_hessian(sqrt_var, {1.0, 1.0}, 1e-4);
    const auto [lo1, hi1] = oracles::eig2(h1);
    crit.expect(lo1 < 0.0);
    crit.expect(hi1 > 0.0);
    crit.expect(h1[0][1] < 0.0);

    const auto h3 = oracles::fd_hessian(sqrt_var, {3.0, 3.0}, 1e-4);
    crit.expect(h3[0][1] > 0.0);

    char buf[160];
    std::snprintf(buf, sizeof(buf), "eig(%.4f, %.4f), offdiag %.4f at (1,1); offdiag %.5f at (3,3)", lo1, hi1,
                  h1[0][1], h3[0][1]);
    crit.note = buf;
}

TEST_CASE("criterion 9: Yahoo-scale smoke test") {
    Criterion crit(9);
    const double t_start = now_seconds();

    SyntheticSpec spec;
    spec.n_channels = 1000;
    spec.n_customers = 10400;
    spec.n_edges = 52000;
    const SyntheticInstance gen = gen_synthetic(spec, 20170302);

    // the instance file round-trips at scale
    const std::string path = "acceptance_scale_instance.csv";
    write_instance(gen.instance, path);
    const InfluenceInstance inst = parse_instance(path);
    std::remove(path.c_str());
    crit.expect(inst.num_channels() == 1000);
    crit.expect(inst.num_customers() >= 10000);
    crit.expect(inst.num_edges() >= 50000);

    const double cap = 100.0;
    std::vector<double> y(inst.num_channels(), cap / double(inst.num_channels()));
    const UncertaintySet uset = UncertaintySet::dnorm(inst, 100.0);
    FwOptions fw_opt;
    fw_opt.epsilon_fw = 0.05;
    fw_opt.max_iters = 60;

    const AdversaryResult adv = adversary_best_response(inst, uset, y, 0.05, fw_opt);
    const std::vector<double> g = influence_grad_y(inst, y, adv.x_worst);
    const InfluenceMaxResult um = max_influence_given_x(inst, adv.x_worst, cap, 1e-2, 2000, y);
    const double elapsed = now_seconds() - t_start;

    crit.expect(std::isfinite(adv.value));
    crit.expect(std::isfinite(um.upper));
    crit.expect(adv.value >= 0.0);
    crit.expect(um.upper >= adv.value - 1e-6);
    bool finite = true;
    for (double v : adv.x_worst) finite &= std::isfinite(v);
    for (double v : g) finite &= std::isfinite(v);
    crit.expect(finite);
    crit.expect(std::isfinite(adv.cert.bracket_gap));
    crit.expect(std::isfinite(adv.cert.lagrangian_gap));
    crit.expect(elapsed <= 600.0);

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "L %.2f U %.2f bracket %.3g lagrangian %.3g fw_gap %.3g (%d iters) in %.0fs", adv.value,
                  um.upper, adv.cert.bracket_gap, adv.cert.lagrangian_gap, adv.cert.fw_dual_gap,
                  adv.cert.fw_iterations, elapsed);
    crit.note = buf;
}

TEST_CASE("criterion 10: fixed-step Frank-Wolfe reproduction report") {
    Criterion crit(10);
    int reported = 0, within = 0;
    for (std::uint64_t seed : {401ull, 402ull, 403ull}) {
        SyntheticSpec spec;
        spec.n_channels = 6;
        spec.n_customers = 2;
        const SyntheticInstance gen = gen_synthetic(spec, seed);
        const InfluenceInstance& inst = gen.instance;
        std::vector<double> y(inst.num_channels(), 4.0 / 6.0);
        const UncertaintySet uset = UncertaintySet::dnorm(inst, 1.5);

        FwOptions opt;
        opt.epsilon_fw = 1e-8;
        opt.max_iters = 100000;
        const AdversaryResult certified = adversary_best_response(inst, uset, y, 0.005, opt);

        const FwAdversaryResult from_center = fw_adversary(inst, y, uset, 400, uset.lo);
        const FwAdversaryResult from_upper = fw_adversary(inst, y, uset, 400, uset.hi);
        const double scale = std::max(1e-12, std::fabs(certified.value));
        const double rel_center = (from_center.trace.back() - certified.value) / scale;
        const double rel_upper = (from_upper.trace.back() - certified.value) / scale;
        ++reported;
        const bool inside = std::fabs(rel_center) <= 0.01 && std::fabs(rel_upper) <= 0.01;
        if (inside) ++within;
        std::printf("  fw-compare seed %llu: csfm %.6f, fw(center) %.6f (rel %+0.2e), fw(upper) %.6f (rel "
                    "%+0.2e)%s\n",
                    (unsigned long long)seed, certified.value, from_center.trace.back(), rel_center,
                    from_upper.trace.back(), rel_upper, inside ? "" : "  [documented deviation]");
        crit.expect(std::isfinite(rel_center));
        crit.expect(std::isfinite(rel_upper));
    }
    crit.expect(reported >= 3);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d/%d instances within 1%% from both starts (report, not a gate)", within,
                  reported);
    crit.note = buf;
}
