// Command-line front end: instance ingestion, synthetic generation and
// experiment orchestration. Outputs are plot-ready CSV files; see README.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "roballoc/experiment.hpp"
#include "roballoc/io.hpp"

namespace {

struct Flags {
    std::optional<std::string> instance, config, out, budget, set;
    std::optional<double> delta, epsilon, gamma, cap;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<int> max_outer, fw_compare_iters;
    std::optional<std::size_t> channels, customers, edges;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--instance", f.instance, "instance CSV (s,t,alpha,beta or s,t,x_hat,n)");
    cmd->add_option("--config", f.config, "flat key = value configuration file");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--delta", f.delta, "discretization mesh of the inner minimizer");
    cmd->add_option("--epsilon", f.epsilon, "duality-gap tolerance of the outer loop");
    cmd->add_option("--gamma", f.gamma, "adversary budget");
    cmd->add_option("--set", f.set, "uncertainty set kind: ellipsoid | dnorm");
    cmd->add_option("--cap", f.cap, "total budget cap C");
    cmd->add_option("--threads", f.threads, "worker pool cap (also ROBUST_ALLOC_THREADS)");
    cmd->add_option("--max-outer", f.max_outer, "outer iteration cap");
}

int run(const std::string& mode, const Flags& f) {
    roballoc::RunConfig cfg;
    cfg.mode = mode;
    if (f.config) roballoc::apply_config_file(cfg, *f.config);
    if (f.out) cfg.out_dir = *f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.delta) cfg.delta = *f.delta;
    if (f.epsilon) cfg.epsilon = *f.epsilon;
    if (f.gamma) cfg.gamma = *f.gamma;
    if (f.set) cfg.kind = roballoc::parse_kind(*f.set);
    if (f.cap) cfg.cap = *f.cap;
    if (f.threads) cfg.threads = *f.threads;
    if (f.max_outer) cfg.max_outer = *f.max_outer;
    if (f.budget) cfg.budget_path = *f.budget;
    if (f.fw_compare_iters) cfg.fw_compare_iters = *f.fw_compare_iters;
    if (f.channels) cfg.gen_channels = *f.channels;
    if (f.customers) cfg.gen_customers = *f.customers;
    if (f.edges) cfg.gen_edges = *f.edges;

    std::optional<roballoc::InfluenceInstance> inst;
    if (mode != "gen") {
        if (!f.instance) {
            std::cerr << "error: --instance is required for " << mode << "\n";
            return 1;
        }
        inst.emplace(roballoc::parse_instance(*f.instance));
    }

    const roballoc::ExperimentResult res = roballoc::run_experiment(cfg, inst ? &*inst : nullptr);
    switch (res.status) {
    case roballoc::ExperimentStatus::Converged:
        return 0;
    case roballoc::ExperimentStatus::Flagged:
        std::cerr << "flagged: " << res.detail << "\n";
        return 2;
    case roballoc::ExperimentStatus::Error:
        std::cerr << "error: " << res.detail << "\n";
        return 1;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust budget allocation over bipartite influence graphs"};
    app.require_subcommand(1);

    const char* modes[] = {"solve-robust", "solve-nominal", "solve-expected",
                           "adversary",    "compare",       "fw-compare",
                           "gen"};
    const char* descriptions[] = {
        "saddle-point solve: subgradient ascent with duality-gap termination",
        "maximize influence at the point estimate x_hat",
        "maximize the Beta-posterior expected influence",
        "adversary best response to a fixed budget",
        "worst-case comparison of robust/nominal/expected over a gamma grid",
        "plain Frank-Wolfe adversary vs the certified minimizer (D-norm)",
        "generate a synthetic instance and its ground truth"};

    Flags flags;
    for (std::size_t m = 0; m < std::size(modes); ++m) {
        CLI::App* cmd = app.add_subcommand(modes[m], descriptions[m]);
        add_common(cmd, flags);
        if (std::string(modes[m]) == "adversary" || std::string(modes[m]) == "fw-compare") {
            cmd->add_option("--budget", flags.budget, "budget.csv to respond to (default: uniform C/|S|)");
            cmd->add_option("--fw-iters", flags.fw_compare_iters, "fixed-step Frank-Wolfe iterations");
        }
        if (std::string(modes[m]) == "gen") {
            cmd->add_option("--channels", flags.channels, "number of channels");
            cmd->add_option("--customers", flags.customers, "number of customers");
            cmd->add_option("--edges", flags.edges, "edge count (0: complete bipartite)");
        }
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto* sub : app.get_subcommands()) return run(sub->get_name(), flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
