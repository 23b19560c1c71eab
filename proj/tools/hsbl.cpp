// Command-line driver: run, sweep, oracle-check, verify.
// Exit codes: 0 all verdicts pass, 2 verdict failures, 1 operational error.

#include "hsbl/cli_io.hpp"
#include "hsbl/oracle.hpp"
#include "hsbl/sweep.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kFindings = 2;

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<double> gamma;
    std::optional<int> parallel;
};

hsbl::RunConfig load(const Options& o)
{
    hsbl::RunConfig cfg = o.config.empty() ? hsbl::parse_config("") : hsbl::load_config(o.config);
    if (o.gamma) {
        cfg.gamma = *o.gamma;
        hsbl::validate_config(cfg);
    }
    if (o.parallel) {
        if (*o.parallel < 1)
            throw hsbl::ConfigError("worker cap must be at least 1", "sweep.parallel");
        cfg.parallel = *o.parallel;
    }
    return cfg;
}

void print_report(const hsbl::SweepReport& r)
{
    for (const auto& m : r.members) {
        if (m.ok)
            std::printf("member gamma=%-6g steps=%zu graph=%.3e incompress=%.3e ba=%.3e tol_ba=%.3e\n", m.gamma,
                        m.trajectory.steps.size(), m.diagnostics.graph, m.diagnostics.incompressibility,
                        m.diagnostics.benilan_aronson.margin, m.tol_ba);
        else
            std::printf("member gamma=%-6g FAILED: %s\n", m.gamma, m.error.c_str());
    }
    for (const auto& v : r.verdicts)
        std::printf("%-8s %-24s value=%-12.5g threshold=%-12.5g %s\n", hsbl::to_string(v.status).c_str(),
                    v.name.c_str(), v.value, v.threshold, v.detail.c_str());
}

int run_plan(const Options& o, bool single)
{
    const auto cfg = load(o);
    const auto plan = cfg.plan(single ? std::optional<double>(cfg.gamma) : std::nullopt);
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = hsbl::run_sweep(plan);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_report(report);
    const auto manifest = hsbl::emit_outputs(report, cfg, o.out);
    std::printf("wrote %zu files to %s in %.2f s\n", manifest.size(), o.out.c_str(), secs);
    return report.all_pass() ? kPass : kFindings;
}

int oracle_check(const Options& o)
{
    auto checks = hsbl::self_verify_oracles();
    const auto solver = hsbl::solver_oracle_checks();
    checks.insert(checks.end(), solver.begin(), solver.end());
    bool ok = true;
    for (const auto& c : checks) {
        std::printf("%-4s %-40s value=%-12.5g tol=%-12.5g %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.tolerance, c.detail.c_str());
        ok = ok && c.pass;
    }
    hsbl::emit_oracle_report(checks, o.out);
    return ok ? kPass : kFindings;
}

int verify(const Options& o)
{
    const auto res = hsbl::verify_outputs(o.out);
    for (const auto& m : res.messages)
        std::printf("%s\n", m.c_str());
    std::printf("verified %d members, %d values compared, %d mismatches\n", res.members, res.compared,
                res.mismatches);
    return res.mismatches == 0 && res.members > 0 ? kPass : kFindings;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Finite-volume solver and stiffness sweep for a compressible Buckley-Leverett model"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "INI configuration file (defaults when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "single gamma run");
    add_common(run);
    run->add_option("--gamma", o.gamma, "override stiff.gamma");

    auto* sweep = app.add_subcommand("sweep", "run the whole gamma ladder");
    add_common(sweep);
    sweep->add_option("--parallel", o.parallel, "worker cap");

    auto* oracle = app.add_subcommand("oracle-check", "oracle self-checks and solver-vs-oracle cases");
    oracle->add_option("--out", o.out, "directory for oracle.json")->capture_default_str();

    auto* ver = app.add_subcommand("verify", "recompute diagnostics from stored fields");
    ver->add_option("--out", o.out, "output directory of a previous run or sweep")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kError;
    }

    try {
        if (*run)
            return run_plan(o, true);
        if (*sweep)
            return run_plan(o, false);
        if (*oracle)
            return oracle_check(o);
        return verify(o);
    }
    catch (const hsbl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kError;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
}
