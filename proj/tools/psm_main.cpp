// Command-line front end: solve scenarios, compute comparative statics,
// run finite-difference oracle checks, audit propositions, and execute
// parameter sweeps with CSV/JSON output.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "psm/psm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitStrictAuditFail = 2;

psm::Scenario scenario_from(const std::string& path) {
    auto cfg = psm::load_config(path);
    if (!std::holds_alternative<psm::Scenario>(cfg))
        throw psm::ValidationError("config", "a single-scenario config is required here");
    return std::get<psm::Scenario>(cfg);
}

psm::Wrt parse_wrt(const std::string& s) {
    if (s == "t1") return psm::Wrt::t1;
    if (s == "t2") return psm::Wrt::t2;
    throw psm::ValidationError("--wrt", "t1 or t2 required");
}

void print_equilibrium(const psm::Scenario& sc, const psm::Equilibrium& eq) {
    std::cout << "x1* = " << psm::format_sig12(eq.vars.x1)
              << "  x2* = " << psm::format_sig12(eq.vars.x2)
              << "  y* = " << psm::format_sig12(eq.vars.y) << "\n";
    std::cout << "lambda* = " << eq.lambda_star << "  binding = " << (eq.binding ? "yes" : "no");
    if (sc.constrained()) std::cout << "  ybar = " << psm::format_sig12(sc.ybar());
    std::cout << "\nobjective = " << psm::format_sig12(eq.objective)
              << "  foc_norm = " << psm::format_sig12(eq.foc_norm)
              << "  iterations = " << eq.iterations << "\n";
    const auto cert = psm::certify(eq, sc);
    std::cout << "certificate (" << (cert.binding_branch ? "bordered" : "plain") << "): ";
    for (const auto& e : cert.entries)
        std::cout << e.name << " = " << psm::format_sig12(e.value) << (e.ok ? " ok  " : " FAIL  ");
    std::cout << (cert.pass ? "=> maximum certified" : "=> CERTIFICATE FAILED") << "\n";
}

void print_statics(const psm::StaticsReport& rep) {
    std::cout << "wrt " << psm::wrt_name(rep.wrt) << " ("
              << (rep.kind == psm::StaticsCase::constrained ? "constrained" : "unconstrained")
              << "):\n";
    std::cout << "  x1T = " << psm::format_sig12(rep.x1T)
              << "  x2T = " << psm::format_sig12(rep.x2T)
              << "  yT = " << psm::format_sig12(rep.yT)
              << "  sum_xT = " << psm::format_sig12(rep.sum_xT) << "\n";
    if (rep.kind == psm::StaticsCase::constrained)
        std::cout << "  lambdaT = " << psm::format_sig12(rep.lambdaT)
                  << "  z+ = " << psm::format_sig12(rep.z_plus)
                  << "  phi_lambda = " << psm::format_sig12(rep.phi_lambda) << "\n";
    else
        std::cout << "  phi_x = " << psm::format_sig12(rep.phi_x) << "  phi_y = "
                  << (rep.phi_y_defined ? psm::format_sig12(rep.phi_y) : "undefined") << "\n";
    std::cout << "  dominance = " << psm::dominance_name(rep.dominance)
              << "  mu_same_sign = " << (rep.mu_same_sign ? "yes" : "no")
              << "  residual = " << psm::format_sig12(rep.system_residual) << "\n";
}

int cmd_solve(const std::string& config) {
    const psm::Scenario sc = scenario_from(config);
    const psm::Equilibrium eq = psm::solve(sc);
    print_equilibrium(sc, eq);
    return psm::certify(eq, sc).pass ? kExitOk : kExitError;
}

int cmd_statics(const std::string& config, const std::string& wrt) {
    const psm::Scenario sc = scenario_from(config);
    const psm::Equilibrium eq = psm::solve(sc);
    print_equilibrium(sc, eq);
    for (const auto w : {psm::Wrt::t1, psm::Wrt::t2}) {
        if (wrt != "both" && w != parse_wrt(wrt)) continue;
        const auto rep = sc.constrained() ? psm::statics_constrained(eq, sc, w)
                                          : psm::statics_unconstrained(eq, sc, w);
        print_statics(rep);
    }
    return kExitOk;
}

int cmd_oracle(const std::string& config, const std::string& wrt, double step, double tol) {
    const psm::Scenario sc = scenario_from(config);
    bool ok = true;
    for (const auto w : {psm::Wrt::t1, psm::Wrt::t2}) {
        if (wrt != "both" && w != parse_wrt(wrt)) continue;
        const auto rep = psm::fd_statics(sc, w, step);
        std::cout << "wrt " << psm::wrt_name(w) << ": fd = ("
                  << psm::format_sig12(rep.fd_x1T) << ", " << psm::format_sig12(rep.fd_x2T)
                  << ", " << psm::format_sig12(rep.fd_yT) << ")  analytic = ("
                  << psm::format_sig12(rep.an_x1T) << ", " << psm::format_sig12(rep.an_x2T)
                  << ", " << psm::format_sig12(rep.an_yT) << ")";
        if (!rep.comparable()) {
            std::cout << "  [" << (rep.branch_crossing ? "branch-crossing" : "boundary")
                      << ", comparison suppressed]\n";
            continue;
        }
        std::cout << "  max rel err = " << psm::format_sig12(rep.max_rel_err)
                  << (rep.max_rel_err <= tol ? "  ok" : "  MISMATCH") << "\n";
        ok = ok && rep.max_rel_err <= tol;
    }
    return ok ? kExitOk : kExitError;
}

int cmd_audit(const std::string& config, bool strict) {
    const psm::Scenario sc = scenario_from(config);
    const psm::Equilibrium eq = psm::solve(sc);
    bool any_fail = false;
    for (const auto w : {psm::Wrt::t1, psm::Wrt::t2}) {
        const auto rep = sc.constrained() ? psm::statics_constrained(eq, sc, w)
                                          : psm::statics_unconstrained(eq, sc, w);
        const auto verdicts = psm::audit_propositions(rep);
        std::cout << "wrt " << psm::wrt_name(w) << ":\n";
        for (const auto& v : verdicts) {
            std::cout << "  " << v.id << ": ";
            if (!v.applicable) {
                std::cout << "not applicable\n";
                continue;
            }
            std::cout << v.predicted << " -> " << (v.pass ? "pass" : "FAIL") << "\n";
            any_fail = any_fail || !v.pass;
        }
        if (sc.constrained()) {
            const auto sv = psm::lambda_shadow_analysis(eq, sc, rep);
            std::cout << "  shadow: lambdaT = " << psm::format_sig12(sv.lambdaT);
            if (sv.binding)
                std::cout << ", binding form = " << psm::format_sig12(sv.lambdaT_binding_form);
            std::cout << " (feasible direction " << (sv.demanded_sign < 0 ? "<= 0" : ">= 0")
                      << ", " << (sv.sign_consistent ? "consistent" : "INCONSISTENT") << ")\n";
        }
    }
    if (any_fail && strict) return kExitStrictAuditFail;
    return kExitOk;
}

int cmd_sweep(const std::string& config, std::optional<std::uint64_t> seed,
              const std::string& format, const std::string& out, bool strict, bool no_oracle) {
    auto cfg = psm::load_config(config);
    if (!std::holds_alternative<psm::SweepSpec>(cfg))
        throw psm::ValidationError("config", "a sweep config is required here");
    psm::SweepSpec spec = std::get<psm::SweepSpec>(cfg);
    if (seed) spec.seed = *seed;
    const psm::SweepResult res = psm::run_sweep(spec, !no_oracle);
    if (out.empty()) {
        if (format == "csv")
            psm::emit_csv(res.records, std::cout);
        else
            psm::emit_json(res.records, std::cout);
    } else {
        psm::emit(res.records, format, out);
    }
    std::cerr << "accepted " << res.accepted << ", rejected " << res.rejected << ", audits "
              << res.audit_pass << " pass / " << res.audit_fail << " fail\n";
    if (res.any_terminal_error) return kExitError;
    if (strict && res.any_audit_failure) return kExitStrictAuditFail;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-affiliate profit-shifting model: solve, statics, oracle, audit, sweep"};
    app.require_subcommand(1);

    std::string config, wrt = "both", format = "csv", out;
    double step = 1e-4, tol = 1e-3;
    bool strict = false, no_oracle = false;
    std::optional<std::uint64_t> seed;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("config", config, "path to a config file")->required();
    };

    auto* c_solve = app.add_subcommand("solve", "solve one scenario and certify the maximum");
    add_config(c_solve);

    auto* c_statics = app.add_subcommand("statics", "comparative statics at the equilibrium");
    add_config(c_statics);
    c_statics->add_option("--wrt", wrt, "t1, t2 or both");

    auto* c_oracle = app.add_subcommand("oracle-check", "finite-difference check of the statics");
    add_config(c_oracle);
    c_oracle->add_option("--wrt", wrt, "t1, t2 or both");
    c_oracle->add_option("--step", step, "tax perturbation step");
    c_oracle->add_option("--tol", tol, "relative tolerance");

    auto* c_audit = app.add_subcommand("audit", "proposition audits at the equilibrium");
    add_config(c_audit);
    c_audit->add_flag("--strict", strict, "exit 2 on proposition failure");

    auto* c_sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_config(c_sweep);
    std::uint64_t seed_val = 0;
    auto* seed_opt = c_sweep->add_option("--seed", seed_val, "override the sweep seed");
    c_sweep->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    c_sweep->add_option("--out", out, "output file (stdout if omitted)");
    c_sweep->add_flag("--strict", strict, "exit 2 on proposition failure");
    c_sweep->add_flag("--no-oracle", no_oracle, "skip finite-difference re-solves");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seed_opt->count() > 0) seed = seed_val;
        if (c_solve->parsed()) return cmd_solve(config);
        if (c_statics->parsed()) return cmd_statics(config, wrt);
        if (c_oracle->parsed()) return cmd_oracle(config, wrt, step, tol);
        if (c_audit->parsed()) return cmd_audit(config, strict);
        if (c_sweep->parsed()) return cmd_sweep(config, seed, format, out, strict, no_oracle);
    } catch (const psm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
