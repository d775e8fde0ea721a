#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "psm/generator.hpp"

namespace psm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline const Json& require_field(const Json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(path + key, "required field missing");
    return *it;
}

inline double require_number(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = require_field(j, key, path);
    if (!v.is_number()) throw ValidationError(path + key, "number required");
    return v.get<double>();
}

inline Mat3 parse_mat3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(path, "3x3 matrix required");
    Mat3 m{};
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_array() || j[i].size() != 3)
            throw ValidationError(path, "3x3 matrix required");
        for (int k = 0; k < 3; ++k) {
            if (!j[i][k].is_number()) throw ValidationError(path, "numeric entries required");
            m[i][k] = j[i][k].get<double>();
        }
    }
    return m;
}

inline Vec3 parse_vec3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(path, "3-vector required");
    Vec3 v{};
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ValidationError(path, "numeric entries required");
        v[i] = j[i].get<double>();
    }
    return v;
}

inline AffiliatePrimitives parse_affiliate(const Json& j, const std::string& path) {
    const Json& rev = require_field(j, "revenue", path);
    const Json& cost = require_field(j, "cost", path);
    const Json& bank = require_field(j, "bank", path);
    return AffiliatePrimitives{
        QuadraticRevenue(require_number(rev, "a", path + "revenue."),
                         require_number(rev, "b", path + "revenue.")),
        QuadraticCost(require_number(cost, "c0", path + "cost."),
                      require_number(cost, "c1", path + "cost."),
                      require_number(cost, "c2", path + "cost.")),
        BankInterestSchedule(require_number(bank, "baseline_debt", path + "bank."),
                             require_number(bank, "beta1", path + "bank."),
                             require_number(bank, "beta2", path + "bank."))};
}

inline ConcealmentQuadratic parse_concealment(const Json& j, const std::string& path) {
    return ConcealmentQuadratic(parse_vec3(require_field(j, "kappa", path), path + "kappa"),
                                parse_mat3(require_field(j, "K", path), path + "K"));
}

} // namespace detail

inline Scenario scenario_from_json(const Json& j, const std::string& path = "scenario.") {
    using detail::require_field;
    using detail::require_number;
    const Json& taxes = require_field(j, "taxes", path);
    const Json& prices = require_field(j, "prices", path);
    const Json& sales = require_field(j, "market_sales", path);
    const Json& affs = require_field(j, "affiliates", path);
    if (!affs.is_array() || affs.size() != 2)
        throw ValidationError(path + "affiliates", "exactly two affiliates required");
    const Json& conceal = require_field(j, "concealment", path);

    Scenario sc{TaxRegime(require_number(taxes, "t1", path + "taxes."),
                          require_number(taxes, "t2", path + "taxes.")),
                require_number(prices, "p1", path + "prices."),
                require_number(prices, "p2", path + "prices."),
                require_number(prices, "r", path + "prices."),
                require_number(sales, "s1", path + "market_sales."),
                require_number(sales, "s2", path + "market_sales."),
                FirmPrimitives{
                    detail::parse_affiliate(affs[0], path + "affiliates[0]."),
                    detail::parse_affiliate(affs[1], path + "affiliates[1]."),
                    detail::parse_concealment(require_field(conceal, "f", path + "concealment."),
                                              path + "concealment.f."),
                    detail::parse_concealment(require_field(conceal, "g", path + "concealment."),
                                              path + "concealment.g.")},
                std::nullopt};
    if (auto it = j.find("thin_cap"); it != j.end() && !it->is_null()) {
        const double theta = require_number(*it, "theta", path + "thin_cap.");
        const double floor =
            it->contains("floor") ? require_number(*it, "floor", path + "thin_cap.") : 0.0;
        sc.thin_cap = ThinCapRule(theta, floor);
    }
    sc.validate();
    return sc;
}

inline Json scenario_to_json(const Scenario& sc) {
    auto aff = [](const AffiliatePrimitives& a) {
        return Json{{"revenue", {{"a", a.revenue.a()}, {"b", a.revenue.b()}}},
                    {"cost", {{"c0", a.cost.c0()}, {"c1", a.cost.c1()}, {"c2", a.cost.c2()}}},
                    {"bank",
                     {{"baseline_debt", a.bank.baseline_debt()},
                      {"beta1", a.bank.beta1()},
                      {"beta2", a.bank.beta2()}}}};
    };
    auto conc = [](const ConcealmentQuadratic& c) {
        const Mat3& k = c.K();
        return Json{{"kappa", {c.kappa()[0], c.kappa()[1], c.kappa()[2]}},
                    {"K",
                     {{k[0][0], k[0][1], k[0][2]},
                      {k[1][0], k[1][1], k[1][2]},
                      {k[2][0], k[2][1], k[2][2]}}}};
    };
    Json j{{"taxes", {{"t1", sc.taxes.t1}, {"t2", sc.taxes.t2}}},
           {"prices", {{"p1", sc.p1}, {"p2", sc.p2}, {"r", sc.r}}},
           {"market_sales", {{"s1", sc.s1}, {"s2", sc.s2}}},
           {"affiliates", {aff(sc.primitives.aff1), aff(sc.primitives.aff2)}},
           {"concealment", {{"f", conc(sc.primitives.f)}, {"g", conc(sc.primitives.g)}}}};
    if (sc.thin_cap)
        j["thin_cap"] = {{"theta", sc.thin_cap->theta}, {"floor", sc.thin_cap->floor}};
    return j;
}

// One varied parameter of a sweep: explicit values, an evenly spaced range,
// or a uniform random draw per scenario.
struct SweepParameter {
    std::string path; // dotted path into the scenario JSON, e.g. "thin_cap.theta"
    std::vector<double> values; // grid values (explicit or expanded range)
    bool random = false;
    double lo = 0.0, hi = 0.0;
};

struct SweepSpec {
    Json base;               // scenario JSON the variations apply to
    std::vector<SweepParameter> varied;
    RegimeFilter premise_filter = RegimeFilter::none;
    bool generator_mode = false; // no base: draw scenarios from the regime generator
    std::uint64_t seed = 0;
    int max_scenarios = 0;
    int oversampling_cap = 100; // generation attempts per accepted scenario
};

using Config = std::variant<Scenario, SweepSpec>;

inline SweepSpec sweep_from_json(const Json& j) {
    SweepSpec spec;
    const std::string path = "sweep.";
    if (j.contains("base")) spec.base = j.at("base");
    spec.generator_mode = !j.contains("base");
    if (auto it = j.find("premise_filter"); it != j.end()) {
        const auto f = regime_from_name(it->get<std::string>());
        if (!f) throw ValidationError(path + "premise_filter", "unknown regime name");
        spec.premise_filter = *f;
    }
    if (spec.generator_mode && spec.premise_filter == RegimeFilter::none)
        throw ValidationError(path + "base", "a base scenario or a premise_filter is required");
    if (auto it = j.find("seed"); it != j.end()) spec.seed = it->get<std::uint64_t>();
    spec.max_scenarios = detail::require_field(j, "max_scenarios", path).get<int>();
    if (spec.max_scenarios < 0)
        throw ValidationError(path + "max_scenarios", "must be nonnegative");
    if (auto it = j.find("oversampling_cap"); it != j.end()) {
        spec.oversampling_cap = it->get<int>();
        if (spec.oversampling_cap < 1)
            throw ValidationError(path + "oversampling_cap", "must be >= 1");
    }
    if (auto it = j.find("varied"); it != j.end()) {
        if (!it->is_array()) throw ValidationError(path + "varied", "array required");
        for (const auto& pj : *it) {
            SweepParameter p;
            p.path = detail::require_field(pj, "path", path + "varied.").get<std::string>();
            if (pj.contains("values")) {
                for (const auto& v : pj.at("values")) p.values.push_back(v.get<double>());
                if (p.values.empty())
                    throw ValidationError(path + "varied." + p.path, "values must be nonempty");
            } else if (pj.contains("range")) {
                const auto& rr = pj.at("range");
                if (!rr.is_array() || rr.size() != 2)
                    throw ValidationError(path + "varied." + p.path, "range must be [lo, hi]");
                p.lo = rr[0].get<double>();
                p.hi = rr[1].get<double>();
                if (pj.contains("count")) {
                    const int n = pj.at("count").get<int>();
                    if (n < 1)
                        throw ValidationError(path + "varied." + p.path, "count must be >= 1");
                    for (int i = 0; i < n; ++i)
                        p.values.push_back(n == 1 ? p.lo : p.lo + (p.hi - p.lo) * i / (n - 1.0));
                } else {
                    p.random = true; // uniform draw per scenario
                }
            } else {
                throw ValidationError(path + "varied." + p.path, "values or range required");
            }
            spec.varied.push_back(std::move(p));
        }
    }
    if (!spec.generator_mode && spec.varied.empty() && spec.max_scenarios == 0)
        spec.max_scenarios = 1;
    return spec;
}

inline Config parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(detail::line_of_offset(text, e.byte), e.what());
    }
    if (j.contains("schema_version") &&
        j.at("schema_version").get<std::string>() != kSchemaVersion)
        throw ValidationError("schema_version", "unsupported schema version");
    if (j.contains("scenario")) return scenario_from_json(j.at("scenario"));
    if (j.contains("sweep")) return sweep_from_json(j.at("sweep"));
    throw ValidationError("", "config must contain 'scenario' or 'sweep'");
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

// Flat record cell: number, text, or empty. Numbers are canonicalised to 12
// significant digits at emission so CSV and JSON round-trip identically.
struct Cell {
    enum class Kind { empty, number, text } kind = Kind::empty;
    double num = 0.0;
    std::string str;

    static Cell none() { return {}; }
    static Cell of(double v) { return {Kind::number, v, {}}; }
    static Cell of(const std::string& s) { return {Kind::text, 0.0, s}; }
};

struct RunRecord {
    std::map<std::string, Cell> cells;
    void set(const std::string& k, double v) { cells[k] = Cell::of(v); }
    void set(const std::string& k, const std::string& v) { cells[k] = Cell::of(v); }
    void set(const std::string& k, bool v) { cells[k] = Cell::of(v ? 1.0 : 0.0); }
};

inline std::string format_sig12(double v) {
    if (v == 0.0) return "0"; // canonicalise the sign of zero
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Stable column order shared by CSV and JSON (documented in the README).
inline const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c{
            "schema_version", "scenario_id", "status", "reason", "premise_filter",
            "t1", "t2", "T", "p1", "p2", "r", "s1", "s2",
            "rev1_a", "rev1_b", "cost1_c0", "cost1_c1", "cost1_c2",
            "bank1_debt", "bank1_beta1", "bank1_beta2",
            "rev2_a", "rev2_b", "cost2_c0", "cost2_c1", "cost2_c2",
            "bank2_debt", "bank2_beta1", "bank2_beta2",
            "kappa_f1", "kappa_f2", "kappa_fy", "kappa_g1", "kappa_g2", "kappa_gy",
            "Kf_11", "Kf_12", "Kf_13", "Kf_22", "Kf_23", "Kf_33",
            "Kg_11", "Kg_12", "Kg_13", "Kg_22", "Kg_23", "Kg_33",
            "has_thin_cap", "theta", "floor", "ybar",
            "x1_star", "x2_star", "y_star", "lambda_star", "binding",
            "foc_norm", "objective", "iterations", "boundary", "cert_pass",
            "M11", "M22", "M33", "detH", "Mbar22", "Mbar33", "detHbar", "Mbar14",
            "M12", "M13", "M23",
            "C1p", "C2p", "B1p", "B2p",
            "cost_plus1", "cost_plus2", "resale_price1", "resale_price2", "cost_of_funds",
        };
        for (const char* w : {"t1", "t2"}) {
            const std::string p = std::string("wrt_") + w + "_";
            for (const char* f :
                 {"case", "x1T", "x2T", "yT", "sum_xT", "lambdaT", "lambdaT_binding_form", "z_plus",
                  "lambda1", "mu1", "mu2", "mu_r", "mubar1", "mubar2", "mubar_r", "phi_x",
                  "phi_y", "phi_lambda", "interior_value", "mu_same_sign", "monotone_ok",
                  "phi_y_defined", "dominance", "dominance_regime_ok", "system_residual",
                  "fd_x1T", "fd_x2T", "fd_yT", "fd_max_rel_err", "branch_crossing",
                  "shadow_sign_ok", "shadow_well_defined", "audit_pass", "audit_applicable"})
                c.push_back(p + f);
        }
        c.push_back("accepted_total");
        c.push_back("rejected_total");
        c.push_back("audit_pass_total");
        c.push_back("audit_fail_total");
        return c;
    }();
    return cols;
}

inline void emit_csv(const std::vector<RunRecord>& records, std::ostream& os) {
    const auto& cols = record_columns();
    bool first = true;
    for (const auto& c : cols) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    os << '\n';
    for (const auto& rec : records) {
        first = true;
        for (const auto& c : cols) {
            if (!first) os << ',';
            first = false;
            auto it = rec.cells.find(c);
            if (it == rec.cells.end() || it->second.kind == Cell::Kind::empty) continue;
            if (it->second.kind == Cell::Kind::number)
                os << format_sig12(it->second.num);
            else
                os << it->second.str;
        }
        os << '\n';
    }
}

inline void emit_json(const std::vector<RunRecord>& records, std::ostream& os) {
    Json arr = Json::array();
    for (const auto& rec : records) {
        Json obj = Json::object();
        for (const auto& c : record_columns()) {
            auto it = rec.cells.find(c);
            if (it == rec.cells.end() || it->second.kind == Cell::Kind::empty) {
                obj[c] = nullptr;
            } else if (it->second.kind == Cell::Kind::number) {
                // canonicalised to 12 significant digits so both formats
                // carry the same value
                obj[c] = std::stod(format_sig12(it->second.num));
            } else {
                obj[c] = it->second.str;
            }
        }
        arr.push_back(std::move(obj));
    }
    os << arr.dump(1) << '\n';
}

inline void emit(const std::vector<RunRecord>& records, const std::string& format,
                 const std::string& path) {
    if (format != "csv" && format != "json")
        throw ValidationError("format", "csv or json required");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path);
    if (format == "csv")
        emit_csv(records, out);
    else
        emit_json(records, out);
    if (!out) throw IoError(path);
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct PipelineResult {
    std::string status = "ok"; // ok | rejected-regime | nonconverged | branch-crossing | error
    std::string reason;
    bool audits_all_pass = true;
    int audits_applicable = 0;
    int audits_failed = 0;
};

namespace detail {

inline void fill_scenario_cells(RunRecord& rec, const Scenario& sc) {
    rec.set("schema_version", std::string(kSchemaVersion));
    rec.set("t1", sc.taxes.t1);
    rec.set("t2", sc.taxes.t2);
    rec.set("T", sc.taxes.T());
    rec.set("p1", sc.p1);
    rec.set("p2", sc.p2);
    rec.set("r", sc.r);
    rec.set("s1", sc.s1);
    rec.set("s2", sc.s2);
    const auto& a1 = sc.primitives.aff1;
    const auto& a2 = sc.primitives.aff2;
    rec.set("rev1_a", a1.revenue.a());
    rec.set("rev1_b", a1.revenue.b());
    rec.set("cost1_c0", a1.cost.c0());
    rec.set("cost1_c1", a1.cost.c1());
    rec.set("cost1_c2", a1.cost.c2());
    rec.set("bank1_debt", a1.bank.baseline_debt());
    rec.set("bank1_beta1", a1.bank.beta1());
    rec.set("bank1_beta2", a1.bank.beta2());
    rec.set("rev2_a", a2.revenue.a());
    rec.set("rev2_b", a2.revenue.b());
    rec.set("cost2_c0", a2.cost.c0());
    rec.set("cost2_c1", a2.cost.c1());
    rec.set("cost2_c2", a2.cost.c2());
    rec.set("bank2_debt", a2.bank.baseline_debt());
    rec.set("bank2_beta1", a2.bank.beta1());
    rec.set("bank2_beta2", a2.bank.beta2());
    const auto& kf = sc.primitives.f;
    const auto& kg = sc.primitives.g;
    rec.set("kappa_f1", kf.kappa()[0]);
    rec.set("kappa_f2", kf.kappa()[1]);
    rec.set("kappa_fy", kf.kappa()[2]);
    rec.set("kappa_g1", kg.kappa()[0]);
    rec.set("kappa_g2", kg.kappa()[1]);
    rec.set("kappa_gy", kg.kappa()[2]);
    const char* ids[6] = {"11", "12", "13", "22", "23", "33"};
    const int ij[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
    for (int k = 0; k < 6; ++k) {
        rec.set(std::string("Kf_") + ids[k], kf.K()[ij[k][0]][ij[k][1]]);
        rec.set(std::string("Kg_") + ids[k], kg.K()[ij[k][0]][ij[k][1]]);
    }
    rec.set("has_thin_cap", sc.constrained());
    if (sc.constrained()) {
        rec.set("theta", sc.thin_cap->theta);
        rec.set("floor", sc.thin_cap->floor);
        rec.set("ybar", sc.ybar());
    }
}

inline void fill_equilibrium_cells(RunRecord& rec, const Equilibrium& eq, bool cert_pass) {
    rec.set("x1_star", eq.vars.x1);
    rec.set("x2_star", eq.vars.x2);
    rec.set("y_star", eq.vars.y);
    rec.set("lambda_star", static_cast<double>(eq.lambda_star));
    rec.set("binding", eq.binding);
    rec.set("foc_norm", eq.foc_norm);
    rec.set("objective", eq.objective);
    rec.set("iterations", static_cast<double>(eq.iterations));
    rec.set("boundary", eq.boundary());
    rec.set("cert_pass", cert_pass);
    const auto& m = eq.minor_set;
    rec.set("M11", m.M11);
    rec.set("M22", m.M22);
    rec.set("M33", m.M33);
    rec.set("detH", m.detH);
    rec.set("Mbar22", m.Mbar22);
    rec.set("Mbar33", m.Mbar33);
    rec.set("detHbar", m.detHbar);
    rec.set("Mbar14", m.Mbar14);
    rec.set("M12", m.M12);
    rec.set("M13", m.M13);
    rec.set("M23", m.M23);
}

inline void fill_statics_cells(RunRecord& rec, const std::string& prefix,
                               const StaticsReport& rep) {
    rec.set(prefix + "case",
            std::string(rep.kind == StaticsCase::constrained ? "constrained" : "unconstrained"));
    rec.set(prefix + "x1T", rep.x1T);
    rec.set(prefix + "x2T", rep.x2T);
    rec.set(prefix + "yT", rep.yT);
    rec.set(prefix + "sum_xT", rep.sum_xT);
    if (rep.kind == StaticsCase::constrained) {
        rec.set(prefix + "lambdaT", rep.lambdaT);
        rec.set(prefix + "z_plus", rep.z_plus);
        rec.set(prefix + "lambda1", rep.lambda1);
        rec.set(prefix + "phi_lambda", rep.phi_lambda);
    }
    rec.set(prefix + "mu1", rep.mu[0]);
    rec.set(prefix + "mu2", rep.mu[1]);
    rec.set(prefix + "mu_r", rep.mu[2]);
    rec.set(prefix + "mubar1", rep.mu_bar[0]);
    rec.set(prefix + "mubar2", rep.mu_bar[1]);
    rec.set(prefix + "mubar_r", rep.mu_bar[2]);
    if (!std::isnan(rep.phi_x)) rec.set(prefix + "phi_x", rep.phi_x);
    if (rep.phi_y_defined) rec.set(prefix + "phi_y", rep.phi_y);
    if (rep.interior_defined) rec.set(prefix + "interior_value", rep.interior_value);
    rec.set(prefix + "mu_same_sign", rep.mu_same_sign);
    rec.set(prefix + "monotone_ok", rep.monotone_ok);
    rec.set(prefix + "phi_y_defined", rep.phi_y_defined);
    rec.set(prefix + "dominance", std::string(dominance_name(rep.dominance)));
    rec.set(prefix + "dominance_regime_ok", rep.dominance_regime_ok);
    rec.set(prefix + "system_residual", rep.system_residual);
}

} // namespace detail

// Post-solve acceptance for the named regime: condition sandwiches are only
// checkable at the equilibrium, so generation is re-verified here.
inline std::pair<bool, std::string> premises_hold(RegimeFilter f, const Scenario& sc,
                                                  const Equilibrium& eq,
                                                  const StaticsReport& rep_t1,
                                                  const StaticsReport& rep_t2) {
    if (f == RegimeFilter::none) return {true, ""};
    if (eq.boundary()) return {false, "boundary"};
    auto sandwich12 = [&](const StaticsReport& rp) {
        return rp.p1 <= rp.Cp_c + kSignTol && rp.Cp_c <= rp.p2 + kSignTol;
    };
    auto sandwich21 = [&](const StaticsReport& rp) {
        return rp.p2 <= rp.Cp_c + kSignTol && rp.Cp_c <= rp.p1 + kSignTol;
    };
    const StaticsReport& rt1 = rep_t1;
    const StaticsReport& rt2 = rep_t2;
    if (!rt1.dominance_regime_ok || !rt2.dominance_regime_ok)
        return {false, "dominance-regime"};
    switch (f) {
        case RegimeFilter::P1:
            if (!sc.constrained()) return {false, "needs-thin-cap"};
            if (!(rt1.mu_same_sign && rt2.mu_same_sign)) return {false, "mixed-mu"};
            return {true, ""};
        case RegimeFilter::P2:
            if (!eq.binding) return {false, "not-binding"};
            if (!(sandwich12(rt1) && sandwich12(rt2))) return {false, "sandwich"};
            return {true, ""};
        case RegimeFilter::P3:
            if (!eq.binding) return {false, "not-binding"};
            if (!(sandwich21(rt1) && sandwich21(rt2))) return {false, "sandwich"};
            return {true, ""};
        case RegimeFilter::P4:
            if (!sc.constrained() || eq.binding) return {false, "not-slack"};
            if (!(sandwich12(rt1) && sandwich12(rt2))) return {false, "sandwich"};
            if (!(rt1.L1y + rt1.L2y >= -kSignTol)) return {false, "cross-sign"};
            if (!(rt1.mu_same_sign && rt2.mu_same_sign)) return {false, "mixed-mu"};
            return {true, ""};
        case RegimeFilter::P5:
            if (!sc.constrained() || eq.binding) return {false, "not-slack"};
            if (!(sandwich21(rt1) && sandwich21(rt2))) return {false, "sandwich"};
            if (!(rt1.L1y + rt1.L2y <= kSignTol)) return {false, "cross-sign"};
            if (!(rt1.mu_same_sign && rt2.mu_same_sign)) return {false, "mixed-mu"};
            return {true, ""};
        case RegimeFilter::U_a2_t2: {
            if (sc.constrained()) return {false, "needs-unconstrained"};
            if (!sandwich12(rt2)) return {false, "sandwich"};
            if (!(rt2.Bp_c <= sc.r + kSignTol)) return {false, "cost-of-funds"};
            if (!(rt2.phi_y_defined && rt2.phi_x >= -kSignTol && rt2.phi_y >= -kSignTol))
                return {false, "phi-sign"};
            return {true, ""};
        }
        case RegimeFilter::U_a2_t1: {
            if (sc.constrained()) return {false, "needs-unconstrained"};
            if (!sandwich12(rt1)) return {false, "sandwich"};
            if (!(sc.r <= rt1.Bp_c + kSignTol)) return {false, "cost-of-funds"};
            if (!(rt1.phi_y_defined && rt1.phi_x <= kSignTol && rt1.phi_y <= kSignTol))
                return {false, "phi-sign"};
            return {true, ""};
        }
        case RegimeFilter::U_a1_t1: {
            if (sc.constrained()) return {false, "needs-unconstrained"};
            if (!sandwich21(rt1)) return {false, "sandwich"};
            if (!(sc.r <= rt1.Bp_c + kSignTol)) return {false, "cost-of-funds"};
            if (!(rt1.phi_y_defined && rt1.phi_x >= -kSignTol && rt1.phi_y >= -kSignTol))
                return {false, "phi-sign"};
            return {true, ""};
        }
        case RegimeFilter::U_a1_t2: {
            if (sc.constrained()) return {false, "needs-unconstrained"};
            if (!sandwich21(rt2)) return {false, "sandwich"};
            if (!(rt2.Bp_c <= sc.r + kSignTol)) return {false, "cost-of-funds"};
            if (!(rt2.phi_y_defined && rt2.phi_x <= kSignTol && rt2.phi_y <= kSignTol))
                return {false, "phi-sign"};
            return {true, ""};
        }
        case RegimeFilter::neutral:
        case RegimeFilter::cross_sym: {
            if (!rt1.regime.prices_equal) return {false, "prices"};
            if (std::fabs(rt1.L11 - rt1.L22) > kSignTol) return {false, "asymmetric"};
            return {true, ""};
        }
        case RegimeFilter::shadow_binding: {
            if (!eq.binding) return {false, "not-binding"};
            return {true, ""};
        }
        case RegimeFilter::shadow_slack: {
            if (!sc.constrained() || eq.binding) return {false, "not-slack"};
            return {true, ""};
        }
        default: return {true, ""};
    }
}

// Full per-scenario pipeline: solve, certify, statics for both rates,
// finite-difference oracle, shadow verdicts and proposition audits.
inline PipelineResult run_pipeline(const Scenario& sc, RegimeFilter filter, RunRecord& rec,
                                   bool with_oracle = true) {
    PipelineResult out;
    detail::fill_scenario_cells(rec, sc);
    Equilibrium eq;
    try {
        eq = solve(sc);
    } catch (const NonConvergence& e) {
        out.status = "nonconverged";
        out.reason = e.what();
        return out;
    } catch (const Error& e) {
        out.status = "rejected-regime";
        out.reason = e.what();
        return out;
    }
    const CertificateReport cert = certify(eq, sc);
    detail::fill_equilibrium_cells(rec, eq, cert.pass);
    const auto alp = check_alp_conditions(sc, eq.vars);
    rec.set("C1p", alp.C1p);
    rec.set("C2p", alp.C2p);
    rec.set("B1p", alp.B1p);
    rec.set("B2p", alp.B2p);
    rec.set("cost_plus1", alp.cost_plus1);
    rec.set("cost_plus2", alp.cost_plus2);
    rec.set("resale_price1", alp.resale_price1);
    rec.set("resale_price2", alp.resale_price2);
    rec.set("cost_of_funds", alp.cost_of_funds);
    if (!cert.pass) {
        out.status = "rejected-regime";
        out.reason = "certificate";
        return out;
    }

    StaticsReport reps[2];
    try {
        for (int i = 0; i < 2; ++i) {
            const Wrt wrt = i == 0 ? Wrt::t1 : Wrt::t2;
            reps[i] = sc.constrained() ? statics_constrained(eq, sc, wrt)
                                       : statics_unconstrained(eq, sc, wrt);
        }
    } catch (const SingularSystem& e) {
        out.status = "rejected-regime";
        out.reason = e.what();
        return out;
    }

    const auto [ok, why] = premises_hold(filter, sc, eq, reps[0], reps[1]);
    if (!ok) {
        out.status = "rejected-regime";
        out.reason = why;
        return out;
    }

    for (int i = 0; i < 2; ++i) {
        const Wrt wrt = i == 0 ? Wrt::t1 : Wrt::t2;
        const std::string prefix = std::string("wrt_") + wrt_name(wrt) + "_";
        detail::fill_statics_cells(rec, prefix, reps[i]);

        if (sc.constrained()) {
            const ShadowVerdict sv = lambda_shadow_analysis(eq, sc, reps[i]);
            rec.set(prefix + "lambdaT_binding_form", sv.lambdaT_binding_form);
            rec.set(prefix + "shadow_sign_ok", sv.sign_consistent);
            rec.set(prefix + "shadow_well_defined", sv.well_defined);
        }

        const auto verdicts = audit_propositions(reps[i]);
        bool all = true;
        int applicable = 0;
        for (const auto& v : verdicts) {
            if (!v.applicable) continue;
            ++applicable;
            ++out.audits_applicable;
            if (!v.pass) {
                all = false;
                ++out.audits_failed;
            }
        }
        out.audits_all_pass = out.audits_all_pass && all;
        rec.set(prefix + "audit_pass", all);
        rec.set(prefix + "audit_applicable", static_cast<double>(applicable));

        if (with_oracle) {
            try {
                const OracleReport orep = fd_statics(sc, wrt);
                rec.set(prefix + "fd_x1T", orep.fd_x1T);
                rec.set(prefix + "fd_x2T", orep.fd_x2T);
                rec.set(prefix + "fd_yT", orep.fd_yT);
                rec.set(prefix + "branch_crossing", orep.branch_crossing);
                if (orep.comparable()) rec.set(prefix + "fd_max_rel_err", orep.max_rel_err);
                if (orep.branch_crossing) out.status = "branch-crossing";
            } catch (const Error& e) {
                // a perturbed re-solve can fail even when the base solve is
                // sound; record it without aborting the sweep
                out.reason = std::string("oracle: ") + e.what();
            }
        }
    }
    return out;
}

struct SweepResult {
    std::vector<RunRecord> records;
    int accepted = 0;
    int rejected = 0;
    int audit_pass = 0;
    int audit_fail = 0;
    bool any_terminal_error = false;
    bool any_audit_failure = false;
};

namespace detail {

inline void set_json_path(Json& j, const std::string& dotted, double value) {
    Json* cur = &j;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', pos);
        const std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

} // namespace detail

// Runs a sweep: deterministic for a given spec (seed included). Scenarios
// come either from the targeted generator (generator_mode) or from the
// base config with varied paths applied; premise filters are enforced by
// rejection with the configured oversampling cap. Records are ordered by
// scenario id; a summary record is appended.
inline SweepResult run_sweep(const SweepSpec& spec, bool with_oracle = true) {
    SweepResult res;
    Rng rng(spec.seed ^ 0xA5A5A5A5DEADBEEFull);

    // cartesian grid over the non-random varied parameters
    std::size_t grid_total = 1;
    for (const auto& p : spec.varied)
        if (!p.random) grid_total *= p.values.size();
    const bool has_random =
        spec.generator_mode ||
        std::any_of(spec.varied.begin(), spec.varied.end(), [](auto& p) { return p.random; });
    // target counts accepted scenarios; pure grid sweeps visit each point once
    const std::size_t target = spec.max_scenarios > 0
                                   ? static_cast<std::size_t>(spec.max_scenarios)
                                   : (has_random ? 0 : grid_total);
    const long attempt_cap = has_random ? static_cast<long>(std::max<std::size_t>(target, 1)) *
                                              spec.oversampling_cap
                                        : static_cast<long>(grid_total);

    long attempts = 0;
    std::size_t grid_index = 0;
    int id = 0;
    std::size_t accepted = 0;
    while (accepted < target && attempts < attempt_cap) {
        ++attempts;
        std::optional<Scenario> sc;
        if (spec.generator_mode) {
            sc = generate_scenario(spec.premise_filter, rng);
            if (!sc) {
                ++res.rejected; // infeasible draw, nothing to record
                continue;
            }
        } else {
            Json j = spec.base;
            std::size_t gi = grid_index % std::max<std::size_t>(grid_total, 1);
            for (const auto& p : spec.varied) {
                if (p.random) {
                    detail::set_json_path(j, p.path, rng.uniform(p.lo, p.hi));
                } else {
                    detail::set_json_path(j, p.path, p.values[gi % p.values.size()]);
                    gi /= p.values.size();
                }
            }
            ++grid_index;
            try {
                sc = scenario_from_json(j);
            } catch (const Error& e) {
                RunRecord rec;
                rec.set("scenario_id", static_cast<double>(id++));
                rec.set("premise_filter", std::string(regime_name(spec.premise_filter)));
                rec.set("status", std::string("rejected-regime"));
                rec.set("reason", std::string(e.what()));
                res.records.push_back(std::move(rec));
                ++res.rejected;
                continue;
            }
        }

        RunRecord rec;
        rec.set("scenario_id", static_cast<double>(id++));
        rec.set("premise_filter", std::string(regime_name(spec.premise_filter)));
        const PipelineResult pr = run_pipeline(*sc, spec.premise_filter, rec, with_oracle);
        rec.set("status", pr.status);
        if (!pr.reason.empty()) rec.set("reason", pr.reason);
        if (pr.status == "rejected-regime" || pr.status == "nonconverged") {
            ++res.rejected;
            if (pr.status == "nonconverged") res.any_terminal_error = true;
            res.records.push_back(std::move(rec));
            continue;
        }
        ++accepted;
        ++res.accepted;
        res.audit_pass += pr.audits_applicable - pr.audits_failed;
        res.audit_fail += pr.audits_failed;
        if (pr.audits_failed > 0) res.any_audit_failure = true;
        res.records.push_back(std::move(rec));
    }

    RunRecord summary;
    summary.set("schema_version", std::string(kSchemaVersion));
    summary.set("scenario_id", std::string("summary"));
    summary.set("status", std::string("summary"));
    summary.set("premise_filter", std::string(regime_name(spec.premise_filter)));
    summary.set("accepted_total", static_cast<double>(res.accepted));
    summary.set("rejected_total", static_cast<double>(res.rejected));
    summary.set("audit_pass_total", static_cast<double>(res.audit_pass));
    summary.set("audit_fail_total", static_cast<double>(res.audit_fail));
    res.records.push_back(std::move(summary));
    return res;
}

} // namespace psm
