#pragma once

// Experiment drivers: the n-indexed counterexample family, regime-wise
// sweeps of C_lower / theorem_bound, and the finiteness dichotomy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "copson/conditions.hpp"
#include "copson/discrete_conditions.hpp"
#include "copson/discretizer.hpp"
#include "copson/json_io.hpp"
#include "copson/persistence.hpp"
#include "copson/variational.hpp"

namespace copson {

// ---------------------------------------------------------------------------
// Counterexample

/// u = 1, w_n = n on [0, 1/n], and v chosen so that the D-type upper integral
/// is finite away from 0 while A_6 grows without bound in n.
inline Problem counterexample_problem(double p, double q, double m, int n, GridSpec grid = {1e-8, 1e3, 8}) {
    if (!(p > 1.0) || !(0.0 < q && q < m && m < p))
        throw InvalidInput("counterexample needs 0 < q < m < p and p > 1");
    if (n < 1) throw InvalidInput("counterexample needs n >= 1");
    const double pc = p / (p - 1.0);
    Problem pb;
    pb.params = {p, q, m};
    pb.u = WeightExpr::constant(1.0);
    pb.v = WeightExpr({WeightTerm{1.0, p / m + p - 1.0, (p - q) / (pc * (q - 1.0)), 0.0, 0.0, 0.5},
                       WeightTerm{1.0, 0.0, 0.0, 1.0, 0.5, kInf}});
    pb.w = WeightExpr::constant(n, 0.0, 1.0 / n);
    pb.grid = grid;
    return pb;
}

struct CounterexampleRow {
    int n = 0;
    double A6 = 0.0;
    double c_lower = 0.0;
    double upper = 0.0;            // upper_bound_d over (0, inf)
    double upper_truncated = 0.0;  // the same integral over (t_min, inf)
    bool operator==(const CounterexampleRow&) const = default;
};

struct CounterexampleTable {
    std::vector<CounterexampleRow> rows;
    bool a6_nondecreasing = true;
    double a6_growth = 0.0;        // last / first
    bool upper_constant = true;    // within 1e-10 relative
    bool c_below_upper = true;
    bool upper_certified_divergent = false;
    std::string upper_reason;
};

inline CounterexampleTable run_counterexample(double p, double q, double m, const std::vector<int>& n_list,
                                              GridSpec grid = {1e-8, 1e3, 8}, Budget budget = {}) {
    CounterexampleTable tab;
    for (int n : n_list) {
        const auto pb = counterexample_problem(p, q, m, n, grid);
        CounterexampleRow r;
        r.n = n;
        r.A6 = eval_condition(pb, "A_6").value;
        r.c_lower = estimate_C(pb, budget).lower_bound;
        const auto ub = upper_bound_d(pb);
        r.upper = ub.value;
        r.upper_truncated = ub.truncated;
        tab.upper_certified_divergent = ub.certified_divergent;
        tab.upper_reason = ub.reason;
        tab.rows.push_back(r);
    }
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        const auto& r = tab.rows[i];
        if (!(r.c_lower <= r.upper)) tab.c_below_upper = false;
        if (i == 0) continue;
        const auto& a = tab.rows[i - 1];
        if (r.n >= a.n && r.A6 < a.A6 * (1.0 - 1e-9)) tab.a6_nondecreasing = false;
        auto same = [](double x, double y) {
            if (std::isinf(x) || std::isinf(y)) return x == y;
            return std::abs(x - y) <= 1e-10 * std::max(std::abs(x), std::abs(y));
        };
        if (!same(r.upper, tab.rows[0].upper) || !same(r.upper_truncated, tab.rows[0].upper_truncated))
            tab.upper_constant = false;
    }
    if (!tab.rows.empty()) tab.a6_growth = xdiv(tab.rows.back().A6, tab.rows.front().A6);
    return tab;
}

inline Json to_json(const CounterexampleTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"n", r.n},
                        {"A_6", num(r.A6)},
                        {"c_lower", num(r.c_lower)},
                        {"upper_bound_d", num(r.upper)},
                        {"upper_bound_d_truncated", num(r.upper_truncated)}});
    return {{"rows", rows},
            {"a6_nondecreasing", t.a6_nondecreasing},
            {"a6_growth", num(t.a6_growth)},
            {"upper_constant", t.upper_constant},
            {"c_below_upper", t.c_below_upper},
            {"upper_certified_divergent", t.upper_certified_divergent},
            {"upper_reason", t.upper_reason}};
}

inline CsvTable to_csv(const CounterexampleTable& t) {
    CsvTable c;
    c.header = {"n", "A_6", "c_lower", "upper_bound_d", "upper_bound_d_truncated"};
    for (const auto& r : t.rows)
        c.rows.push_back({std::to_string(r.n), format_double(r.A6), format_double(r.c_lower), format_double(r.upper),
                          format_double(r.upper_truncated)});
    return c;
}

// ---------------------------------------------------------------------------
// Equivalence sweep

struct SweepConfig {
    RegimeLabel family = RegimeLabel::a;
    int count = 20;
    std::uint64_t seed = 0;
    GridSpec grid{1e-4, 1e4, 8};
    Budget budget{};
    bool refine = false;  // rerun at doubled points_per_decade
    int threads = 1;
};

struct SweepRecord {
    int index = 0;
    std::string digest;
    std::string regime;
    double p = 0.0, q = 0.0, m = 0.0;
    double theorem_bound = 0.0;
    double c_lower = 0.0;
    double ratio = 0.0;             // c_lower / theorem_bound
    double d_bound = 0.0;           // discrete conditions on the built sequence
    double d_over_a = 0.0;
    double refine_delta_c = 0.0;    // relative change under refinement
    double refine_delta_bound = 0.0;
    std::string error;              // empty when the row is clean

    bool operator==(const SweepRecord&) const = default;
};

struct RegimeEnvelope {
    std::string regime;
    int rows = 0;
    int flagged = 0;
    double ratio_min = kInf, ratio_max = 0.0;
    double d_over_a_min = kInf, d_over_a_max = 0.0;
    double width() const { return rows > flagged && ratio_min > 0.0 ? ratio_max / ratio_min : kInf; }
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<RegimeEnvelope> envelopes;
};

namespace detail {

/// Uniform [0, 1) from the raw 64-bit stream, so results do not depend on
/// the standard library's distribution implementation.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Parameters sample_params(RegimeLabel family, std::mt19937_64& rng) {
    const double p = 1.5 + 1.5 * unit(rng);
    const double above1 = p + 1.5 * unit(rng);
    const double above2 = p + 1.5 * unit(rng);
    const double below1 = 0.4 + (p - 0.6) * unit(rng);
    const double below2 = 0.4 + (p - 0.6) * unit(rng);
    switch (family) {
        case RegimeLabel::a: return {p, above1, above2};
        case RegimeLabel::b: return {p, below1, above2};
        case RegimeLabel::c: return {p, above1, below2};
        case RegimeLabel::d: return {p, below1, below2};
        default: throw InvalidInput("sweep families are the regimes a, b, c, d");
    }
}

inline Problem sample_problem(RegimeLabel family, std::mt19937_64& rng, const GridSpec& grid) {
    Problem pb;
    pb.params = sample_params(family, rng);
    pb.u = WeightExpr::power(0.5 + unit(rng), -0.5 + unit(rng));
    pb.w = WeightExpr::power(0.5 + unit(rng), -0.5 + unit(rng));
    const double c = 0.5 + unit(rng), b = -0.5 + unit(rng), r = 0.5 + 1.5 * unit(rng);
    pb.v = WeightExpr({WeightTerm{c, b, 0.0, r, 0.0, kInf}});
    pb.grid = grid;
    return pb;
}

inline double rel_delta(double a, double b) {
    if (a == b) return 0.0;
    if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
    return std::abs(b - a) / std::max(std::abs(a), std::abs(b));
}

inline double d_bound(const Problem& pb) {
    const auto seq = build_sequence(pb);
    double s = 0.0;
    for (const auto& n : discrete_conditions_for(pb.params)) s += eval_D(pb, seq, n).value;
    return s;
}

inline SweepRecord evaluate_row(int index, const Problem& pb, const SweepConfig& cfg) {
    SweepRecord r;
    r.index = index;
    r.digest = digest(to_json(pb));
    r.p = pb.params.p;
    r.q = pb.params.q;
    r.m = pb.params.m;
    try {
        r.regime = to_string(classify_regime(pb.params).label);
        r.theorem_bound = theorem_bound(pb).value;
        r.c_lower = estimate_C(pb, cfg.budget).lower_bound;
        r.d_bound = d_bound(pb);
        r.d_over_a = xdiv(r.d_bound, r.theorem_bound);
        if (cfg.refine) {
            auto fine = pb;
            fine.grid.points_per_decade *= 2;
            r.refine_delta_c = rel_delta(r.c_lower, estimate_C(fine, cfg.budget).lower_bound);
            r.refine_delta_bound = rel_delta(r.theorem_bound, theorem_bound(fine).value);
        }
        if (std::isfinite(r.theorem_bound) && std::isfinite(r.c_lower) && r.theorem_bound > 0.0)
            r.ratio = r.c_lower / r.theorem_bound;
        else {
            r.ratio = kInf;
            r.error = "nonfinite";
        }
    } catch (const std::exception& e) {
        r.ratio = kInf;
        r.error = e.what();
    }
    return r;
}

}  // namespace detail

/// Samples `count` problems of the family and evaluates each row. Rows are
/// sampled up front so the output does not depend on `threads`.
inline SweepResult run_equivalence_sweep(const SweepConfig& cfg) {
    if (cfg.count < 0) throw InvalidInput("sweep count must be >= 0");
    cfg.grid.validate();
    std::mt19937_64 rng(cfg.seed);
    std::vector<Problem> problems;
    for (int i = 0; i < cfg.count; ++i) problems.push_back(detail::sample_problem(cfg.family, rng, cfg.grid));

    SweepResult res;
    res.records.resize(problems.size());
    const int nt = std::clamp(cfg.threads, 1, std::max(1, cfg.count));
    if (nt == 1) {
        for (std::size_t i = 0; i < problems.size(); ++i)
            res.records[i] = detail::evaluate_row(static_cast<int>(i), problems[i], cfg);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < problems.size(); i += nt)
                    res.records[i] = detail::evaluate_row(static_cast<int>(i), problems[i], cfg);
            });
        for (auto& th : pool) th.join();
    }

    std::map<std::string, RegimeEnvelope> env;
    for (const auto& r : res.records) {
        auto& e = env[r.regime];
        e.regime = r.regime;
        ++e.rows;
        if (!r.error.empty()) {
            ++e.flagged;
            continue;
        }
        e.ratio_min = std::min(e.ratio_min, r.ratio);
        e.ratio_max = std::max(e.ratio_max, r.ratio);
        e.d_over_a_min = std::min(e.d_over_a_min, r.d_over_a);
        e.d_over_a_max = std::max(e.d_over_a_max, r.d_over_a);
    }
    for (auto& [k, e] : env) res.envelopes.push_back(e);
    return res;
}

inline CsvTable to_csv(const std::vector<SweepRecord>& recs) {
    CsvTable c;
    c.header = {"index", "digest", "regime", "p", "q", "m", "theorem_bound", "c_lower", "ratio", "d_bound",
                "d_over_a", "refine_delta_c", "refine_delta_bound", "error"};
    for (const auto& r : recs)
        c.rows.push_back({std::to_string(r.index), r.digest, r.regime, format_double(r.p), format_double(r.q),
                          format_double(r.m), format_double(r.theorem_bound), format_double(r.c_lower),
                          format_double(r.ratio), format_double(r.d_bound), format_double(r.d_over_a),
                          format_double(r.refine_delta_c), format_double(r.refine_delta_bound), r.error});
    return c;
}

inline Json to_json(const RegimeEnvelope& e) {
    return {{"regime", e.regime},
            {"rows", e.rows},
            {"flagged", e.flagged},
            {"ratio_min", num(e.ratio_min)},
            {"ratio_max", num(e.ratio_max)},
            {"width", num(e.width())},
            {"d_over_a_min", num(e.d_over_a_min)},
            {"d_over_a_max", num(e.d_over_a_max)}};
}

inline Json to_json(const SweepResult& s) {
    Json recs = Json::array(), env = Json::array();
    for (const auto& r : s.records)
        recs.push_back({{"index", r.index},
                        {"digest", r.digest},
                        {"regime", r.regime},
                        {"p", num(r.p)},
                        {"q", num(r.q)},
                        {"m", num(r.m)},
                        {"theorem_bound", num(r.theorem_bound)},
                        {"c_lower", num(r.c_lower)},
                        {"ratio", num(r.ratio)},
                        {"d_bound", num(r.d_bound)},
                        {"d_over_a", num(r.d_over_a)},
                        {"refine_delta_c", num(r.refine_delta_c)},
                        {"refine_delta_bound", num(r.refine_delta_bound)},
                        {"error", r.error}});
    for (const auto& e : s.envelopes) env.push_back(to_json(e));
    return {{"records", recs}, {"envelopes", env}};
}

// ---------------------------------------------------------------------------
// Finiteness dichotomy

enum class Finiteness { Finite, Infinite, Unknown };

inline const char* to_string(Finiteness f) {
    switch (f) {
        case Finiteness::Finite: return "finite";
        case Finiteness::Infinite: return "infinite";
        case Finiteness::Unknown: return "unknown";
    }
    return "?";
}

namespace detail {

/// The single active term covering (0, inf), if the weight is of that form.
inline std::optional<WeightTerm> single_term(const WeightExpr& w) {
    std::optional<WeightTerm> out;
    for (const auto& t : w.terms()) {
        if (!t.active()) continue;
        if (out || t.lo > 0.0 || std::isfinite(t.hi)) return std::nullopt;
        out = t;
    }
    return out;
}

/// Finiteness of A_1 = sup_t phi(t) sigma(t)^(1/p') from dominant exponents,
/// for single-term weights u = t^a, w = t^b and v = t^c e^(rt).
inline Finiteness symbolic_A1(const Problem& pb) {
    const double p = pb.params.p, q = pb.params.q, m = pb.params.m;
    if (!(p > 1.0)) return Finiteness::Unknown;
    const auto u = single_term(pb.u), w = single_term(pb.w), v = single_term(pb.v);
    if (!u || !w || !v) return Finiteness::Unknown;
    if (u->has_log() || w->has_log() || v->has_log() || u->exp_rate != 0.0 || w->exp_rate != 0.0)
        return Finiteness::Unknown;
    if (!(u->power > -1.0) || !(w->power > -1.0)) return Finiteness::Unknown;
    const double phi_exp = (u->power + 1.0) / m + (w->power + 1.0) / q;  // at 0 and at inf
    const double pc = p / (p - 1.0);
    const double e = -v->power / (p - 1.0);  // density v^(1-p') ~ t^e e^(-r t/(p-1))
    const double r = v->exp_rate;
    // At infinity.
    if (r < 0.0) return Finiteness::Infinite;
    if (r == 0.0) {
        if (e >= -1.0) return Finiteness::Infinite;  // sigma = inf
        if (phi_exp + (e + 1.0) / pc > 0.0) return Finiteness::Infinite;
    }
    // At zero; sigma ~ t^(e+1) when e < -1, a log when e = -1, bounded otherwise.
    if (e < -1.0 && phi_exp + (e + 1.0) / pc < 0.0) return Finiteness::Infinite;
    return Finiteness::Finite;
}

}  // namespace detail

/// Expected finiteness of C: finite only where A_1 alone is the criterion
/// (regime a); A_1 = inf forces C = inf in every regime.
inline Finiteness expected_finiteness(const Problem& pb) {
    const auto a1 = detail::symbolic_A1(pb);
    if (a1 == Finiteness::Infinite) return Finiteness::Infinite;
    if (a1 == Finiteness::Finite && classify_regime(pb.params).label == RegimeLabel::a) return Finiteness::Finite;
    return Finiteness::Unknown;
}

struct DichotomyCase {
    std::string name;
    Problem problem;  // grid.points_per_decade is kept, the domain is replaced
};

enum class DichotomyVerdict { Pass, Fail, Inconclusive };

inline const char* to_string(DichotomyVerdict v) {
    switch (v) {
        case DichotomyVerdict::Pass: return "pass";
        case DichotomyVerdict::Fail: return "fail";
        case DichotomyVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct DichotomyResult {
    std::string name;
    Finiteness expected = Finiteness::Unknown;
    std::vector<GridSpec> domains;
    std::vector<double> c_lower;
    std::vector<double> growth;  // successive ratios
    DichotomyVerdict verdict = DichotomyVerdict::Inconclusive;
    std::string note;
};

/// Domains [1e-1, 1e1], [1e-2, 1e2], [1e-4, 1e4], [1e-8, 1e8]: each doubles
/// the log-span of the previous one.
inline std::vector<GridSpec> dichotomy_domains(int ppd) {
    std::vector<GridSpec> out;
    for (double e : {1.0, 2.0, 4.0, 8.0}) out.push_back({std::pow(10.0, -e), std::pow(10.0, e), ppd});
    return out;
}

inline DichotomyResult classify_case(const DichotomyCase& c, const Budget& budget = {}) {
    DichotomyResult r;
    r.name = c.name;
    r.expected = expected_finiteness(c.problem);
    r.domains = dichotomy_domains(c.problem.grid.points_per_decade);
    for (const auto& g : r.domains) {
        auto pb = c.problem;
        pb.grid = g;
        r.c_lower.push_back(estimate_C(pb, budget).lower_bound);
    }
    for (std::size_t i = 1; i < r.c_lower.size(); ++i) {
        const double a = r.c_lower[i - 1], b = r.c_lower[i];
        r.growth.push_back(std::isinf(b) ? kInf : xdiv(b, a));
    }
    const bool all_double = std::all_of(r.growth.begin(), r.growth.end(), [](double g) { return g >= 2.0; });
    switch (r.expected) {
        case Finiteness::Finite: {
            const double last = r.growth.back();
            if (std::isfinite(r.c_lower.back()) && std::abs(last - 1.0) < 0.05) r.verdict = DichotomyVerdict::Pass;
            else r.verdict = DichotomyVerdict::Fail;
            if (all_double) r.note = "expected finite but grows by >= 2 on every doubling";
            break;
        }
        case Finiteness::Infinite: {
            if (all_double) {
                r.verdict = DichotomyVerdict::Pass;
            } else if (std::all_of(r.growth.begin(), r.growth.end(), [](double g) { return g > 1.05; })) {
                r.verdict = DichotomyVerdict::Inconclusive;
                r.note = "growth between 1.05 and 2 on some doubling";
            } else {
                r.verdict = DichotomyVerdict::Fail;
            }
            break;
        }
        case Finiteness::Unknown:
            r.verdict = DichotomyVerdict::Inconclusive;
            r.note = "no symbolic finiteness decision for this case";
            break;
    }
    return r;
}

inline std::vector<DichotomyResult> finiteness_dichotomy(const std::vector<DichotomyCase>& cases,
                                                         const Budget& budget = {}) {
    std::vector<DichotomyResult> out;
    for (const auto& c : cases) out.push_back(classify_case(c, budget));
    return out;
}

inline Json to_json(const DichotomyResult& r) {
    Json c = Json::array(), g = Json::array(), d = Json::array();
    for (double x : r.c_lower) c.push_back(num(x));
    for (double x : r.growth) g.push_back(num(x));
    for (const auto& x : r.domains) d.push_back(to_json(x));
    return {{"name", r.name},       {"expected", to_string(r.expected)}, {"domains", d}, {"c_lower", c},
            {"growth", g},          {"verdict", to_string(r.verdict)},   {"note", r.note}};
}

/// Six cases with finite A_1 in regime a and six with A_1 = inf.
inline std::vector<DichotomyCase> default_dichotomy_cases() {
    auto base = [](double p, double q, double m) {
        Problem pb;
        pb.params = {p, q, m};
        pb.u = WeightExpr::constant(1.0);
        pb.w = WeightExpr::constant(1.0);
        pb.v = WeightExpr::exponential(1.0, 1.0);
        pb.grid.points_per_decade = 8;
        return pb;
    };
    std::vector<DichotomyCase> cs;
    auto add = [&](std::string name, Problem pb) { cs.push_back({std::move(name), std::move(pb)}); };
    {
        add("v=e^t", base(2, 2, 2));
        auto pb = base(2, 2, 2);
        pb.v = WeightExpr::exponential(1.0, 2.0);
        add("v=e^2t", pb);
        pb = base(2, 2, 2);
        pb.u = WeightExpr::power(1.0, 0.5);
        add("u=t^0.5,v=e^t", pb);
        pb = base(2, 2, 2);
        pb.w = WeightExpr::power(1.0, 1.0);
        add("w=t,v=e^t", pb);
        pb = base(2, 2, 2);
        pb.v = WeightExpr({WeightTerm{1.0, 1.0, 0.0, 1.0, 0.0, kInf}});
        add("v=t*e^t", pb);
        add("p=2,q=3,m=2,v=e^t", base(2, 3, 2));
    }
    {
        auto pb = base(2, 2, 2);
        pb.v = WeightExpr::constant(1.0);
        add("v=1", pb);
        pb.v = WeightExpr::power(1.0, 1.0);
        add("v=t", pb);
        pb.v = WeightExpr::power(1.0, 4.0);
        add("v=t^4", pb);
        pb.v = WeightExpr::power(1.0, 2.0);
        add("v=t^2", pb);
        pb.v = WeightExpr::exponential(1.0, -1.0);
        add("v=e^-t", pb);
        pb.w = WeightExpr::power(1.0, 2.0);
        pb.v = WeightExpr::power(1.0, 3.0);
        add("w=t^2,v=t^3", pb);
    }
    return cs;
}

}  // namespace copson
