#pragma once

// Command-line front end. Exit codes: 0 success, 2 invalid input, 3
// numerical failure. Reports are written as canonical JSON envelopes;
// experiment tables as CSV with a JSON mirror next to them.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copson/conditions.hpp"
#include "copson/discrete_conditions.hpp"
#include "copson/discretizer.hpp"
#include "copson/experiments.hpp"
#include "copson/json_io.hpp"
#include "copson/persistence.hpp"
#include "copson/variational.hpp"

namespace copson::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumerical = 3;

struct RunConfig {
    std::string subcommand;
    std::string input;
    std::string output;
    std::optional<double> grid_tmin, grid_tmax, tol;
    std::optional<int> ppd;
    int budget = Budget{}.seeds;
    int iterations = Budget{}.iterations;
    std::uint64_t seed = 0;
    bool refine = false;
    // sweep
    std::string family = "a";
    int count = 20;
    int threads = 1;
    // counterexample
    double p = 2.0, q = 0.5, m = 0.75;
    std::vector<int> n_list{1, 10, 100, 1000};

    void validate() const {
        if (tol && !(*tol >= 1e-12 && *tol <= 1e-2)) throw InvalidInput("--tol must lie in [1e-12, 1e-2]");
        if (ppd && (*ppd < 1 || *ppd > 1000)) throw InvalidInput("--ppd must lie in [1, 1000]");
        if (grid_tmin && !(*grid_tmin > 0.0)) throw InvalidInput("--grid-tmin must be positive");
        if (grid_tmax && !std::isfinite(*grid_tmax)) throw InvalidInput("--grid-tmax must be finite");
        if (budget < 1) throw InvalidInput("--budget must be >= 1");
        if (iterations < 0) throw InvalidInput("--iterations must be >= 0");
        if (count < 0) throw InvalidInput("--count must be >= 0");
        if (threads < 1) throw InvalidInput("--threads must be >= 1");
    }

    Json to_json() const {
        Json j{{"subcommand", subcommand}, {"budget", budget}, {"iterations", iterations},
               {"seed", seed},             {"refine", refine}};
        if (grid_tmin) j["grid_tmin"] = num(*grid_tmin);
        if (grid_tmax) j["grid_tmax"] = num(*grid_tmax);
        if (ppd) j["ppd"] = *ppd;
        if (tol) j["tol"] = num(*tol);
        if (subcommand == "sweep") {
            j["family"] = family;
            j["count"] = count;
        }
        if (subcommand == "counterexample") {
            j["params"] = {{"p", num(p)}, {"q", num(q)}, {"m", num(m)}};
            j["n_list"] = n_list;
        }
        return j;
    }

    GridSpec apply(GridSpec g) const {
        if (grid_tmin) g.t_min = *grid_tmin;
        if (grid_tmax) g.t_max = *grid_tmax;
        if (ppd) g.points_per_decade = *ppd;
        g.validate();
        return g;
    }

    Budget budget_spec() const { return {budget, iterations}; }
};

namespace detail {

inline Problem load_problem(const RunConfig& cfg) {
    if (cfg.input.empty()) throw InvalidInput("--input is required");
    if (!std::filesystem::exists(cfg.input)) throw InvalidInput("input file not found: " + cfg.input);
    Problem pb = problem_from_json(parse_json_text(read_text(cfg.input)));
    pb.grid = cfg.apply(pb.grid);
    if (cfg.tol) pb.tol = *cfg.tol;
    pb.validate();
    return pb;
}

inline void emit_report(const RunConfig& cfg, Json config, Json payload, std::ostream& out) {
    const auto e = make_envelope(config, std::move(payload));
    if (cfg.output.empty()) out << canonical_dump(to_json(e)) << "\n";
    else write_report(e, cfg.output);
}

/// CSV to --output (or stdout) and the JSON mirror beside it.
inline void emit_table(const RunConfig& cfg, const CsvTable& table, Json config, Json payload, std::ostream& out) {
    if (cfg.output.empty()) {
        out << table.str();
        return;
    }
    write_csv(table, cfg.output);
    auto mirror = std::filesystem::path(cfg.output).replace_extension(".json");
    if (mirror == std::filesystem::path(cfg.output)) mirror += ".json";
    write_report(make_envelope(config, std::move(payload)), mirror);
}

inline Json config_with_problem(const RunConfig& cfg, const Problem& pb) {
    Json c = cfg.to_json();
    c["problem"] = to_json(pb);
    return c;
}

inline double rel_change(double a, double b) { return copson::detail::rel_delta(a, b); }

}  // namespace detail

inline int cmd_check(const RunConfig& cfg, std::ostream& out) {
    const Problem pb = detail::load_problem(cfg);
    const auto reg = classify_regime(pb.params);
    ConditionEvaluator ev(pb);
    Json conds = Json::array();
    static const char* names[] = {"A_1", "A_2", "A_3", "A_4", "A_4*", "A_5", "A_5*", "A_6",
                                  "At_1", "At_2", "At_3", "At_4", "At_5"};
    for (const char* n : names) {
        if (!ConditionEvaluator::applicable(pb.params, n)) continue;
        auto cv = ev.eval(n);
        cv.truncation_delta = truncation_sensitivity(pb, n, cv.value);
        conds.push_back(to_json(cv));
    }
    Json regime_conds = reg.conditions;
    Json payload{{"problem", to_json(pb)},
                 {"regime", {{"label", to_string(reg.label)}, {"conditions", regime_conds}}},
                 {"conditions", conds},
                 {"theorem_bound", to_json(theorem_bound(pb))},
                 {"admissibility", to_json(check_admissible(pb))}};
    if (reg.starred) payload["regime"]["starred"] = *reg.starred;
    if (cfg.refine) {
        auto fine = pb;
        fine.grid.points_per_decade *= 2;
        payload["refine_delta"] = num(detail::rel_change(theorem_bound(pb).value, theorem_bound(fine).value));
    }
    detail::emit_report(cfg, detail::config_with_problem(cfg, pb), payload, out);
    return kExitOk;
}

inline int cmd_discretize(const RunConfig& cfg, std::ostream& out) {
    const Problem pb = detail::load_problem(cfg);
    const auto seq = build_sequence(pb);
    Json payload{{"problem", to_json(pb)},
                 {"admissibility", to_json(check_admissible(pb))},
                 {"sequence", to_json(seq)},
                 {"verification", to_json(verify_sequence(pb, seq))}};
    if (pb.params.p > 1.0) {
        Json d = Json::array();
        for (const auto& n : discrete_conditions_for(pb.params)) d.push_back(to_json(eval_D(pb, seq, n)));
        payload["discrete_conditions"] = d;
    }
    if (cfg.refine) {
        auto fine = pb;
        fine.grid.points_per_decade *= 2;
        payload["refine_same_sequence"] = build_sequence(fine) == seq;
    }
    detail::emit_report(cfg, detail::config_with_problem(cfg, pb), payload, out);
    return kExitOk;
}

inline int cmd_estimate_c(const RunConfig& cfg, std::ostream& out) {
    const Problem pb = detail::load_problem(cfg);
    const auto est = estimate_C(pb, cfg.budget_spec());
    const auto tb = theorem_bound(pb);
    Json payload{{"problem", to_json(pb)},
                 {"estimate", to_json(est)},
                 {"theorem_bound", num(tb.value)},
                 {"ratio", num(std::isfinite(tb.value) && tb.value > 0.0 ? est.lower_bound / tb.value : kInf)}};
    if (pb.params.p > 1.0 && pb.params.m < pb.params.p) payload["upper_bound_d"] = to_json(upper_bound_d(pb));
    if (cfg.refine) {
        auto fine = pb;
        fine.grid.points_per_decade *= 2;
        payload["refine_delta"] = num(detail::rel_change(est.lower_bound, estimate_C(fine, cfg.budget_spec()).lower_bound));
    }
    detail::emit_report(cfg, detail::config_with_problem(cfg, pb), payload, out);
    return kExitOk;
}

inline RegimeLabel parse_family(const std::string& s) {
    if (s == "a") return RegimeLabel::a;
    if (s == "b") return RegimeLabel::b;
    if (s == "c") return RegimeLabel::c;
    if (s == "d") return RegimeLabel::d;
    throw InvalidInput("--family must be one of a, b, c, d");
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    SweepConfig sc;
    sc.family = parse_family(cfg.family);
    sc.count = cfg.count;
    sc.seed = cfg.seed;
    sc.grid = cfg.apply(sc.grid);
    sc.budget = cfg.budget_spec();
    sc.refine = cfg.refine;
    sc.threads = cfg.threads;
    const auto res = run_equivalence_sweep(sc);
    detail::emit_table(cfg, to_csv(res.records), cfg.to_json(), to_json(res), out);
    return kExitOk;
}

inline int cmd_counterexample(const RunConfig& cfg, std::ostream& out) {
    const auto tab = run_counterexample(cfg.p, cfg.q, cfg.m, cfg.n_list, cfg.apply({1e-8, 1e3, 8}), cfg.budget_spec());
    detail::emit_table(cfg, to_csv(tab), cfg.to_json(), to_json(tab), out);
    return kExitOk;
}

/// Runs `body` and maps its exceptions to exit codes.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const IncompatibleSchema& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << " (partial " << e.partial() << ", error " << e.abs_error()
            << ")\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

/// Parses argv and dispatches; all diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Iterated Copson inequality: conditions, discretization and constant estimates", "copson_cli"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("--input", cfg.input, "problem JSON file");
        if (needs_input) in->required();
        sub->add_option("--output", cfg.output, "output file (stdout when omitted)");
        sub->add_option("--grid-tmin", cfg.grid_tmin, "grid lower end");
        sub->add_option("--grid-tmax", cfg.grid_tmax, "grid upper end");
        sub->add_option("--ppd", cfg.ppd, "grid points per decade");
        sub->add_option("--tol", cfg.tol, "relative quadrature tolerance in [1e-12, 1e-2]");
        sub->add_option("--budget", cfg.budget, "seeds receiving ascent");
        sub->add_option("--iterations", cfg.iterations, "ascent steps per seed");
        sub->add_option("--seed", cfg.seed, "random seed (default 0)");
        sub->add_flag("--refine", cfg.refine, "rerun at doubled resolution and report deltas");
    };
    common(app.add_subcommand("check", "evaluate the regime's conditions"), true);
    common(app.add_subcommand("discretize", "build and verify the discretizing sequence"), true);
    common(app.add_subcommand("estimate-c", "lower bound for the optimal constant"), true);
    auto* sweep = app.add_subcommand("sweep", "regime-wise equivalence sweep (CSV)");
    common(sweep, false);
    sweep->add_option("--family", cfg.family, "regime family a, b, c or d");
    sweep->add_option("--count", cfg.count, "number of sampled problems");
    sweep->add_option("--threads", cfg.threads, "worker threads");
    auto* cex = app.add_subcommand("counterexample", "n-indexed counterexample table (CSV)");
    common(cex, false);
    cex->add_option("--p", cfg.p);
    cex->add_option("--q", cfg.q);
    cex->add_option("--m", cfg.m);
    cex->add_option("--n", cfg.n_list, "values of n")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    return guarded(
        [&] {
            cfg.validate();
            if (cfg.subcommand == "check") return cmd_check(cfg, out);
            if (cfg.subcommand == "discretize") return cmd_discretize(cfg, out);
            if (cfg.subcommand == "estimate-c") return cmd_estimate_c(cfg, out);
            if (cfg.subcommand == "sweep") return cmd_sweep(cfg, out);
            return cmd_counterexample(cfg, out);
        },
        err);
}

}  // namespace copson::cli
