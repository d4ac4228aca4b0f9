#pragma once

// JSON model of problems and reports. Non-finite values are written as the
// string "inf"; canonical text has sorted keys and 17 significant digits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "copson/conditions.hpp"
#include "copson/core.hpp"
#include "copson/discrete_conditions.hpp"
#include "copson/discretizer.hpp"
#include "copson/errors.hpp"
#include "copson/variational.hpp"

namespace copson {

using Json = nlohmann::json;

inline Json num(double x) {
    if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
    if (std::isnan(x)) return Json("nan");
    return Json(x);
}

inline std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s(buf);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

namespace detail {

inline void canonical(const Json& j, std::string& out) {
    switch (j.type()) {
        case Json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {  // keys are kept sorted
                if (!first) out += ',';
                first = false;
                out += Json(it.key()).dump();
                out += ':';
                canonical(it.value(), out);
            }
            out += '}';
            break;
        }
        case Json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                canonical(j[i], out);
            }
            out += ']';
            break;
        }
        case Json::value_t::number_float: out += format_double(j.get<double>()); break;
        default: out += j.dump(); break;
    }
}

/// Reads a number or one of the strings "inf", "-inf".
inline double read_number(const Json& j, const std::string& ptr) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw InvalidInput(ptr + ": expected a number or \"inf\"");
}

inline double field(const Json& obj, const char* key, double dflt, const std::string& ptr) {
    if (!obj.contains(key)) return dflt;
    return read_number(obj.at(key), ptr + "/" + key);
}

}  // namespace detail

/// Canonical text: sorted keys, no whitespace, %.17g floats.
inline std::string canonical_dump(const Json& j) {
    std::string s;
    detail::canonical(j, s);
    return s;
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string digest(const Json& j) { return fnv1a_hex(canonical_dump(j)); }

// Weights and problems.

inline Json to_json(const WeightExpr& w) {
    Json arr = Json::array();
    for (const auto& t : w.terms())
        arr.push_back({{"coef", num(t.coef)},
                       {"power", num(t.power)},
                       {"log_power", num(t.log_power)},
                       {"exp_rate", num(t.exp_rate)},
                       {"lo", num(t.lo)},
                       {"hi", num(t.hi)}});
    return arr;
}

inline WeightExpr weight_from_json(const Json& j, const std::string& ptr) {
    if (!j.is_array()) throw InvalidInput(ptr + ": expected an array of terms");
    std::vector<WeightTerm> terms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = ptr + "/" + std::to_string(i);
        const Json& t = j[i];
        if (!t.is_object()) throw InvalidInput(p + ": expected an object");
        for (auto it = t.begin(); it != t.end(); ++it) {
            static const char* known[] = {"coef", "power", "log_power", "exp_rate", "lo", "hi"};
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
                std::end(known))
                throw InvalidInput(p + "/" + it.key() + ": unknown field");
        }
        WeightTerm w;
        w.coef = detail::field(t, "coef", 1.0, p);
        w.power = detail::field(t, "power", 0.0, p);
        w.log_power = detail::field(t, "log_power", 0.0, p);
        w.exp_rate = detail::field(t, "exp_rate", 0.0, p);
        w.lo = detail::field(t, "lo", 0.0, p);
        w.hi = detail::field(t, "hi", kInf, p);
        try {
            w.validate();
        } catch (const InvalidInput& e) {
            throw InvalidInput(p + ": " + e.what());
        }
        terms.push_back(w);
    }
    return WeightExpr(terms);
}

inline Json to_json(const GridSpec& g) {
    return {{"t_min", num(g.t_min)}, {"t_max", num(g.t_max)}, {"points_per_decade", g.points_per_decade}};
}

inline Json to_json(const Parameters& p) { return {{"p", num(p.p)}, {"q", num(p.q)}, {"m", num(p.m)}}; }

inline Json to_json(const Problem& pb) {
    return {{"params", to_json(pb.params)}, {"u", to_json(pb.u)},         {"v", to_json(pb.v)},
            {"w", to_json(pb.w)},           {"grid", to_json(pb.grid)},   {"anchor", num(pb.anchor)},
            {"tol", num(pb.tol)}};
}

inline Problem problem_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidInput("/: expected an object");
    for (const char* k : {"params", "u", "v", "w"})
        if (!j.contains(k)) throw InvalidInput(std::string("/") + k + ": missing");
    Problem pb;
    const Json& par = j.at("params");
    if (!par.is_object()) throw InvalidInput("/params: expected an object");
    for (const char* k : {"p", "q", "m"})
        if (!par.contains(k)) throw InvalidInput(std::string("/params/") + k + ": missing");
    pb.params.p = detail::field(par, "p", 0.0, "/params");
    pb.params.q = detail::field(par, "q", 0.0, "/params");
    pb.params.m = detail::field(par, "m", 0.0, "/params");
    try {
        pb.params.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string("/params: ") + e.what());
    }
    pb.u = weight_from_json(j.at("u"), "/u");
    pb.v = weight_from_json(j.at("v"), "/v");
    pb.w = weight_from_json(j.at("w"), "/w");
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        if (!g.is_object()) throw InvalidInput("/grid: expected an object");
        pb.grid.t_min = detail::field(g, "t_min", pb.grid.t_min, "/grid");
        pb.grid.t_max = detail::field(g, "t_max", pb.grid.t_max, "/grid");
        if (g.contains("points_per_decade")) {
            if (!g.at("points_per_decade").is_number_integer())
                throw InvalidInput("/grid/points_per_decade: expected an integer");
            pb.grid.points_per_decade = g.at("points_per_decade").get<int>();
        }
    }
    pb.anchor = detail::field(j, "anchor", pb.anchor, "");
    pb.tol = detail::field(j, "tol", pb.tol, "");
    try {
        pb.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string("/: ") + e.what());
    }
    return pb;
}

/// Parses text; syntax errors carry the byte offset.
inline Json parse_json_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput("JSON syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

// Reports.

inline Json to_json(const ConditionValue& c) {
    Json j{{"name", c.name}, {"value", num(c.value)}, {"abs_error", num(c.abs_error)}};
    j["argmax"] = c.argmax ? num(*c.argmax) : Json(nullptr);
    if (!c.diverging_layer.empty()) j["diverging_layer"] = c.diverging_layer;
    j["removable_singularity"] = c.removable_singularity;
    if (c.truncation_delta) j["truncation_delta"] = num(*c.truncation_delta);
    if (!c.breakdown.empty()) {
        Json b = Json::array();
        for (const auto& x : c.breakdown) b.push_back(to_json(x));
        j["breakdown"] = b;
    }
    if (c.starred_value) j["starred_value"] = num(*c.starred_value);
    if (c.starred_ratio) j["starred_ratio"] = num(*c.starred_ratio);
    if (c.starred_value) j["side_condition"] = c.side_condition;
    return j;
}

inline Json to_json(const AdmissibilityReport& a) {
    return {{"admissible", a.admissible},
            {"top", to_string(a.top)},
            {"phi_inf", num(a.phi_inf)},
            {"phi_min", num(a.phi_min)},
            {"phi_max", num(a.phi_max)},
            {"vanishes_at_zero", a.vanishes_at_zero},
            {"zero_probe_ratio", num(a.zero_probe_ratio)},
            {"reason", a.reason}};
}

inline Json to_json(const DiscretizingSequence& s) {
    Json t = Json::array(), l = Json::array();
    for (double x : s.t) t.push_back(num(x));
    for (auto x : s.labels) l.push_back(to_string(x));
    return {{"t", t},
            {"labels", l},
            {"top", to_string(s.top)},
            {"top_certified", s.top_certified},
            {"complete_low", s.complete_low},
            {"complete_high", s.complete_high},
            {"collapsed", s.collapsed},
            {"first_index", s.first_index}};
}

inline DiscretizingSequence sequence_from_json(const Json& j) {
    DiscretizingSequence s;
    for (std::size_t i = 0; i < j.at("t").size(); ++i) s.t.push_back(detail::read_number(j.at("t")[i], "/t"));
    for (const auto& x : j.at("labels")) s.labels.push_back(x.get<std::string>() == "K1" ? Label::K1 : Label::K2);
    const auto top = j.at("top").get<std::string>();
    s.top = top == "0" ? TopFlag::Zero : top == "inf" ? TopFlag::Infinite : TopFlag::Inconclusive;
    s.top_certified = j.at("top_certified").get<bool>();
    s.complete_low = j.at("complete_low").get<bool>();
    s.complete_high = j.at("complete_high").get<bool>();
    s.collapsed = j.at("collapsed").get<bool>();
    s.first_index = j.at("first_index").get<int>();
    return s;
}

inline Json to_json(const SequenceReport& r) {
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"vacuous", c.vacuous},
                          {"checked", c.checked},
                          {"worst", num(c.worst)},
                          {"worst_index", c.worst_index}});
    return {{"checks", checks},
            {"copson9_constant", num(r.copson9_constant)},
            {"copson9_checked", r.copson9_checked},
            {"strictly_increasing", r.strictly_increasing},
            {"all_pass", r.all_pass()}};
}

inline Json to_json(const DiscreteConditionValue& d) {
    Json c = Json::array();
    for (double x : d.contributions) c.push_back(num(x));
    return {{"name", d.name},
            {"value", num(d.value)},
            {"contributions", c},
            {"complete_low", d.complete_low},
            {"complete_high", d.complete_high},
            {"tail_truncated", d.tail_truncated}};
}

inline Json to_json(const TestFunction& h) {
    Json n = Json::array(), v = Json::array();
    for (double x : h.nodes) n.push_back(num(x));
    for (double x : h.values) v.push_back(num(x));
    return {{"nodes", n}, {"values", v}};
}

inline Json to_json(const CEstimate& c) {
    Json tr = Json::array();
    for (const auto& s : c.trace)
        tr.push_back({{"seed", s.seed}, {"initial", num(s.initial)}, {"final", num(s.final_ratio)}, {"iterations", s.iterations}});
    return {{"lower_bound", num(c.lower_bound)},
            {"best_h", to_json(c.best_h)},
            {"best_seed", c.best_seed},
            {"seeds_evaluated", c.seeds_evaluated},
            {"trace", tr},
            {"holder_tail_best", num(c.holder_tail_best)},
            {"zero_ratio", c.zero_ratio},
            {"ascent_monotone", c.ascent_monotone}};
}

inline Json to_json(const UpperBound& u) {
    return {{"value", num(u.value)},
            {"truncated", num(u.truncated)},
            {"w_factor", num(u.w_factor)},
            {"certified_divergent", u.certified_divergent},
            {"inconclusive", u.inconclusive},
            {"reason", u.reason}};
}

}  // namespace copson
