#pragma once

// Continuous weight conditions A_1..A_6, A_4*, A_5* (p > 1) and
// At_1..At_5 (p = 1), regime classification, and the regime's bound.
//
// Truncation: outer sups and integrals run over [t_min, t_max]; the tails
// sigma(t) = int_t^inf v^(1-p') and the I_4-type integrals run to infinity;
// inner sups over z run over (t, t_max].

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "copson/core.hpp"
#include "copson/errors.hpp"
#include "copson/quadrature.hpp"
#include "copson/weights.hpp"

namespace copson {

enum class RegimeLabel { a, b, c, d, a_tilde, b_tilde, c_tilde, d_tilde };

inline std::string to_string(RegimeLabel r) {
    switch (r) {
        case RegimeLabel::a: return "a";
        case RegimeLabel::b: return "b";
        case RegimeLabel::c: return "c";
        case RegimeLabel::d: return "d";
        case RegimeLabel::a_tilde: return "a~";
        case RegimeLabel::b_tilde: return "b~";
        case RegimeLabel::c_tilde: return "c~";
        case RegimeLabel::d_tilde: return "d~";
    }
    return "?";
}

struct Regime {
    RegimeLabel label;
    std::vector<std::string> conditions;  // summed by theorem_bound
    std::optional<std::string> starred;   // A_4* or A_5*, reported alongside

    bool operator==(const Regime&) const = default;
};

inline Regime classify_regime(const Parameters& par) {
    par.validate();
    const double p = par.p, q = par.q, m = par.m;
    if (p == 1.0) {
        if (m >= 1.0 && q >= 1.0) return {RegimeLabel::a_tilde, {"At_1"}, std::nullopt};
        if (m >= 1.0) return {RegimeLabel::b_tilde, {"At_2", "At_3"}, std::nullopt};
        if (q >= 1.0) return {RegimeLabel::c_tilde, {"At_1", "At_4"}, std::nullopt};
        return {RegimeLabel::d_tilde, {"At_3", "At_5"}, std::nullopt};
    }
    if (p <= m) {
        if (p <= q) return {RegimeLabel::a, {"A_1"}, std::nullopt};
        return {RegimeLabel::b, {"A_2", "A_3"}, std::nullopt};
    }
    if (p <= q) return {RegimeLabel::c, {"A_1", "A_4"}, "A_4*"};
    return {RegimeLabel::d, {"A_3", "A_5"}, "A_5*"};
}

struct ConditionValue {
    std::string name;
    double value = 0.0;
    double abs_error = 0.0;
    std::optional<double> argmax;
    std::string diverging_layer;         // set when value is +inf
    bool removable_singularity = false;  // isolated +inf points were dropped
    std::optional<double> truncation_delta;
    std::vector<ConditionValue> breakdown;
    // theorem_bound only: the starred variant and its comparison.
    std::optional<double> starred_value;
    std::optional<double> starred_ratio;  // plain / (c * starred); 1 when the boundary term vanishes
    bool side_condition = false;          // m >= 1 or sigma finite everywhere
};

namespace detail {

/// Limit of v(t) as t -> inf from the dominant active term.
inline double limit_at_inf(const WeightExpr& v) {
    const WeightTerm* dom = nullptr;
    for (const auto& t : v.terms()) {
        if (!t.active() || !std::isinf(t.hi)) continue;
        if (!dom) { dom = &t; continue; }
        if (t.exp_rate != dom->exp_rate) { if (t.exp_rate > dom->exp_rate) dom = &t; continue; }
        if (t.power != dom->power) { if (t.power > dom->power) dom = &t; continue; }
        if (t.log_power > dom->log_power) dom = &t;
    }
    if (!dom) return 0.0;
    for (double x : {dom->exp_rate, dom->power, dom->log_power}) {
        if (x > 0.0) return kInf;
        if (x < 0.0) return 0.0;
    }
    double c = 0.0;
    for (const auto& t : v.terms())
        if (t.active() && std::isinf(t.hi) && t.exp_rate == 0.0 && t.power == 0.0 && t.log_power == 0.0) c += t.coef;
    return c;
}

/// sigma(t) with a cumulative table on a fine log grid; queries integrate
/// only from t to the next table node.
class SigmaFunction {
public:
    SigmaFunction(const WeightExpr& v, double p, double lo, double hi, double tol)
        : dw_(v, p), tol_(weight_tol(tol)) {
        const double a = lo / 10.0, b = hi * 10.0;
        const int per_decade = 64;
        const int n = static_cast<int>(std::ceil(per_decade * std::log10(b / a)));
        for (int i = 0; i <= n; ++i) z_.push_back(a * std::pow(b / a, static_cast<double>(i) / n));
        for (double br : v.breakpoints())
            if (br > a && br < b) z_.push_back(br);
        std::sort(z_.begin(), z_.end());
        z_.erase(std::unique(z_.begin(), z_.end()), z_.end());
        const auto br = v.breakpoints();
        singular_.assign(z_.size(), false);
        for (std::size_t i = 0; i < z_.size(); ++i)
            singular_[i] = std::find(br.begin(), br.end(), z_[i]) != br.end();
        C_.assign(z_.size(), 0.0);
        C_.back() = dw_.integral(z_.back(), kInf, tol_);
        for (std::size_t i = z_.size() - 1; i-- > 0;) {
            const double cell = dw_.integral(z_[i], z_[i + 1], tol_);
            C_[i] = C_[i + 1] + cell;
        }
    }

    const DualWeight& dual() const { return dw_; }

    double operator()(double t) const {
        if (t <= z_.front() || t >= z_.back()) return dw_.integral(t, kInf, tol_);
        const auto it = std::upper_bound(z_.begin(), z_.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - z_.begin());
        if (std::isinf(C_[j])) return kInf;
        const double zr = z_[j];
        if (singular_[j - 1] || singular_[j]) return C_[j] + dw_.integral(t, zr, tol_);
        // Smooth cell: 16-point Gauss-Legendre in ln t.
        const auto& gl = gauss_legendre(16);
        const double xl = std::log(t), xr = std::log(zr);
        const double mid = 0.5 * (xl + xr), hw = 0.5 * (xr - xl);
        double s = 0.0;
        for (const auto& [x, w] : gl) {
            const double y = std::exp(mid + hw * x);
            s += w * hw * y * dw_.density(y);
        }
        return C_[j] + s;
    }

private:
    DualWeight dw_;
    double tol_;
    std::vector<double> z_;
    std::vector<bool> singular_;
    std::vector<double> C_;  // C_[i] = sigma(z_[i])
};

}  // namespace detail

/// Evaluates conditions for one problem, sharing tail tables between them.
class ConditionEvaluator {
public:
    explicit ConditionEvaluator(const Problem& pb) : pb_(pb) {
        pb_.validate();
        const auto b1 = detail::merged_breaks(pb_.u, pb_.w);
        breaks_ = detail::merged_breaks(pb_.v, WeightExpr(std::vector<WeightTerm>{}));
        breaks_.insert(breaks_.end(), b1.begin(), b1.end());
        std::sort(breaks_.begin(), breaks_.end());
        breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
        if (pb_.params.p > 1.0)
            sigma_.emplace(pb_.v, pb_.params.p, pb_.grid.t_min, pb_.grid.t_max, pb_.tol);
    }

    const Problem& problem() const { return pb_; }

    /// Whether `name` is defined for the problem's exponents.
    static bool applicable(const Parameters& par, const std::string& name) {
        const double p = par.p, q = par.q, m = par.m;
        if (name == "A_1") return p > 1.0;
        if (name == "A_2" || name == "A_3") return p > 1.0 && q < p;
        if (name == "A_4" || name == "A_4*") return p > 1.0 && m < p;
        if (name == "A_5" || name == "A_5*" || name == "A_6") return p > 1.0 && m < p && q < p;
        if (name == "At_1") return p == 1.0;
        if (name == "At_2" || name == "At_3") return p == 1.0 && q < 1.0;
        if (name == "At_4") return p == 1.0 && m < 1.0;
        if (name == "At_5") return p == 1.0 && m < 1.0 && q < 1.0;
        return false;
    }

    ConditionValue eval(const std::string& name) {
        if (!applicable(pb_.params, name))
            throw InvalidInput("condition " + name + " is not defined for (p, q, m) = (" +
                               std::to_string(pb_.params.p) + ", " + std::to_string(pb_.params.q) + ", " +
                               std::to_string(pb_.params.m) + ")");
        first_inf_.clear();
        ConditionValue cv;
        cv.name = name;
        if (name == "A_1") cv = a1();
        else if (name == "A_2") cv = a2();
        else if (name == "A_3") cv = a3();
        else if (name == "A_4") cv = a4(false);
        else if (name == "A_4*") cv = a4(true);
        else if (name == "A_5") cv = a5(false);
        else if (name == "A_5*") cv = a5(true);
        else if (name == "A_6") cv = a6();
        else if (name == "At_1") cv = at1();
        else if (name == "At_2") cv = at23(false);
        else if (name == "At_3") cv = at23(true);
        else if (name == "At_4") cv = at4();
        else if (name == "At_5") cv = at5();
        cv.name = name;
        if (std::isinf(cv.value) && cv.diverging_layer.empty())
            cv.diverging_layer = first_inf_.empty() ? "outer" : first_inf_;
        return cv;
    }

    // Building blocks, exposed for tests and for the variational bound.
    double sigma(double t) const {
        if (!sigma_) throw InvalidInput("sigma is undefined for p = 1");
        return (*sigma_)(t);
    }
    double W(double t) const { return integrate_weight(pb_.w, 0.0, t, wt()); }
    double U(double a, double b) const { return a < b ? integrate_weight(pb_.u, a, b, wt()) : 0.0; }
    double phi_q(double t) const { return phi_pow_q(pb_, t); }

    /// int_t^inf U(t,s)^(p/(p-m)) sigma(s)^(p(m-1)/(p-m)) v(s)^(1-p') ds.
    double I4(double t) {
        const double p = pb_.params.p, m = pb_.params.m;
        const double a = p / (p - m), b = p * (m - 1.0) / (p - m);
        const auto& dw = sigma_->dual();
        return tail_integral(t, [&](double s) {
            const double d = dw.density(s);
            if (d == 0.0) return 0.0;
            const double Us = U(t, s);
            if (Us == 0.0) return 0.0;
            const double sg = sigma(s);
            // For m < 1, sigma^b blows up where sigma underflows; the product
            // behaves like d^(1+b) there, so work in logs and drop sigma = 0.
            if (b < 0.0 && std::isfinite(sg) && std::isfinite(Us)) {
                if (sg < std::numeric_limits<double>::min()) return 0.0;
                return std::exp(a * std::log(Us) + b * std::log(sg) + std::log(d));
            }
            return xmul(xmul(xpow(Us, a), xpow(sg, b)), d);
        }, "I_4");
    }

    /// int_t^inf U(t,s)^(m/(p-m)) u(s) sigma(s)^(m(p-1)/(p-m)) ds.
    double I4_star(double t) {
        const double p = pb_.params.p, m = pb_.params.m;
        const double a = m / (p - m), b = m * (p - 1.0) / (p - m);
        return tail_integral(t, [&](double s) {
            const double us = eval_weight(pb_.u, s);
            if (us == 0.0) return 0.0;
            return xmul(xmul(xpow(U(t, s), a), us), xpow(sigma(s), b));
        }, "I_4*");
    }

    /// Factor c with I_4 = c I_4* - (boundary term)/alpha.
    double starred_factor() const {
        const double p = pb_.params.p, m = pb_.params.m;
        return std::pow(p / (m * (p - 1.0)), (p - m) / (p * m));
    }

private:
    double wt() const { return detail::weight_tol(pb_.tol); }

    void note_inf(const char* layer) {
        if (first_inf_.empty()) first_inf_ = layer;
    }

    template <class F>
    double tail_integral(double t, F&& f, const char* layer) {
        QuadOptions o = pb_.quad();
        o.rel_tol = std::max(o.rel_tol, 1e-10);
        auto est = integrate(f, t, kInf, o, breaks_);
        if (std::isinf(est.value)) {
            note_inf(layer);
            return kInf;
        }
        if (!est.converged) {
            if (est.value > 1e200) {
                note_inf(layer);
                return kInf;
            }
            // Tails this small are far below every condition value; near
            // the subnormal range they also lose relative accuracy.
            if (est.value + est.abs_error < 1e-100) return est.value;
            if (est.abs_error > 1e-6 * est.value)
                throw NumericalFailure(std::string(layer) + " did not reach tolerance", est.value, est.abs_error);
        }
        return est.value;
    }

    ConditionValue outer_sup(std::function<double(double)> f) {
        auto est = sup_on_interval(f, pb_.grid.t_min, pb_.grid.t_max, pb_.grid);
        ConditionValue cv;
        cv.value = est.value;
        cv.abs_error = est.abs_error;
        cv.argmax = est.argmax;
        return cv;
    }

    /// int_{t_min}^{t_max} f, then ^(1/r). Isolated +inf samples are dropped
    /// (flagged); +inf at two consecutive grid nodes makes the result +inf.
    ConditionValue outer_integral(std::function<double(double)> f, double outer_exp) {
        QuadOptions o = pb_.quad();
        o.rel_tol = std::max(o.rel_tol, 1e-9);
        o.max_intervals = 3000;
        ConditionValue cv;
        auto est = integrate(f, pb_.grid.t_min, pb_.grid.t_max, o, breaks_);
        if (std::isinf(est.value)) {
            const auto nodes = pb_.grid.nodes();
            bool prev_inf = false, measure = false;
            for (double t : nodes) {
                const bool cur = std::isinf(f(t));
                if (cur && prev_inf) measure = true;
                prev_inf = cur;
            }
            if (measure) {
                cv.value = kInf;
                return cv;
            }
            cv.removable_singularity = true;
            first_inf_.clear();
            est = integrate([&](double t) { const double y = f(t); return std::isinf(y) ? 0.0 : y; },
                            pb_.grid.t_min, pb_.grid.t_max, o, breaks_);
        }
        if (!est.converged && est.abs_error > 1e-6 * est.value) {
            if (est.value > 1e200) {
                cv.value = kInf;
                return cv;
            }
            throw NumericalFailure("outer integral did not reach tolerance", est.value, est.abs_error);
        }
        cv.value = xpow(est.value, outer_exp);
        cv.abs_error = est.value > 0.0 ? cv.value * outer_exp * est.abs_error / est.value : 0.0;
        return cv;
    }

    /// sup over z in (t, t_max] of f(z).
    template <class F>
    double inner_sup(double t, F&& f) {
        if (!(t < pb_.grid.t_max * (1.0 - 1e-12))) return 0.0;
        auto est = sup_on_interval(f, t, pb_.grid.t_max, pb_.grid);
        return est.value;
    }

    /// v with isolated zeros removed (upper envelope over a tiny neighbourhood).
    double v_ess(double z) const {
        return std::max({eval_weight(pb_.v, z), eval_weight(pb_.v, z * (1.0 - 1e-9)), eval_weight(pb_.v, z * (1.0 + 1e-9))});
    }

    ConditionValue a1() {
        const double ip = 1.0 / pb_.params.p_conj();
        return outer_sup([&](double t) {
            const double s = sigma(t);
            if (std::isinf(s)) note_inf("sigma");
            return xmul(xpow(phi_q(t), 1.0 / pb_.params.q), xpow(s, ip));
        });
    }

    ConditionValue a2() {
        const double p = pb_.params.p, m = pb_.params.m, r = pb_.params.r(), pc = pb_.params.p_conj();
        return outer_integral([&, p, m, r, pc](double t) {
            const double wt_ = eval_weight(pb_.w, t);
            if (wt_ == 0.0) return 0.0;
            const double S = inner_sup(t, [&](double z) {
                const double s = sigma(z);
                if (std::isinf(s)) note_inf("sigma");
                return xmul(xpow(U(t, z), r / m), xpow(s, r / pc));
            });
            return xmul(xmul(xpow(W(t), r / p), wt_), S);
        }, 1.0 / r);
    }

    ConditionValue a3() {
        const double p = pb_.params.p, q = pb_.params.q, m = pb_.params.m, r = pb_.params.r(),
                     pc = pb_.params.p_conj();
        return outer_integral([&, p, q, m, r, pc](double t) {
            const double wt_ = eval_weight(pb_.w, t);
            if (wt_ == 0.0) return 0.0;
            const double S = inner_sup(t, [&](double z) {
                const double s = sigma(z);
                if (std::isinf(s)) note_inf("sigma");
                return xmul(xpow(U(t, z), q / m), xpow(s, r / pc));
            });
            if (S == 0.0) return 0.0;
            return xmul(xmul(xpow(phi_q(t), r / p), wt_), S);
        }, 1.0 / r);
    }

    ConditionValue a4(bool starred) {
        const double p = pb_.params.p, q = pb_.params.q, m = pb_.params.m;
        return outer_sup([&, p, q, m, starred](double t) {
            const double Wt = W(t);
            if (Wt == 0.0) return 0.0;
            const double I = starred ? I4_star(t) : I4(t);
            return xmul(xpow(Wt, 1.0 / q), xpow(I, (p - m) / (p * m)));
        });
    }

    ConditionValue a5(bool starred) {
        const double p = pb_.params.p, q = pb_.params.q, m = pb_.params.m, r = pb_.params.r();
        const double beta = q * (p - m) / (m * (p - q));
        return outer_integral([&, p, r, beta, starred](double t) {
            const double wt_ = eval_weight(pb_.w, t);
            if (wt_ == 0.0) return 0.0;
            const double I = starred ? I4_star(t) : I4(t);
            return xmul(xmul(xpow(W(t), r / p), wt_), xpow(I, beta));
        }, 1.0 / r);
    }

    ConditionValue a6() {
        const double q = pb_.params.q, r = pb_.params.r(), rq = pb_.params.r_over_qconj();
        const auto& dw = sigma_->dual();
        return outer_integral([&, q, r, rq](double t) {
            const double d = dw.density(t);
            if (d == 0.0) return 0.0;
            const double s = sigma(t);
            if (std::isinf(s)) note_inf("sigma");
            return xmul(xmul(xpow(phi_q(t), r / q), xpow(s, rq)), d);
        }, 1.0 / r);
    }

    ConditionValue at1() {
        return outer_sup([&](double t) { return xdiv(xpow(phi_q(t), 1.0 / pb_.params.q), v_ess(t)); });
    }

    // At_2 (third = false) and At_3 (third = true); q < 1 so q' < 0.
    ConditionValue at23(bool third) {
        const double q = pb_.params.q, m = pb_.params.m, qc = pb_.params.q_conj();
        return outer_integral([&, q, m, qc, third](double t) {
            const double wt_ = eval_weight(pb_.w, t);
            if (wt_ == 0.0) return 0.0;
            const double ue = third ? q / m : -qc / m;
            const double S = inner_sup(t, [&](double z) {
                const double vz = v_ess(z);
                if (vz == 0.0) note_inf("1/v");
                return xmul(xpow(U(t, z), ue), xpow(vz, qc));
            });
            const double lead = third ? xpow(phi_q(t), -qc) : xpow(W(t), -qc);
            return xmul(xmul(lead, wt_), S);
        }, -1.0 / qc);
    }

    /// esssup_{y > z} v(y)^(-m/(1-m)) from a suffix-max table.
    double v_tail_sup(double z) {
        if (vtab_.empty()) {
            const double m = pb_.params.m;
            const double beta = -m / (1.0 - m);
            GridSpec g{pb_.grid.t_min, pb_.grid.t_max * 1e3, pb_.grid.points_per_decade * 4};
            vtab_z_ = g.nodes();
            vtab_.resize(vtab_z_.size());
            double run = xpow(detail::limit_at_inf(pb_.v), beta);
            for (std::size_t i = vtab_z_.size(); i-- > 0;) {
                run = std::max(run, xpow(v_ess(vtab_z_[i]), beta));
                vtab_[i] = run;
            }
            vtab_inf_ = xpow(detail::limit_at_inf(pb_.v), beta);
        }
        const double m = pb_.params.m;
        const double here = xpow(v_ess(z), -m / (1.0 - m));
        const auto it = std::upper_bound(vtab_z_.begin(), vtab_z_.end(), z);
        const double rest = it == vtab_z_.end() ? vtab_inf_ : vtab_[static_cast<std::size_t>(it - vtab_z_.begin())];
        return std::max(here, rest);
    }

    double J(double t) {
        const double m = pb_.params.m;
        return tail_integral(t, [&, m](double z) {
            const double uz = eval_weight(pb_.u, z);
            if (uz == 0.0) return 0.0;
            const double s = v_tail_sup(z);
            if (std::isinf(s)) note_inf("1/v");
            return xmul(xmul(xpow(U(t, z), m / (1.0 - m)), uz), s);
        }, "J");
    }

    ConditionValue at4() {
        const double q = pb_.params.q, m = pb_.params.m;
        return outer_sup([&, q, m](double t) {
            const double Wt = W(t);
            if (Wt == 0.0) return 0.0;
            return xmul(xpow(Wt, 1.0 / q), xpow(J(t), (1.0 - m) / m));
        });
    }

    ConditionValue at5() {
        const double m = pb_.params.m, qc = pb_.params.q_conj();
        return outer_integral([&, m, qc](double t) {
            const double wt_ = eval_weight(pb_.w, t);
            if (wt_ == 0.0) return 0.0;
            return xmul(xmul(xpow(W(t), -qc), wt_), xpow(J(t), -qc * (1.0 - m) / m));
        }, -1.0 / qc);
    }

    Problem pb_;
    std::vector<double> breaks_;
    std::optional<detail::SigmaFunction> sigma_;
    std::string first_inf_;
    std::vector<double> vtab_z_, vtab_;
    double vtab_inf_ = 0.0;
};

inline ConditionValue eval_condition(const Problem& pb, const std::string& name) {
    ConditionEvaluator ev(pb);
    return ev.eval(name);
}

/// Relative change of a condition when the grid is widened by 10 on both sides.
inline double truncation_sensitivity(const Problem& pb, const std::string& name, double base) {
    Problem wide = pb;
    wide.grid = pb.grid.widened(10.0);
    const double v = eval_condition(wide, name).value;
    if (std::isinf(v) && std::isinf(base)) return 0.0;
    if (std::isinf(v) || std::isinf(base)) return kInf;
    return base > 0.0 ? std::abs(v - base) / base : (v == 0.0 ? 0.0 : kInf);
}

/// Sum of the regime's conditions with per-condition breakdown; in regimes
/// (c) and (d) the starred variant is evaluated independently and compared.
inline ConditionValue theorem_bound(const Problem& pb, bool with_truncation = false) {
    const auto reg = classify_regime(pb.params);
    ConditionEvaluator ev(pb);
    ConditionValue out;
    out.name = "bound_" + to_string(reg.label);
    for (const auto& n : reg.conditions) {
        auto cv = ev.eval(n);
        if (with_truncation) cv.truncation_delta = truncation_sensitivity(pb, n, cv.value);
        out.value += cv.value;
        out.abs_error += cv.abs_error;
        if (std::isinf(cv.value) && out.diverging_layer.empty()) out.diverging_layer = n + ":" + cv.diverging_layer;
        out.breakdown.push_back(std::move(cv));
    }
    if (reg.starred) {
        auto st = ev.eval(*reg.starred);
        const std::string plain = reg.label == RegimeLabel::c ? "A_4" : "A_5";
        double plain_value = 0.0;
        for (const auto& b : out.breakdown)
            if (b.name == plain) plain_value = b.value;
        out.starred_value = st.value;
        const double c = ev.starred_factor();
        if (std::isfinite(plain_value) && std::isfinite(st.value) && st.value > 0.0)
            out.starred_ratio = plain_value / (c * st.value);
        bool sigma_finite = true;
        for (double t : pb.grid.nodes())
            if (std::isinf(ev.sigma(t))) sigma_finite = false;
        out.side_condition = reg.label == RegimeLabel::c ? (pb.params.m >= 1.0 || sigma_finite)
                                                         : ((pb.params.m >= 1.0 && pb.params.q > 1.0) || sigma_finite);
        out.breakdown.push_back(std::move(st));
    }
    return out;
}

}  // namespace copson
