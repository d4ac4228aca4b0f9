#pragma once

// Closed-form weights on (0, inf): finite sums of terms
//
//     coef * t^power * |ln t|^log_power * exp(exp_rate * t) * 1[t in (lo, hi]]
//
// together with exact integration where an antiderivative is available
// (pure powers, pure exponentials, power-log terms through incomplete gamma
// functions) and adaptive quadrature otherwise. Divergent integrals are
// certified from the dominant exponents before any quadrature is attempted.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "copson/errors.hpp"
#include "copson/quadrature.hpp"

namespace copson {

struct WeightTerm {
    double coef = 1.0;
    double power = 0.0;
    double log_power = 0.0;
    double exp_rate = 0.0;
    double lo = 0.0;   // support is (lo, hi]
    double hi = kInf;

    void validate() const {
        if (!is_finite_nonneg(coef)) throw InvalidInput("weight term: coef must be finite and >= 0");
        if (!std::isfinite(power) || !std::isfinite(log_power) || !std::isfinite(exp_rate))
            throw InvalidInput("weight term: exponents must be finite");
        if (!(lo >= 0.0) || !(lo < hi) || std::isinf(lo))
            throw InvalidInput("weight term: support must satisfy 0 <= a < b <= inf");
    }

    bool contains(double t) const { return t > lo && t <= hi; }
    bool active() const { return coef > 0.0; }
    bool has_log() const { return log_power != 0.0; }

    /// Term value ignoring the support indicator.
    double value(double t) const {
        if (coef == 0.0) return 0.0;
        const double f1 = power == 0.0 ? 1.0 : std::pow(t, power);
        const double f2 = log_power == 0.0 ? 1.0 : xpow(std::abs(std::log(t)), log_power);
        const double f3 = exp_rate == 0.0 ? 1.0 : std::exp(exp_rate * t);
        if (f2 == 0.0) return 0.0;
        if (std::isinf(f2)) return kInf;
        const double prod = coef * f1 * f2 * f3;
        if (std::isfinite(prod) && prod > 0.0) return prod;
        // Intermediate over/underflow: redo in log space.
        const double lv = std::log(coef) + power * std::log(t) +
                          (log_power == 0.0 ? 0.0 : log_power * std::log(std::abs(std::log(t)))) +
                          exp_rate * t;
        return std::exp(lv);
    }

    /// The term raised to the power e (used for v^(1-p')), restricted to (a, b].
    WeightTerm raised(double e, double a, double b) const {
        return WeightTerm{std::pow(coef, e), power * e, log_power * e, exp_rate * e, a, b};
    }

    bool operator==(const WeightTerm&) const = default;
};

class WeightExpr {
public:
    WeightExpr() = default;
    explicit WeightExpr(std::vector<WeightTerm> terms) : terms_(std::move(terms)) {
        for (const auto& t : terms_) t.validate();
    }

    static WeightExpr zero() { return WeightExpr{}; }
    static WeightExpr constant(double c, double lo = 0.0, double hi = kInf) {
        return WeightExpr({WeightTerm{c, 0.0, 0.0, 0.0, lo, hi}});
    }
    static WeightExpr power(double c, double exponent, double lo = 0.0, double hi = kInf) {
        return WeightExpr({WeightTerm{c, exponent, 0.0, 0.0, lo, hi}});
    }
    static WeightExpr exponential(double c, double rate, double lo = 0.0, double hi = kInf) {
        return WeightExpr({WeightTerm{c, 0.0, 0.0, rate, lo, hi}});
    }

    const std::vector<WeightTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    WeightExpr scaled(double lambda) const {
        if (!is_finite_nonneg(lambda)) throw InvalidInput("scale factor must be finite and >= 0");
        auto t = terms_;
        for (auto& x : t) x.coef *= lambda;
        return WeightExpr(std::move(t));
    }

    WeightExpr operator+(const WeightExpr& o) const {
        auto t = terms_;
        t.insert(t.end(), o.terms_.begin(), o.terms_.end());
        return WeightExpr(std::move(t));
    }

    /// Finite interior support ends, plus t = 1 when a log factor is present.
    std::vector<double> breakpoints() const {
        std::vector<double> b;
        for (const auto& t : terms_) {
            if (t.lo > 0.0) b.push_back(t.lo);
            if (std::isfinite(t.hi)) b.push_back(t.hi);
            if (t.has_log()) b.push_back(1.0);
        }
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

    bool operator==(const WeightExpr&) const = default;

private:
    std::vector<WeightTerm> terms_;
};

/// Pointwise value; +inf only at a genuine singularity such as t = 1 for a
/// negative log power.
inline double eval_weight(const WeightExpr& w, double t) {
    if (!(t > 0.0)) throw InvalidInput("eval_weight: t must be positive");
    double s = 0.0;
    for (const auto& term : w.terms())
        if (term.active() && term.contains(t)) s += term.value(t);
    return s;
}

namespace detail {

// Integrability of t^power |ln t|^log_power near 0 (the exponential factor
// tends to 1 there).
inline bool diverges_at_zero(const WeightTerm& t) {
    return t.power < -1.0 || (t.power == -1.0 && t.log_power >= -1.0);
}

inline bool diverges_at_inf(const WeightTerm& t) {
    if (t.exp_rate > 0.0) return true;
    if (t.exp_rate < 0.0) return false;
    return t.power > -1.0 || (t.power == -1.0 && t.log_power >= -1.0);
}

// Certified divergence of the term's integral over (lo, hi).
inline bool term_diverges(const WeightTerm& t, double lo, double hi) {
    if (lo == 0.0 && diverges_at_zero(t)) return true;
    if (std::isinf(hi) && diverges_at_inf(t)) return true;
    if (t.log_power <= -1.0 && lo <= 1.0 && hi >= 1.0) return true;
    return false;
}

// int_{z1}^{z2} z^(a-1) e^(-z) dz for a > 0.
inline double gamma_diff(double a, double z1, double z2) {
    if (z1 >= z2) return 0.0;
    if (std::isinf(z2)) return boost::math::tgamma(a, z1);
    if (z1 == 0.0) return boost::math::tgamma_lower(a, z2);
    if (z1 > a) return boost::math::tgamma(a, z1) - boost::math::tgamma(a, z2);
    return boost::math::tgamma_lower(a, z2) - boost::math::tgamma_lower(a, z1);
}

inline double quad_term(const WeightTerm& t, double lo, double hi, double rel_tol) {
    QuadOptions opt;
    opt.rel_tol = rel_tol;
    const double brk[1] = {1.0};
    auto est = integrate([&](double s) { return t.value(s); }, lo, hi, opt, std::span<const double>(brk));
    if (!est.converged)
        throw NumericalFailure("weight quadrature did not reach tolerance", est.value, est.abs_error);
    return est.value;
}

// int t^power |ln t|^lambda over (lo, hi], with hi <= 1 or lo >= 1.
inline double power_log_piece(const WeightTerm& t, double lo, double hi, double rel_tol) {
    const double c = t.power + 1.0;
    const double lam = t.log_power;
    if (lam > -1.0) {
        try {
            if (hi <= 1.0) {
                // y = -ln s on [y1, y2]; integrand e^(-c y) y^lam
                const double y1 = -std::log(hi);
                const double y2 = lo == 0.0 ? kInf : -std::log(lo);
                if (c > 0.0) return t.coef * std::pow(c, -(lam + 1.0)) * gamma_diff(lam + 1.0, c * y1, c * y2);
                if (c == 0.0) return t.coef * (std::pow(y2, lam + 1.0) - std::pow(y1, lam + 1.0)) / (lam + 1.0);
            } else {
                const double x1 = std::log(lo);
                const double x2 = std::isinf(hi) ? kInf : std::log(hi);
                if (c < 0.0) return t.coef * std::pow(-c, -(lam + 1.0)) * gamma_diff(lam + 1.0, -c * x1, -c * x2);
                if (c == 0.0) return t.coef * (std::pow(x2, lam + 1.0) - std::pow(x1, lam + 1.0)) / (lam + 1.0);
            }
        } catch (const std::exception&) {
            // over/underflow inside the special function: fall through to quadrature
        }
    }
    return quad_term(t, lo, hi, rel_tol);
}

}  // namespace detail

/// Integral of a single term over (a, b) intersected with its support.
inline double integrate_term(const WeightTerm& t, double a, double b, double rel_tol = 1e-12) {
    const double lo = std::max(a, t.lo);
    const double hi = std::min(b, t.hi);
    if (!(lo < hi) || t.coef == 0.0) return 0.0;
    if (detail::term_diverges(t, lo, hi)) return kInf;

    if (t.log_power == 0.0 && t.exp_rate == 0.0) {
        if (t.power == -1.0) return t.coef * std::log(hi / lo);
        const double e = t.power + 1.0;
        if (lo == 0.0) return t.coef * std::pow(hi, e) / e;
        if (std::isinf(hi)) return -t.coef * std::pow(lo, e) / e;
        if (hi > 2.0 * lo) return t.coef * (std::pow(hi, e) - std::pow(lo, e)) / e;
        return t.coef * std::pow(lo, e) * std::expm1(e * std::log(hi / lo)) / e;
    }
    if (t.power == 0.0 && t.log_power == 0.0) {
        const double r = t.exp_rate;
        if (std::isinf(hi)) return t.coef * std::exp(r * lo) / (-r);
        return t.coef * std::exp(r * lo) * std::expm1(r * (hi - lo)) / r;
    }
    if (t.exp_rate == 0.0) {
        if (lo < 1.0 && hi > 1.0)
            return detail::power_log_piece(t, lo, 1.0, rel_tol) + detail::power_log_piece(t, 1.0, hi, rel_tol);
        return detail::power_log_piece(t, lo, hi, rel_tol);
    }
    return detail::quad_term(t, lo, hi, rel_tol);
}

/// int_a^b w(t) dt for 0 <= a < b <= inf; +inf when certified divergent.
inline double integrate_weight(const WeightExpr& w, double a, double b, double rel_tol = 1e-12) {
    if (!(a >= 0.0) || !(a < b)) {
        if (a == b) return 0.0;
        throw InvalidInput("integrate_weight: need 0 <= a < b <= inf");
    }
    double s = 0.0;
    for (const auto& t : w.terms()) {
        const double v = integrate_term(t, a, b, rel_tol);
        if (std::isinf(v)) return kInf;
        s += v;
    }
    return s;
}

/// The dual weight v^(1-p') for p > 1, split into stretches where v is a
/// single term (exact transform), a sum of terms (quadrature), or zero
/// (density +inf under 0^(negative) = inf).
class DualWeight {
public:
    enum class Kind { Zero, Single, Mixed };
    struct Stretch {
        double lo;
        double hi;
        Kind kind;
        WeightTerm term;                // Single
        std::vector<WeightTerm> terms;  // Mixed (original v terms)
    };

    DualWeight(const WeightExpr& v, double p) : exponent_(0.0) {
        if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("dual weight needs 1 < p < inf");
        exponent_ = -1.0 / (p - 1.0);
        std::vector<double> cuts{0.0, kInf};
        for (const auto& t : v.terms()) {
            if (!t.active()) continue;
            cuts.push_back(t.lo);
            cuts.push_back(t.hi);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            Stretch s{cuts[i], cuts[i + 1], Kind::Zero, {}, {}};
            for (const auto& t : v.terms())
                if (t.active() && t.lo <= s.lo && t.hi >= s.hi) s.terms.push_back(t);
            if (s.terms.size() == 1) {
                s.kind = Kind::Single;
                s.term = s.terms.front().raised(exponent_, s.lo, s.hi);
            } else if (s.terms.size() > 1) {
                s.kind = Kind::Mixed;
            }
            stretches_.push_back(std::move(s));
        }
    }

    double exponent() const { return exponent_; }
    const std::vector<Stretch>& stretches() const { return stretches_; }

    /// v(t)^(1-p').
    double density(double t) const {
        for (const auto& s : stretches_) {
            if (!(t > s.lo && t <= s.hi)) continue;
            switch (s.kind) {
                case Kind::Zero: return kInf;
                case Kind::Single: return s.term.value(t);
                case Kind::Mixed: {
                    double sum = 0.0;
                    for (const auto& x : s.terms) sum += x.value(t);
                    return xpow(sum, exponent_);
                }
            }
        }
        return kInf;
    }

    /// True if v vanishes on a set of positive measure inside (a, b).
    bool has_zero_stretch(double a, double b) const {
        for (const auto& s : stretches_)
            if (s.kind == Kind::Zero && std::max(a, s.lo) < std::min(b, s.hi)) return true;
        return false;
    }

    /// int_a^b v^(1-p').
    double integral(double a, double b, double rel_tol = 1e-12) const {
        if (!(a < b)) return 0.0;
        double total = 0.0;
        for (const auto& s : stretches_) {
            const double lo = std::max(a, s.lo);
            const double hi = std::min(b, s.hi);
            if (!(lo < hi)) continue;
            double piece = 0.0;
            switch (s.kind) {
                case Kind::Zero: return kInf;
                case Kind::Single: piece = integrate_term(s.term, lo, hi, rel_tol); break;
                case Kind::Mixed: piece = mixed_integral(s, lo, hi, rel_tol); break;
            }
            if (std::isinf(piece)) return kInf;
            total += piece;
        }
        return total;
    }

private:
    double mixed_integral(const Stretch& s, double lo, double hi, double rel_tol) const {
        // Dominant terms decide integrability at the ends.
        if (lo == 0.0) {
            const WeightTerm* dom = nullptr;
            for (const auto& t : s.terms)
                if (!dom || t.power < dom->power || (t.power == dom->power && t.log_power > dom->log_power))
                    dom = &t;
            if (detail::diverges_at_zero(dom->raised(exponent_, lo, hi))) return kInf;
        }
        if (std::isinf(hi)) {
            const WeightTerm* dom = nullptr;
            for (const auto& t : s.terms) {
                if (!dom) { dom = &t; continue; }
                if (t.exp_rate != dom->exp_rate) { if (t.exp_rate > dom->exp_rate) dom = &t; continue; }
                if (t.power != dom->power) { if (t.power > dom->power) dom = &t; continue; }
                if (t.log_power > dom->log_power) dom = &t;
            }
            if (detail::diverges_at_inf(dom->raised(exponent_, lo, hi))) return kInf;
        }
        QuadOptions opt;
        opt.rel_tol = rel_tol;
        auto est = integrate(
            [&](double t) {
                double sum = 0.0;
                for (const auto& x : s.terms) sum += x.value(t);
                return xpow(sum, exponent_);
            },
            lo, hi, opt);
        if (!est.converged)
            throw NumericalFailure("dual weight quadrature did not reach tolerance", est.value, est.abs_error);
        return est.value;
    }

    double exponent_;
    std::vector<Stretch> stretches_;
};

/// sigma_p(t) = int_t^inf v(s)^(1-p') ds.
inline double sigma_tail(const WeightExpr& v, double p, double t) {
    if (!(t >= 0.0)) throw InvalidInput("sigma_tail: t must be >= 0");
    return DualWeight(v, p).integral(t, kInf);
}

}  // namespace copson
