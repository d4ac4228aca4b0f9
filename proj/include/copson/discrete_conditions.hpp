#pragma once

// Discrete conditions D_1..D_4 on a discretizing sequence, and the two
// sequence lemmas (Hoelder with its saturator, geometric-growth sums).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "copson/core.hpp"
#include "copson/discretizer.hpp"
#include "copson/errors.hpp"
#include "copson/quadrature.hpp"
#include "copson/weights.hpp"

namespace copson {

struct DiscreteConditionValue {
    std::string name;
    double value = 0.0;
    std::vector<double> contributions;  // one per cell Delta_{k-1} of the window
    bool complete_low = false;
    bool complete_high = false;
    bool tail_truncated = false;  // the unbounded last cell was cut off
};

/// Which D's appear in the regime of `par`.
inline std::vector<std::string> discrete_conditions_for(const Parameters& par) {
    const double p = par.p, q = par.q, m = par.m;
    if (!(p > 1.0)) throw InvalidInput("discrete conditions need p > 1");
    if (p <= m) return p <= q ? std::vector<std::string>{"D_1"} : std::vector<std::string>{"D_2"};
    return p <= q ? std::vector<std::string>{"D_1", "D_3"} : std::vector<std::string>{"D_1", "D_4"};
}

namespace detail {

/// Helper for one cell [a, b]: S(t) = int_t^b v^(1-p') and phi^q on a
/// refined geometric sub-grid.
class DiscreteCell {
public:
    static constexpr int kSub = 96;
    static constexpr double kTailSpan = 1e6;

    DiscreteCell(const Problem& pb, const DualWeight& dw, double a, double b) : pb_(pb), dw_(dw), a_(a), b_(b) {}

    bool unbounded() const { return std::isinf(b_); }

    double S(double t) const { return dw_.integral(t, b_, weight_tol(pb_.tol)); }

    /// sup over the cell of phi^gamma * S^delta.
    double sup(double gamma, double delta) const {
        const double hi = unbounded() ? std::max(a_ * kTailSpan, pb_.grid.t_max) : b_;
        GridSpec g{a_, hi, 64};
        auto f = [&](double t) {
            const double s = S(t);
            if (s == 0.0) return 0.0;
            return xmul(xpow(phi_pow_q(pb_, t), gamma / pb_.params.q), xpow(s, delta));
        };
        return sup_on_interval(f, a_, hi, g).value;
    }

    /// int over the cell of phi^gamma S^beta v^(1-p'), beta + 1 > 0. On each
    /// sub-interval phi^gamma is replaced by the mean of its endpoint values
    /// and S^beta v^(1-p') is integrated exactly as -d(S^(beta+1))/(beta+1).
    double weighted(double gamma, double beta) const {
        const double hi = unbounded() ? std::max(a_ * kTailSpan, pb_.grid.t_max) : b_;
        std::vector<double> z(kSub + 1);
        for (int i = 0; i <= kSub; ++i) z[i] = a_ * std::pow(hi / a_, static_cast<double>(i) / kSub);
        z.back() = hi;
        const double e = beta + 1.0;
        const double wt = weight_tol(pb_.tol);
        // Cumulative S from the right.
        std::vector<double> Sz(z.size());
        Sz.back() = unbounded() ? dw_.integral(hi, kInf, wt) : 0.0;
        for (std::size_t i = z.size() - 1; i-- > 0;) Sz[i] = Sz[i + 1] + dw_.integral(z[i], z[i + 1], wt);
        if (std::isinf(Sz.front())) return kInf;
        std::vector<double> P(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) P[i] = xpow(phi_pow_q(pb_, z[i]), gamma / pb_.params.q);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < z.size(); ++i) {
            const double mass = (xpow(Sz[i], e) - xpow(Sz[i + 1], e)) / e;
            total += xmul(0.5 * (P[i] + P[i + 1]), mass);
        }
        if (unbounded() && Sz.back() > 0.0) {
            const double top = xpow(phi_pow_q(pb_, kInf), gamma / pb_.params.q);
            total += xmul(top, xpow(Sz.back(), e) / e);
        }
        return total;
    }

private:
    const Problem& pb_;
    const DualWeight& dw_;
    double a_, b_;
};

}  // namespace detail

/// Evaluates D_1..D_4 over the cells [t_{k-1}, t_k] of the sequence window.
inline DiscreteConditionValue eval_D(const Problem& pb, const DiscretizingSequence& seq, const std::string& name) {
    pb.validate();
    const auto names = discrete_conditions_for(pb.params);
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw InvalidInput(name + " does not belong to the regime of (p, q, m)");
    const double p = pb.params.p, q = pb.params.q, m = pb.params.m, pc = pb.params.p_conj();
    DiscreteConditionValue out;
    out.name = name;
    out.complete_low = seq.complete_low;
    out.complete_high = seq.complete_high;
    if (seq.t.size() < 2) return out;
    DualWeight dw(pb.v, p);
    for (std::size_t k = 1; k < seq.t.size(); ++k) {
        detail::DiscreteCell cell(pb, dw, seq.t[k - 1], seq.t[k]);
        if (cell.unbounded()) out.tail_truncated = true;
        double c = 0.0;
        if (name == "D_1") {
            c = cell.sup(1.0, 1.0 / pc);
        } else if (name == "D_2") {
            const double r = pb.params.r();
            c = cell.sup(r, r / pc);
        } else {
            const double I = cell.weighted(m * p / (p - m), p * (m - 1.0) / (p - m));
            c = name == "D_3" ? xpow(I, (p - m) / (m * p)) : xpow(I, q * (p - m) / (m * (p - q)));
        }
        out.contributions.push_back(c);
    }
    // Fixed-order reduction.
    if (name == "D_1" || name == "D_3") {
        for (double c : out.contributions) out.value = std::max(out.value, c);
    } else {
        double s = 0.0;
        for (double c : out.contributions) s += c;
        out.value = xpow(s, 1.0 / pb.params.r());
    }
    return out;
}

struct HolderReport {
    double lhs = 0.0;  // (sum a^q b)^(1/q)
    double rhs = 0.0;  // (sum a^p)^(1/p) (sum b^(p/(p-q)))^((p-q)/(pq))
    bool holds = true;
    std::vector<double> saturator;   // c with sum c^p = 1
    double saturator_lhs = 0.0;      // (sum c^q b)^(1/q)
    double saturator_target = 0.0;   // (sum b^(p/(p-q)))^((p-q)/(pq))
};

/// Hoelder's inequality for 0 < q < p and its equality case
/// c_k = b_k^(1/(p-q)) / (sum b^(p/(p-q)))^(1/p).
inline HolderReport check_discrete_holder(const std::vector<double>& a, const std::vector<double>& b, double p,
                                          double q) {
    if (a.size() != b.size()) throw InvalidInput("holder: sequences differ in length");
    if (!(q > 0.0) || !(p > q) || !std::isfinite(p)) throw InvalidInput("holder: need 0 < q < p < inf");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!is_finite_nonneg(a[i]) || !is_finite_nonneg(b[i]))
            throw InvalidInput("holder: entries must be finite and >= 0 (index " + std::to_string(i) + ")");
    HolderReport rep;
    double sl = 0.0, sa = 0.0, sb = 0.0;
    const double e = p / (p - q);
    for (std::size_t i = 0; i < a.size(); ++i) {
        sl += xmul(xpow(a[i], q), b[i]);
        sa += xpow(a[i], p);
        sb += xpow(b[i], e);
    }
    rep.lhs = xpow(sl, 1.0 / q);
    rep.saturator_target = xpow(sb, (p - q) / (p * q));
    rep.rhs = xpow(sa, 1.0 / p) * rep.saturator_target;
    rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-12);
    rep.saturator.assign(b.size(), 0.0);
    if (sb > 0.0) {
        const double norm = std::pow(sb, 1.0 / p);
        double s = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            rep.saturator[i] = xpow(b[i], 1.0 / (p - q)) / norm;
            s += xmul(xpow(rep.saturator[i], q), b[i]);
        }
        rep.saturator_lhs = xpow(s, 1.0 / q);
    }
    return rep;
}

struct GrowthPair {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;  // lhs/rhs with 0/0 = 0
};

struct GrowthReport {
    GrowthPair tail_sum;  // sum_k (sum_{m>=k} c_m)^alpha b_k  vs  sum c^alpha b
    GrowthPair tail_sup;  // sum_k (sup_{m>=k} c_m)^alpha b_k  vs  sum c^alpha b
    GrowthPair sup;       // sup_k (sum_{m>=k} c_m)^alpha b_k  vs  sup c^alpha b
    double C_emp = 0.0;
};

/// Evaluates the three geometric-growth inequalities for one instance.
inline GrowthReport check_geom_growth(const std::vector<double>& b, const std::vector<double>& c, double alpha,
                                      double D) {
    if (b.size() != c.size()) throw InvalidInput("growth: sequences differ in length");
    if (b.empty()) throw InvalidInput("growth: empty sequences");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("growth: alpha must be finite and > 0");
    if (!(D > 1.0) || !std::isfinite(D)) throw InvalidInput("growth: D must be finite and > 1");
    for (std::size_t i = 0; i < b.size(); ++i)
        if (!is_finite_nonneg(b[i]) || !is_finite_nonneg(c[i]))
            throw InvalidInput("growth: entries must be finite and >= 0 (index " + std::to_string(i) + ")");
    for (std::size_t k = 0; k + 1 < b.size(); ++k)
        if (!(b[k + 1] >= D * b[k]))
            throw InvalidInput("growth: b[" + std::to_string(k + 1) + "] < D * b[" + std::to_string(k) + "]");
    const std::size_t n = b.size();
    std::vector<double> tsum(n), tsup(n);
    double run = 0.0, runmax = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        run += c[k];
        runmax = std::max(runmax, c[k]);
        tsum[k] = run;
        tsup[k] = runmax;
    }
    GrowthReport rep;
    double base_sum = 0.0, base_sup = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double cb = xmul(xpow(c[k], alpha), b[k]);
        base_sum += cb;
        base_sup = std::max(base_sup, cb);
        rep.tail_sum.lhs += xmul(xpow(tsum[k], alpha), b[k]);
        rep.tail_sup.lhs += xmul(xpow(tsup[k], alpha), b[k]);
        rep.sup.lhs = std::max(rep.sup.lhs, xmul(xpow(tsum[k], alpha), b[k]));
    }
    rep.tail_sum.rhs = rep.tail_sup.rhs = base_sum;
    rep.sup.rhs = base_sup;
    for (auto* g : {&rep.tail_sum, &rep.tail_sup, &rep.sup}) {
        g->ratio = xdiv(g->lhs, g->rhs);
        rep.C_emp = std::max(rep.C_emp, g->ratio);
    }
    return rep;
}

}  // namespace copson
