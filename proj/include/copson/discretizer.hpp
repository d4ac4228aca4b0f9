#pragma once

// Discretizing sequences: t_k with int_0^{t_k} w and phi(t_k)^q both growing
// by at least D = 2^(q/m+1) per step and exactly one of them growing by
// exactly D (label K1 for w, K2 for phi).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "copson/core.hpp"
#include "copson/errors.hpp"

namespace copson {

enum class Label { K1, K2 };

inline const char* to_string(Label l) { return l == Label::K1 ? "K1" : "K2"; }

struct DiscretizingSequence {
    std::vector<double> t;       // increasing; last entry is +inf when top == Zero
    std::vector<Label> labels;   // labels[j] belongs to the step t[j] -> t[j+1]
    TopFlag top = TopFlag::Infinite;
    bool top_certified = true;
    bool complete_low = false;   // the sequence always continues toward 0
    bool complete_high = false;  // true when the sentinel t_K = inf is reached
    bool collapsed = false;      // equal consecutive points were merged
    int first_index = 0;         // t[0] = t_{first_index}

    std::size_t size() const { return t.size(); }
    bool operator==(const DiscretizingSequence&) const = default;
};

struct SequenceOptions {
    double root_tol = 1e-13;  // absolute, in ln t
    int max_steps = 4000;
};

namespace detail {

/// Monotone cumulative quantities W(t) and phi(t)^q, including t = inf.
struct Cumulatives {
    const Problem& pb;
    double W_inf;
    double Phi_inf;

    explicit Cumulatives(const Problem& p, TopFlag top) : pb(p) {
        W_inf = integrate_weight(pb.w, 0.0, kInf, weight_tol(pb.tol));
        Phi_inf = top == TopFlag::Zero ? phi_pow_q(pb, kInf) : kInf;
    }
    double W(double t) const {
        if (std::isinf(t)) return W_inf;
        return integrate_weight(pb.w, 0.0, t, weight_tol(pb.tol));
    }
    double Phi(double t) const {
        if (std::isinf(t)) return Phi_inf;
        return phi_pow_q(pb, t);
    }
};

// Smallest tau >= t0 with F(tau) >= target (F nondecreasing, continuous).
template <class F>
double forward_root(F&& f, double t0, double target, double f_inf, double tol, int index) {
    if (!(f_inf >= target)) return kInf;
    double xl = std::log(t0);
    double step = std::log(2.0);
    double xh = xl + step;
    double fh = f(std::exp(xh));
    while (fh < target) {
        xl = xh;
        step *= 2.0;
        xh = xl + step;
        if (xh > 690.0) {
            if (!std::isfinite(f_inf)) {
                throw NumericalFailure("discretizer: cannot bracket forward root at index " + std::to_string(index),
                                       std::exp(xl), 0.0);
            }
            return kInf;
        }
        fh = f(std::exp(xh));
    }
    const double fl = f(std::exp(xl));
    if (fl >= target) return std::exp(xl);
    std::uintmax_t iters = 200;
    auto g = [&](double x) { return f(std::exp(x)) - target; };
    auto tol_fn = [tol](double a, double b) { return std::abs(b - a) <= tol; };
    auto r = boost::math::tools::toms748_solve(g, xl, xh, fl - target, fh - target, tol_fn, iters);
    if (iters >= 200)
        throw NumericalFailure("discretizer: root iteration budget exhausted at index " + std::to_string(index),
                               std::exp(r.second), 0.0);
    // Right end guarantees F(tau) >= target.
    return std::exp(r.second);
}

// Largest tau <= t1 with F(tau) <= target, where F(t1) > target >= 0.
template <class F>
double backward_root(F&& f, double t1, double target, double tol, int index) {
    double xh = std::isinf(t1) ? 0.0 : std::log(t1);
    double fh = std::isinf(t1) ? f(1.0) : f(t1);
    if (std::isinf(t1)) {
        // Walk up until above the target.
        double step = std::log(2.0);
        while (fh <= target) {
            xh += step;
            step *= 2.0;
            if (xh > 690.0) throw NumericalFailure("discretizer: cannot bracket from infinity", target, 0.0);
            fh = f(std::exp(xh));
        }
    }
    double step = std::log(2.0);
    double xl = xh - step;
    double fl = f(std::exp(xl));
    while (fl > target) {
        xh = xl;
        fh = fl;
        step *= 2.0;
        xl = xh - step;
        if (xl < -690.0)
            throw NumericalFailure("discretizer: cannot bracket backward root at index " + std::to_string(index),
                                   std::exp(xh), 0.0);
        fl = f(std::exp(xl));
    }
    if (fl == target) return std::exp(xl);
    std::uintmax_t iters = 200;
    auto g = [&](double x) { return f(std::exp(x)) - target; };
    auto tol_fn = [tol](double a, double b) { return std::abs(b - a) <= tol; };
    auto r = boost::math::tools::toms748_solve(g, xl, xh, fl - target, fh - target, tol_fn, iters);
    if (iters >= 200)
        throw NumericalFailure("discretizer: root iteration budget exhausted at index " + std::to_string(index),
                               std::exp(r.first), 0.0);
    return std::exp(r.first);
}

}  // namespace detail

/// Builds the window of the discretizing sequence that covers
/// [t_min, t_max]. For K = inf the construction runs forward and backward
/// from the anchor; for K = 0 it runs backward from t_K = inf.
inline DiscretizingSequence build_sequence(const Problem& pb, const SequenceOptions& opt = {}) {
    const auto adm = check_admissible(pb);
    if (!adm.admissible) throw InvalidInput("build_sequence: the pair (u, w) is not admissible: " + adm.reason);
    DiscretizingSequence seq;
    seq.top = adm.top == TopFlag::Zero ? TopFlag::Zero : TopFlag::Infinite;
    seq.top_certified = adm.top != TopFlag::Inconclusive;
    detail::Cumulatives cum(pb, seq.top);
    const double D = pb.params.D();
    auto Wf = [&](double t) { return cum.W(t); };
    auto Pf = [&](double t) { return cum.Phi(t); };

    // Backward step from t_k; returns t_{k-1} and the label of index k.
    auto backward = [&](double tk, int k, Label& lab) {
        const double Wk = cum.W(tk);
        const double Pk = cum.Phi(tk);
        double sw = kInf;
        if (std::isfinite(Wk) && Wk > 0.0) sw = detail::backward_root(Wf, tk, Wk / D, opt.root_tol, k);
        const double sp = detail::backward_root(Pf, tk, Pk / D, opt.root_tol, k);
        lab = sw <= sp ? Label::K1 : Label::K2;
        return std::min(sw, sp);
    };
    auto forward = [&](double tk, int k, Label& lab) {
        const double tw = detail::forward_root(Wf, tk, D * cum.W(tk), cum.W_inf, opt.root_tol, k);
        const double tp = detail::forward_root(Pf, tk, D * cum.Phi(tk), cum.Phi_inf, opt.root_tol, k);
        if (std::isinf(tw) && std::isfinite(tp)) {
            // W bounded but phi unbounded: the w-threshold is unreachable.
            lab = Label::K2;
            return tp;
        }
        lab = tw >= tp ? Label::K1 : Label::K2;
        return std::max(tw, tp);
    };

    std::vector<double> up;
    std::vector<Label> up_labels;  // label of the step into up[i]
    std::vector<double> down;
    std::vector<Label> down_labels;  // label of the step out of down[i]
    double start = 0.0;
    if (seq.top == TopFlag::Zero) {
        start = kInf;
        seq.complete_high = true;
    } else {
        start = pb.anchor;
        double t = start;
        int k = 0;
        while (t <= pb.grid.t_max) {
            if (++k > opt.max_steps) throw NumericalFailure("build_sequence: too many forward steps", t, 0.0);
            Label lab;
            const double next = forward(t, k, lab);
            if (!(next > t)) {
                seq.collapsed = true;
                break;
            }
            up.push_back(next);
            up_labels.push_back(lab);
            t = next;
        }
    }
    {
        double t = start;
        int k = 0;
        while (std::isinf(t) || t >= pb.grid.t_min) {
            if (++k > opt.max_steps) throw NumericalFailure("build_sequence: too many backward steps", t, 0.0);
            Label lab;
            const double prev = backward(t, -k + 1, lab);
            if (!(prev < t) || !(prev > 0.0)) {
                seq.collapsed = true;
                break;
            }
            down.push_back(prev);
            down_labels.push_back(lab);
            t = prev;
        }
    }
    std::reverse(down.begin(), down.end());
    std::reverse(down_labels.begin(), down_labels.end());
    seq.t = down;
    seq.labels = down_labels;
    seq.t.push_back(start);
    for (std::size_t i = 0; i < up.size(); ++i) {
        seq.t.push_back(up[i]);
        seq.labels.push_back(up_labels[i]);
    }
    seq.first_index = -static_cast<int>(down.size());
    return seq;
}

struct PropertyCheck {
    std::string name;
    bool pass = true;
    bool vacuous = true;
    std::size_t checked = 0;
    double worst = 0.0;       // worst ratio (or deviation) observed
    long worst_index = -1;    // window position of the worst step
};

struct SequenceReport {
    std::vector<PropertyCheck> checks;  // copson-5 (both sides), -6, -7, -8
    double copson9_constant = 0.0;      // empirical constant, reported only
    bool copson9_checked = false;
    bool strictly_increasing = true;

    bool all_pass() const {
        return strictly_increasing &&
               std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass; });
    }
    const PropertyCheck& get(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw InvalidInput("unknown property " + name);
    }
};

/// Checks the listed properties on consecutive pairs of the window. `tol` is
/// the relative tolerance for the equalities and inequalities.
inline SequenceReport verify_sequence(const Problem& pb, const DiscretizingSequence& seq, double tol = 1e-8) {
    SequenceReport rep;
    PropertyCheck w_right{"copson5_growth"}, w_left{"copson5_sandwich"}, growth{"copson6"}, eq_w{"copson7"},
        eq_phi{"copson8"};
    w_right.worst = w_left.worst = growth.worst = kInf;
    const double D = pb.params.D();
    const std::size_t n = seq.t.size();
    if (n < 2) {
        rep.checks = {w_right, w_left, growth, eq_w, eq_phi};
        for (auto& c : rep.checks) c.worst = 0.0;
        return rep;
    }
    const bool labelled = seq.labels.size() + 1 == n;
    detail::Cumulatives cum(pb, std::isinf(seq.t.back()) ? TopFlag::Zero : TopFlag::Infinite);
    std::vector<double> W(n), P(n);
    for (std::size_t i = 0; i < n; ++i) {
        W[i] = cum.W(seq.t[i]);
        P[i] = cum.Phi(seq.t[i]);
    }
    auto record_min = [](PropertyCheck& c, double ratio, std::size_t i, double lo) {
        c.vacuous = false;
        ++c.checked;
        if (ratio < c.worst) {
            c.worst = ratio;
            c.worst_index = static_cast<long>(i);
        }
        if (!(ratio >= lo)) c.pass = false;
    };
    auto record_dev = [](PropertyCheck& c, double dev, std::size_t i, double hi) {
        c.vacuous = false;
        ++c.checked;
        if (dev > c.worst) {
            c.worst = dev;
            c.worst_index = static_cast<long>(i);
        }
        if (!(dev <= hi)) c.pass = false;
    };
    for (std::size_t i = 1; i < n; ++i) {
        if (!(seq.t[i] > seq.t[i - 1])) rep.strictly_increasing = false;
        const double dW = std::isinf(seq.t[i]) ? integrate_weight(pb.w, seq.t[i - 1], kInf, detail::weight_tol(pb.tol))
                                               : integrate_weight(pb.w, seq.t[i - 1], seq.t[i], detail::weight_tol(pb.tol));
        // Ratios use the extended-real conventions; inf/inf steps count as satisfied.
        auto ratio = [](double a, double b) {
            if (std::isinf(a)) return kInf;
            return xdiv(a, b);
        };
        record_min(w_right, ratio(W[i], D * W[i - 1]), i, 1.0 - tol);
        record_min(w_left, std::isinf(W[i]) ? kInf : ratio(D / (D - 1.0) * dW, W[i]), i, 1.0 - tol);
        record_min(growth, ratio(P[i], D * P[i - 1]), i, 1.0 - tol);
        if (labelled) {
            const Label lab = seq.labels[i - 1];
            if (lab == Label::K1) {
                const double dev = std::isinf(W[i]) ? kInf : std::abs(ratio(W[i], D * W[i - 1]) - 1.0);
                record_dev(eq_w, dev, i, tol);
            } else {
                const double dev = std::isinf(P[i]) ? kInf : std::abs(ratio(P[i], D * P[i - 1]) - 1.0);
                record_dev(eq_phi, dev, i, tol);
            }
        }
    }
    for (auto* c : {&w_right, &w_left, &growth})
        if (c->vacuous) c->worst = 0.0;

    // Empirical constant of the local bound for phi^q on Delta_{k-1}.
    const double e = pb.params.q / pb.params.m;
    const double wt = detail::weight_tol(pb.tol);
    for (std::size_t i = 3; i < n; ++i) {
        const double a3 = seq.t[i - 3], a2 = seq.t[i - 2], a1 = seq.t[i - 1], a0 = seq.t[i];
        const double term1 = xmul(integrate_weight(pb.w, a3, a2, wt), xpow(integrate_weight(pb.u, a2, a1, wt), e));
        auto inner = integrate(
            [&](double s) { return xmul(eval_weight(pb.w, s), xpow(integrate_weight(pb.u, s, a1, wt), e)); }, a2, a1,
            pb.quad(), detail::merged_breaks(pb.u, pb.w));
        const double Wd2 = integrate_weight(pb.w, a2, a1, wt);
        const double hi = std::isinf(a0) ? a1 * 1e4 : a0;
        for (int j = 0; j <= 8; ++j) {
            const double t = a1 * std::pow(hi / a1, j / 8.0);
            const double rhs = term1 + inner.value + xmul(Wd2, xpow(integrate_weight(pb.u, a1, t, wt), e));
            const double lhs = cum.Phi(t);
            const double c = xdiv(lhs, rhs);
            rep.copson9_constant = std::max(rep.copson9_constant, c);
            rep.copson9_checked = true;
        }
    }
    rep.checks = {w_right, w_left, growth, eq_w, eq_phi};
    return rep;
}

}  // namespace copson
