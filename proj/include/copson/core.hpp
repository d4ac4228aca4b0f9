#pragma once

// Exponent triples, problems, the fundamental function
//
//     phi(t) = ( int_0^t ( int_s^t u )^(q/m) w(s) ds )^(1/q),
//
// admissibility, and the two sides of the inequality for piecewise-constant
// test functions on the log grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copson/errors.hpp"
#include "copson/quadrature.hpp"
#include "copson/weights.hpp"

namespace copson {

struct Parameters {
    double p = 2.0;
    double q = 2.0;
    double m = 2.0;

    void validate() const {
        if (!std::isfinite(p) || !(p >= 1.0)) throw InvalidInput("parameters: p must be finite and >= 1");
        if (!std::isfinite(q) || !(q > 0.0)) throw InvalidInput("parameters: q must be finite and > 0");
        if (!std::isfinite(m) || !(m > 0.0)) throw InvalidInput("parameters: m must be finite and > 0");
    }

    /// p' (+inf when p = 1).
    double p_conj() const { return p == 1.0 ? kInf : p / (p - 1.0); }
    /// 1 - p' = -1/(p-1), the exponent of the dual weight.
    double dual_exp() const {
        if (p == 1.0) throw InvalidInput("1 - p' is undefined for p = 1");
        return -1.0 / (p - 1.0);
    }
    /// q' (signed; +inf when q = 1).
    double q_conj() const { return q == 1.0 ? kInf : q / (q - 1.0); }
    bool has_r() const { return q < p; }
    double r() const {
        if (!has_r()) throw InvalidInput("r = pq/(p-q) requires q < p");
        return p * q / (p - q);
    }
    /// r/q' with the convention r/q' = 0 at q = 1.
    double r_over_qconj() const { return r() * (q - 1.0) / q; }
    /// Doubling factor 2^(q/m + 1).
    double D() const { return std::pow(2.0, q / m + 1.0); }

    bool operator==(const Parameters&) const = default;
};

struct Problem {
    Parameters params;
    WeightExpr u;
    WeightExpr v;
    WeightExpr w;
    GridSpec grid;
    double anchor = 1.0;
    double tol = 1e-10;  // relative quadrature tolerance

    void validate() const {
        params.validate();
        grid.validate();
        if (!(anchor > 0.0) || !std::isfinite(anchor)) throw InvalidInput("anchor must be positive and finite");
        if (!(tol >= 1e-14) || !(tol <= 1e-2)) throw InvalidInput("tolerance must lie in [1e-14, 1e-2]");
    }

    QuadOptions quad() const {
        QuadOptions o;
        o.rel_tol = tol;
        return o;
    }

    bool operator==(const Problem&) const = default;
};

namespace detail {

inline std::vector<double> merged_breaks(const WeightExpr& a, const WeightExpr& b) {
    auto x = a.breakpoints();
    auto y = b.breakpoints();
    x.insert(x.end(), y.begin(), y.end());
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    return x;
}

inline double weight_tol(double tol) { return std::min(1e-12, tol); }

}  // namespace detail

/// phi(t)^q for weights u, w and ratio e = q/m; t may be +inf.
inline double phi_pow_q(const WeightExpr& u, const WeightExpr& w, double q, double m, double t,
                        const QuadOptions& opt = {}) {
    if (!(t > 0.0)) throw InvalidInput("phi: t must be positive");
    if (u.empty() || w.empty()) return 0.0;
    const double e = q / m;
    const double wt = detail::weight_tol(opt.rel_tol);
    const auto br = detail::merged_breaks(u, w);
    auto f = [&](double s) {
        const double ws = eval_weight(w, s);
        if (ws == 0.0) return 0.0;
        return xmul(xpow(integrate_weight(u, s, t, wt), e), ws);
    };
    auto est = integrate(f, 0.0, t, opt, br);
    if (!est.converged) {
        if (est.value > 1e150) return kInf;
        throw NumericalFailure("phi quadrature did not reach tolerance", est.value, est.abs_error);
    }
    return est.value;
}

inline double phi_pow_q(const Problem& pb, double t) {
    return phi_pow_q(pb.u, pb.w, pb.params.q, pb.params.m, t, pb.quad());
}

inline double phi(const Problem& pb, double t) { return xpow(phi_pow_q(pb, t), 1.0 / pb.params.q); }

enum class TopFlag { Zero, Infinite, Inconclusive };

inline const char* to_string(TopFlag f) {
    switch (f) {
        case TopFlag::Zero: return "0";
        case TopFlag::Infinite: return "inf";
        case TopFlag::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct AdmissibilityReport {
    bool admissible = false;
    TopFlag top = TopFlag::Inconclusive;
    double phi_inf = kInf;           // phi(inf)^q when finite
    double phi_min = 0.0;            // phi on the grid
    double phi_max = 0.0;
    bool vanishes_at_zero = false;   // phi(t_min * 1e-6) << phi(t_min)
    double zero_probe_ratio = 0.0;
    std::string reason;
};

/// Samples phi on the grid (0 < phi < inf required) and determines the
/// top-index flag K from phi(inf).
inline AdmissibilityReport check_admissible(const Problem& pb) {
    pb.validate();
    AdmissibilityReport rep;
    const auto nodes = pb.grid.nodes();
    rep.phi_min = kInf;
    for (double t : nodes) {
        const double f = phi_pow_q(pb, t);
        rep.phi_min = std::min(rep.phi_min, f);
        rep.phi_max = std::max(rep.phi_max, f);
        if (!(f > 0.0)) {
            rep.reason = "phi vanishes at t = " + std::to_string(t);
            rep.phi_min = rep.phi_max = 0.0;
            return rep;
        }
        if (std::isinf(f)) {
            rep.reason = "phi is infinite at t = " + std::to_string(t);
            return rep;
        }
    }
    const double iq = 1.0 / pb.params.q;
    rep.phi_min = std::pow(rep.phi_min, iq);
    rep.phi_max = std::pow(rep.phi_max, iq);
    rep.admissible = true;

    const double at_min = phi_pow_q(pb, pb.grid.t_min);
    const double below = phi_pow_q(pb, pb.grid.t_min * 1e-6);
    rep.zero_probe_ratio = std::pow(below / at_min, iq);
    rep.vanishes_at_zero = rep.zero_probe_ratio < 0.1;

    // K: phi(inf)^q = int_0^inf (int_s^inf u)^(q/m) w(s) ds.
    const double tail_u = integrate_weight(pb.u, pb.grid.t_max, kInf, detail::weight_tol(pb.tol));
    if (std::isinf(tail_u)) {
        rep.top = TopFlag::Infinite;
        return rep;
    }
    double total = kInf;
    bool ok = false;
    try {
        total = phi_pow_q(pb, kInf);
        ok = true;
    } catch (const NumericalFailure&) {
    }
    if (ok && std::isinf(total)) {
        rep.top = TopFlag::Infinite;
        return rep;
    }
    if (ok) {
        const double probe = phi_pow_q(pb, pb.grid.t_max * 1e6);
        if (probe >= (1.0 - 1e-3) * total) {
            rep.top = TopFlag::Zero;
            rep.phi_inf = total;
            return rep;
        }
    }
    double prev = phi_pow_q(pb, pb.grid.t_max);
    bool growing = true;
    for (double f : {1e2, 1e4, 1e6}) {
        const double cur = phi_pow_q(pb, pb.grid.t_max * f);
        if (!(cur >= 2.0 * prev)) growing = false;
        prev = cur;
    }
    rep.top = growing ? TopFlag::Infinite : TopFlag::Inconclusive;
    return rep;
}

/// Piecewise-constant nonnegative function on the grid cells
/// (t_i, t_{i+1}), zero outside [t_min, t_max].
struct TestFunction {
    std::vector<double> nodes;
    std::vector<double> values;  // one per cell

    static TestFunction zeros(const GridSpec& g) {
        TestFunction h;
        h.nodes = g.nodes();
        h.values.assign(h.nodes.size() - 1, 0.0);
        return h;
    }

    /// Samples f at the geometric midpoint of each cell.
    template <class F>
    static TestFunction sampled(const GridSpec& g, F&& f) {
        auto h = zeros(g);
        for (std::size_t i = 0; i < h.values.size(); ++i) h.values[i] = f(std::sqrt(h.nodes[i] * h.nodes[i + 1]));
        h.validate();
        return h;
    }

    void validate() const {
        if (nodes.size() < 2 || values.size() + 1 != nodes.size())
            throw InvalidInput("test function: need one value per grid cell");
        for (double x : values)
            if (!is_finite_nonneg(x)) throw InvalidInput("test function: values must be finite and >= 0");
    }

    bool nonzero() const {
        return std::any_of(values.begin(), values.end(), [](double x) { return x > 0.0; });
    }

    std::size_t cells() const { return values.size(); }
};

/// Evaluates lhs^q and rhs^p for piecewise-constant h on a fixed grid, with
/// the analytic gradient of lhs^q.
///
/// H(y) = int_y^inf h is piecewise linear; cells are split at weight
/// breakpoints into subcells on which 8-point Gauss-Legendre rules are used
/// for both the outer variable and the inner u-integral. Below t_min the
/// outer integrand is (H0^m A(t) + G0)^(q/m) w(t) with A(t) = int_t^{t_min} u,
/// integrated by a rule frozen once per problem.
class RatioEvaluator {
public:
    explicit RatioEvaluator(const Problem& pb) : params_(pb.params) {
        pb.validate();
        nodes_ = pb.grid.nodes();
        const std::size_t n = nodes_.size() - 1;
        len_.resize(n);
        vcell_.resize(n);
        const double wt = detail::weight_tol(pb.tol);
        for (std::size_t i = 0; i < n; ++i) {
            len_[i] = nodes_[i + 1] - nodes_[i];
            vcell_[i] = integrate_weight(pb.v, nodes_[i], nodes_[i + 1], wt);
        }
        build_subcells(pb);
        build_below(pb);
    }

    std::size_t cells() const { return len_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& lengths() const { return len_; }
    /// V_i = int over cell i of v.
    const std::vector<double>& cell_v() const { return vcell_; }
    const Parameters& params() const { return params_; }

    /// lhs(h)^q; fills grad with d(lhs^q)/dh_i when requested.
    double lhs_pow_q(std::span<const double> h, std::vector<double>* grad = nullptr) const {
        check(h);
        const std::size_t n = cells();
        const double m = params_.m;
        const double e = params_.q / params_.m;
        std::vector<double> H(n + 1, 0.0);
        for (std::size_t i = n; i-- > 0;) H[i] = H[i + 1] + h[i] * len_[i];

        auto Hs = [&](std::size_t cell, double d) { return H[cell + 1] + h[cell] * d; };

        // Right-to-left accumulation of G.
        std::vector<double> Gk(subs_.size() * kOuter, 0.0);
        double Gright = 0.0;
        double L = 0.0;
        for (std::size_t b = subs_.size(); b-- > 0;) {
            const auto& s = subs_[b];
            for (int k = 0; k < kOuter; ++k) {
                double g = Gright;
                for (const auto& nd : s.partial[k]) g += nd.kappa * xpow(Hs(s.cell, nd.d), m);
                Gk[b * kOuter + k] = g;
                L += s.omega[k] * xpow(g, e);
            }
            for (const auto& nd : s.full) Gright += nd.kappa * xpow(Hs(s.cell, nd.d), m);
        }
        const double G0 = Gright;
        const double H0m = xpow(H[0], m);
        std::vector<double> Gj(below_.size());
        for (std::size_t j = 0; j < below_.size(); ++j) {
            Gj[j] = H0m * below_[j].A + G0;
            L += below_[j].omega * xpow(Gj[j], e);
        }
        if (!grad) return L;

        // Adjoint pass.
        grad->assign(n, 0.0);
        auto lam = [&](double omega, double g) { return g > 0.0 ? omega * e * std::pow(g, e - 1.0) : 0.0; };
        auto dpow = [&](double x) { return x > 0.0 ? m * std::pow(x, m - 1.0) : 0.0; };
        std::vector<double> Mcell(n, 0.0), Dcell(n, 0.0);
        double Lambda = 0.0;
        double dH0 = 0.0;
        const double dH0m = dpow(H[0]);
        for (std::size_t j = 0; j < below_.size(); ++j) {
            const double l = lam(below_[j].omega, Gj[j]);
            Lambda += l;
            dH0 += l * dH0m * below_[j].A;
        }
        for (std::size_t b = 0; b < subs_.size(); ++b) {
            const auto& s = subs_[b];
            for (const auto& nd : s.full) {
                const double c = Lambda * nd.kappa * dpow(Hs(s.cell, nd.d));
                Mcell[s.cell] += c;
                Dcell[s.cell] += c * nd.d;
            }
            double lsum = 0.0;
            for (int k = 0; k < kOuter; ++k) {
                const double l = lam(s.omega[k], Gk[b * kOuter + k]);
                lsum += l;
                for (const auto& nd : s.partial[k]) {
                    const double c = l * nd.kappa * dpow(Hs(s.cell, nd.d));
                    Mcell[s.cell] += c;
                    Dcell[s.cell] += c * nd.d;
                }
            }
            Lambda += lsum;
        }
        double prefix = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            (*grad)[l] = len_[l] * (prefix + dH0) + Dcell[l];
            prefix += Mcell[l];
        }
        return L;
    }

    /// rhs(h)^p = sum_i h_i^p V_i.
    double rhs_pow_p(std::span<const double> h) const {
        check(h);
        double s = 0.0;
        for (std::size_t i = 0; i < cells(); ++i) s += xmul(xpow(h[i], params_.p), vcell_[i]);
        return s;
    }

    double lhs(std::span<const double> h) const { return xpow(lhs_pow_q(h), 1.0 / params_.q); }
    double rhs(std::span<const double> h) const { return xpow(rhs_pow_p(h), 1.0 / params_.p); }

    /// lhs/rhs with 0/0 = 0.
    double ratio(std::span<const double> h) const { return xdiv(lhs(h), rhs(h)); }

private:
    static constexpr int kOuter = 8;
    struct InnerNode {
        double d;      // t_{i+1} - s
        double kappa;  // u(s) * quadrature weight
    };
    struct Subcell {
        std::size_t cell;
        std::array<double, kOuter> omega{};  // w(t) * quadrature weight
        std::array<std::vector<InnerNode>, kOuter> partial;
        std::vector<InnerNode> full;
    };
    struct BelowNode {
        double omega;
        double A;
    };

    void check(std::span<const double> h) const {
        if (h.size() != cells()) throw InvalidInput("test function does not match the grid");
    }

    void build_subcells(const Problem& pb) {
        const auto& gl = gauss_legendre(kOuter);
        const auto br = detail::merged_breaks(pb.u, pb.w);
        double rate = 0.0;
        for (const auto* wx : {&pb.u, &pb.w})
            for (const auto& t : wx->terms()) rate = std::max(rate, std::abs(t.exp_rate));

        auto rule = [&](double a, double c, auto&& weight) {
            std::vector<std::pair<double, double>> out;
            const double mid = 0.5 * (a + c), hw = 0.5 * (c - a);
            for (const auto& [x, wgt] : gl) {
                const double s = mid + hw * x;
                out.push_back({s, wgt * hw * weight(s)});
            }
            return out;
        };

        for (std::size_t i = 0; i < cells(); ++i) {
            std::vector<double> cuts{nodes_[i], nodes_[i + 1]};
            for (double b : br)
                if (b > nodes_[i] && b < nodes_[i + 1]) cuts.push_back(b);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                const double a = cuts[c], z = cuts[c + 1];
                int pieces = static_cast<int>(std::ceil(std::log(z / a) / std::log(1.5) - 1e-12));
                pieces = std::max(pieces, static_cast<int>(std::ceil(rate * (z - a) / 2.0 - 1e-12)));
                pieces = std::clamp(pieces, 1, 64);
                const double ratio = std::pow(z / a, 1.0 / pieces);
                double lo = a;
                for (int k = 0; k < pieces; ++k) {
                    const double hi = k + 1 == pieces ? z : lo * ratio;
                    subs_.push_back(make_sub(pb, i, lo, hi, rule));
                    lo = hi;
                }
            }
        }
    }

    template <class Rule>
    Subcell make_sub(const Problem& pb, std::size_t cell, double a, double c, Rule& rule) const {
        Subcell s;
        s.cell = cell;
        const double right = nodes_[cell + 1];
        auto uw = [&](double t) { return eval_weight(pb.u, t); };
        for (const auto& [t, k] : rule(a, c, uw))
            if (k > 0.0) s.full.push_back({right - t, k});
        int k = 0;
        for (const auto& [t, om] : rule(a, c, [&](double x) { return eval_weight(pb.w, x); })) {
            s.omega[k] = om;
            for (const auto& [y, kap] : rule(t, c, uw))
                if (kap > 0.0) s.partial[k].push_back({right - y, kap});
            ++k;
        }
        return s;
    }

    void build_below(const Problem& pb) {
        const double t0 = nodes_.front();
        const double e = params_.q / params_.m;
        const double wt = detail::weight_tol(pb.tol);
        const auto br = detail::merged_breaks(pb.u, pb.w);
        const bool w_finite = std::isfinite(integrate_weight(pb.w, 0.0, t0, wt));
        auto shape = [&](double t) {
            const double ws = eval_weight(pb.w, t);
            if (ws == 0.0) return 0.0;
            const double A = integrate_weight(pb.u, t, t0, wt);
            return xmul(xpow(A, e) + (w_finite ? 1.0 : 0.0), ws);
        };
        QuadOptions opt = pb.quad();
        opt.rel_tol = std::max(opt.rel_tol, 1e-10);
        for (const auto& nd : adaptive_rule(shape, 0.0, t0, opt, br)) {
            const double ws = eval_weight(pb.w, nd.t);
            if (ws == 0.0) continue;
            below_.push_back({nd.weight * ws, integrate_weight(pb.u, nd.t, t0, wt)});
        }
    }

    Parameters params_;
    std::vector<double> nodes_;
    std::vector<double> len_;
    std::vector<double> vcell_;
    std::vector<Subcell> subs_;
    std::vector<BelowNode> below_;
};

inline double lhs_norm(const Problem& pb, const TestFunction& h) {
    h.validate();
    RatioEvaluator ev(pb);
    return ev.lhs(h.values);
}

inline double rhs_norm(const Problem& pb, const TestFunction& h) {
    h.validate();
    RatioEvaluator ev(pb);
    return ev.rhs(h.values);
}

}  // namespace copson
