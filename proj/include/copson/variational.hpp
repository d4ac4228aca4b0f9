#pragma once

// Lower bounds for the optimal constant: saturating test functions for the
// Hoelder and Hardy inequalities, multiplicative ascent of the ratio over
// piecewise-constant h, and the w-free upper bound used for the
// counterexample family.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copson/core.hpp"
#include "copson/discrete_conditions.hpp"
#include "copson/discretizer.hpp"
#include "copson/errors.hpp"
#include "copson/quadrature.hpp"
#include "copson/weights.hpp"

namespace copson {

enum class SaturatorKind { holder, hardy_i, hardy_ii };

inline const char* to_string(SaturatorKind k) {
    switch (k) {
        case SaturatorKind::holder: return "holder";
        case SaturatorKind::hardy_i: return "hardy_i";
        case SaturatorKind::hardy_ii: return "hardy_ii";
    }
    return "?";
}

struct Saturator {
    SaturatorKind kind = SaturatorKind::holder;
    double a = 0.0;
    double b = 0.0;
    TestFunction g;
    double normalization = 0.0;  // int g^p v (Hoelder) or int g^alpha eta (Hardy)
    double integral = 0.0;       // int g (Hoelder only)
    double target = 0.0;         // (int_a^b v^(1-p'))^(1/p') (Hoelder only)
    double ratio = 0.0;          // Hardy: lhs/rhs achieved by g
};

namespace detail {

/// The ratio L(h)^(1/s) / (sum h^p V)^(1/p) with the gradient of L.
struct AscentModel {
    std::function<double(std::span<const double>, std::vector<double>*)> lhs_pow;
    double s = 1.0;
    double p = 2.0;
    std::vector<double> V;

    double norm_pow(std::span<const double> h) const {
        double n = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) n += xmul(xpow(h[i], p), V[i]);
        return n;
    }
    double ratio(std::span<const double> h) const {
        return xdiv(xpow(lhs_pow(h, nullptr), 1.0 / s), xpow(norm_pow(h), 1.0 / p));
    }
    /// Scales h to unit norm; false when the norm is 0 or infinite.
    bool normalize(std::vector<double>& h) const {
        const double n = norm_pow(h);
        if (!(n > 0.0) || std::isinf(n)) return false;
        const double c = std::pow(n, -1.0 / p);
        for (auto& x : h) x *= c;
        return true;
    }
};

struct AscentResult {
    std::vector<double> h;
    double ratio = 0.0;
    int iterations = 0;
    std::vector<double> history;  // ratio after each accepted step
};

/// Multiplicative ascent: blend toward the fixed-point target
/// h_i ~ (dL/dh_i / V_i)^(1/(p-1)) (for p = 1 the best single cell), then
/// multiplicative moves on the coordinates with the largest log-derivative.
/// Steps that do not increase the ratio are rolled back.
inline AscentResult ascend(const AscentModel& M, std::vector<double> h, int max_iter) {
    AscentResult res;
    const std::size_t n = h.size();
    if (!M.normalize(h)) {
        res.h = std::move(h);
        res.ratio = 0.0;
        return res;
    }
    double R = M.ratio(h);
    res.history.push_back(R);
    if (!std::isfinite(R)) {
        res.h = std::move(h);
        res.ratio = R;
        return res;
    }
    std::vector<double> g, cand(n), target(n);
    int stalls = 0;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        const double L = M.lhs_pow(h, &g);
        if (!(L > 0.0)) break;
        bool ok = true;
        if (M.p > 1.0) {
            for (std::size_t i = 0; i < n; ++i) {
                if (M.V[i] > 0.0) target[i] = std::isinf(M.V[i]) ? 0.0 : std::pow(std::max(g[i], 0.0) / M.V[i], 1.0 / (M.p - 1.0));
                else target[i] = g[i] > 0.0 ? kInf : 0.0;
                if (std::isinf(target[i])) ok = false;
            }
        } else {
            std::size_t best = n;
            double bv = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!(M.V[i] > 0.0) || std::isinf(M.V[i])) continue;
                const double c = g[i] / M.V[i];
                if (c > bv) bv = c, best = i;
            }
            std::fill(target.begin(), target.end(), 0.0);
            if (best < n) target[best] = 1.0;
        }
        bool accepted = false;
        if (ok && M.normalize(target)) {
            for (double theta : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}) {
                for (std::size_t i = 0; i < n; ++i) cand[i] = (1.0 - theta) * h[i] + theta * target[i];
                if (!M.normalize(cand)) continue;
                const double Rc = M.ratio(cand);
                if (Rc > R * (1.0 + 1e-14)) {
                    accepted = true;
                    const double gain = Rc / R - 1.0;
                    h = cand;
                    R = Rc;
                    stalls = gain < 1e-10 ? stalls + 1 : 0;
                    break;
                }
            }
        }
        if (!accepted) {
            // Coordinate moves on the steepest log-derivatives.
            const double N = M.norm_pow(h);
            std::vector<std::pair<double, std::size_t>> score;
            for (std::size_t i = 0; i < n; ++i) {
                double d;
                if (h[i] > 0.0) d = h[i] * g[i] / (M.s * L) - xmul(xpow(h[i], M.p), M.V[i]) / N;
                else d = g[i] > 0.0 && std::isfinite(M.V[i]) ? 1.0 : 0.0;
                if (d != 0.0) score.push_back({-std::abs(d), i});
            }
            std::sort(score.begin(), score.end());
            for (std::size_t c = 0; c < std::min<std::size_t>(score.size(), 4) && !accepted; ++c) {
                const std::size_t i = score[c].second;
                const double d = h[i] > 0.0 ? h[i] * g[i] / (M.s * L) - xmul(xpow(h[i], M.p), M.V[i]) / N : 1.0;
                std::vector<double> moves;
                if (h[i] == 0.0) {
                    double ref = 0.0;
                    for (double x : h) ref = std::max(ref, x);
                    moves = {ref * 1e-2, ref * 1e-1, ref};
                } else if (d > 0.0) {
                    moves = {h[i] * std::exp(1.0), h[i] * std::exp(0.25), h[i] * std::exp(0.05)};
                } else {
                    moves = {0.0, h[i] * std::exp(-1.0), h[i] * std::exp(-0.25), h[i] * std::exp(-0.05)};
                }
                for (double x : moves) {
                    cand = h;
                    cand[i] = x;
                    if (!M.normalize(cand)) continue;
                    const double Rc = M.ratio(cand);
                    if (Rc > R * (1.0 + 1e-14)) {
                        h = cand;
                        R = Rc;
                        accepted = true;
                        stalls = 0;
                        break;
                    }
                }
            }
        }
        if (!accepted) break;
        res.history.push_back(R);
        if (stalls >= 3) break;
    }
    res.h = std::move(h);
    res.ratio = R;
    return res;
}

/// Discrete Hoelder extremal on cells [i0, i1): h_i = (len_i / V_i)^(1/(p-1)),
/// the maximizer of sum h_i len_i at fixed sum h_i^p V_i.
inline std::vector<double> holder_values(const std::vector<double>& len, const std::vector<double>& V, double p,
                                         std::size_t i0, std::size_t i1) {
    std::vector<double> h(len.size(), 0.0);
    for (std::size_t i = i0; i < i1; ++i) {
        if (!(V[i] > 0.0)) return {};
        h[i] = std::isinf(V[i]) ? 0.0 : std::pow(len[i] / V[i], 1.0 / (p - 1.0));
    }
    return h;
}

/// Cells of `nodes` lying inside [a, b] (up to rounding).
inline std::pair<std::size_t, std::size_t> cells_within(const std::vector<double>& nodes, double a, double b) {
    std::size_t i0 = nodes.size() - 1, i1 = 0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (nodes[i] >= a * (1.0 - 1e-12) && nodes[i + 1] <= b * (1.0 + 1e-12)) {
            i0 = std::min(i0, i);
            i1 = std::max(i1, i + 1);
        }
    }
    return {i0, i1};
}

}  // namespace detail

/// Hoelder saturator on [a, b] for the problem's grid and v.
inline Saturator holder_saturator(const Problem& pb, double a, double b) {
    pb.validate();
    const double p = pb.params.p;
    if (!(p > 1.0)) throw InvalidInput("holder saturator needs p > 1");
    if (!(a < b) || a < 0.0) throw InvalidInput("holder saturator: need 0 <= a < b");
    DualWeight dw(pb.v, p);
    const double total = dw.integral(a, b, detail::weight_tol(pb.tol));
    if (!(total > 0.0) || std::isinf(total))
        throw InvalidInput("holder saturator: int_a^b v^(1-p') must be positive and finite");
    RatioEvaluator ev(pb);
    const auto [i0, i1] = detail::cells_within(ev.nodes(), std::max(a, pb.grid.t_min), std::min(b, pb.grid.t_max));
    if (i0 >= i1) throw InvalidInput("holder saturator: no grid cell inside [a, b]");
    auto h = detail::holder_values(ev.lengths(), ev.cell_v(), p, i0, i1);
    if (h.empty()) throw InvalidInput("holder saturator: v vanishes on a grid cell");
    detail::AscentModel M{[](std::span<const double>, std::vector<double>*) { return 0.0; }, 1.0, p, ev.cell_v()};
    if (!M.normalize(h)) throw InvalidInput("holder saturator: degenerate cell weights");
    Saturator s;
    s.kind = SaturatorKind::holder;
    s.a = a;
    s.b = b;
    s.g.nodes = ev.nodes();
    s.g.values = h;
    s.normalization = M.norm_pow(h);
    for (std::size_t i = 0; i < h.size(); ++i) s.integral += h[i] * ev.lengths()[i];
    s.target = std::pow(total, 1.0 / pb.params.p_conj());
    return s;
}

struct HardyResult {
    double condition = 0.0;
    SaturatorKind kind = SaturatorKind::hardy_i;
    Saturator saturator;
};

/// Ratio (int_a^b (int_t^b h)^beta rho)^(1/beta) / (int h^alpha eta)^(1/alpha)
/// for h piecewise constant on a log grid inside [a, b].
class HardyEvaluator {
public:
    HardyEvaluator(double beta, const WeightExpr& eta, const WeightExpr& rho, double a, const GridSpec& g)
        : beta_(beta), nodes_(g.nodes()) {
        const std::size_t n = nodes_.size() - 1;
        len_.resize(n);
        V_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            len_[i] = nodes_[i + 1] - nodes_[i];
            V_[i] = integrate_weight(eta, nodes_[i], nodes_[i + 1], 1e-12);
        }
        below_ = integrate_weight(rho, a, nodes_.front(), 1e-12);
        const auto& gl = gauss_legendre(16);
        const auto br = rho.breakpoints();
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> cuts{nodes_[i], nodes_[i + 1]};
            for (double x : br)
                if (x > nodes_[i] && x < nodes_[i + 1]) cuts.push_back(x);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                const double xl = std::log(cuts[c]), xr = std::log(cuts[c + 1]);
                const double mid = 0.5 * (xl + xr), hw = 0.5 * (xr - xl);
                for (const auto& [x, w] : gl) {
                    const double t = std::exp(mid + hw * x);
                    const double om = w * hw * t * eval_weight(rho, t);
                    if (om > 0.0) nodes_q_.push_back({i, nodes_[i + 1] - t, om});
                }
            }
        }
    }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& lengths() const { return len_; }
    const std::vector<double>& cell_eta() const { return V_; }

    double lhs_pow(std::span<const double> h, std::vector<double>* grad) const {
        const std::size_t n = len_.size();
        std::vector<double> H(n + 1, 0.0);
        for (std::size_t i = n; i-- > 0;) H[i] = H[i + 1] + h[i] * len_[i];
        double L = xmul(xpow(H[0], beta_), below_);
        std::vector<double> lam_cell(n, 0.0), lam_d(n, 0.0);
        for (const auto& q : nodes_q_) {
            const double Ht = H[q.cell + 1] + h[q.cell] * q.d;
            L += q.omega * xpow(Ht, beta_);
            if (grad && Ht > 0.0) {
                const double l = q.omega * beta_ * std::pow(Ht, beta_ - 1.0);
                lam_cell[q.cell] += l;
                lam_d[q.cell] += l * q.d;
            }
        }
        if (grad) {
            grad->assign(n, 0.0);
            double prefix = H[0] > 0.0 ? below_ * beta_ * std::pow(H[0], beta_ - 1.0) : 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                (*grad)[j] = len_[j] * prefix + lam_d[j];
                prefix += lam_cell[j];
            }
        }
        return L;
    }

private:
    struct QNode {
        std::size_t cell;
        double d;  // t_{cell+1} - t
        double omega;
    };
    double beta_;
    std::vector<double> nodes_;
    std::vector<double> len_;
    std::vector<double> V_;
    double below_ = 0.0;
    std::vector<QNode> nodes_q_;
};

/// Condition of the Hardy inequality on (a, b) and a near-saturating g:
/// case (i) for 1 < alpha <= beta, case (ii) for 0 < beta < alpha.
/// The grid defaults to 40 points per decade over [a or 1e-6 b, b or 1e4].
inline HardyResult hardy_pair(double alpha, double beta, const WeightExpr& eta, const WeightExpr& rho, double a,
                              double b, std::optional<GridSpec> grid = std::nullopt, int iterations = 200) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw InvalidInput("hardy: need 1 < alpha < inf");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInput("hardy: need 0 < beta < inf");
    if (!(a >= 0.0) || !(a < b)) throw InvalidInput("hardy: need 0 <= a < b");
    const bool case_i = alpha <= beta;
    if (!grid) {
        const double hi = std::isfinite(b) ? b : 1e4;
        grid = GridSpec{a > 0.0 ? a : hi * 1e-6, hi, 40};
    }
    grid->validate();
    DualWeight dw(eta, alpha);
    const double ac = alpha / (alpha - 1.0);
    auto P = [&](double t) { return integrate_weight(rho, a, t, 1e-12); };
    auto S = [&](double t) { return dw.integral(t, b, 1e-12); };
    if (!case_i && std::isinf(S(grid->nodes()[1])))
        throw InvalidInput("hardy (ii): int_t^b eta^(1-alpha') must be finite");
    if (rho.empty() || eta.empty()) throw InvalidInput("hardy: degenerate weights");

    HardyResult out;
    out.kind = case_i ? SaturatorKind::hardy_i : SaturatorKind::hardy_ii;
    const double th1 = case_i ? 0.0 : 1.0 / (alpha - beta);
    const double th2 = case_i ? 0.0 : (beta - 1.0) / (alpha - beta);
    if (case_i) {
        const GridSpec sg{grid->t_min, grid->t_max, std::max(grid->points_per_decade, 64)};
        out.condition = sup_on_interval(
                            [&](double t) { return xmul(xpow(P(t), 1.0 / beta), xpow(S(t), 1.0 / ac)); },
                            grid->t_min, grid->t_max, sg)
                            .value;
    } else {
        const double e1 = alpha / (alpha - beta), e2 = alpha * (beta - 1.0) / (alpha - beta);
        QuadOptions o;
        o.rel_tol = 1e-10;
        auto est = integrate(
            [&](double t) {
                const double d = dw.density(t);
                if (d == 0.0) return 0.0;
                return xmul(xmul(xpow(P(t), e1), xpow(S(t), e2)), d);
            },
            a, b, o, eta.breakpoints());
        out.condition = xpow(est.value, (alpha - beta) / (alpha * beta));
    }

    HardyEvaluator ev(beta, eta, rho, a, *grid);
    detail::AscentModel M{[&](std::span<const double> h, std::vector<double>* g) { return ev.lhs_pow(h, g); }, beta,
                          alpha, ev.cell_eta()};
    const auto& nodes = ev.nodes();
    const std::size_t n = ev.lengths().size();
    // Warm starts: eta^(1-alpha') P^th1 S^th2 at a few fractions of the exponents,
    // plus tails (t_j, b) for case (i).
    std::vector<std::vector<double>> starts;
    for (double f : {0.0, 0.5, 1.0}) {
        std::vector<double> h(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double mid = std::sqrt(nodes[i] * nodes[i + 1]);
            const double base = ev.cell_eta()[i] > 0.0 ? std::pow(ev.lengths()[i] / ev.cell_eta()[i], 1.0 / (alpha - 1.0)) : 0.0;
            h[i] = xmul(base, xmul(xpow(P(mid), f * th1), xpow(S(mid), f * th2)));
            if (!std::isfinite(h[i])) h[i] = 0.0;
        }
        starts.push_back(std::move(h));
    }
    if (case_i) {
        for (std::size_t j = 0; j < n; j += std::max<std::size_t>(1, n / 40)) {
            auto h = detail::holder_values(ev.lengths(), ev.cell_eta(), alpha, j, n);
            if (!h.empty()) starts.push_back(std::move(h));
        }
    }
    std::size_t best = 0;
    double best_r = -1.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        if (!M.normalize(starts[k])) continue;
        const double r = M.ratio(starts[k]);
        if (r > best_r) best_r = r, best = k;
    }
    if (best_r < 0.0) throw InvalidInput("hardy: no admissible warm start");
    auto res = detail::ascend(M, starts[best], iterations);
    out.saturator.kind = out.kind;
    out.saturator.a = a;
    out.saturator.b = b;
    out.saturator.g.nodes = nodes;
    out.saturator.g.values = res.h;
    out.saturator.normalization = M.norm_pow(res.h);
    out.saturator.ratio = res.ratio;
    return out;
}

struct Budget {
    int seeds = 4;        // candidates that receive ascent
    int iterations = 60;  // ascent steps per candidate
};

struct SeedTrace {
    std::string seed;
    double initial = 0.0;
    double final_ratio = 0.0;
    int iterations = 0;
};

struct CEstimate {
    double lower_bound = 0.0;
    TestFunction best_h;
    std::string best_seed;
    std::size_t seeds_evaluated = 0;
    std::vector<SeedTrace> trace;  // ascended candidates
    double holder_tail_best = 0.0;  // best ratio among Hoelder tail seeds alone
    bool zero_ratio = false;
    bool ascent_monotone = true;
};

/// Best ratio lhs/rhs found from the saturator seeds followed by ascent.
inline CEstimate estimate_C(const Problem& pb, const Budget& budget = {}) {
    pb.validate();
    if (budget.seeds < 0 || budget.iterations < 0) throw InvalidInput("budget must be nonnegative");
    RatioEvaluator ev(pb);
    const auto& nodes = ev.nodes();
    const auto& len = ev.lengths();
    const auto& V = ev.cell_v();
    const std::size_t n = ev.cells();
    const double p = pb.params.p, q = pb.params.q, m = pb.params.m;
    detail::AscentModel M{[&](std::span<const double> h, std::vector<double>* g) { return ev.lhs_pow_q(h, g); }, q, p,
                          V};

    struct Cand {
        std::string name;
        std::vector<double> h;
        double ratio = 0.0;
        bool tail = false;
    };
    std::vector<Cand> cands;
    auto add = [&](std::string name, std::vector<double> h, bool tail = false) {
        if (h.empty() || !M.normalize(h)) return;
        cands.push_back({std::move(name), std::move(h), 0.0, tail});
    };

    // Cells where v vanishes make the ratio infinite for any h living there.
    for (std::size_t i = 0; i < n; ++i)
        if (V[i] == 0.0) {
            std::vector<double> h(n, 0.0);
            h[i] = 1.0;
            cands.push_back({"zero_v_cell_" + std::to_string(i), h, 0.0, false});
        }

    if (p > 1.0) {
        for (std::size_t j = 0; j < n; ++j)
            add("holder_tail_" + std::to_string(j), detail::holder_values(len, V, p, j, n), true);
        // Cells of the discretizing sequence.
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        std::vector<double> cell_lo;
        try {
            const auto seq = build_sequence(pb);
            for (std::size_t k = 1; k < seq.t.size(); ++k) {
                const auto [i0, i1] = detail::cells_within(nodes, seq.t[k - 1], std::min(seq.t[k], nodes.back()));
                if (i0 < i1) {
                    cells.push_back({i0, i1});
                    cell_lo.push_back(seq.t[k - 1]);
                }
            }
        } catch (const std::exception&) {
            // Inadmissible or unresolved sequence: fall back to decades.
            for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(pb.grid.points_per_decade)) {
                cells.push_back({i, std::min(n, i + static_cast<std::size_t>(pb.grid.points_per_decade))});
                cell_lo.push_back(nodes[i]);
            }
        }
        std::vector<double> phim(n);
        for (std::size_t i = 0; i < n; ++i) phim[i] = xpow(phi_pow_q(pb, std::sqrt(nodes[i] * nodes[i + 1])), m / q);
        // Per-cell pairs (g_k, f_k) and their sum.
        std::vector<std::vector<double>> pair_seed(cells.size());
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const auto [i0, i1] = cells[k];
            auto g = detail::holder_values(len, V, p, i0, i1);
            add("holder_cell_" + std::to_string(k), g);
            if (g.empty() || !M.normalize(g)) continue;
            const double base = xpow(phi_pow_q(pb, cell_lo[k]), m / q);
            std::vector<double> f;
            if (p <= m) {
                for (std::size_t j = i0 + 1; j < i1; ++j)
                    add("hardy_i_cell_" + std::to_string(k) + "_" + std::to_string(j),
                        detail::holder_values(len, V, p, j, i1));
                // The Hoelder seed doubles as f_k here.
                f = g;
            } else {
                const double th1 = 1.0 / (p - m), th2 = (m - 1.0) / (p - m);
                for (double f1 : {0.5, 1.0})
                    for (double f2 : {0.5, 1.0}) {
                        std::vector<double> h(n, 0.0);
                        double S = 0.0;
                        for (std::size_t j = i1; j-- > i0;) {
                            const double Dj = g[j] * len[j];
                            S += 0.5 * Dj;
                            h[j] = xmul(g[j], xmul(xpow(std::max(phim[j] - base, 0.0), f1 * th1), xpow(S, f2 * th2)));
                            if (!std::isfinite(h[j])) h[j] = 0.0;
                            S += 0.5 * Dj;
                        }
                        if (f1 == 1.0 && f2 == 1.0) f = h;
                        add("hardy_ii_cell_" + std::to_string(k) + "_" + std::to_string(static_cast<int>(f1 * 2)) +
                                std::to_string(static_cast<int>(f2 * 2)),
                            std::move(h));
                    }
            }
            if (f.empty() || !M.normalize(f)) f = g;
            std::vector<double> gf(n);
            for (std::size_t i = 0; i < n; ++i) gf[i] = g[i] + f[i];
            pair_seed[k] = gf;
            add("g_plus_f_cell_" + std::to_string(k), std::move(gf));
        }
        // For q < p, combine the cell seeds with the discrete Hoelder saturator as weights.
        if (q < p && !cells.empty()) {
            std::vector<double> bk(cells.size(), 0.0), ones(cells.size(), 1.0);
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (pair_seed[k].empty() || !M.normalize(pair_seed[k])) continue;
                bk[k] = ev.lhs_pow_q(pair_seed[k]);
            }
            const auto hr = check_discrete_holder(ones, bk, p, q);
            std::vector<double> h(n, 0.0);
            for (std::size_t k = 0; k < cells.size(); ++k)
                if (!pair_seed[k].empty())
                    for (std::size_t i = 0; i < n; ++i) h[i] += hr.saturator[k] * pair_seed[k][i];
            add("lemma1_combination", std::move(h));
        }
        add("holder_whole_grid", detail::holder_values(len, V, p, 0, n));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> h(n, 0.0);
            h[i] = 1.0;
            add("cell_" + std::to_string(i), std::move(h));
        }
    }

    CEstimate out;
    out.seeds_evaluated = cands.size();
    if (cands.empty()) {
        out.zero_ratio = true;
        out.best_h = TestFunction::zeros(pb.grid);
        return out;
    }
    for (auto& c : cands) {
        c.ratio = ev.ratio(c.h);
        if (c.tail) out.holder_tail_best = std::max(out.holder_tail_best, c.ratio);
    }
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return cands[x].ratio > cands[y].ratio; });

    std::size_t best_idx = order.front();
    std::vector<double> best_h = cands[best_idx].h;
    double best = cands[best_idx].ratio;
    std::string best_name = cands[best_idx].name;
    if (std::isfinite(best)) {
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(budget.seeds), order.size());
        for (std::size_t r = 0; r < k; ++r) {
            const auto& c = cands[order[r]];
            auto res = detail::ascend(M, c.h, budget.iterations);
            for (std::size_t i = 1; i < res.history.size(); ++i)
                if (res.history[i] < res.history[i - 1]) out.ascent_monotone = false;
            out.trace.push_back({c.name, c.ratio, res.ratio, res.iterations});
            if (res.ratio > best) {
                best = res.ratio;
                best_h = res.h;
                best_name = c.name + "+ascent";
            }
        }
    }
    out.best_h.nodes = nodes;
    out.best_h.values = best_h;
    out.best_seed = best_name;
    out.lower_bound = ev.ratio(best_h);
    out.zero_ratio = out.lower_bound == 0.0;
    return out;
}

struct UpperBound {
    double value = 0.0;       // over (0, inf); +inf when divergent
    double truncated = 0.0;   // the same integral over (t_min, inf)
    double w_factor = 1.0;    // (int_0^inf w)^(1/q), already applied to both values
    bool certified_divergent = false;  // divergence at 0 shown from dominant exponents
    bool inconclusive = false;         // exponent analysis did not apply
    std::string reason;
};

namespace detail {

/// Dominant behaviour t^power |ln t|^log_power near 0 of a weight.
struct NearZero {
    bool zero = false;   // weight vanishes near 0
    bool infinite = false;
    double power = 0.0;
    double log_power = 0.0;
};

inline NearZero near_zero(const WeightExpr& w) {
    const WeightTerm* dom = nullptr;
    for (const auto& t : w.terms()) {
        if (!t.active() || t.lo > 0.0) continue;
        if (!dom || t.power < dom->power || (t.power == dom->power && t.log_power > dom->log_power)) dom = &t;
    }
    if (!dom) return {true, false, 0.0, 0.0};
    return {false, false, dom->power, dom->log_power};
}

/// int_0^t of a weight with the given near-zero behaviour.
inline NearZero cumulative_near_zero(const NearZero& f) {
    if (f.zero) return f;
    if (f.power > -1.0) return {false, false, f.power + 1.0, f.log_power};
    if (f.power == -1.0 && f.log_power < -1.0) return {false, false, 0.0, f.log_power + 1.0};
    return {false, true, 0.0, 0.0};
}

/// int_t^c of a density with the given near-zero behaviour (constant when integrable).
inline std::optional<NearZero> tail_near_zero(const NearZero& f) {
    if (f.power < -1.0) return NearZero{false, false, f.power + 1.0, f.log_power};
    if (f.power == -1.0 && f.log_power > -1.0) return NearZero{false, false, 0.0, f.log_power + 1.0};
    if (f.power == -1.0 && f.log_power == -1.0) return std::nullopt;  // log log growth
    return NearZero{false, false, 0.0, 0.0};
}

}  // namespace detail

namespace detail {

/// ( int_0^inf U(t)^(p/(p-m)) sigma(t)^(p(m-1)/(p-m)) v(t)^(1-p') dt )^((p-m)/(mp)),
/// U(t) = int_0^t u, sigma(t) = int_t^inf v^(1-p').
inline UpperBound hardy_upper(const Problem& pb) {
    pb.validate();
    const double p = pb.params.p, m = pb.params.m;
    if (!(p > 1.0) || !(m < p)) throw InvalidInput("upper bound needs p > 1 and m < p");
    const double A = p / (p - m), B = p * (m - 1.0) / (p - m), E = (p - m) / (m * p);
    const double wt = detail::weight_tol(pb.tol);
    DualWeight dw(pb.v, p);
    UpperBound ub;
    if (pb.u.empty() || integrate_weight(pb.u, 0.0, kInf, wt) == 0.0) return ub;
    // The bound comes from the Hardy inequality with finite tails of v^(1-p').
    for (double t : {pb.grid.t_min, 1.0, pb.grid.t_max})
        if (std::isinf(dw.integral(t, kInf, wt))) {
            ub.value = ub.truncated = kInf;
            ub.reason = "int_t^inf v^(1-p') diverges";
            return ub;
        }
    auto f = [&](double t) {
        const double U = integrate_weight(pb.u, 0.0, t, wt);
        if (U == 0.0) return 0.0;
        const double d = dw.density(t);
        if (d == 0.0) return 0.0;
        return xmul(xmul(xpow(U, A), xpow(dw.integral(t, kInf, wt), B)), d);
    };
    QuadOptions o = pb.quad();
    o.rel_tol = std::max(o.rel_tol, 1e-10);
    o.max_intervals = 3000;
    std::vector<double> br = pb.v.breakpoints();
    for (double x : pb.u.breakpoints()) br.push_back(x);
    auto tail = integrate(f, pb.grid.t_min, kInf, o, br);
    ub.truncated = (std::isinf(tail.value) || (!tail.converged && tail.value > 1e200)) ? kInf : xpow(tail.value, E);

    // Dominant exponents at 0.
    const auto u0 = detail::near_zero(pb.u);
    const auto v0 = detail::near_zero(pb.v);
    const auto U0 = detail::cumulative_near_zero(u0);
    if (U0.infinite) {
        ub.value = kInf;
        ub.certified_divergent = true;
        ub.reason = "int_0^t u diverges";
        return ub;
    }
    if (!U0.zero && !v0.zero) {
        const double e = -1.0 / (p - 1.0);
        const detail::NearZero dens{false, false, e * v0.power, e * v0.log_power};
        const auto S0 = detail::tail_near_zero(dens);
        if (!S0) {
            ub.inconclusive = true;
        } else {
            const double pw = A * U0.power + B * S0->power + dens.power;
            const double lg = A * U0.log_power + B * S0->log_power + dens.log_power;
            const double eps = 1e-12;
            if (pw < -1.0 - eps || (std::abs(pw + 1.0) <= eps && lg >= -1.0 - eps)) {
                ub.value = kInf;
                ub.certified_divergent = true;
                ub.reason = "integrand ~ t^" + std::to_string(pw) + " |ln t|^" + std::to_string(lg) + " at 0";
                return ub;
            }
        }
    }
    auto head = integrate(f, 0.0, pb.grid.t_min, o, br);
    const double total = tail.value + head.value;
    ub.value = (std::isinf(total) || (!head.converged && head.value > 1e200)) ? kInf : xpow(total, E);
    return ub;
}

}  // namespace detail

/// Upper bound for C up to the Hardy constant: the outer w-integral is at
/// most (int w)^(1/q) times its value at t = 0, which the Hardy integral
/// controls. The factor is 1 for probability weights such as n on [0, 1/n].
inline UpperBound upper_bound_d(const Problem& pb) {
    auto ub = detail::hardy_upper(pb);
    ub.w_factor = xpow(integrate_weight(pb.w, 0.0, kInf, detail::weight_tol(pb.tol)), 1.0 / pb.params.q);
    ub.value = xmul(ub.value, ub.w_factor);
    ub.truncated = xmul(ub.truncated, ub.w_factor);
    return ub;
}

}  // namespace copson
