#pragma once

// Adaptive integration and supremum search on subintervals of (0, inf).
//
// All work happens in the logarithmic variable x = ln t. Power-like
// integrands become exponentials in x, so endpoint behaviour at 0 and inf is
// treated uniformly. Infinite x-ranges are folded onto (0, 1] with the
// QUADPACK map x = x0 +/- (1 - s) / s.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "copson/errors.hpp"

namespace copson {

/// Log-uniform evaluation grid on [t_min, t_max].
struct GridSpec {
    double t_min = 1e-6;
    double t_max = 1e6;
    int points_per_decade = 10;

    void validate() const {
        if (!(t_min > 0.0) || !std::isfinite(t_max) || !(t_min < t_max))
            throw InvalidInput("grid: need 0 < t_min < t_max < inf");
        if (points_per_decade <= 0)
            throw InvalidInput("grid: points_per_decade must be positive");
    }

    std::size_t node_count() const {
        return static_cast<std::size_t>(
                   std::ceil(points_per_decade * std::log10(t_max / t_min) - 1e-9)) +
               1;
    }

    /// Nodes snapped to exact powers of ten where they land on one.
    std::vector<double> nodes() const {
        validate();
        const std::size_t n = std::max<std::size_t>(node_count(), 2);
        const double lo = std::log10(t_min);
        const double span = std::log10(t_max) - lo;
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
            const double r = std::round(e);
            out[i] = std::abs(e - r) < 1e-12 ? std::pow(10.0, r) : std::pow(10.0, e);
        }
        out.front() = t_min;
        out.back() = t_max;
        return out;
    }

    GridSpec widened(double factor) const {
        return GridSpec{t_min / factor, t_max * factor, points_per_decade};
    }

    bool operator==(const GridSpec&) const = default;
};

struct Estimate {
    double value = 0.0;
    double abs_error = 0.0;
    std::optional<double> argmax;
    bool converged = true;
};

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_intervals = 4000;
};

/// Node of a frozen quadrature rule in the original variable t.
struct QuadNode {
    double t;
    double weight;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

enum class SegKind { Finite, LeftInfinite, RightInfinite };

struct Segment {
    SegKind kind;
    double x0;  // Finite: left end; LeftInfinite: right end; RightInfinite: left end
    double x1;  // Finite: right end
    double t_lo;
    double t_hi;
};

// Maps the local variable of a segment to t and returns dt/d(local).
inline double to_t(const Segment& seg, double s, double& jac) {
    double x = 0.0;
    double dx = 1.0;
    switch (seg.kind) {
        case SegKind::Finite:
            x = s;
            break;
        case SegKind::LeftInfinite:
            x = seg.x0 - (1.0 - s) / s;
            dx = 1.0 / (s * s);
            break;
        case SegKind::RightInfinite:
            x = seg.x0 + (1.0 - s) / s;
            dx = 1.0 / (s * s);
            break;
    }
    const double t = std::exp(x);
    jac = t * dx;
    return t;
}

struct Panel {
    std::size_t seg;
    double a;
    double b;
    double value;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

template <class F>
double eval_t(F& f, const Segment& seg, double s, double& jac) {
    const double t = to_t(seg, s, jac);
    // Nodes that round onto an endpoint carry no mass on the open interval.
    if (t <= seg.t_lo || t >= seg.t_hi || jac == 0.0 || std::isinf(jac)) {
        jac = 0.0;
        return 0.0;
    }
    const double y = f(t);
    if (std::isnan(y)) throw InvalidInput("integrand returned NaN");
    return y;
}

// One GK15 panel; returns false if the integrand hit +inf.
template <class F>
bool gk15(F& f, const Segment& seg, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double jac = 0.0;
    double fc = eval_t(f, seg, c, jac);
    if (std::isinf(fc) && jac != 0.0) return false;
    fc = xmul(fc, jac);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    double resabs = std::abs(resk);
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        double j1 = 0.0, j2 = 0.0;
        double y1 = eval_t(f, seg, c - dx, j1);
        double y2 = eval_t(f, seg, c + dx, j2);
        if ((std::isinf(y1) && j1 != 0.0) || (std::isinf(y2) && j2 != 0.0)) return false;
        y1 = xmul(y1, j1);
        y2 = xmul(y2, j2);
        f1[j] = y1;
        f2[j] = y2;
        resk += kWgk[j] * (y1 + y2);
        resabs += kWgk[j] * (std::abs(y1) + std::abs(y2));
        if (j % 2 == 1) resg += kWg[j / 2] * (y1 + y2);
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    result = resk * h;
    resabs *= std::abs(h);
    resasc *= std::abs(h);
    err = std::abs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return true;
}

inline std::vector<Segment> make_segments(double a, double b, std::span<const double> breaks) {
    if (!(a >= 0.0) || !(a < b)) throw InvalidInput("integrate: need 0 <= a < b <= inf");
    std::vector<double> cuts;
    cuts.push_back(a);
    for (double c : breaks)
        if (c > a && c < b && std::isfinite(c)) cuts.push_back(c);
    if (a < 1.0 && b > 1.0) cuts.push_back(1.0);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Segment> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (lo == 0.0 && std::isinf(hi)) {
            segs.push_back({SegKind::LeftInfinite, 0.0, 0.0, 0.0, 1.0});
            segs.push_back({SegKind::RightInfinite, 0.0, 0.0, 1.0, kInf});
        } else if (lo == 0.0) {
            segs.push_back({SegKind::LeftInfinite, std::log(hi), 0.0, lo, hi});
        } else if (std::isinf(hi)) {
            segs.push_back({SegKind::RightInfinite, std::log(lo), 0.0, lo, hi});
        } else {
            segs.push_back({SegKind::Finite, std::log(lo), std::log(hi), lo, hi});
        }
    }
    return segs;
}

struct AdaptiveResult {
    Estimate estimate;
    std::vector<Panel> panels;
    std::vector<Segment> segments;
};

template <class F>
AdaptiveResult adaptive(F& f, double a, double b, const QuadOptions& opt,
                        std::span<const double> breaks) {
    AdaptiveResult out;
    out.segments = make_segments(a, b, breaks);
    std::priority_queue<Panel> live;
    std::vector<Panel> retired;
    double total = 0.0;
    double total_err = 0.0;
    double retired_err = 0.0;

    auto push = [&](std::size_t si, double lo, double hi) -> bool {
        Panel p{si, lo, hi, 0.0, 0.0};
        if (!gk15(f, out.segments[si], lo, hi, p.value, p.err)) return false;
        total += p.value;
        total_err += p.err;
        live.push(p);
        return true;
    };

    for (std::size_t si = 0; si < out.segments.size(); ++si) {
        const auto& s = out.segments[si];
        const double lo = s.kind == SegKind::Finite ? s.x0 : 0.0;
        const double hi = s.kind == SegKind::Finite ? s.x1 : 1.0;
        if (!push(si, lo, hi)) {
            out.estimate = Estimate{kInf, 0.0, std::nullopt, true};
            return out;
        }
    }

    int count = static_cast<int>(live.size());
    bool converged = false;
    while (!live.empty()) {
        const double active_err = total_err - retired_err;
        if (active_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
            converged = true;
            break;
        }
        if (count >= opt.max_intervals) break;
        Panel worst = live.top();
        live.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) ||
            (worst.b - worst.a) <= 1e-14 * std::max(1.0, std::abs(mid))) {
            retired.push_back(worst);
            retired_err += worst.err;
            continue;
        }
        total -= worst.value;
        total_err -= worst.err;
        if (!push(worst.seg, worst.a, mid) || !push(worst.seg, mid, worst.b)) {
            out.estimate = Estimate{kInf, 0.0, std::nullopt, true};
            return out;
        }
        ++count;
    }
    if (live.empty()) converged = true;

    // Resum in a fixed order for bit-stable results.
    std::vector<Panel> all = std::move(retired);
    while (!live.empty()) {
        all.push_back(live.top());
        live.pop();
    }
    std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) {
        return x.seg != y.seg ? x.seg < y.seg : x.a < y.a;
    });
    double v = 0.0, e = 0.0;
    for (const auto& p : all) {
        v += p.value;
        e += p.err;
    }
    out.panels = std::move(all);
    out.estimate = Estimate{v, e, std::nullopt, converged};
    return out;
}

}  // namespace detail

/// Integrates a nonnegative f over (a, b) with 0 <= a < b <= inf.
/// `breaks` lists interior points where f is not smooth; t = 1 is always
/// treated as a break. Returns +inf if f is +inf at a sample point.
template <class F>
Estimate integrate(F&& f, double a, double b, const QuadOptions& opt = {},
                   std::span<const double> breaks = {}) {
    return detail::adaptive(f, a, b, opt, breaks).estimate;
}

/// Runs the adaptive scheme once and freezes the final partition into a
/// node/weight list in t, so integrands of the same shape can be reintegrated
/// by a plain weighted sum.
template <class F>
std::vector<QuadNode> adaptive_rule(F&& f, double a, double b, const QuadOptions& opt = {},
                                    std::span<const double> breaks = {}) {
    auto res = detail::adaptive(f, a, b, opt, breaks);
    std::vector<QuadNode> nodes;
    if (std::isinf(res.estimate.value)) return nodes;
    for (const auto& p : res.panels) {
        const auto& seg = res.segments[p.seg];
        const double c = 0.5 * (p.a + p.b);
        const double h = 0.5 * (p.b - p.a);
        auto add = [&](double s, double wk) {
            double jac = 0.0;
            const double t = detail::to_t(seg, s, jac);
            if (t > seg.t_lo && t < seg.t_hi && std::isfinite(jac) && jac > 0.0)
                nodes.push_back({t, wk * h * jac});
        };
        add(c, detail::kWgk[7]);
        for (int j = 0; j < 7; ++j) {
            add(c - h * detail::kXgk[j], detail::kWgk[j]);
            add(c + h * detail::kXgk[j], detail::kWgk[j]);
        }
    }
    std::sort(nodes.begin(), nodes.end(), [](const QuadNode& x, const QuadNode& y) { return x.t < y.t; });
    return nodes;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
    static thread_local std::vector<std::vector<std::pair<double, double>>> cache(33);
    if (n < 1 || n > 32) throw InvalidInput("gauss_legendre: order must be in [1, 32]");
    auto& rule = cache[n];
    if (!rule.empty()) return rule;
    rule.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
    }
    std::sort(rule.begin(), rule.end());
    return rule;
}

/// Maximizes f over (a, b) intersected with the grid range: log-grid scan
/// followed by golden-section refinement around the best node. The first
/// maximal node wins ties, so the result is deterministic.
template <class F>
Estimate sup_on_interval(F&& f, double a, double b, const GridSpec& grid) {
    grid.validate();
    const double lo = std::max(a, grid.t_min);
    const double hi = std::min(b, grid.t_max);
    if (!(lo < hi)) {
        // Interval lies outside the grid range: sample it directly.
        if (!(a < b) || a <= 0.0 || std::isinf(b)) throw InvalidInput("sup_on_interval: empty range");
    }
    const double L = lo < hi ? lo : a;
    const double H = lo < hi ? hi : b;
    const double decades = std::log10(H / L);
    const std::size_t n =
        std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(grid.points_per_decade * decades - 1e-9)) + 1);
    const double xl = std::log(L), xh = std::log(H);
    std::vector<double> xs(n), ys(n);
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = xl + (xh - xl) * static_cast<double>(i) / static_cast<double>(n - 1);
        // Open interval: nudge endpoints inward when they coincide with (a, b).
        double t = std::exp(xs[i]);
        if (i == 0 && L == a) t = std::exp(xs[i] + 1e-9 * (xh - xl));
        if (i == n - 1 && H == b) t = std::exp(xs[i] - 1e-9 * (xh - xl));
        ys[i] = f(t);
        if (std::isnan(ys[i])) throw InvalidInput("sup_on_interval: NaN");
        if (std::isinf(ys[i])) return Estimate{kInf, 0.0, t, true};
        if (ys[i] > ys[best]) best = i;
    }
    double fa = xs[best > 0 ? best - 1 : 0];
    double fb = xs[best + 1 < n ? best + 1 : n - 1];
    double best_x = xs[best];
    double best_y = ys[best];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = fb - gr * (fb - fa);
    double d = fa + gr * (fb - fa);
    double fc = f(std::exp(c));
    double fd = f(std::exp(d));
    for (int it = 0; it < 80 && (fb - fa) > 1e-12 * std::max(1.0, std::abs(best_x)); ++it) {
        if (std::isinf(fc)) return Estimate{kInf, 0.0, std::exp(c), true};
        if (std::isinf(fd)) return Estimate{kInf, 0.0, std::exp(d), true};
        if (fc > best_y) best_y = fc, best_x = c;
        if (fd > best_y) best_y = fd, best_x = d;
        if (fc >= fd) {
            fb = d;
            d = c;
            fd = fc;
            c = fb - gr * (fb - fa);
            fc = f(std::exp(c));
        } else {
            fa = c;
            c = d;
            fc = fd;
            d = fa + gr * (fb - fa);
            fd = f(std::exp(d));
        }
    }
    if (fc > best_y) best_y = fc, best_x = c;
    if (fd > best_y) best_y = fd, best_x = d;
    return Estimate{best_y, std::abs(best_y - ys[best]), std::exp(best_x), true};
}

}  // namespace copson
