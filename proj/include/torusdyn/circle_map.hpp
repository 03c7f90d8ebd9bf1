// Dynamics on invariant vertical circles: restriction of skew maps, rotation
// numbers (plain and weighted-Birkhoff), locked/quasiperiodic classification,
// and parameter sweeps.
//
// A finite computation cannot certify irrationality, so classification is a
// two-sided test: search for a hyperbolic periodic orbit among continued-
// fraction denominators of the measured rotation number, then require
// super-polynomial convergence of the weighted estimates. Neither test
// passing yields Undetermined.
#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "parallel.hpp"
#include "random.hpp"
#include "torus_map.hpp"

namespace torusdyn {

struct NotInvariantCircleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The n-step return map on the invariant vertical circle over base_x. The
// base orbit is carried as exact rationals k/(m^n - 1), so invariance is
// exact and no drift accumulates in x.
class RestrictedCircleMap {
public:
    RestrictedCircleMap(const TorusMap& map, double base_x, std::size_t n)
        : map_(map), n_(n) {
        if (!map.skew())
            throw NotInvariantCircleError("restrict: map is not in skew form");
        if (n < 1) throw std::invalid_argument("restrict: n >= 1");
        m_ = map.matrix.a;
        std::int64_t D = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::llabs(D) > (std::int64_t(1) << 40))
                throw std::invalid_argument("restrict: m^n too large");
            D *= m_;
        }
        D -= 1;
        denom_ = std::llabs(D);
        if (denom_ == 0) { // m = 1 base map: every circle is invariant
            denom_ = 1;
            nums_.assign(n, 0);
            base_x_ = wrap01(base_x);
            exact_base_ = false;
            for (std::size_t i = 0; i < n; ++i) xs_.push_back(base_x_);
            return;
        }
        std::int64_t k = std::llround(wrap01(base_x) * double(denom_));
        k = ((k % denom_) + denom_) % denom_;
        if (circle_dist(wrap01(base_x), double(k) / double(denom_)) > 1e-12)
            throw NotInvariantCircleError(
                "restrict: base_x is not a periodic base point k/(m^n-1)");
        exact_base_ = true;
        base_x_ = double(k) / double(denom_);
        std::int64_t num = k;
        for (std::size_t i = 0; i < n; ++i) {
            nums_.push_back(num);
            xs_.push_back(double(num) / double(denom_));
            num = ((num * m_) % denom_ + denom_) % denom_;
        }
        if (num != k)
            throw NotInvariantCircleError("restrict: circle is not invariant under F^n");
    }

    double base_x() const { return base_x_; }
    std::size_t circle_period() const { return n_; }
    std::int64_t m() const { return m_; }

    // Lift of the return map; degree equals (m11)^n.
    double lift(double y) const {
        for (std::size_t j = 0; j < n_; ++j)
            y = double(map_.matrix.c) * xs_[j] + double(map_.matrix.d) * y +
                g_y(xs_[j], y);
        return y;
    }

    double eval(double y) const { return wrap01(lift(y)); }

    double derivative(double y) const {
        double d = 1.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double dy = double(map_.matrix.d) + dg_y(xs_[j], y);
            d *= dy;
            y = double(map_.matrix.c) * xs_[j] + double(map_.matrix.d) * y + g_y(xs_[j], y);
        }
        return d;
    }

private:
    double g_y(double x, double y) const {
        double s = map_.g.t;
        for (const FourierTerm& tm : map_.g.terms)
            s += tm.coeff.y *
                 std::sin(two_pi * (double(tm.freq.x) * x + double(tm.freq.y) * y) + tm.phase);
        return s;
    }
    double dg_y(double x, double y) const {
        double s = 0.0;
        for (const FourierTerm& tm : map_.g.terms)
            s += tm.coeff.y * two_pi * double(tm.freq.y) *
                 std::cos(two_pi * (double(tm.freq.x) * x + double(tm.freq.y) * y) + tm.phase);
        return s;
    }

    TorusMap map_;
    std::size_t n_;
    std::int64_t m_ = 0;
    std::int64_t denom_ = 1;
    std::vector<std::int64_t> nums_;
    std::vector<double> xs_;
    double base_x_ = 0.0;
    bool exact_base_ = false;
};

inline RestrictedCircleMap restrict_to_circle(const TorusMap& map, double base_x,
                                              std::size_t n) {
    return RestrictedCircleMap(map, base_x, n);
}

// A one-dimensional circle map given by its lift and the lift's derivative.
struct CircleMap1D {
    std::function<double(double)> lift;
    std::function<double(double)> dlift;
};

inline CircleMap1D as_circle1d(const RestrictedCircleMap& cm) {
    return {[cm](double y) { return cm.lift(y); },
            [cm](double y) { return cm.derivative(y); }};
}

enum class RotationMethod { Plain, Weighted };

struct RotationEstimate {
    double rho = 0.0;      // lift average reduced mod 1
    double rho_raw = 0.0;  // lift average
    double diagnostic = 0.0;
};

namespace detail {

inline double birkhoff_weight(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return std::exp(-1.0 / (s * (1.0 - s)));
}

inline double estimate_over(const std::vector<double>& vals, std::size_t n,
                            RotationMethod method) {
    if (n == 0) return 0.0;
    if (method == RotationMethod::Plain) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += vals[i];
        return s / double(n);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = birkhoff_weight(double(i + 1) / double(n + 1));
        num += w * vals[i];
        den += w;
    }
    return num / den;
}

// Decay exponent of the dyadic partial Birkhoff estimates of an observable
// along the orbit. Quasiperiodic orbits equidistribute, so the weighted
// estimates converge super-polynomially; 60 caps the scale.
//
// Two degenerate-looking cases need care. Estimates already stationary at
// machine precision from the first checkpoint are the strongest possible
// Cauchy evidence, but an orbit collapsed onto an attracting fixed point
// produces the same stationarity vacuously (the signal is constant). The
// stationary branch therefore reports 60 when the late signal still
// oscillates and 0 when it has collapsed.
inline double dyadic_decay_exponent(const std::vector<double>& vals, RotationMethod method) {
    std::size_t N = vals.size();
    double e1 = estimate_over(vals, N / 8, method);
    double e2 = estimate_over(vals, N / 4, method);
    double e3 = estimate_over(vals, N / 2, method);
    double e4 = estimate_over(vals, N, method);
    const double floor = 1e-15;
    double d1 = std::fabs(e2 - e1), d3 = std::fabs(e4 - e3);
    if (d1 <= floor) {
        double lo = vals[N / 2], hi = vals[N / 2];
        for (std::size_t i = N / 2; i < N; ++i) {
            lo = std::min(lo, vals[i]);
            hi = std::max(hi, vals[i]);
        }
        return (hi - lo > 0.1) ? 60.0 : 0.0;
    }
    d3 = std::max(d3, floor);
    return std::clamp(0.5 * std::log2(d1 / d3), 0.0, 60.0);
}

} // namespace detail

// rho is the (plain or bump-weighted) average of the lift increments. The
// convergence diagnostic tracks the Birkhoff average of cos(2 pi y) rather
// than of the increments: rigid rotations have exactly constant increments,
// so only an equidistribution observable can show the super-polynomial
// convergence that separates quasiperiodic orbits.
template <typename LiftFn>
    requires std::invocable<LiftFn&, double>
RotationEstimate rotation_number(LiftFn&& liftf, double y0, std::size_t iters,
                                 RotationMethod method = RotationMethod::Weighted) {
    if (iters < 100) throw std::invalid_argument("rotation_number: iters >= 100");
    std::vector<double> inc(iters), obs(iters);
    double y = wrap01(y0);
    for (std::size_t i = 0; i < iters; ++i) {
        obs[i] = std::cos(two_pi * y);
        double yl = liftf(y);
        inc[i] = yl - y;
        y = wrap01(yl);
    }
    RotationEstimate est;
    est.rho_raw = detail::estimate_over(inc, iters, method);
    est.rho = wrap01(est.rho_raw);
    est.diagnostic = detail::dyadic_decay_exponent(obs, method);
    return est;
}

inline RotationEstimate rotation_number(const RestrictedCircleMap& cm, double y0,
                                        std::size_t iters,
                                        RotationMethod method = RotationMethod::Weighted) {
    return rotation_number([&cm](double y) { return cm.lift(y); }, y0, iters, method);
}

// ---- classification ----

enum class CircleClass { Locked, Quasiperiodic, Undetermined };

inline const char* to_string(CircleClass c) {
    switch (c) {
        case CircleClass::Locked: return "locked";
        case CircleClass::Quasiperiodic: return "quasiperiodic";
        default: return "undetermined";
    }
}

struct CircleAnalysis {
    double base_x = 0.0;
    std::size_t circle_period = 1;
    double rho = 0.0;
    double rho_raw = 0.0;
    double diagnostic = 0.0;
    CircleClass cls = CircleClass::Undetermined;
    std::int64_t locked_p = 0;
    std::int64_t locked_q = 1;
    double locked_point = 0.0;        // attracting periodic point, if locked
    double locked_multiplier = 0.0;   // its derivative product
    std::size_t iters = 0;
};

struct ClassifyOptions {
    std::size_t iters = 10000;
    std::int64_t q_max = 64;
    double diag_threshold = 3.0;
    double lock_safety = 1.0;
    double hyper_margin = 1e-6;
    std::size_t scan_n = 1024;
    double y0 = 0.381966011250105; // default sample point, 2 - golden ratio
};

namespace detail {

inline std::vector<std::pair<std::int64_t, std::int64_t>>
convergents(double x, std::int64_t q_max) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    std::int64_t p0 = 1, q0 = 0, p1 = std::int64_t(std::floor(x)), q1 = 1;
    out.push_back({p1, q1});
    double frac = x - std::floor(x);
    for (int it = 0; it < 40 && frac > 1e-14; ++it) {
        double inv = 1.0 / frac;
        std::int64_t a = std::int64_t(std::floor(inv));
        frac = inv - std::floor(inv);
        std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > q_max) break;
        out.push_back({p2, q2});
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    }
    return out;
}

struct CircleRoot {
    double y;
    double multiplier;
};

// All transversal solutions of lift^q(y) = y + p on [0,1), by sign-change
// scan plus bisection.
inline std::vector<CircleRoot> locked_scan(const CircleMap1D& cm, std::int64_t p,
                                           std::int64_t q, std::size_t scan_n) {
    auto displacement = [&](double y) {
        double z = y;
        for (std::int64_t j = 0; j < q; ++j) z = cm.lift(z);
        return z - y - double(p);
    };
    std::vector<CircleRoot> roots;
    auto push_root = [&](double y_star) {
        double d = 1.0, z = y_star;
        for (std::int64_t j = 0; j < q; ++j) {
            d *= cm.dlift(z);
            z = cm.lift(z);
        }
        roots.push_back({wrap01(y_star), d});
    };
    double prev_y = 0.0, prev_g = displacement(0.0);
    if (std::fabs(prev_g) < 1e-13) push_root(0.0);
    for (std::size_t i = 1; i <= scan_n; ++i) {
        double y = double(i) / double(scan_n);
        double g = displacement(y);
        if (std::fabs(g) < 1e-13 && i < scan_n) {
            push_root(y);
        } else if ((prev_g < 0.0 && g > 0.0) || (prev_g > 0.0 && g < 0.0)) {
            double lo = prev_y, hi = y, glo = prev_g;
            for (int it = 0; it < 100; ++it) {
                double mid = 0.5 * (lo + hi);
                double gm = displacement(mid);
                if (std::fabs(gm) < 1e-13) { lo = hi = mid; break; }
                if ((gm < 0.0) == (glo < 0.0)) { lo = mid; glo = gm; }
                else hi = mid;
            }
            push_root(0.5 * (lo + hi));
        }
        prev_y = y;
        prev_g = g;
    }
    return roots;
}

} // namespace detail

inline CircleAnalysis classify_circle(const CircleMap1D& cm, ClassifyOptions opts = {}) {
    CircleAnalysis out;
    out.iters = opts.iters;

    // rotation numbers require a degree-one lift
    double deg = cm.lift(1.25) - cm.lift(0.25);
    if (std::fabs(deg - 1.0) > 1e-9) return out;

    RotationEstimate est =
        rotation_number([&](double y) { return cm.lift(y); }, opts.y0, opts.iters,
                        RotationMethod::Weighted);
    out.rho = est.rho;
    out.rho_raw = est.rho_raw;
    out.diagnostic = est.diagnostic;

    for (auto [p, q] : detail::convergents(est.rho_raw, opts.q_max)) {
        if (q < 1) continue;
        if (circle_dist(est.rho, wrap01(double(p) / double(q))) >
            opts.lock_safety / double(q * q))
            continue;
        auto roots = detail::locked_scan(cm, p, q, opts.scan_n);
        if (roots.empty()) continue;
        bool all_hyperbolic = true;
        const detail::CircleRoot* attracting = nullptr;
        for (const auto& r : roots) {
            if (std::fabs(std::fabs(r.multiplier) - 1.0) <= opts.hyper_margin)
                all_hyperbolic = false;
            else if (std::fabs(r.multiplier) < 1.0 && !attracting)
                attracting = &r;
        }
        if (!all_hyperbolic || !attracting) continue;
        out.cls = CircleClass::Locked;
        out.locked_p = ((p % q) + q) % q;
        out.locked_q = q;
        out.locked_point = attracting->y;
        out.locked_multiplier = attracting->multiplier;
        return out;
    }

    if (out.diagnostic >= opts.diag_threshold) out.cls = CircleClass::Quasiperiodic;
    return out;
}

inline CircleAnalysis classify_circle(const RestrictedCircleMap& cm, ClassifyOptions opts = {}) {
    CircleAnalysis out = classify_circle(as_circle1d(cm), opts);
    out.base_x = cm.base_x();
    out.circle_period = cm.circle_period();
    return out;
}

// ---- parameter sweeps ----

struct SweepResult {
    std::vector<double> ts;
    std::vector<CircleAnalysis> analyses;
    double quasiperiodic_fraction = 0.0; // Undetermined excluded
    std::size_t undetermined = 0;
    std::uint64_t seed = 0;
};

// Classifies the circle over base_x at `samples` evenly spaced t in [t1,t2]
// (endpoints included). Per-t jobs are independent; results are assembled in
// t order.
inline SweepResult sweep(const TorusMap& base_map, double base_x, std::size_t n, double t1,
                         double t2, std::size_t samples, ClassifyOptions opts = {},
                         std::uint64_t seed = default_seed) {
    if (samples < 2) throw std::invalid_argument("sweep: samples >= 2");
    SweepResult res;
    res.seed = seed;
    res.ts.resize(samples);
    res.analyses.resize(samples);
    Rng rng(seed);
    std::vector<double> y0s(samples);
    for (auto& y : y0s) y = rng.uniform01();

    parallel_for(samples, [&](std::size_t i) {
        double t = t1 + (t2 - t1) * double(i) / double(samples - 1);
        TorusMap m = base_map;
        m.g.t = t;
        ClassifyOptions o = opts;
        o.y0 = y0s[i];
        res.ts[i] = t;
        res.analyses[i] = classify_circle(restrict_to_circle(m, base_x, n), o);
    });

    std::size_t qp = 0, locked = 0;
    for (const auto& a : res.analyses) {
        if (a.cls == CircleClass::Quasiperiodic) ++qp;
        else if (a.cls == CircleClass::Locked) ++locked;
        else ++res.undetermined;
    }
    res.quasiperiodic_fraction = (qp + locked) ? double(qp) / double(qp + locked) : 0.0;
    return res;
}

} // namespace torusdyn
