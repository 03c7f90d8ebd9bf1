// The circle-valued factor map and the conjugacy to skew form.
//
// With phi(z) = v_m_left . z one has phi(Fhat z) = m phi(z) + v_m_left . G(z),
// so the telescoped series
//
//   Phihat(z) = (1/k) [ v_m_left . z + sum_{n>=0} m^-(n+1) v_m_left . G(F^n z) ]
//
// converges geometrically with tail bound ||v|| ||G|| / (k (|m|-1) |m|^N).
// G is Z^2-periodic, so the series is evaluated along the wrapped orbit and
// never loses precision to large lift coordinates.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "parallel.hpp"
#include "random.hpp"
#include "spectral.hpp"
#include "torus_map.hpp"

namespace torusdyn {

struct TolNotAchievableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BracketFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhiValue {
    double value = 0.0;
    double error_bound = 0.0;
    std::size_t depth = 0;
};

class PhiCalc {
public:
    explicit PhiCalc(const TorusMap& map, std::size_t depth_cap = 4096)
        : map_(map), sd_(eigen_data(map.matrix)), depth_cap_(depth_cap) {}

    const SpectralData& spectral() const { return sd_; }
    const TorusMap& map() const { return map_; }

    // |Phihat(z) - v.z/k| <= this for every z.
    double defect_bound() const {
        return norm(sd_.v_m_left.to_vec()) * map_.g.sup_norm() /
               (double(sd_.k) * (std::fabs(double(sd_.m)) - 1.0));
    }

    std::size_t depth_for(double tol) const {
        if (!(tol > 0.0)) throw std::invalid_argument("phi_hat: tol must be > 0");
        double b = defect_bound();
        if (b <= tol) return 0;
        double n = std::ceil(std::log(b / tol) / std::log(std::fabs(double(sd_.m))));
        if (n > double(depth_cap_))
            throw TolNotAchievableError("phi_hat: requested tolerance needs depth " +
                                        std::to_string(std::size_t(n)) + " > cap");
        return std::size_t(n);
    }

    PhiValue phi_hat(LiftPoint q, double tol) const {
        std::size_t depth = depth_for(tol);
        double vm = double(sd_.m);
        Vec2 vl = sd_.v_m_left.to_vec();
        double acc = dot(vl, q.to_vec());
        TorusPoint z = wrap_point(q);
        double pw = 1.0 / vm;
        for (std::size_t n = 0; n < depth; ++n) {
            acc += pw * dot(vl, map_.g.eval({z.x, z.y}));
            z = map_.eval(z);
            pw /= vm;
        }
        double tail = defect_bound() / std::pow(std::fabs(vm), double(depth));
        return {acc / double(sd_.k), tail, depth};
    }

    double phi(TorusPoint p, double tol) const { return wrap01(phi_hat(lift(p), tol).value); }

private:
    TorusMap map_;
    SpectralData sd_;
    std::size_t depth_cap_;
};

inline PhiValue phi_hat(const TorusMap& map, LiftPoint q, double tol) {
    return PhiCalc(map).phi_hat(q, tol);
}

inline double phi(const TorusMap& map, TorusPoint p, double tol) {
    return PhiCalc(map).phi(p, tol);
}

// Max over random samples of circle-dist(Phi(F z), m Phi(z)); bounded by
// (|m|+1) tol when both evaluations meet tol.
inline double factoring_residual(const TorusMap& map, std::size_t sample_n, double tol,
                                 std::uint64_t seed = default_seed) {
    if (sample_n < 1) throw std::invalid_argument("factoring_residual: sample_n >= 1");
    PhiCalc pc(map);
    double m = double(pc.spectral().m);
    Rng rng(seed);
    std::vector<TorusPoint> pts(sample_n);
    for (auto& p : pts) p = rng.torus_point();
    std::vector<double> res(sample_n);
    parallel_for(sample_n, [&](std::size_t i) {
        double a = pc.phi(map.eval(pts[i]), tol);
        double b = wrap01(m * pc.phi(pts[i], tol));
        res[i] = circle_dist(a, b);
    });
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, r);
    return worst;
}

// Left side of the reverse-Lipschitz inequality, using k*Phihat so the bound
// 2/(|m|-1) ||v_m_left|| ||G|| applies as stated.
inline double lipschitz_defect(const TorusMap& map, LiftPoint z1, LiftPoint z2,
                               double tol = 1e-12) {
    PhiCalc pc(map);
    double k = double(pc.spectral().k);
    double dphi = std::fabs(k * pc.phi_hat(z1, tol).value - k * pc.phi_hat(z2, tol).value);
    double dlin = std::fabs(dot(pc.spectral().v_m_left.to_vec(), (z1 - z2)));
    return std::fabs(dphi - dlin);
}

// ---- fibers ----

struct FiberPolyline {
    double theta = 0.0;
    std::vector<TorusPoint> points;
    bool closed = false;
};

namespace detail {

// Solve Phihat(anchor + tau dir) = theta_lift by bisection. The bracket is
// the linear prediction widened by the defect bound, which straddles the
// target whenever the series bound holds.
inline LiftPoint solve_phi_on_line(const PhiCalc& pc, Vec2 anchor, Vec2 dir,
                                   double theta_lift, double tol) {
    double k = double(pc.spectral().k);
    double rate = dot(pc.spectral().v_m_left.to_vec(), dir) / k;
    if (rate == 0.0)
        throw BracketFailureError("solve_phi_on_line: line is parallel to the fibers");
    if (rate < 0.0) {
        dir = -dir;
        rate = -rate;
    }
    double g0 = dot(pc.spectral().v_m_left.to_vec(), anchor) / k;
    double slack = pc.defect_bound() + 16.0 * tol + 1e-12;
    double lo = (theta_lift - g0 - slack) / rate;
    double hi = (theta_lift - g0 + slack) / rate;
    double phi_tol = tol / 8.0;
    auto eval = [&](double tau) {
        LiftPoint q{anchor.x + tau * dir.x, anchor.y + tau * dir.y};
        return pc.phi_hat(q, phi_tol).value - theta_lift;
    };
    double flo = eval(lo), fhi = eval(hi);
    if (flo > 0.0 || fhi < 0.0)
        throw BracketFailureError("solve_phi_on_line: Phihat does not straddle theta "
                                  "(cone system likely broken)");
    double fmid = flo;
    double mid = lo;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(hi)); ++it) {
        mid = 0.5 * (lo + hi);
        fmid = eval(mid);
        if (std::fabs(fmid) <= tol) break;
        if (fmid < 0.0) lo = mid; else hi = mid;
    }
    if (std::fabs(fmid) > tol)
        throw NoConvergenceError("solve_phi_on_line: bisection stalled");
    return {anchor.x + mid * dir.x, anchor.y + mid * dir.y};
}

} // namespace detail

// Unique point with Phi = theta on the line through `anchor` in direction
// v_m_right (horizontal lines meet each fiber once).
inline TorusPoint fiber_solve(const TorusMap& map, double theta, TorusPoint anchor,
                              double tol = 1e-10) {
    PhiCalc pc(map);
    Vec2 a{anchor.x, anchor.y};
    Vec2 dir = pc.spectral().v_m_right.to_vec();
    double k = double(pc.spectral().k);
    double g0 = dot(pc.spectral().v_m_left.to_vec(), a) / k;
    double theta_lift = theta + std::floor(g0 + pc.defect_bound() - theta) + 1.0;
    return wrap_point(detail::solve_phi_on_line(pc, a, dir, theta_lift, tol));
}

// Traces the fiber Phi^-1(theta) by solving along n_points lines offset in
// the w1 direction of the tiling. Anchors satisfy v_m_left . anchor = 0, so
// one lift of theta serves every line and consecutive points stay close.
inline FiberPolyline fiber_trace(const TorusMap& map, double theta, std::size_t n_points,
                                 double tol = 1e-10) {
    if (n_points < 8) throw std::invalid_argument("fiber_trace: n_points must be >= 8");
    PhiCalc pc(map);
    TilingBasis tb = build_tiling(pc.spectral().v_m_left);
    Vec2 w1 = tb.w1.to_vec();
    Vec2 dir = pc.spectral().v_m_right.to_vec();
    double theta_lift = theta + std::floor(pc.defect_bound() - theta) + 1.0;

    FiberPolyline poly;
    poly.theta = theta;
    poly.points.resize(n_points);
    parallel_for(n_points, [&](std::size_t j) {
        Vec2 anchor = (double(j) / double(n_points)) * w1;
        poly.points[j] = wrap_point(detail::solve_phi_on_line(pc, anchor, dir, theta_lift, tol));
    });

    double resolution =
        4.0 * (norm(w1) + norm(pc.spectral().v_m_right.to_vec())) / double(n_points);
    poly.closed = true;
    for (std::size_t j = 0; j < n_points; ++j)
        if (torus_dist(poly.points[j], poly.points[(j + 1) % n_points]) > resolution) {
            poly.closed = false;
            break;
        }
    return poly;
}

// ---- the conjugacy H ----

// H(z) = (Phi(z), beta1(z) mod 1) where beta1 is the w1-coordinate of z in
// the unimodular tiling basis. beta1 is an integer covector, so it descends
// to the torus; it coincides with the Euclidean orthogonal projection onto
// span(w1) exactly when w1 is perpendicular to w2.
class Conjugacy {
public:
    Conjugacy(const TorusMap& map, double tol = 1e-10)
        : pc_(map), tiling_(build_tiling(pc_.spectral().v_m_left)), tol_(tol) {}

    const SpectralData& spectral() const { return pc_.spectral(); }
    const TilingBasis& tiling() const { return tiling_; }
    double tol() const { return tol_; }

    TorusPoint forward(TorusPoint p) const {
        double x = pc_.phi(p, tol_);
        double y = wrap01(tiling_.beta1({p.x, p.y}));
        return {x, y};
    }

    // Inverts H by solving Phi = target.x along the beta1 = target.y circle,
    // which runs in direction w2 (v_m_left . w2 = 1, transverse to fibers).
    TorusPoint inverse(TorusPoint target) const {
        Vec2 anchor = target.y * tiling_.w1.to_vec();
        double theta_lift =
            target.x + std::floor(pc_.defect_bound() - target.x) + 1.0;
        LiftPoint q = detail::solve_phi_on_line(pc_, anchor, tiling_.w2.to_vec(),
                                                theta_lift, tol_);
        TorusPoint p = wrap_point(q);
        TorusPoint back = forward(p);
        if (circle_dist(back.x, target.x) > 64.0 * tol_ ||
            circle_dist(back.y, target.y) > 1e-9)
            throw NoConvergenceError("Conjugacy::inverse: residual check failed");
        return p;
    }

private:
    PhiCalc pc_;
    TilingBasis tiling_;
    double tol_;
};

} // namespace torusdyn
