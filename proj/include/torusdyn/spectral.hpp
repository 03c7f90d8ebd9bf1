// Integer eigen-structure of the linear part, the induced lattice data
// (minimal functional value k, unimodular tiling basis), and the sampled
// verification of expanding cone systems.
//
// Everything about eigenvectors is exact 64-bit integer arithmetic; floating
// point enters only through cone/delta sampling.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "parallel.hpp"
#include "torus_map.hpp"

namespace torusdyn {

struct NotEMError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroVectorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotPrimitiveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// k = min{|v.x| : x integer, v.x != 0} equals gcd of the entries (Bezout).
inline std::int64_t lattice_min_k(IVec2 v) {
    if (v.x == 0 && v.y == 0) throw ZeroVectorError("lattice_min_k: zero vector");
    return gcd64(v.x, v.y);
}

struct SpectralData {
    std::int64_t m = 0;   // integer eigenvalue with |m| > 1
    IVec2 v_m_left;       // primitive, v_m_left M = m v_m_left
    IVec2 v_m_right;      // primitive, M v_m_right = m v_m_right
    IVec2 v_1_right;      // primitive, M v_1_right = v_1_right
    std::int64_t k = 1;   // gcd of v_m_left entries
    double theta = 0.0;   // angle in (0, pi/2] between v_m_right and v_1_right
};

namespace detail {

// Primitive integer kernel vector of a rank-one (or rank-deficient) 2x2
// integer matrix.
inline std::optional<IVec2> integer_kernel(IMat2 A) {
    if (A.a != 0 || A.b != 0) return make_primitive({A.b, -A.a});
    if (A.c != 0 || A.d != 0) return make_primitive({A.d, -A.c});
    return std::nullopt; // zero matrix: whole plane
}

} // namespace detail

// Requires the characteristic polynomial to split over the integers with
// roots exactly {1, m}, |m| > 1: equivalently det M = m and tr M = 1 + m.
inline SpectralData eigen_data(IMat2 M) {
    std::int64_t m = M.det();
    if (M.trace() != 1 + m || std::llabs(m) < 2)
        throw NotEMError("eigen_data: matrix does not have integer eigenvalues {1, m} with |m|>1");

    SpectralData sd;
    sd.m = m;
    IMat2 MmI{M.a - m, M.b, M.c, M.d - m};
    IMat2 MI{M.a - 1, M.b, M.c, M.d - 1};
    auto vr = detail::integer_kernel(MmI);
    auto vl = detail::integer_kernel(MmI.transpose());
    auto v1 = detail::integer_kernel(MI);
    if (!vr || !vl || !v1) throw NotEMError("eigen_data: degenerate eigenspace");
    sd.v_m_right = *vr;
    sd.v_m_left = *vl;
    sd.v_1_right = *v1;
    sd.k = lattice_min_k(sd.v_m_left);

    // exact self-checks; these never fire for matrices passing the test above
    IVec2 a = M.apply(sd.v_m_right);
    IVec2 b = M.transpose().apply(sd.v_m_left);
    IVec2 c = M.apply(sd.v_1_right);
    if (!(a == m * sd.v_m_right && b == m * sd.v_m_left && c == sd.v_1_right))
        throw NotEMError("eigen_data: eigenvector verification failed");

    double cr = std::fabs(double(cross(sd.v_m_right, sd.v_1_right)));
    double dt = std::fabs(double(dot(sd.v_m_right, sd.v_1_right)));
    sd.theta = std::atan2(cr, dt);
    return sd;
}

// ---- tiling basis (unimodular lattice basis adapted to v_m_left) ----

struct TilingBasis {
    IVec2 w1; // primitive, perpendicular to v_m_left
    IVec2 w2; // lattice point with v_m_left . w2 = 1, minimal norm
    // Integer covector n with n.z = coefficient of w1 when z is written in
    // the (w1, w2) basis. Because [w1 w2] is unimodular this coefficient is
    // well defined mod 1 on the torus; it is the projection onto span(w1)
    // along w2, scaled so the tiling parallelogram has unit side.
    IVec2 proj_covector;

    double beta1(Vec2 z) const { return dot(proj_covector, z); }
    double beta2(IVec2 v_m_left, Vec2 z) const { return dot(v_m_left, z); }
};

namespace detail {

// x, y with a x + b y = gcd(a, b).
inline void egcd(std::int64_t a, std::int64_t b, std::int64_t& x, std::int64_t& y) {
    if (b == 0) {
        x = (a >= 0) ? 1 : -1;
        y = 0;
        return;
    }
    std::int64_t x1, y1;
    egcd(b, a % b, x1, y1);
    x = y1;
    y = x1 - (a / b) * y1;
}

} // namespace detail

inline TilingBasis build_tiling(IVec2 v_m_left) {
    if (v_m_left.x == 0 && v_m_left.y == 0)
        throw ZeroVectorError("build_tiling: zero vector");
    if (gcd64(v_m_left.x, v_m_left.y) != 1)
        throw NotPrimitiveError("build_tiling: v_m_left must be primitive (k=1)");

    TilingBasis tb;
    tb.w1 = make_primitive({-v_m_left.y, v_m_left.x});

    std::int64_t x0, y0;
    detail::egcd(v_m_left.x, v_m_left.y, x0, y0);
    if (v_m_left.x * x0 + v_m_left.y * y0 == -1) { x0 = -x0; y0 = -y0; }
    IVec2 w2{x0, y0};
    // minimize ||w2 + t w1|| over integers t; ties broken lexicographically
    double tstar = -double(dot(w2, tb.w1)) / double(dot(tb.w1, tb.w1));
    IVec2 best = w2;
    bool first = true;
    for (std::int64_t t = std::int64_t(std::floor(tstar)) - 1;
         t <= std::int64_t(std::floor(tstar)) + 2; ++t) {
        IVec2 cand = w2 + t * tb.w1;
        if (first) { best = cand; first = false; continue; }
        std::int64_t dc = dot(cand, cand), db = dot(best, best);
        if (dc < db || (dc == db && (cand.x < best.x || (cand.x == best.x && cand.y < best.y))))
            best = cand;
    }
    tb.w2 = best;

    std::int64_t det = cross(tb.w1, tb.w2);
    if (det != 1 && det != -1)
        throw std::logic_error("build_tiling: basis is not unimodular");
    tb.proj_covector = {tb.w2.y / det, -tb.w2.x / det};
    return tb;
}

// ---- cone systems ----

struct ConeParams {
    double K = 0.0;     // required expansion factor, > 1
    double alpha = 0.0; // cone half-width, > 0
    Vec2 w;             // unit vector, direction of v_m_right
    Vec2 W_dir;         // unit vector spanning (v_m_left)^perp
    Vec2 v_left;        // v_m_left as doubles, for the (a,b) splitting
    double denom = 0.0; // v_left . w, nonzero

    // Oblique splitting v = a w + b, b in span(W_dir).
    double a_of(Vec2 v) const { return dot(v_left, v) / denom; }
    Vec2 b_of(Vec2 v) const { return v - a_of(v) * w; }
};

inline ConeParams make_cone(const SpectralData& sd, double K, double alpha) {
    ConeParams cp;
    cp.K = K;
    cp.alpha = alpha;
    cp.w = normalized(sd.v_m_right.to_vec());
    cp.W_dir = normalized(Vec2{-double(sd.v_m_left.y), double(sd.v_m_left.x)});
    cp.v_left = sd.v_m_left.to_vec();
    cp.denom = dot(cp.v_left, cp.w);
    if (cp.denom == 0.0) throw std::logic_error("make_cone: w lies in W");
    if (!(K > 1.0) || !(alpha > 0.0))
        throw std::invalid_argument("make_cone: require K > 1 and alpha > 0");
    return cp;
}

// K = (1+|m|)/2 and alpha = min(1, tan(theta)/2); the linear map alone has a
// cone system for any alpha < tan(theta).
inline ConeParams make_default_cone(const SpectralData& sd) {
    double t = std::tan(sd.theta);
    double alpha = std::isfinite(t) ? std::min(1.0, 0.5 * t) : 1.0;
    return make_cone(sd, 0.5 * (1.0 + double(std::llabs(sd.m))), alpha);
}

struct ConeReport {
    bool pass = false;
    double min_expansion = 0.0;          // min |a'| over unit-a cone vectors
    double max_containment_ratio = 0.0;  // max |b'|/|a'|
    double max_transverse_growth = 0.0;  // max ||DF W_dir||
    TorusPoint worst_point;              // base point with the smallest margin
    std::size_t grid_n = 0;
    std::size_t boundary_samples = 0;
};

// Samples DF over a grid_n x grid_n grid of base points and, at each point,
// boundary_samples directions w + s W_dir with s spanning [-alpha, alpha]
// (the rays s = +-alpha are the cone boundary) plus the transverse direction
// W_dir. A failing report is a result, not an error.
inline ConeReport cone_verify(const TorusMap& map, const ConeParams& cone,
                              std::size_t grid_n, std::size_t boundary_samples = 64) {
    if (grid_n < 2) throw std::invalid_argument("cone_verify: grid_n must be >= 2");
    if (boundary_samples < 2) boundary_samples = 2;

    struct Cell {
        double min_exp, max_cont, max_trans, margin;
    };
    std::vector<Cell> cells(grid_n * grid_n);

    parallel_for(grid_n * grid_n, [&](std::size_t idx) {
        std::size_t i = idx / grid_n, j = idx % grid_n;
        TorusPoint z{double(i) / double(grid_n), double(j) / double(grid_n)};
        Mat2 df = map.jacobian(z);
        double min_exp = std::numeric_limits<double>::infinity();
        double max_cont = 0.0;
        for (std::size_t s = 0; s < boundary_samples; ++s) {
            double sv = -cone.alpha +
                        2.0 * cone.alpha * double(s) / double(boundary_samples - 1);
            Vec2 v = cone.w + sv * cone.W_dir; // (a,b) = (1, sv) exactly
            Vec2 vp = df.apply(v);
            double ap = cone.a_of(vp);
            double bp = norm(cone.b_of(vp));
            min_exp = std::min(min_exp, std::fabs(ap));
            max_cont = std::max(max_cont, ap == 0.0 ? std::numeric_limits<double>::infinity()
                                                    : bp / std::fabs(ap));
        }
        double trans = norm(df.apply(cone.W_dir));
        double margin = std::min({min_exp / cone.K, cone.alpha / max_cont, cone.K / trans});
        cells[idx] = {min_exp, max_cont, trans, margin};
    });

    ConeReport rep;
    rep.grid_n = grid_n;
    rep.boundary_samples = boundary_samples;
    rep.min_expansion = std::numeric_limits<double>::infinity();
    double worst_margin = std::numeric_limits<double>::infinity();
    std::size_t worst_idx = 0;
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        rep.min_expansion = std::min(rep.min_expansion, cells[idx].min_exp);
        rep.max_containment_ratio = std::max(rep.max_containment_ratio, cells[idx].max_cont);
        rep.max_transverse_growth = std::max(rep.max_transverse_growth, cells[idx].max_trans);
        if (cells[idx].margin < worst_margin) {
            worst_margin = cells[idx].margin;
            worst_idx = idx;
        }
    }
    rep.worst_point = {double(worst_idx / grid_n) / double(grid_n),
                       double(worst_idx % grid_n) / double(grid_n)};
    rep.pass = rep.min_expansion > cone.K && rep.max_containment_ratio < cone.alpha &&
               rep.max_transverse_growth < cone.K;
    return rep;
}

struct DeltaReport {
    double dg_norm = 0.0;   // analytic sup bound on ||DG||
    double threshold = 0.0; // delta(M)
    bool pass = false;
};

// Smallness test ||DG|| < delta(M). With perpendicular eigen-directions the
// threshold is 0.5|m|; otherwise a conservative margin bound
// (K-1) * min_{unit u in cone} ||M u|| / (1 + alpha) with K = (1+|m|)/2.
inline DeltaReport delta_check(const TorusMap& map) {
    SpectralData sd = eigen_data(map.matrix); // throws NotEMError
    DeltaReport rep;
    rep.dg_norm = map.g.dg_sup_norm();
    if (dot(sd.v_m_right, sd.v_1_right) == 0) {
        rep.threshold = 0.5 * double(std::llabs(sd.m));
    } else {
        ConeParams cone = make_default_cone(sd);
        Mat2 M = map.matrix.to_mat();
        double sigma = std::numeric_limits<double>::infinity();
        const std::size_t samples = 4096;
        for (std::size_t s = 0; s <= samples; ++s) {
            double sv = -cone.alpha + 2.0 * cone.alpha * double(s) / double(samples);
            Vec2 u = normalized(cone.w + sv * cone.W_dir);
            sigma = std::min(sigma, norm(M.apply(u)));
        }
        rep.threshold = (cone.K - 1.0) * sigma / (1.0 + cone.alpha);
    }
    rep.pass = rep.dg_norm < rep.threshold;
    return rep;
}

} // namespace torusdyn
