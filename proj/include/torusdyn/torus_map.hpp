// Torus maps F(z) = M z + G(z) mod 1 with an integer matrix M and a finite
// trigonometric perturbation G. Restricting G to finite sums keeps the sup
// bounds on ||G|| and ||DG|| exact (triangle inequality over the terms).
#pragma once

#include <cstdint>
#include <vector>

#include "geometry.hpp"

namespace torusdyn {

struct FourierTerm {
    IVec2 freq;    // integer frequency vector, so the term is Z^2-periodic
    Vec2 coeff;
    double phase = 0.0;
};

// G(z) = sum_j coeff_j * sin(2*pi*freq_j.z + phase_j) + (0, t).
// The scalar t is an additive drift in the last coordinate; it is the
// parameter swept by the circle-dynamics tools.
struct FourierPerturbation {
    std::vector<FourierTerm> terms;
    double t = 0.0;

    Vec2 eval(Vec2 z) const {
        Vec2 g{0.0, t};
        for (const FourierTerm& tm : terms)
            g += std::sin(two_pi * dot(tm.freq, z) + tm.phase) * tm.coeff;
        return g;
    }

    Mat2 jacobian(Vec2 z) const {
        Mat2 dg{};
        for (const FourierTerm& tm : terms)
            dg = dg + (two_pi * std::cos(two_pi * dot(tm.freq, z) + tm.phase)) *
                          outer(tm.coeff, tm.freq.to_vec());
        return dg;
    }

    // Upper bound on sup_z ||G(z)||_2.
    double sup_norm() const {
        double s = std::fabs(t);
        for (const FourierTerm& tm : terms) s += norm(tm.coeff);
        return s;
    }

    // Upper bound on sup_z ||DG(z)||_2 (each term is rank one).
    double dg_sup_norm() const {
        double s = 0.0;
        for (const FourierTerm& tm : terms)
            s += two_pi * norm(tm.coeff) * norm(tm.freq.to_vec());
        return s;
    }

    bool empty() const { return terms.empty() && t == 0.0; }
};

struct TorusMap {
    IMat2 matrix;
    FourierPerturbation g;

    TorusPoint eval(TorusPoint p) const {
        Vec2 z{p.x, p.y};
        Vec2 w = matrix.apply(z) + g.eval(z);
        return wrap_point(w.x, w.y);
    }

    LiftPoint lift_eval(LiftPoint q) const {
        Vec2 z = q.to_vec();
        Vec2 w = matrix.apply(z) + g.eval(z);
        return {w.x, w.y};
    }

    Mat2 jacobian(TorusPoint p) const { return matrix.to_mat() + g.jacobian({p.x, p.y}); }
    Mat2 jacobian(LiftPoint q) const { return matrix.to_mat() + g.jacobian(q.to_vec()); }

    TorusPoint iterate(TorusPoint p, std::size_t n) const {
        for (std::size_t i = 0; i < n; ++i) p = eval(p);
        return p;
    }

    // [p, F(p), ..., F^n(p)], length n+1.
    std::vector<TorusPoint> orbit(TorusPoint p, std::size_t n) const {
        std::vector<TorusPoint> out;
        out.reserve(n + 1);
        out.push_back(p);
        for (std::size_t i = 0; i < n; ++i) out.push_back(eval(out.back()));
        return out;
    }

    // Skew form: the first lift coordinate is m*x, independent of y.
    // The circle-dynamics tools additionally rely on the base map being
    // exactly x -> m x, so terms feeding the first coordinate are ruled out.
    bool skew() const {
        if (matrix.b != 0) return false;
        for (const FourierTerm& tm : g.terms)
            if (tm.coeff.x != 0.0) return false;
        return true;
    }
};

// Reference family F_t(x,y) = (3x, x + y + t + eps*sin(2*pi*y)) mod 1.
inline TorusMap reference_map(double eps = 0.05, double t = 0.0) {
    TorusMap map;
    map.matrix = {3, 0, 1, 1};
    if (eps != 0.0) map.g.terms.push_back({{0, 1}, {0.0, eps}, 0.0});
    map.g.t = t;
    return map;
}

} // namespace torusdyn
