// Small fixed-size linear algebra and torus geometry used everywhere else.
// Points on the torus live in [0,1)^2; lifts are unconstrained points of the
// covering plane R^2. Tangent vectors and lattice vectors are plain Vec2 /
// IVec2.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace torusdyn {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend Vec2 operator*(Vec2 v, double s) { return s * v; }
    friend Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.y / s}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2& operator+=(Vec2 v) { x += v.x; y += v.y; return *this; }
    Vec2& operator-=(Vec2 v) { x -= v.x; y -= v.y; return *this; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm_inf(Vec2 v) { return std::max(std::fabs(v.x), std::fabs(v.y)); }
inline Vec2 normalized(Vec2 v) {
    double n = norm(v);
    if (n == 0.0) throw std::invalid_argument("normalized: zero vector");
    return v / n;
}

struct IVec2 {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend IVec2 operator+(IVec2 a, IVec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend IVec2 operator-(IVec2 a, IVec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend IVec2 operator*(std::int64_t s, IVec2 v) { return {s * v.x, s * v.y}; }
    friend bool operator==(IVec2 a, IVec2 b) { return a.x == b.x && a.y == b.y; }
    Vec2 to_vec() const { return {double(x), double(y)}; }
};

inline std::int64_t dot(IVec2 a, IVec2 b) { return a.x * b.x + a.y * b.y; }
inline std::int64_t cross(IVec2 a, IVec2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(IVec2 a, Vec2 b) { return double(a.x) * b.x + double(a.y) * b.y; }
inline double dot(Vec2 a, IVec2 b) { return dot(b, a); }

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    return std::gcd(std::llabs(a), std::llabs(b));
}

// Primitive representative of the integer direction of v, with the first
// nonzero entry made positive so the choice is deterministic.
inline IVec2 make_primitive(IVec2 v) {
    if (v.x == 0 && v.y == 0) throw std::invalid_argument("make_primitive: zero vector");
    std::int64_t g = gcd64(v.x, v.y);
    v = {v.x / g, v.y / g};
    if (v.x < 0 || (v.x == 0 && v.y < 0)) v = {-v.x, -v.y};
    return v;
}

struct Mat2 {
    // row-major: [[a,b],[c,d]] acts on column vectors
    double a = 0, b = 0, c = 0, d = 0;

    Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }
    Mat2 transpose() const { return {a, c, b, d}; }

    friend Mat2 operator+(Mat2 p, Mat2 q) { return {p.a + q.a, p.b + q.b, p.c + q.c, p.d + q.d}; }
    friend Mat2 operator-(Mat2 p, Mat2 q) { return {p.a - q.a, p.b - q.b, p.c - q.c, p.d - q.d}; }
    friend Mat2 operator*(double s, Mat2 m) { return {s * m.a, s * m.b, s * m.c, s * m.d}; }
    friend Mat2 operator*(Mat2 p, Mat2 q) {
        return {p.a * q.a + p.b * q.c, p.a * q.b + p.b * q.d,
                p.c * q.a + p.d * q.c, p.c * q.b + p.d * q.d};
    }

    static Mat2 identity() { return {1, 0, 0, 1}; }

    // Solve M x = rhs. Throws on (numerically) singular M.
    Vec2 solve(Vec2 rhs) const {
        double dt = det();
        if (std::fabs(dt) < 1e-300) throw std::runtime_error("Mat2::solve: singular matrix");
        return {(d * rhs.x - b * rhs.y) / dt, (-c * rhs.x + a * rhs.y) / dt};
    }

    std::array<std::complex<double>, 2> eigenvalues() const {
        double tr = trace(), dt = det();
        std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4.0 - dt));
        return {tr / 2.0 + disc, tr / 2.0 - disc};
    }

    // Largest singular value.
    double op_norm() const {
        // eigenvalues of M^T M are (s +- sqrt(s^2 - 4 det^2))/2 with s = sum of squares
        double s = a * a + b * b + c * c + d * d;
        double dt = det();
        double disc = std::sqrt(std::max(0.0, s * s - 4.0 * dt * dt));
        return std::sqrt((s + disc) / 2.0);
    }
};

// Outer product u v^T.
inline Mat2 outer(Vec2 u, Vec2 v) { return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}; }

struct IMat2 {
    std::int64_t a = 0, b = 0, c = 0, d = 0;

    IVec2 apply(IVec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Vec2 apply(Vec2 v) const { return {double(a) * v.x + double(b) * v.y, double(c) * v.x + double(d) * v.y}; }
    std::int64_t det() const { return a * d - b * c; }
    std::int64_t trace() const { return a + d; }
    IMat2 transpose() const { return {a, c, b, d}; }
    Mat2 to_mat() const { return {double(a), double(b), double(c), double(d)}; }
    std::int64_t norm_inf() const {
        return std::max(std::llabs(a) + std::llabs(b), std::llabs(c) + std::llabs(d));
    }
    friend bool operator==(IMat2 p, IMat2 q) {
        return p.a == q.a && p.b == q.b && p.c == q.c && p.d == q.d;
    }
};

// ---- torus coordinates ----

// Reduce to [0,1). Uses floor so that exact integers map to 0, and guards the
// rounding case x - floor(x) == 1 for tiny negative x.
inline double wrap01(double v) {
    double r = v - std::floor(v);
    if (r >= 1.0) r -= 1.0;
    return r;
}

// Signed representative of v mod 1 in [-1/2, 1/2).
inline double wrap_half(double v) {
    double r = v - std::round(v);
    if (r >= 0.5) r -= 1.0;
    if (r < -0.5) r += 1.0;
    return r;
}

// Distance on the circle R/Z.
inline double circle_dist(double u, double v) { return std::fabs(wrap_half(u - v)); }

struct TorusPoint {
    double x = 0.0;
    double y = 0.0;
};

struct LiftPoint {
    double x = 0.0;
    double y = 0.0;

    friend LiftPoint operator+(LiftPoint p, Vec2 v) { return {p.x + v.x, p.y + v.y}; }
    friend LiftPoint operator-(LiftPoint p, Vec2 v) { return {p.x - v.x, p.y - v.y}; }
    friend Vec2 operator-(LiftPoint p, LiftPoint q) { return {p.x - q.x, p.y - q.y}; }
    Vec2 to_vec() const { return {x, y}; }
};

inline TorusPoint wrap_point(LiftPoint q) { return {wrap01(q.x), wrap01(q.y)}; }
inline TorusPoint wrap_point(double x, double y) { return {wrap01(x), wrap01(y)}; }

// Canonical lift: the representative in [0,1)^2.
inline LiftPoint lift(TorusPoint p) { return {p.x, p.y}; }

// Signed shortest displacement from a to b on the torus. Coordinates wrap
// independently, which equals the minimum over the 9 nearest lattice shifts.
inline Vec2 torus_delta(TorusPoint a, TorusPoint b) {
    return {wrap_half(b.x - a.x), wrap_half(b.y - a.y)};
}

inline double torus_dist(TorusPoint a, TorusPoint b) { return norm(torus_delta(a, b)); }

} // namespace torusdyn
