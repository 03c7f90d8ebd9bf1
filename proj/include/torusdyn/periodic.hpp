// Periodic orbits and the invariant sets hanging off them: Newton detection
// and classification, periodic vertical circles, 1-d unstable manifolds,
// preimage trees of the stable set, and snap-back (homoclinic) certificates.
#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "torus_map.hpp"

namespace torusdyn {

struct NotPeriodicError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotSaddleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotRepellerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptySetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class StabilityClass { Saddle, Repeller, Attractor, Nonhyperbolic };

inline const char* to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::Saddle: return "saddle";
        case StabilityClass::Repeller: return "repeller";
        case StabilityClass::Attractor: return "attractor";
        default: return "nonhyperbolic";
    }
}

struct PeriodicOrbit {
    std::vector<TorusPoint> points; // orbit order, length = period
    std::size_t period = 0;
    IVec2 lattice_shift;            // Fhat^period(lift) - lift at points[0]
    std::array<std::complex<double>, 2> multipliers{};
    StabilityClass cls = StabilityClass::Nonhyperbolic;
    double residual = 0.0;
};

// Base points of the vertical circles invariant under the n-th iterate of
// x -> m x: the rationals k/(m^n - 1).
inline std::vector<double> periodic_circle_bases(std::int64_t m, std::size_t n) {
    if (std::llabs(m) < 2) throw std::invalid_argument("periodic_circle_bases: need |m| > 1");
    if (n < 1) throw std::invalid_argument("periodic_circle_bases: need n >= 1");
    std::int64_t D = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::llabs(D) > (std::int64_t(1) << 40))
            throw std::invalid_argument("periodic_circle_bases: m^n too large");
        D *= m;
    }
    D -= 1;
    std::int64_t Q = std::llabs(D);
    if (Q > 10'000'000) throw std::invalid_argument("periodic_circle_bases: too many circles");
    std::vector<double> out;
    out.reserve(std::size_t(Q));
    for (std::int64_t k = 0; k < Q; ++k) out.push_back(double(k) / double(Q));
    return out;
}

// Multipliers (eigenvalues of the Jacobian product around the orbit) and the
// stability class with hyperbolicity margin `margin`.
inline std::pair<std::array<std::complex<double>, 2>, StabilityClass>
classify(const TorusMap& map, const std::vector<TorusPoint>& points, double margin = 1e-6,
         double check_tol = 1e-8) {
    if (points.empty()) throw NotPeriodicError("classify: empty orbit");
    for (std::size_t i = 0; i < points.size(); ++i) {
        TorusPoint next = points[(i + 1) % points.size()];
        if (torus_dist(map.eval(points[i]), next) > check_tol)
            throw NotPeriodicError("classify: points do not form a periodic orbit");
    }
    Mat2 prod = Mat2::identity();
    for (const TorusPoint& p : points) prod = map.jacobian(p) * prod;
    auto eig = prod.eigenvalues();
    if (std::abs(eig[0]) < std::abs(eig[1])) std::swap(eig[0], eig[1]);
    double a0 = std::abs(eig[0]), a1 = std::abs(eig[1]);
    StabilityClass cls;
    if (std::fabs(a0 - 1.0) <= margin || std::fabs(a1 - 1.0) <= margin)
        cls = StabilityClass::Nonhyperbolic;
    else if (a0 > 1.0 && a1 > 1.0)
        cls = StabilityClass::Repeller;
    else if (a0 < 1.0 && a1 < 1.0)
        cls = StabilityClass::Attractor;
    else
        cls = StabilityClass::Saddle;
    return {eig, cls};
}

namespace detail {

// Tolerance-aware point registry: buckets of size ~1e-6 with wraparound
// neighbor lookup. Insertion order gives each point a stable index.
class TorusPointSet {
public:
    explicit TorusPointSet(double tol) : tol_(tol) {}

    // Returns the index of a previously inserted point within tol, or
    // inserts and returns the new index with `fresh` set.
    std::size_t insert(TorusPoint p, bool& fresh) {
        long bx = bucket_of(p.x), by = bucket_of(p.y);
        for (long dx = -1; dx <= 1; ++dx)
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = buckets_.find(key(bx + dx, by + dy));
                if (it == buckets_.end()) continue;
                for (std::size_t idx : it->second)
                    if (torus_dist(points_[idx], p) <= tol_) {
                        fresh = false;
                        return idx;
                    }
            }
        points_.push_back(p);
        buckets_[key(bx, by)].push_back(points_.size() - 1);
        fresh = true;
        return points_.size() - 1;
    }

    std::optional<std::size_t> find(TorusPoint p) const {
        long bx = bucket_of(p.x), by = bucket_of(p.y);
        for (long dx = -1; dx <= 1; ++dx)
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = buckets_.find(key(bx + dx, by + dy));
                if (it == buckets_.end()) continue;
                for (std::size_t idx : it->second)
                    if (torus_dist(points_[idx], p) <= tol_) return idx;
            }
        return std::nullopt;
    }

    const std::vector<TorusPoint>& points() const { return points_; }

private:
    static constexpr long kBuckets = 1 << 20;
    static long bucket_of(double c) { return long(wrap01(c) * kBuckets) & (kBuckets - 1); }
    static std::uint64_t key(long bx, long by) {
        return (std::uint64_t(bx & (kBuckets - 1)) << 20) | std::uint64_t(by & (kBuckets - 1));
    }
    double tol_;
    std::vector<TorusPoint> points_;
    std::map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

struct MapPower {
    const TorusMap& map;
    std::size_t p;

    TorusPoint eval(TorusPoint q) const { return map.iterate(q, p); }

    // Jacobian of F^p and the endpoint in one sweep.
    std::pair<Mat2, TorusPoint> jacobian_and_image(TorusPoint q) const {
        Mat2 J = Mat2::identity();
        for (std::size_t s = 0; s < p; ++s) {
            J = map.jacobian(q) * J;
            q = map.eval(q);
        }
        return {J, q};
    }
};

// Newton for F^p(q) = q with componentwise-wrapped residual. The wrap picks
// the lattice shift implicitly, so no explicit enumeration of shifts is
// needed; the shift is recovered from the lift after convergence.
inline std::optional<TorusPoint> newton_periodic(const TorusMap& map, std::size_t p,
                                                 TorusPoint q, double tol,
                                                 std::size_t max_iter, double max_step) {
    MapPower fp{map, p};
    for (std::size_t it = 0; it < max_iter; ++it) {
        auto [J, image] = fp.jacobian_and_image(q);
        Vec2 r = torus_delta(q, image);
        if (norm(r) <= tol) {
            // one polishing step unless the linearization is singular there
            Mat2 A = J - Mat2::identity();
            if (std::fabs(A.det()) > 1e-12) {
                Vec2 step = A.solve(-1.0 * r);
                TorusPoint q2 = wrap_point(q.x + step.x, q.y + step.y);
                if (norm(torus_delta(q2, fp.eval(q2))) < norm(r)) q = q2;
            }
            return q;
        }
        Mat2 A = J - Mat2::identity();
        if (std::fabs(A.det()) < 1e-12) return std::nullopt;
        Vec2 step = A.solve(-1.0 * r);
        double sn = norm(step);
        if (sn > max_step) step = (max_step / sn) * step;
        q = wrap_point(q.x + step.x, q.y + step.y);
    }
    return std::nullopt;
}

inline std::vector<std::size_t> divisors_of(std::size_t p) {
    std::vector<std::size_t> d;
    for (std::size_t i = 1; i <= p; ++i)
        if (p % i == 0) d.push_back(i);
    return d;
}

} // namespace detail

struct FindPeriodicOptions {
    double newton_tol = 1e-12;
    std::size_t max_newton_iter = 60;
    double dedup_tol = 1e-7;
    double hyper_margin = 1e-6;
    double max_step = 0.25;
};

// All orbits of minimal period exactly `period`, from Newton solves seeded on
// a seed_grid x seed_grid lattice. Results are deduplicated up to cyclic
// rotation and sorted by their lexicographically smallest point.
inline std::vector<PeriodicOrbit> find_periodic(const TorusMap& map, std::size_t period,
                                                std::size_t seed_grid,
                                                FindPeriodicOptions opts = {}) {
    if (period < 1) throw std::invalid_argument("find_periodic: period >= 1");
    if (seed_grid < 2) throw std::invalid_argument("find_periodic: seed_grid >= 2");

    std::vector<std::optional<TorusPoint>> hits(seed_grid * seed_grid);
    parallel_for(seed_grid * seed_grid, [&](std::size_t idx) {
        TorusPoint seed{double(idx / seed_grid) / double(seed_grid),
                        double(idx % seed_grid) / double(seed_grid)};
        hits[idx] = detail::newton_periodic(map, period, seed, opts.newton_tol,
                                            opts.max_newton_iter, opts.max_step);
    });

    detail::TorusPointSet roots(opts.dedup_tol);
    for (const auto& h : hits)
        if (h) {
            bool fresh;
            roots.insert(*h, fresh);
        }
    std::vector<TorusPoint> uniq = roots.points();
    std::sort(uniq.begin(), uniq.end(), [](TorusPoint a, TorusPoint b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });

    std::vector<bool> used(uniq.size(), false);
    detail::TorusPointSet index(opts.dedup_tol);
    for (const TorusPoint& p : uniq) {
        bool fresh;
        index.insert(p, fresh);
    }
    // index order matches uniq order only if insertion saw them sorted; map back
    auto mark = [&](TorusPoint p) {
        if (auto idx = index.find(p)) used[*idx] = true;
    };
    auto is_used = [&](TorusPoint p) -> bool {
        if (auto idx = index.find(p)) return used[*idx];
        return false;
    };

    std::vector<PeriodicOrbit> out;
    auto divisors = detail::divisors_of(period);
    for (const TorusPoint& q : uniq) {
        if (is_used(q)) continue;
        std::vector<TorusPoint> seq = map.orbit(q, period - 1);
        for (const TorusPoint& s : seq) mark(s);

        std::size_t minimal = period;
        for (std::size_t d : divisors)
            if (d < period && torus_dist(seq[d % period], q) < 1e-8) {
                minimal = d;
                break;
            }
        if (minimal < period) continue;

        PeriodicOrbit orb;
        orb.points = seq;
        orb.period = period;
        orb.residual = 0.0;
        for (std::size_t i = 0; i < period; ++i)
            orb.residual = std::max(
                orb.residual, torus_dist(map.eval(seq[i]), seq[(i + 1) % period]));
        if (orb.residual >= 1e-10) continue;
        LiftPoint L = lift(q);
        for (std::size_t i = 0; i < period; ++i) L = map.lift_eval(L);
        Vec2 shift = L - lift(q);
        orb.lattice_shift = {std::llround(shift.x), std::llround(shift.y)};
        auto [mult, cls] = classify(map, seq, opts.hyper_margin, 1e-6);
        orb.multipliers = mult;
        orb.cls = cls;
        out.push_back(std::move(orb));
    }
    return out;
}

// Max over a grid_n^2 grid of the torus distance to the nearest point of the
// set: a numerical density (covering) measure.
inline double covering_radius(const std::vector<TorusPoint>& pts, std::size_t grid_n) {
    if (pts.empty()) throw EmptySetError("covering_radius: empty point set");
    std::size_t B = std::clamp<std::size_t>(std::size_t(std::sqrt(double(pts.size()))), 4, 512);
    std::vector<std::vector<std::uint32_t>> cells(B * B);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::size_t cx = std::min<std::size_t>(B - 1, std::size_t(wrap01(pts[i].x) * B));
        std::size_t cy = std::min<std::size_t>(B - 1, std::size_t(wrap01(pts[i].y) * B));
        cells[cx * B + cy].push_back(std::uint32_t(i));
    }
    std::vector<double> row_max(grid_n, 0.0);
    parallel_for(grid_n, [&](std::size_t i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < grid_n; ++j) {
            TorusPoint g{double(i) / double(grid_n), double(j) / double(grid_n)};
            long gx = long(wrap01(g.x) * B), gy = long(wrap01(g.y) * B);
            double best = std::numeric_limits<double>::infinity();
            for (long ring = 0; ring <= long(B / 2) + 1; ++ring) {
                if (double(ring - 1) / double(B) > best) break;
                for (long dx = -ring; dx <= ring; ++dx)
                    for (long dy = -ring; dy <= ring; ++dy) {
                        if (std::max(std::labs(dx), std::labs(dy)) != ring) continue;
                        std::size_t cx = std::size_t(((gx + dx) % long(B) + long(B)) % long(B));
                        std::size_t cy = std::size_t(((gy + dy) % long(B) + long(B)) % long(B));
                        for (std::uint32_t idx : cells[cx * B + cy])
                            best = std::min(best, torus_dist(g, pts[idx]));
                    }
            }
            worst = std::max(worst, best);
        }
        row_max[i] = worst;
    });
    double r = 0.0;
    for (double v : row_max) r = std::max(r, v);
    return r;
}

// ---- unstable manifolds ----

struct ManifoldOptions {
    double seed_eps = 1e-6;
    double chord_tol = 1e-3;
    std::size_t max_generations = 48;
    std::size_t seed_points = 17;
    std::size_t max_points = 2'000'000;
};

struct ManifoldPolyline {
    TorusPoint base;
    std::size_t period = 0;
    int side = +1;
    std::vector<TorusPoint> points;
    std::vector<std::size_t> gen_offsets; // start index of each generation
    double arclength = 0.0;
    std::size_t generations = 0;
};

namespace detail {

inline Vec2 kernel_direction(Mat2 A) {
    double n1 = std::hypot(A.a, A.b), n2 = std::hypot(A.c, A.d);
    Vec2 u = (n1 >= n2) ? Vec2{-A.b, A.a} : Vec2{-A.d, A.c};
    return normalized(u);
}

} // namespace detail

// Grows a finite piece of W^u by iterating a fundamental segment placed along
// the unstable eigenvector; refinement inserts parameters (geometric
// midpoints) wherever consecutive images separate beyond chord_tol.
inline ManifoldPolyline unstable_manifold(const TorusMap& map, const PeriodicOrbit& saddle,
                                          double target_arclength, int side = +1,
                                          ManifoldOptions opts = {}) {
    if (saddle.cls != StabilityClass::Saddle)
        throw NotSaddleError("unstable_manifold: orbit is not a saddle");
    if (opts.seed_points < 2) opts.seed_points = 2;

    Mat2 J = Mat2::identity();
    for (const TorusPoint& p : saddle.points) J = map.jacobian(p) * J;
    auto eig = J.eigenvalues();
    double lam = std::abs(eig[0]) > std::abs(eig[1]) ? eig[0].real() : eig[1].real();
    Vec2 u = detail::kernel_direction(J - lam * Mat2::identity());

    std::size_t steps_per_gen = saddle.period;
    double growth = lam;
    if (lam < 0.0) { // orientation-reversing: use the doubled return map
        steps_per_gen *= 2;
        growth = lam * lam;
    }
    TorusPoint base = saddle.points[0];
    double eps = opts.seed_eps;
    auto seed_at = [&](double t) {
        return wrap_point(base.x + double(side) * t * u.x, base.y + double(side) * t * u.y);
    };
    auto point_at = [&](double t, std::size_t gen) {
        return map.iterate(seed_at(t), gen * steps_per_gen);
    };

    std::vector<std::pair<double, TorusPoint>> cur;
    for (std::size_t i = 0; i < opts.seed_points; ++i) {
        double t = eps * std::pow(growth, double(i) / double(opts.seed_points - 1));
        cur.push_back({t, seed_at(t)});
    }

    ManifoldPolyline poly;
    poly.base = base;
    poly.period = saddle.period;
    poly.side = side;
    poly.gen_offsets.push_back(0);
    for (auto& [t, z] : cur) poly.points.push_back(z);
    for (std::size_t i = 1; i < cur.size(); ++i)
        poly.arclength += torus_dist(cur[i - 1].second, cur[i].second);

    for (std::size_t gen = 1; gen <= opts.max_generations; ++gen) {
        for (auto& [t, z] : cur) z = map.iterate(z, steps_per_gen);
        // refine until every chord is short; midpoints are geometric in t
        bool changed = true;
        while (changed && cur.size() < opts.max_points) {
            changed = false;
            std::vector<std::pair<double, TorusPoint>> refined;
            refined.reserve(cur.size() * 2);
            for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
                refined.push_back(cur[i]);
                double gap = torus_dist(cur[i].second, cur[i + 1].second);
                double trel = cur[i + 1].first / cur[i].first;
                if (gap > opts.chord_tol && trel > 1.0 + 1e-13) {
                    double tm = cur[i].first * std::sqrt(trel);
                    refined.push_back({tm, point_at(tm, gen)});
                    changed = true;
                }
            }
            refined.push_back(cur.back());
            cur = std::move(refined);
        }
        poly.gen_offsets.push_back(poly.points.size());
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (i > 0) poly.arclength += torus_dist(cur[i - 1].second, cur[i].second);
            poly.points.push_back(cur[i].second);
        }
        poly.generations = gen;
        if (poly.arclength >= target_arclength) break;
    }
    return poly;
}

// ---- preimage trees ----

struct StableSetSample {
    std::vector<std::vector<TorusPoint>> levels; // levels[0] = {target}

    std::vector<TorusPoint> all() const {
        std::vector<TorusPoint> out;
        for (std::size_t d = 1; d < levels.size(); ++d)
            out.insert(out.end(), levels[d].begin(), levels[d].end());
        return out;
    }
};

namespace detail {

// All solutions of F(q) = w, found by Newton from the preimages of the
// linear part (M^-1 (w + nu) over the integer shifts nu that the lift of the
// unit square can reach). DF invertible means Newton from these seeds
// reliably finds all |det M| preimages.
inline std::vector<TorusPoint> preimages_of(const TorusMap& map, TorusPoint w,
                                            std::size_t extra_seeds, Rng* rng) {
    Mat2 M = map.matrix.to_mat();
    double gb = map.g.sup_norm();
    double lo[2], hi[2];
    lo[0] = std::min(0.0, M.a) + std::min(0.0, M.b) - gb;
    hi[0] = std::max(0.0, M.a) + std::max(0.0, M.b) + gb;
    lo[1] = std::min(0.0, M.c) + std::min(0.0, M.d) - gb + std::min(0.0, map.g.t);
    hi[1] = std::max(0.0, M.c) + std::max(0.0, M.d) + gb + std::max(0.0, map.g.t);

    std::vector<TorusPoint> seeds;
    for (long n1 = long(std::ceil(lo[0] - w.x)) - 1; n1 <= long(std::floor(hi[0] - w.x)) + 1; ++n1)
        for (long n2 = long(std::ceil(lo[1] - w.y)) - 1; n2 <= long(std::floor(hi[1] - w.y)) + 1;
             ++n2) {
            Vec2 rhs{w.x + double(n1), w.y + double(n2)};
            Vec2 q = M.solve(rhs);
            seeds.push_back(wrap_point(q.x, q.y));
        }
    if (rng)
        for (std::size_t i = 0; i < extra_seeds; ++i) seeds.push_back(rng->torus_point());

    TorusPointSet found(1e-9);
    for (TorusPoint q : seeds) {
        bool ok = false;
        for (std::size_t it = 0; it < 40; ++it) {
            Vec2 r = torus_delta(w, map.eval(q)); // F(q) - w, wrapped
            if (norm(r) <= 1e-13) {
                ok = true;
                break;
            }
            Mat2 Jq = map.jacobian(q);
            if (std::fabs(Jq.det()) < 1e-14) break;
            Vec2 step = Jq.solve(-1.0 * r);
            double sn = norm(step);
            if (sn > 0.3) step = (0.3 / sn) * step;
            q = wrap_point(q.x + step.x, q.y + step.y);
        }
        if (ok && torus_dist(map.eval(q), w) < 1e-11) {
            bool fresh;
            found.insert(q, fresh);
        }
    }
    std::vector<TorusPoint> out = found.points();
    std::sort(out.begin(), out.end(), [](TorusPoint a, TorusPoint b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    return out;
}

} // namespace detail

namespace detail {

// One breadth-first level: preimages of every node, deduplicated and sorted.
// Nodes whose structured seeds find fewer than |det M| preimages are retried
// with per_level random seeds.
inline std::vector<TorusPoint> preimage_level(const TorusMap& map,
                                              const std::vector<TorusPoint>& prev,
                                              std::size_t per_level, std::uint64_t seed) {
    std::size_t expected = std::size_t(std::llabs(map.matrix.det()));
    std::vector<std::vector<TorusPoint>> partial(prev.size());
    parallel_for(prev.size(), [&](std::size_t i) {
        partial[i] = preimages_of(map, prev[i], 0, nullptr);
        if (partial[i].size() < expected && per_level > 0) {
            Rng rng(seed + i);
            partial[i] = preimages_of(map, prev[i], per_level, &rng);
        }
    });
    TorusPointSet level(1e-9);
    for (const auto& chunk : partial)
        for (TorusPoint p : chunk) {
            bool fresh;
            level.insert(p, fresh);
        }
    std::vector<TorusPoint> pts = level.points();
    std::sort(pts.begin(), pts.end(), [](TorusPoint a, TorusPoint b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    return pts;
}

} // namespace detail

// Breadth-first preimage tree of `target`: levels[d] solves F(z) = w for all
// w in levels[d-1]. The union over d approximates the stable set.
inline StableSetSample stable_set_sample(const TorusMap& map, TorusPoint target,
                                         std::size_t depth, std::size_t per_level = 16,
                                         std::uint64_t seed = default_seed) {
    if (depth < 1) throw std::invalid_argument("stable_set_sample: depth >= 1");
    StableSetSample out;
    out.levels.push_back({target});
    for (std::size_t d = 1; d <= depth; ++d)
        out.levels.push_back(detail::preimage_level(map, out.levels[d - 1], per_level, seed + d));
    return out;
}

inline StableSetSample stable_set_sample(const TorusMap& map, const PeriodicOrbit& target,
                                         std::size_t depth, std::size_t per_level = 16,
                                         std::uint64_t seed = default_seed) {
    return stable_set_sample(map, target.points.at(0), depth, per_level, seed);
}

// ---- snap-back certificates ----

struct SnapbackCertificate {
    TorusPoint repeller;
    TorusPoint q;
    std::size_t n = 0;
    double jac_det = 0.0;
    double dist_to_r = 0.0;
    double residual = 0.0; // torus distance from F^n(q) to the repeller
};

// Searches the preimage tree of the repeller point for a homoclinic point:
// 0 < dist(q, R) < neighborhood_r with F^n(q) = R and DF^n(q) nonsingular.
// Returns the first certificate in (n, distance) order.
inline std::optional<SnapbackCertificate>
snapback_search(const TorusMap& map, const PeriodicOrbit& repeller, double neighborhood_r,
                std::size_t depth, double exclusion = 1e-8) {
    if (repeller.cls != StabilityClass::Repeller)
        throw NotRepellerError("snapback_search: orbit is not a repeller");
    if (!(neighborhood_r > 0.0))
        throw std::invalid_argument("snapback_search: neighborhood_r > 0 required");
    TorusPoint R = repeller.points[0];

    std::vector<TorusPoint> level{R};
    for (std::size_t n = 1; n <= depth; ++n) {
        level = detail::preimage_level(map, level, 16, default_seed + n);

        std::optional<SnapbackCertificate> best;
        for (TorusPoint q : level) {
            double dist = torus_dist(q, R);
            if (dist <= exclusion || dist >= neighborhood_r) continue;
            // polish against the full n-step condition F^n(q) = R
            for (std::size_t it = 0; it < 12; ++it) {
                Mat2 J = Mat2::identity();
                TorusPoint z = q;
                for (std::size_t s = 0; s < n; ++s) {
                    J = map.jacobian(z) * J;
                    z = map.eval(z);
                }
                Vec2 r = torus_delta(R, z);
                if (norm(r) <= 1e-12 || std::fabs(J.det()) < 1e-14) break;
                Vec2 step = J.solve(-1.0 * r);
                q = wrap_point(q.x + step.x, q.y + step.y);
            }
            double jac_det = 1.0;
            TorusPoint z = q;
            for (std::size_t s = 0; s < n; ++s) {
                jac_det *= map.jacobian(z).det();
                z = map.eval(z);
            }
            double res = torus_dist(z, R);
            dist = torus_dist(q, R);
            if (dist <= exclusion || dist >= neighborhood_r) continue;
            if (res > 1e-9 || std::fabs(jac_det) <= 1e-8) continue;
            SnapbackCertificate cert{R, q, n, jac_det, dist, res};
            if (!best || cert.dist_to_r < best->dist_to_r) best = cert;
        }
        if (best) return best;
    }
    return std::nullopt;
}

} // namespace torusdyn
