// Finite-time Lyapunov exponents by QR-reorthogonalized Jacobian products,
// the window statistics used as a variability test, and the disk-coverage
// shadow of strong transitivity.
//
// The QR frame is seeded with the fiber direction e_y first. For skew maps
// e_y is DF-invariant, so windows anchored at periodic points reproduce
// log|multiplier| exactly for every window length; the general case converges
// as usual. |det| is preserved by the orthogonalization, so the exponent sum
// always equals the window average of log|det DF|.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "parallel.hpp"
#include "random.hpp"
#include "torus_map.hpp"

namespace torusdyn {

struct SingularJacobianError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QrFrame {
    Vec2 q1{0.0, 1.0}; // fiber direction first
    Vec2 q2{1.0, 0.0};
    double log1 = 0.0;
    double log2 = 0.0;

    void step(const Mat2& df) {
        Vec2 a1 = df.apply(q1);
        Vec2 a2 = df.apply(q2);
        double r11 = norm(a1);
        q1 = a1 / r11;
        double r12 = dot(q1, a2);
        Vec2 a2o = a2 - r12 * q1;
        double r22 = norm(a2o);
        q2 = a2o / r22;
        log1 += std::log(r11);
        log2 += std::log(r22);
    }
};

// Accumulates the QR cocycle over N steps from p, continuing an existing
// frame. Returns the endpoint so windows can be chained exactly.
inline TorusPoint qr_cocycle(const TorusMap& map, TorusPoint p, std::size_t N, QrFrame& frame) {
    for (std::size_t i = 0; i < N; ++i) {
        Mat2 df = map.jacobian(p);
        if (std::fabs(df.det()) < 1e-14)
            throw SingularJacobianError("ftle: |det DF| < 1e-14 along the window");
        frame.step(df);
        p = map.eval(p);
    }
    return p;
}

// (lambda1, lambda2) with lambda1 >= lambda2, units 1/iterate.
inline std::pair<double, double> ftle_window(const TorusMap& map, TorusPoint p, std::size_t N) {
    if (N < 1) throw std::invalid_argument("ftle_window: N >= 1");
    QrFrame frame;
    qr_cocycle(map, p, N, frame);
    double a = frame.log1 / double(N), b = frame.log2 / double(N);
    return {std::max(a, b), std::min(a, b)};
}

struct FtleSeries {
    std::size_t window = 0;
    std::size_t stride = 1;
    double dead_band = 0.0;
    std::vector<std::size_t> starts;
    std::vector<std::pair<double, double>> exponents; // lambda1 >= lambda2
    std::vector<int> counts;                          // # exponents > dead_band
};

// Windows of length N at starts 0, stride, 2*stride, ... along one
// precomputed orbit. lambda = 0 counts as not positive; dead_band widens the
// strict threshold for noisy regimes.
inline FtleSeries positive_count_series(const TorusMap& map, TorusPoint p0, std::size_t total,
                                        std::size_t N, std::size_t stride,
                                        double dead_band = 0.0) {
    if (total < N) throw std::invalid_argument("positive_count_series: total >= N");
    if (stride < 1) throw std::invalid_argument("positive_count_series: stride >= 1");
    std::vector<TorusPoint> orb = map.orbit(p0, total);

    FtleSeries series;
    series.window = N;
    series.stride = stride;
    series.dead_band = dead_band;
    for (std::size_t s = 0; s + N <= total; s += stride) series.starts.push_back(s);
    series.exponents.resize(series.starts.size());
    series.counts.resize(series.starts.size());

    parallel_for(series.starts.size(), [&](std::size_t i) {
        auto lam = ftle_window(map, orb[series.starts[i]], N);
        series.exponents[i] = lam;
        series.counts[i] = (lam.first > dead_band ? 1 : 0) + (lam.second > dead_band ? 1 : 0);
    });
    return series;
}

struct OscillationStats {
    double frac_one = 0.0;
    double frac_two = 0.0;
    double frac_other = 0.0;
    std::size_t switches = 0; // adjacent windows with a different count
    double min_lambda2 = 0.0;
    double max_lambda2 = 0.0;
};

inline OscillationStats oscillation_stats(const FtleSeries& series) {
    if (series.counts.empty())
        throw std::invalid_argument("oscillation_stats: empty series");
    OscillationStats st;
    std::size_t ones = 0, twos = 0;
    st.min_lambda2 = series.exponents[0].second;
    st.max_lambda2 = series.exponents[0].second;
    for (std::size_t i = 0; i < series.counts.size(); ++i) {
        if (series.counts[i] == 1) ++ones;
        else if (series.counts[i] == 2) ++twos;
        if (i + 1 < series.counts.size() && series.counts[i + 1] != series.counts[i])
            ++st.switches;
        st.min_lambda2 = std::min(st.min_lambda2, series.exponents[i].second);
        st.max_lambda2 = std::max(st.max_lambda2, series.exponents[i].second);
    }
    double n = double(series.counts.size());
    st.frac_one = double(ones) / n;
    st.frac_two = double(twos) / n;
    st.frac_other = 1.0 - st.frac_one - st.frac_two;
    return st;
}

struct CoverageResult {
    TorusPoint center;
    double radius = 0.0;
    std::size_t grid_n = 0;
    std::optional<std::size_t> n_cover; // empty = NotCovered within max_iter
    std::vector<double> coverage;       // fraction of cells hit by iterate 1..n
};

// Marks the cells of a grid_n^2 partition visited by the images F^1(D),
// F^2(D), ... of a sampled disk D; n_cover is the first n at which the
// cumulative union covers every cell.
inline CoverageResult transitivity_cover(const TorusMap& map, TorusPoint center, double radius,
                                         std::size_t grid_n, std::size_t max_iter,
                                         std::size_t points_per_cell = 16,
                                         std::uint64_t seed = default_seed) {
    if (!(radius > 0.0)) throw std::invalid_argument("transitivity_cover: radius > 0");
    if (grid_n < 16) throw std::invalid_argument("transitivity_cover: grid_n >= 16");

    CoverageResult res;
    res.center = center;
    res.radius = radius;
    res.grid_n = grid_n;

    Rng rng(seed);
    std::vector<TorusPoint> pts(points_per_cell * grid_n * grid_n);
    for (auto& p : pts) p = rng.disk_point(center, radius);

    std::vector<char> hit(grid_n * grid_n, 0);
    std::size_t marked = 0;
    for (std::size_t n = 1; n <= max_iter; ++n) {
        for (auto& p : pts) {
            p = map.eval(p);
            std::size_t cx = std::min(grid_n - 1, std::size_t(p.x * grid_n));
            std::size_t cy = std::min(grid_n - 1, std::size_t(p.y * grid_n));
            char& cell = hit[cx * grid_n + cy];
            if (!cell) {
                cell = 1;
                ++marked;
            }
        }
        res.coverage.push_back(double(marked) / double(grid_n * grid_n));
        if (marked == grid_n * grid_n) {
            res.n_cover = n;
            break;
        }
    }
    return res;
}

} // namespace torusdyn
