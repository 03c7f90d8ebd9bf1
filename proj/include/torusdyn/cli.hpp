// The command-line front end, minus argument parsing: a flat experiment
// config, precondition validation, and one runner per subcommand. The binary
// in tools/ is a thin flag-parsing wrapper, so tests can drive everything
// through this header directly.
//
// Exit codes: 0 success (artifacts written), 2 invalid config, 3 numerical
// failure (diagnostic written to error.json).
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "circle_map.hpp"
#include "conjugacy.hpp"
#include "ftle.hpp"
#include "io.hpp"
#include "map_file.hpp"
#include "periodic.hpp"
#include "spectral.hpp"

namespace torusdyn::cli {

inline constexpr const char* tool_version = "torusdyn 0.1.0";

struct AppConfig {
    std::string subcommand;
    std::string map_path;
    std::string out_dir = "out";
    std::uint64_t seed = default_seed;
    double tol = 1e-10;
    std::size_t threads = 0; // 0 = hardware parallelism

    // cone
    double cone_k = 0.0;     // 0 = derive from the spectrum
    double cone_alpha = 0.0; // 0 = derive
    std::size_t grid = 200;
    std::size_t boundary_samples = 64;
    // periodic orbits
    std::size_t period = 1;
    std::size_t seed_grid = 64;
    // circles
    std::size_t max_period = 4;
    double base_x = 0.0;
    std::size_t circle_n = 1;
    std::size_t iters = 10000;
    std::string method = "weighted";
    double y0 = 0.3819660112501051;
    // sweep
    double t1 = 0.0, t2 = 1.0;
    std::size_t samples = 100;
    // ftle / cover / snapback
    double x = 0.1, y = 0.2;
    std::size_t total = 100000;
    std::size_t window = 30;
    std::size_t stride = 30;
    double dead_band = 0.0;
    double radius = 0.05;
    std::size_t max_iter = 60;
    std::size_t depth = 10;
    // fibers
    std::size_t n_thetas = 16;
    std::size_t fiber_points = 256;
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {
        "verify-cone", "conjugacy", "fibers", "find-periodic", "circles",
        "rotation",    "sweep",     "ftle",   "cover",         "snapback"};
    return names;
}

inline std::string config_echo(const AppConfig& c, const std::string& map_text) {
    std::ostringstream o;
    o << "tool=" << tool_version << "\n";
    o << "subcommand=" << c.subcommand << "\n";
    o << "seed=" << c.seed << "\n";
    o << "tol=" << format_double(c.tol) << "\n";
    o << "cone_k=" << format_double(c.cone_k) << "\n";
    o << "cone_alpha=" << format_double(c.cone_alpha) << "\n";
    o << "grid=" << c.grid << "\n";
    o << "boundary_samples=" << c.boundary_samples << "\n";
    o << "period=" << c.period << "\n";
    o << "seed_grid=" << c.seed_grid << "\n";
    o << "max_period=" << c.max_period << "\n";
    o << "base_x=" << format_double(c.base_x) << "\n";
    o << "circle_n=" << c.circle_n << "\n";
    o << "iters=" << c.iters << "\n";
    o << "method=" << c.method << "\n";
    o << "y0=" << format_double(c.y0) << "\n";
    o << "t1=" << format_double(c.t1) << "\n";
    o << "t2=" << format_double(c.t2) << "\n";
    o << "samples=" << c.samples << "\n";
    o << "x=" << format_double(c.x) << "\n";
    o << "y=" << format_double(c.y) << "\n";
    o << "total=" << c.total << "\n";
    o << "window=" << c.window << "\n";
    o << "stride=" << c.stride << "\n";
    o << "dead_band=" << format_double(c.dead_band) << "\n";
    o << "radius=" << format_double(c.radius) << "\n";
    o << "max_iter=" << c.max_iter << "\n";
    o << "depth=" << c.depth << "\n";
    o << "n_thetas=" << c.n_thetas << "\n";
    o << "fiber_points=" << c.fiber_points << "\n";
    o << "map:\n" << map_text;
    return o.str();
}

// Every numeric parameter is checked against the owning operation's
// preconditions before any computation starts.
inline std::vector<std::string> validate(const AppConfig& c) {
    std::vector<std::string> bad;
    bool known = false;
    for (const auto& s : subcommands()) known = known || s == c.subcommand;
    if (!known) {
        bad.push_back("unknown subcommand '" + c.subcommand + "'");
        return bad;
    }
    if (!(c.tol > 0.0)) bad.push_back("tol must be > 0");

    TorusMap map;
    bool have_map = false;
    try {
        map = load_map_file(c.map_path);
        have_map = true;
    } catch (const MapFileError& e) {
        bad.push_back(e.what());
    }

    auto needs_spectrum = [&](const char* why) {
        if (!have_map) return;
        try {
            eigen_data(map.matrix);
        } catch (const NotEMError&) {
            bad.push_back(std::string("matrix does not satisfy (E_M) "
                                      "(integer eigenvalues {1, m}, |m| > 1); needed for ") +
                          why);
        }
    };
    auto needs_skew = [&](const char* why) {
        if (have_map && !map.skew())
            bad.push_back(std::string("map must be in skew form for ") + why);
    };

    if (c.subcommand == "verify-cone") {
        needs_spectrum("verify-cone");
        if (c.grid < 2) bad.push_back("grid must be >= 2");
        if (c.cone_k != 0.0 && !(c.cone_k > 1.0)) bad.push_back("K must be > 1");
        if (c.cone_alpha != 0.0 && !(c.cone_alpha > 0.0)) bad.push_back("alpha must be > 0");
    } else if (c.subcommand == "conjugacy") {
        needs_spectrum("conjugacy");
        if (c.grid < 2) bad.push_back("grid must be >= 2");
    } else if (c.subcommand == "fibers") {
        needs_spectrum("fibers");
        if (c.fiber_points < 8) bad.push_back("fiber points must be >= 8");
        if (c.n_thetas < 1) bad.push_back("n_thetas must be >= 1");
    } else if (c.subcommand == "find-periodic") {
        if (c.period < 1) bad.push_back("period must be >= 1");
        if (c.seed_grid < 2) bad.push_back("seed_grid must be >= 2");
    } else if (c.subcommand == "circles") {
        needs_spectrum("circles");
        if (c.max_period < 1) bad.push_back("max_period must be >= 1");
    } else if (c.subcommand == "rotation") {
        needs_skew("rotation");
        if (c.iters < 100) bad.push_back("iters must be >= 100");
    } else if (c.subcommand == "sweep") {
        needs_skew("sweep");
        if (c.samples < 2) bad.push_back("samples must be >= 2");
        if (c.iters < 100) bad.push_back("iters must be >= 100");
    } else if (c.subcommand == "ftle") {
        if (c.window < 1) bad.push_back("window must be >= 1");
        if (c.total < c.window) bad.push_back("total must be >= window");
        if (c.stride < 1) bad.push_back("stride must be >= 1");
    } else if (c.subcommand == "cover") {
        if (!(c.radius > 0.0)) bad.push_back("radius must be > 0");
        if (c.grid < 16) bad.push_back("grid must be >= 16 for cover");
        if (c.max_iter < 1) bad.push_back("max_iter must be >= 1");
    } else if (c.subcommand == "snapback") {
        if (!(c.radius > 0.0)) bad.push_back("radius must be > 0");
        if (c.depth < 1) bad.push_back("depth must be >= 1");
        if (c.period < 1) bad.push_back("period must be >= 1");
    }
    return bad;
}

namespace detail {

inline nlohmann::ordered_json orbit_json(const PeriodicOrbit& o) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : o.points) pts.push_back({p.x, p.y});
    j["points"] = pts;
    j["period"] = o.period;
    j["lattice_shift"] = {o.lattice_shift.x, o.lattice_shift.y};
    j["multipliers"] = {{o.multipliers[0].real(), o.multipliers[0].imag()},
                        {o.multipliers[1].real(), o.multipliers[1].imag()}};
    j["class"] = to_string(o.cls);
    j["residual"] = o.residual;
    return j;
}

inline void run_verify_cone(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    SpectralData sd = eigen_data(map.matrix);
    ConeParams dflt = make_default_cone(sd);
    ConeParams cone = make_cone(sd, c.cone_k > 0.0 ? c.cone_k : dflt.K,
                                c.cone_alpha > 0.0 ? c.cone_alpha : dflt.alpha);
    ConeReport rep = cone_verify(map, cone, c.grid, c.boundary_samples);
    nlohmann::ordered_json j;
    j["pass"] = rep.pass;
    j["min_expansion"] = rep.min_expansion;
    j["max_containment_ratio"] = rep.max_containment_ratio;
    j["max_transverse_growth"] = rep.max_transverse_growth;
    j["worst_point"] = {rep.worst_point.x, rep.worst_point.y};
    j["grid_n"] = rep.grid_n;
    j["boundary_samples"] = rep.boundary_samples;
    j["K"] = cone.K;
    j["alpha"] = cone.alpha;
    out.add_json("cone_report.json", j);
}

inline void run_conjugacy(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    Conjugacy H(map, c.tol);
    double m = double(H.spectral().m);
    CsvWriter csv(out.checksum(), {"x", "y", "Hx", "Hy"});
    double max_skew = 0.0;
    for (std::size_t i = 0; i < c.grid; ++i)
        for (std::size_t j = 0; j < c.grid; ++j) {
            TorusPoint p{double(i) / double(c.grid), double(j) / double(c.grid)};
            TorusPoint hp = H.forward(p);
            TorusPoint hfp = H.forward(map.eval(p));
            max_skew = std::max(max_skew, circle_dist(hfp.x, wrap01(m * hp.x)));
            csv.row({format_double(p.x), format_double(p.y), format_double(hp.x),
                     format_double(hp.y)});
        }
    Rng rng(c.seed);
    double max_roundtrip = 0.0;
    for (int i = 0; i < 100; ++i) {
        TorusPoint p = rng.torus_point();
        max_roundtrip = std::max(max_roundtrip, torus_dist(H.inverse(H.forward(p)), p));
    }
    out.add_csv("conjugacy_grid.csv", csv);
    nlohmann::ordered_json j;
    j["m"] = H.spectral().m;
    j["grid"] = c.grid;
    j["max_skew_residual"] = max_skew;
    j["max_roundtrip_error"] = max_roundtrip;
    out.add_json("conjugacy.json", j);
}

inline void run_fibers(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    PhiCalc pc(map);
    CsvWriter csv(out.checksum(), {"theta", "idx", "x", "y"});
    bool all_closed = true;
    double max_res = 0.0;
    for (std::size_t k = 0; k < c.n_thetas; ++k) {
        double theta = double(k) / double(c.n_thetas);
        FiberPolyline poly = fiber_trace(map, theta, c.fiber_points, c.tol);
        all_closed = all_closed && poly.closed;
        for (std::size_t i = 0; i < poly.points.size(); ++i) {
            const TorusPoint& p = poly.points[i];
            max_res = std::max(max_res, circle_dist(pc.phi(p, c.tol / 8.0), theta));
            csv.row({format_double(theta), std::to_string(i), format_double(p.x),
                     format_double(p.y)});
        }
    }
    out.add_csv("fibers.csv", csv);
    nlohmann::ordered_json j;
    j["n_thetas"] = c.n_thetas;
    j["points_per_fiber"] = c.fiber_points;
    j["all_closed"] = all_closed;
    j["max_phi_residual"] = max_res;
    out.add_json("fibers.json", j);
}

inline void run_find_periodic(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    auto orbits = find_periodic(map, c.period, c.seed_grid);
    nlohmann::ordered_json j;
    j["period"] = c.period;
    j["seed_grid"] = c.seed_grid;
    j["count"] = orbits.size();
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& o : orbits) arr.push_back(orbit_json(o));
    j["orbits"] = arr;
    out.add_json("orbits.json", j);
}

inline void run_circles(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    SpectralData sd = eigen_data(map.matrix);
    CsvWriter csv(out.checksum(), {"n", "idx", "base_x"});
    nlohmann::ordered_json counts = nlohmann::ordered_json::array();
    for (std::size_t n = 1; n <= c.max_period; ++n) {
        auto bases = periodic_circle_bases(sd.m, n);
        counts.push_back(bases.size());
        for (std::size_t i = 0; i < bases.size(); ++i)
            csv.row({std::to_string(n), std::to_string(i), format_double(bases[i])});
    }
    out.add_csv("circles.csv", csv);
    nlohmann::ordered_json j;
    j["m"] = sd.m;
    j["max_period"] = c.max_period;
    j["counts"] = counts;
    out.add_json("circles.json", j);
}

inline void run_rotation(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    RestrictedCircleMap cm = restrict_to_circle(map, c.base_x, c.circle_n);
    RotationMethod method =
        c.method == "plain" ? RotationMethod::Plain : RotationMethod::Weighted;
    RotationEstimate est = rotation_number(cm, c.y0, c.iters, method);
    ClassifyOptions opts;
    opts.iters = c.iters;
    opts.y0 = c.y0;
    CircleAnalysis ana = classify_circle(cm, opts);
    nlohmann::ordered_json j;
    j["base_x"] = cm.base_x();
    j["circle_n"] = c.circle_n;
    j["method"] = c.method;
    j["iters"] = c.iters;
    j["rho"] = est.rho;
    j["rho_raw"] = est.rho_raw;
    j["diagnostic"] = est.diagnostic;
    j["classification"] = to_string(ana.cls);
    if (ana.cls == CircleClass::Locked) {
        j["locked_p"] = ana.locked_p;
        j["locked_q"] = ana.locked_q;
        j["locked_point"] = ana.locked_point;
        j["locked_multiplier"] = ana.locked_multiplier;
    }
    out.add_json("rotation.json", j);
}

inline void run_sweep(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    ClassifyOptions opts;
    opts.iters = c.iters;
    SweepResult res = sweep(map, c.base_x, c.circle_n, c.t1, c.t2, c.samples, opts, c.seed);
    CsvWriter csv(out.checksum(), {"t", "rho", "diagnostic", "classification", "iters"});
    for (std::size_t i = 0; i < res.ts.size(); ++i) {
        const CircleAnalysis& a = res.analyses[i];
        csv.row({format_double(res.ts[i]), format_double(a.rho), format_double(a.diagnostic),
                 to_string(a.cls), std::to_string(a.iters)});
    }
    out.add_csv("sweep.csv", csv);
    nlohmann::ordered_json j;
    j["samples"] = c.samples;
    j["t1"] = c.t1;
    j["t2"] = c.t2;
    j["quasiperiodic_fraction"] = res.quasiperiodic_fraction;
    j["undetermined"] = res.undetermined;
    j["seed"] = res.seed;
    out.add_json("sweep.json", j);
}

inline void run_ftle(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    FtleSeries series =
        positive_count_series(map, {c.x, c.y}, c.total, c.window, c.stride, c.dead_band);
    OscillationStats st = oscillation_stats(series);
    CsvWriter csv(out.checksum(), {"start", "lambda1", "lambda2", "count"});
    for (std::size_t i = 0; i < series.starts.size(); ++i)
        csv.row({std::to_string(series.starts[i]), format_double(series.exponents[i].first),
                 format_double(series.exponents[i].second),
                 std::to_string(series.counts[i])});
    out.add_csv("ftle.csv", csv);
    nlohmann::ordered_json j;
    j["window"] = series.window;
    j["stride"] = series.stride;
    j["dead_band"] = series.dead_band;
    j["windows"] = series.starts.size();
    j["frac_one"] = st.frac_one;
    j["frac_two"] = st.frac_two;
    j["frac_other"] = st.frac_other;
    j["switches"] = st.switches;
    j["min_lambda2"] = st.min_lambda2;
    j["max_lambda2"] = st.max_lambda2;
    out.add_json("ftle.json", j);
}

inline void run_cover(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    CoverageResult res =
        transitivity_cover(map, {c.x, c.y}, c.radius, c.grid, c.max_iter, 16, c.seed);
    CsvWriter csv(out.checksum(), {"n", "fraction"});
    for (std::size_t i = 0; i < res.coverage.size(); ++i)
        csv.row({std::to_string(i + 1), format_double(res.coverage[i])});
    out.add_csv("cover.csv", csv);
    nlohmann::ordered_json j;
    j["center"] = {c.x, c.y};
    j["radius"] = c.radius;
    j["grid_n"] = c.grid;
    if (res.n_cover) j["n_cover"] = *res.n_cover;
    else j["n_cover"] = nullptr;
    out.add_json("cover.json", j);
}

inline void run_snapback(const AppConfig& c, const TorusMap& map, ArtifactWriter& out) {
    auto orbits = find_periodic(map, c.period, c.seed_grid);
    const PeriodicOrbit* rep = nullptr;
    for (const auto& o : orbits)
        if (o.cls == StabilityClass::Repeller) { rep = &o; break; }
    if (!rep)
        throw NotRepellerError("snapback: no repeller of period " + std::to_string(c.period) +
                               " found");
    auto cert = snapback_search(map, *rep, c.radius, c.depth);
    nlohmann::ordered_json j;
    j["repeller"] = {rep->points[0].x, rep->points[0].y};
    j["neighborhood_r"] = c.radius;
    j["depth"] = c.depth;
    j["found"] = bool(cert);
    if (cert) {
        j["q"] = {cert->q.x, cert->q.y};
        j["n"] = cert->n;
        j["jac_det"] = cert->jac_det;
        j["dist_to_r"] = cert->dist_to_r;
        j["residual"] = cert->residual;
    }
    out.add_json("snapback.json", j);
}

} // namespace detail

// Returns the process exit code. Validation errors go to `err`; numerical
// failures produce <out>/error.json.
inline int run(const AppConfig& c, std::ostream& err = std::cerr) {
    auto violations = validate(c);
    if (!violations.empty()) {
        for (const auto& v : violations) err << "error: " << v << "\n";
        return 2;
    }
    if (c.threads > 0) set_thread_count(c.threads);

    TorusMap map;
    try {
        map = load_map_file(c.map_path);
    } catch (const MapFileError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    ArtifactWriter out(c.out_dir, config_echo(c, format_map_text(map)));
    auto t0 = std::chrono::steady_clock::now();
    try {
        if (c.subcommand == "verify-cone") detail::run_verify_cone(c, map, out);
        else if (c.subcommand == "conjugacy") detail::run_conjugacy(c, map, out);
        else if (c.subcommand == "fibers") detail::run_fibers(c, map, out);
        else if (c.subcommand == "find-periodic") detail::run_find_periodic(c, map, out);
        else if (c.subcommand == "circles") detail::run_circles(c, map, out);
        else if (c.subcommand == "rotation") detail::run_rotation(c, map, out);
        else if (c.subcommand == "sweep") detail::run_sweep(c, map, out);
        else if (c.subcommand == "ftle") detail::run_ftle(c, map, out);
        else if (c.subcommand == "cover") detail::run_cover(c, map, out);
        else if (c.subcommand == "snapback") detail::run_snapback(c, map, out);
    } catch (const std::exception& e) {
        namespace fs = std::filesystem;
        fs::create_directories(c.out_dir);
        nlohmann::json ej;
        ej["error"] = e.what();
        ej["subcommand"] = c.subcommand;
        ej["config_checksum"] = out.checksum();
        std::ofstream f(fs::path(c.out_dir) / "error.json", std::ios::binary);
        f << ej.dump(2) << "\n";
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.write_all(wall, tool_version);
    return 0;
}

} // namespace torusdyn::cli
