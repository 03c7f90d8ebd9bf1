// torusdyn: analysis toolbox for torus maps F(z) = M z + G(z) mod 1.
// File in, file out; every run writes a manifest with per-file checksums so
// identical config + seed reproduces identical artifacts.
#include <CLI11.hpp>

#include "torusdyn/cli.hpp"

int main(int argc, char** argv) {
    using torusdyn::cli::AppConfig;
    AppConfig cfg;
    bool validate_only = false;

    CLI::App app{"torus map dynamics toolbox: cone systems, semi-conjugacies, "
                 "periodic orbits, rotation numbers, FTLE diagnostics"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.map_path, "map definition file")->required();
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
        sub->add_option("--seed", cfg.seed, "RNG seed (fixed default keeps runs deterministic)");
        sub->add_option("--tol", cfg.tol, "tolerance for the semi-conjugacy series");
        sub->add_flag("--validate", validate_only, "check the config and exit");
    };

    CLI::App* cone = app.add_subcommand("verify-cone", "verify a (K, alpha) cone system");
    add_common(cone);
    cone->add_option("--K", cfg.cone_k, "expansion constant (default from spectrum)");
    cone->add_option("--alpha", cfg.cone_alpha, "cone half-width (default from spectrum)");
    cone->add_option("--grid", cfg.grid, "base-point grid resolution");
    cone->add_option("--boundary-samples", cfg.boundary_samples, "directions per base point");

    CLI::App* conj = app.add_subcommand("conjugacy", "evaluate the conjugacy H on a grid");
    add_common(conj);
    conj->add_option("--grid", cfg.grid, "evaluation grid resolution");

    CLI::App* fib = app.add_subcommand("fibers", "trace fibers of the factor map");
    add_common(fib);
    fib->add_option("--thetas", cfg.n_thetas, "number of fibers (evenly spaced theta)");
    fib->add_option("--points", cfg.fiber_points, "points per fiber");

    CLI::App* fper = app.add_subcommand("find-periodic", "Newton search for periodic orbits");
    add_common(fper);
    fper->add_option("--period", cfg.period, "orbit period");
    fper->add_option("--seed-grid", cfg.seed_grid, "Newton seed grid resolution");

    CLI::App* circ = app.add_subcommand("circles", "enumerate periodic vertical circles");
    add_common(circ);
    circ->add_option("--max-period", cfg.max_period, "enumerate circles up to this period");

    CLI::App* rot = app.add_subcommand("rotation", "rotation number on one invariant circle");
    add_common(rot);
    rot->add_option("--base-x", cfg.base_x, "circle base point k/(m^n-1)");
    rot->add_option("--circle-n", cfg.circle_n, "circle period n");
    rot->add_option("--iters", cfg.iters, "orbit length");
    rot->add_option("--method", cfg.method, "plain | weighted")
        ->check(CLI::IsMember({"plain", "weighted"}));
    rot->add_option("--y0", cfg.y0, "initial point on the circle");

    CLI::App* swp = app.add_subcommand("sweep", "classify one circle across a t range");
    add_common(swp);
    swp->add_option("--base-x", cfg.base_x, "circle base point");
    swp->add_option("--circle-n", cfg.circle_n, "circle period n");
    swp->add_option("--t1", cfg.t1, "range start");
    swp->add_option("--t2", cfg.t2, "range end");
    swp->add_option("--samples", cfg.samples, "number of t samples (endpoints included)");
    swp->add_option("--iters", cfg.iters, "orbit length per sample");

    CLI::App* ft = app.add_subcommand("ftle", "finite-time Lyapunov exponent windows");
    add_common(ft);
    ft->add_option("--x", cfg.x, "orbit start x");
    ft->add_option("--y", cfg.y, "orbit start y");
    ft->add_option("--total", cfg.total, "orbit length");
    ft->add_option("--window", cfg.window, "window length N");
    ft->add_option("--stride", cfg.stride, "window start stride");
    ft->add_option("--dead-band", cfg.dead_band, "positivity dead band (default 0)");

    CLI::App* cov = app.add_subcommand("cover", "disk-coverage test of strong transitivity");
    add_common(cov);
    cov->add_option("--x", cfg.x, "disk center x");
    cov->add_option("--y", cfg.y, "disk center y");
    cov->add_option("--radius", cfg.radius, "disk radius");
    cov->add_option("--grid", cfg.grid, "coverage grid resolution");
    cov->add_option("--max-iter", cfg.max_iter, "iteration budget");

    CLI::App* snap = app.add_subcommand("snapback", "search for a snap-back homoclinic point");
    add_common(snap);
    snap->add_option("--period", cfg.period, "repeller period");
    snap->add_option("--seed-grid", cfg.seed_grid, "seed grid for the repeller search");
    snap->add_option("--radius", cfg.radius, "repelling neighborhood radius");
    snap->add_option("--depth", cfg.depth, "preimage tree depth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // malformed invocation is a config error
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    if (validate_only) {
        auto violations = torusdyn::cli::validate(cfg);
        for (const auto& v : violations) std::cerr << "error: " << v << "\n";
        return violations.empty() ? 0 : 2;
    }
    return torusdyn::cli::run(cfg);
}
