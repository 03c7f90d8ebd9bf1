// CSV export of the heavier geometric results (manifold polylines, preimage
// clouds, fiber polylines) for plotting.
#pragma once

#include "conjugacy.hpp"
#include "io.hpp"
#include "periodic.hpp"

namespace torusdyn {

inline CsvWriter to_csv(const ManifoldPolyline& poly, const std::string& checksum) {
    CsvWriter csv(checksum, {"idx", "generation", "x", "y"});
    std::size_t gen = 0;
    for (std::size_t i = 0; i < poly.points.size(); ++i) {
        while (gen + 1 < poly.gen_offsets.size() && i >= poly.gen_offsets[gen + 1]) ++gen;
        csv.row({std::to_string(i), std::to_string(gen), format_double(poly.points[i].x),
                 format_double(poly.points[i].y)});
    }
    return csv;
}

inline CsvWriter to_csv(const StableSetSample& sample, const std::string& checksum) {
    CsvWriter csv(checksum, {"level", "x", "y"});
    for (std::size_t d = 0; d < sample.levels.size(); ++d)
        for (const TorusPoint& p : sample.levels[d])
            csv.row({std::to_string(d), format_double(p.x), format_double(p.y)});
    return csv;
}

inline CsvWriter to_csv(const FiberPolyline& poly, const std::string& checksum) {
    CsvWriter csv(checksum, {"theta", "idx", "x", "y"});
    for (std::size_t i = 0; i < poly.points.size(); ++i)
        csv.row({format_double(poly.theta), std::to_string(i),
                 format_double(poly.points[i].x), format_double(poly.points[i].y)});
    return csv;
}

} // namespace torusdyn
