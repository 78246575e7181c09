#pragma once

// Overlap metrics of a predicted mask against phantom ground truth.

#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vesselseg/components.hpp"
#include "vesselseg/phantom.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

/// 2|P n G| / (|P| + |G|), defined as 1 when both masks are empty.
[[nodiscard]] inline double dice(const BinaryMask& pred, const BinaryMask& truth)
{
    require_same_grid(pred, truth, "dice");
    std::size_t p = 0;
    std::size_t g = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool a = pred[i] != 0;
        const bool b = truth[i] != 0;
        p += a;
        g += b;
        both += a && b;
    }
    if (p + g == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

struct TubeScore {
    double radius_mm = 0.0;
    double dice = 0.0;
};

struct EvalReport {
    double dice = 0.0;
    double sensitivity = 0.0;                  // |P n G| / |G|
    double false_positive_voxel_fraction = 0.0;  // |P \ G| / |P|
    std::size_t predicted_voxels = 0;
    std::size_t truth_voxels = 0;
    std::size_t component_count_pred = 0;
    std::size_t component_count_gt = 0;
    std::vector<TubeScore> tubes;
    std::string noise_generator{kNoiseGenerator};
};

/// Scores `pred` against `truth`. Each tube is scored inside its own
/// territory so neighbouring tubes do not count against it.
[[nodiscard]] inline EvalReport evaluate(const BinaryMask& pred, const BinaryMask& truth,
                                         const std::vector<TubeTruth>& tubes = {},
                                         Connectivity connectivity = Connectivity::Corner)
{
    require_same_grid(pred, truth, "evaluate");
    EvalReport r;
    std::size_t both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool a = pred[i] != 0;
        const bool b = truth[i] != 0;
        r.predicted_voxels += a;
        r.truth_voxels += b;
        both += a && b;
    }
    r.dice = dice(pred, truth);
    r.sensitivity = r.truth_voxels == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(r.truth_voxels);
    r.false_positive_voxel_fraction =
        r.predicted_voxels == 0 ? 0.0
                                : static_cast<double>(r.predicted_voxels - both) / static_cast<double>(r.predicted_voxels);
    r.component_count_pred = label_components(pred, connectivity).size();
    r.component_count_gt = label_components(truth, connectivity).size();

    for (const auto& t : tubes) {
        require_same_grid(pred, t.mask, "evaluate");
        require_same_grid(pred, t.territory, "evaluate");
        BinaryMask local = BinaryMask::like(pred);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            local[i] = (pred[i] != 0 && t.territory[i] != 0) ? 1 : 0;
        }
        r.tubes.push_back({t.radius_mm, dice(local, t.mask)});
    }
    return r;
}

/// One `key = value` line per metric.
inline void write_report(std::ostream& out, const EvalReport& r)
{
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(10);
    out << "dice = " << r.dice << '\n'
        << "sensitivity = " << r.sensitivity << '\n'
        << "false_positive_voxel_fraction = " << r.false_positive_voxel_fraction << '\n'
        << "predicted_voxels = " << r.predicted_voxels << '\n'
        << "truth_voxels = " << r.truth_voxels << '\n'
        << "component_count_pred = " << r.component_count_pred << '\n'
        << "component_count_gt = " << r.component_count_gt << '\n';
    for (std::size_t k = 0; k < r.tubes.size(); ++k) {
        out << "tube." << k << ".radius_mm = " << r.tubes[k].radius_mm << '\n'
            << "tube." << k << ".dice = " << r.tubes[k].dice << '\n';
    }
    out << "noise_generator = " << r.noise_generator << '\n';
    out.flags(flags);
    out.precision(precision);
}

[[nodiscard]] inline std::string to_string(const EvalReport& r)
{
    std::ostringstream out;
    write_report(out, r);
    return out.str();
}

}  // namespace vesselseg
