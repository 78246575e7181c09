#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "vesselseg/components.hpp"
#include "vesselseg/error.hpp"
#include "vesselseg/filters.hpp"
#include "vesselseg/neighborhood.hpp"
#include "vesselseg/text.hpp"
#include "vesselseg/threshold.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

/// Parameters of the segmentation. Defaults are the published settings for
/// TOF-MRA at 0.47 x 0.47 x 0.8 mm.
struct PipelineConfig {
    double sigma_low_mm = 0.47;   // small-vessel scale
    double sigma_high_mm = 0.94;  // large-vessel scale
    FractionPair frac_low_scale{0.57, 0.67};
    FractionPair frac_high_scale{0.39, 0.49};
    double min_component_mm3 = 10.0;
    double percentile = 99.9;
    Connectivity connectivity = Connectivity::Corner;
    SatoParams sato{};
    unsigned threads = 1;  // 0 = all hardware threads; never changes the output

    void validate() const
    {
        detail::require_positive_sigma(sigma_low_mm);
        detail::require_positive_sigma(sigma_high_mm);
        frac_low_scale.validate();
        frac_high_scale.validate();
        if (!(std::isfinite(min_component_mm3) && min_component_mm3 >= 0.0)) {
            throw ParameterError("min_component_mm3 must be non-negative");
        }
        if (!(percentile > 0.0 && percentile <= 100.0)) {
            throw ParameterError("percentile must lie in (0, 100]");
        }
        sato.validate();
    }
};

/// Sets one field from its config-file key. Throws ParameterError for unknown
/// keys or malformed values.
inline void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value)
{
    auto pair = [&](std::string_view what) {
        const auto v = text::parse_doubles(value, 2, what);
        return FractionPair{v[0], v[1]};
    };
    if (key == "sigma_low_mm") {
        cfg.sigma_low_mm = text::parse_double(value, key);
    } else if (key == "sigma_high_mm") {
        cfg.sigma_high_mm = text::parse_double(value, key);
    } else if (key == "frac_low_scale") {
        cfg.frac_low_scale = pair(key);
    } else if (key == "frac_high_scale") {
        cfg.frac_high_scale = pair(key);
    } else if (key == "min_component_mm3") {
        cfg.min_component_mm3 = text::parse_double(value, key);
    } else if (key == "percentile") {
        cfg.percentile = text::parse_double(value, key);
    } else if (key == "connectivity") {
        cfg.connectivity = connectivity_from_int(static_cast<int>(text::parse_int(value, key)));
    } else if (key == "gamma23") {
        cfg.sato.gamma23 = text::parse_double(value, key);
    } else if (key == "gamma12") {
        cfg.sato.gamma12 = text::parse_double(value, key);
    } else if (key == "alpha") {
        cfg.sato.alpha = text::parse_double(value, key);
    } else if (key == "threads") {
        const auto n = text::parse_int(value, key);
        if (n < 0) {
            throw ParameterError("threads must be non-negative");
        }
        cfg.threads = static_cast<unsigned>(n);
    } else {
        throw ParameterError("unknown configuration key '" + std::string(key) + "'");
    }
}

/// Reads `key = value` lines over `base`; absent keys keep their value.
[[nodiscard]] inline PipelineConfig parse_config(std::istream& in, PipelineConfig base = {})
{
    text::for_each_entry(in, [&](std::string_view key, std::string_view value, std::size_t line) {
        try {
            apply_setting(base, key, value);
        } catch (const ParameterError& e) {
            throw ParameterError("config line " + std::to_string(line) + ": " + e.what());
        }
    });
    base.validate();
    return base;
}

[[nodiscard]] inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {})
{
    std::ifstream in(path);
    if (!in) {
        throw ReadError("cannot open config file " + path.string());
    }
    return parse_config(in, base);
}

inline void write_config(std::ostream& out, const PipelineConfig& cfg)
{
    out << "sigma_low_mm = " << cfg.sigma_low_mm << '\n'
        << "sigma_high_mm = " << cfg.sigma_high_mm << '\n'
        << "frac_low_scale = " << cfg.frac_low_scale.low << ", " << cfg.frac_low_scale.high << '\n'
        << "frac_high_scale = " << cfg.frac_high_scale.low << ", " << cfg.frac_high_scale.high << '\n'
        << "min_component_mm3 = " << cfg.min_component_mm3 << '\n'
        << "percentile = " << cfg.percentile << '\n'
        << "connectivity = " << static_cast<int>(cfg.connectivity) << '\n'
        << "gamma23 = " << cfg.sato.gamma23 << '\n'
        << "gamma12 = " << cfg.sato.gamma12 << '\n'
        << "alpha = " << cfg.sato.alpha << '\n';
}

/// The full method and the four single-step removals.
enum class AblationVariant {
    Full,
    NoSigmaLow,
    NoSigmaHigh,
    NoHysteresis,
    NoComponents,
};

inline constexpr AblationVariant kAllVariants[] = {
    AblationVariant::Full,         AblationVariant::NoSigmaLow,   AblationVariant::NoSigmaHigh,
    AblationVariant::NoHysteresis, AblationVariant::NoComponents,
};

[[nodiscard]] inline std::string_view to_string(AblationVariant v) noexcept
{
    switch (v) {
    case AblationVariant::Full: return "full";
    case AblationVariant::NoSigmaLow: return "no_sigma_low";
    case AblationVariant::NoSigmaHigh: return "no_sigma_high";
    case AblationVariant::NoHysteresis: return "no_hysteresis";
    case AblationVariant::NoComponents: return "no_components";
    }
    return "unknown";
}

[[nodiscard]] inline AblationVariant ablation_from_string(std::string_view s)
{
    for (const auto v : kAllVariants) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw ParameterError("unknown ablation variant '" + std::string(s) + "'");
}

/// One scale of the method: line filter, thresholds, binary mask.
struct BranchResult {
    VesselnessMap vesselness;
    std::optional<ThresholdPair> thresholds;  // empty when the map has no positive voxel
    BinaryMask mask;
};

struct PipelineResult {
    std::optional<BranchResult> fine;    // sigma_low_mm branch
    std::optional<BranchResult> coarse;  // sigma_high_mm branch
    BinaryMask merged;                   // union of the branch masks
    BinaryMask mask;                     // final output
    std::size_t components_before = 0;
    std::size_t components_after = 0;
};

namespace detail {

inline BranchResult run_branch(const Volume3D& vol, double sigma_mm, FractionPair fractions,
                               const PipelineConfig& cfg, bool use_hysteresis)
{
    BranchResult branch{vessel_enhance(vol, sigma_mm, cfg.sato, cfg.threads), std::nullopt, {}};
    if (!has_positive(branch.vesselness.scores)) {
        // Nothing tube-like at this scale, so no seeds.
        branch.mask = BinaryMask::like(vol);
        return branch;
    }
    const auto th = relative_thresholds(branch.vesselness, fractions, cfg.percentile);
    branch.thresholds = th;
    branch.mask = use_hysteresis ? hysteresis(branch.vesselness, th, cfg.connectivity)
                                 : threshold_at(branch.vesselness.scores, th.high());
    return branch;
}

}  // namespace detail

/// Runs the method (or one ablation of it) and keeps the intermediates.
/// The input is expected to be skull-stripped and bias-corrected.
[[nodiscard]] inline PipelineResult run_pipeline(const Volume3D& vol, const PipelineConfig& cfg,
                                                 AblationVariant variant = AblationVariant::Full)
{
    cfg.validate();
    if (!has_positive(vol)) {
        throw EmptySelectionError("input volume has no positive voxels");
    }
    const bool use_hysteresis = variant != AblationVariant::NoHysteresis;

    PipelineResult out;
    if (variant != AblationVariant::NoSigmaLow) {
        out.fine = detail::run_branch(vol, cfg.sigma_low_mm, cfg.frac_low_scale, cfg, use_hysteresis);
    }
    if (variant != AblationVariant::NoSigmaHigh) {
        out.coarse = detail::run_branch(vol, cfg.sigma_high_mm, cfg.frac_high_scale, cfg, use_hysteresis);
    }
    if (out.fine && out.coarse) {
        out.merged = union_masks(out.fine->mask, out.coarse->mask);
    } else {
        out.merged = out.fine ? out.fine->mask : out.coarse->mask;
    }

    const auto lab = label_components(out.merged, cfg.connectivity);
    out.components_before = lab.size();
    if (variant == AblationVariant::NoComponents) {
        out.mask = out.merged;
        out.components_after = lab.size();
        return out;
    }
    const double vv = voxel_volume(vol);
    out.mask = filter_small(lab, cfg.min_component_mm3, vv);
    for (const auto c : lab.counts) {
        if (static_cast<double>(c) * vv >= cfg.min_component_mm3) {
            ++out.components_after;
        }
    }
    return out;
}

[[nodiscard]] inline BinaryMask segment_ablated(const Volume3D& vol, const PipelineConfig& cfg,
                                                AblationVariant variant)
{
    return run_pipeline(vol, cfg, variant).mask;
}

[[nodiscard]] inline BinaryMask segment(const Volume3D& vol, const PipelineConfig& cfg = {})
{
    return segment_ablated(vol, cfg, AblationVariant::Full);
}

}  // namespace vesselseg
