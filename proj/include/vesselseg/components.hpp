#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vesselseg/neighborhood.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

using LabelVolume = Volume<std::int32_t>;

/// Connected-component labelling of a mask. Label 0 is background; labels
/// 1..K are numbered by the raster position of each component's first voxel.
struct LabeledComponents {
    LabelVolume labels;
    std::vector<std::size_t> counts;   // counts[k - 1] is the size of label k
    std::vector<double> volumes_mm3;   // counts scaled by the voxel volume

    [[nodiscard]] std::size_t size() const noexcept { return counts.size(); }
};

namespace detail {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) noexcept
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) noexcept
    {
        a = find(a);
        b = find(b);
        if (a == b) {
            return;
        }
        // Smaller index becomes root, keeping roots at first-seen voxels.
        if (b < a) {
            std::swap(a, b);
        }
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace detail

[[nodiscard]] inline LabeledComponents label_components(const BinaryMask& mask,
                                                        Connectivity connectivity = Connectivity::Corner)
{
    const auto& d = mask.dims();
    const auto nx = static_cast<std::ptrdiff_t>(d.nx);
    const auto ny = static_cast<std::ptrdiff_t>(d.ny);
    const auto nz = static_cast<std::ptrdiff_t>(d.nz);
    const auto offsets = causal_offsets(connectivity);

    detail::DisjointSet sets(mask.size());
    for (std::ptrdiff_t z = 0; z < nz; ++z) {
        for (std::ptrdiff_t y = 0; y < ny; ++y) {
            for (std::ptrdiff_t x = 0; x < nx; ++x) {
                const auto i = static_cast<std::size_t>(x + nx * (y + ny * z));
                if (mask[i] == 0) {
                    continue;
                }
                for (const auto& o : offsets) {
                    const auto xx = x + o.dx;
                    const auto yy = y + o.dy;
                    const auto zz = z + o.dz;
                    if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny) {
                        continue;
                    }
                    const auto j = static_cast<std::size_t>(xx + nx * (yy + ny * zz));
                    if (mask[j] != 0) {
                        sets.unite(i, j);
                    }
                }
            }
        }
    }

    LabeledComponents out{LabelVolume::like(mask), {}, {}};
    std::vector<std::int32_t> root_label(mask.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] == 0) {
            continue;
        }
        const std::size_t root = sets.find(i);
        if (root_label[root] == 0) {
            out.counts.push_back(0);
            root_label[root] = static_cast<std::int32_t>(out.counts.size());
        }
        const std::int32_t label = root_label[root];
        out.labels[i] = label;
        ++out.counts[static_cast<std::size_t>(label - 1)];
    }
    const double vv = voxel_volume(mask);
    out.volumes_mm3.reserve(out.counts.size());
    for (const auto c : out.counts) {
        out.volumes_mm3.push_back(static_cast<double>(c) * vv);
    }
    return out;
}

/// Keeps the components whose physical volume is at least min_mm3; smaller
/// clusters are dropped.
[[nodiscard]] inline BinaryMask filter_small(const LabeledComponents& lab, double min_mm3, double voxel_mm3)
{
    if (!(voxel_mm3 > 0.0)) {
        throw ParameterError("voxel volume must be positive");
    }
    if (!(min_mm3 >= 0.0)) {
        throw ParameterError("minimum component volume must be non-negative");
    }
    std::vector<std::uint8_t> keep(lab.counts.size() + 1, 0);
    for (std::size_t k = 0; k < lab.counts.size(); ++k) {
        keep[k + 1] = static_cast<double>(lab.counts[k]) * voxel_mm3 >= min_mm3 ? 1 : 0;
    }
    BinaryMask out = BinaryMask::like(lab.labels);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = keep[static_cast<std::size_t>(lab.labels[i])];
    }
    return out;
}

[[nodiscard]] inline BinaryMask filter_small(const LabeledComponents& lab, double min_mm3)
{
    return filter_small(lab, min_mm3, voxel_volume(lab.labels));
}

}  // namespace vesselseg
