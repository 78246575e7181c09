#pragma once

#include <array>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <vector>

#include "vesselseg/error.hpp"

namespace vesselseg {

/// Voxel adjacency: faces (6), faces and edges (18), or all neighbours (26).
enum class Connectivity : int {
    Face = 6,
    Edge = 18,
    Corner = 26,
};

[[nodiscard]] inline Connectivity connectivity_from_int(int n)
{
    switch (n) {
    case 6: return Connectivity::Face;
    case 18: return Connectivity::Edge;
    case 26: return Connectivity::Corner;
    default: throw ParameterError("connectivity must be 6, 18 or 26, got " + std::to_string(n));
    }
}

struct Offset {
    int dx;
    int dy;
    int dz;
};

/// All neighbour offsets for the given connectivity, in raster order.
[[nodiscard]] inline std::vector<Offset> neighbor_offsets(Connectivity c)
{
    std::vector<Offset> out;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) {
                    continue;
                }
                if (c == Connectivity::Face && manhattan > 1) {
                    continue;
                }
                if (c == Connectivity::Edge && manhattan > 2) {
                    continue;
                }
                out.push_back({dx, dy, dz});
            }
        }
    }
    return out;
}

/// The half of the neighbourhood that precedes a voxel in raster order.
[[nodiscard]] inline std::vector<Offset> causal_offsets(Connectivity c)
{
    std::vector<Offset> out;
    for (const auto& o : neighbor_offsets(c)) {
        if (o.dz < 0 || (o.dz == 0 && (o.dy < 0 || (o.dy == 0 && o.dx < 0)))) {
            out.push_back(o);
        }
    }
    return out;
}

}  // namespace vesselseg
