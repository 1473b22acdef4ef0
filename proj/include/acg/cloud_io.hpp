#pragma once

#include <string>

#include "acg/point_cloud.hpp"

namespace acg {

/// ASCII `x y z` per line (normals are not carried by this format).
PointCloud load_xyz(const std::string& path);
void save_xyz(const PointCloud& cloud, const std::string& path);

/// Binary little-endian PLY, vertex positions plus optional normals.
PointCloud load_ply(const std::string& path);
void save_ply(const PointCloud& cloud, const std::string& path);

/// Dispatch on extension (.xyz / .ply).
PointCloud load_cloud(const std::string& path);
void save_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace acg
