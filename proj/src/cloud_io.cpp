#include "acg/cloud_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "acg/errors.hpp"

namespace acg {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_f32(std::ostream& out, double v) {
    const float f = static_cast<float>(v);
    static_assert(sizeof(float) == 4);
    char buf[4];
    std::memcpy(buf, &f, 4);
    out.write(buf, 4);
}

float read_f32(std::istream& in) {
    char buf[4];
    in.read(buf, 4);
    float f;
    std::memcpy(&f, buf, 4);
    return f;
}

}  // namespace

PointCloud load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z))
            throw IoError(path + ":" + std::to_string(lineno) + ": expected `x y z`");
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw IoError(path + ":" + std::to_string(lineno) + ": non-finite coordinate");
        cloud.points.emplace_back(x, y, z);
    }
    if (cloud.empty()) throw IoError(path + ": no points");
    return cloud;
}

void save_xyz(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    for (const auto& p : cloud.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
}

void save_ply(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    const bool with_normals = cloud.has_normals();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (with_normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < 3; ++k) write_f32(out, cloud.points[i][k]);
        if (with_normals)
            for (int k = 0; k < 3; ++k) write_f32(out, cloud.normals[i][k]);
    }
}

PointCloud load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "ply") throw IoError(path + ": not a ply file");

    std::size_t vertex_count = 0;
    std::vector<std::string> properties;
    bool binary_le = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "format") {
            std::string fmt;
            ss >> fmt;
            binary_le = (fmt == "binary_little_endian");
        } else if (word == "element") {
            std::string what;
            ss >> what >> vertex_count;
            if (what != "vertex") throw IoError(path + ": only vertex elements supported");
        } else if (word == "property") {
            std::string type, name;
            ss >> type >> name;
            if (type != "float") throw IoError(path + ": only float properties supported");
            properties.push_back(name);
        } else if (word == "end_header") {
            break;
        }
    }
    if (!binary_le) throw IoError(path + ": expected binary_little_endian format");
    if (vertex_count == 0) throw IoError(path + ": no vertices");

    const std::vector<std::string> want_pos = {"x", "y", "z"};
    const std::vector<std::string> want_all = {"x", "y", "z", "nx", "ny", "nz"};
    const bool with_normals = properties == want_all;
    if (!with_normals && properties != want_pos)
        throw IoError(path + ": unsupported property layout");

    PointCloud cloud;
    cloud.points.resize(vertex_count);
    if (with_normals) cloud.normals.resize(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        for (int k = 0; k < 3; ++k) cloud.points[i][k] = read_f32(in);
        if (with_normals)
            for (int k = 0; k < 3; ++k) cloud.normals[i][k] = read_f32(in);
        if (!in) throw IoError(path + ": truncated vertex data");
    }
    return cloud;
}

PointCloud load_cloud(const std::string& path) {
    if (ends_with(path, ".ply")) return load_ply(path);
    if (ends_with(path, ".xyz")) return load_xyz(path);
    throw IoError(path + ": unknown cloud extension (want .xyz or .ply)");
}

void save_cloud(const PointCloud& cloud, const std::string& path) {
    if (ends_with(path, ".ply")) return save_ply(cloud, path);
    if (ends_with(path, ".xyz")) return save_xyz(cloud, path);
    throw IoError(path + ": unknown cloud extension (want .xyz or .ply)");
}

}  // namespace acg
