#pragma once

// Triangle mesh container plus OBJ ingest/export and unit-cube normalization.
//
// Conventions:
// - Triangles only. Polygons are fan-triangulated on load.
// - Indices are 0-based in memory; OBJ text is 1-based.
// - Coordinates stay in double precision until quantization.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace meshseq {

struct Vec3 {
    double x{}, y{}, z{};

    double operator[](std::size_t axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    double& operator[](std::size_t axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

using Face = std::array<std::uint32_t, 3>;

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_faces() const { return faces.size(); }

    friend bool operator==(const Mesh&, const Mesh&) = default;
};

struct BoundingBox {
    Vec3 min;
    Vec3 max;

    Vec3 extent() const { return max - min; }
    Vec3 center() const { return (min + max) * 0.5; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Throws Error(Validation) for out-of-range or repeated face indices,
/// Error(EmptyMesh) when there are no vertices or no faces.
void validate(const Mesh& mesh);

/// Parses the `v` and `f` records of OBJ text. Everything else is skipped.
/// Polygons are fan-triangulated; faces whose indices repeat are dropped.
Mesh parse_obj(std::string_view text);
Mesh read_obj_file(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting, so parse_obj(write_obj(m)) == m.
std::string write_obj(const Mesh& mesh);
void write_obj_file(const Mesh& mesh, const std::filesystem::path& path);

BoundingBox bounding_box(const Mesh& mesh);

/// Uniform scale plus translation: the longest bbox axis maps onto [0,1] and
/// the other axes are centered on 0.5. A mesh that is already normalized is
/// returned unchanged.
Mesh normalize_to_unit_cube(const Mesh& mesh);

Mesh translated(const Mesh& mesh, const Vec3& offset);

double face_area(const Mesh& mesh, std::size_t face);
Vec3 face_centroid(const Mesh& mesh, std::size_t face);

} // namespace meshseq
