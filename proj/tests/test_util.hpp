#pragma once

// Mesh generators shared by the unit and acceptance suites.

#include "meshseq/mesh.hpp"
#include "meshseq/random.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>

namespace meshseq::test {

inline Mesh unit_triangle() { return Mesh{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}}; }

/// Axis-aligned cube, 8 vertices and 12 outward-wound triangles.
inline Mesh cube(Vec3 origin = {0, 0, 0}, double size = 1.0) {
    Mesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.push_back(origin + Vec3{(i & 1) * size, ((i >> 1) & 1) * size, ((i >> 2) & 1) * size});
    }
    m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
               {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

inline Mesh merge(const Mesh& a, const Mesh& b) {
    Mesh m = a;
    const auto offset = static_cast<std::uint32_t>(a.vertices.size());
    m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (const auto& f : b.faces) m.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    return m;
}

inline Mesh two_cubes(double gap = 10.0) { return merge(cube({0, 0, 0}), cube({gap, 0, 0})); }

/// Triangulated grid over a parametric patch (u, v) in [0,1]^2.
inline Mesh parametric(const std::function<Vec3(double, double)>& surface, int nu, int nv) {
    Mesh m;
    for (int j = 0; j <= nv; ++j) {
        for (int i = 0; i <= nu; ++i) m.vertices.push_back(surface(double(i) / nu, double(j) / nv));
    }
    auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * (nu + 1) + i); };
    for (int j = 0; j < nv; ++j) {
        for (int i = 0; i < nu; ++i) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return m;
}

/// Ten clearly different shapes, used wherever a small corpus is needed.
inline Mesh shape(int kind, int resolution = 12) {
    using std::cos;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    switch (kind % 10) {
    case 0: return cube();
    case 1: return merge(cube({0, 0, 0}, 1.0), cube({0, 0, 1.0}, 0.5));
    case 2:  // sphere
        return parametric([](double u, double v) {
            return Vec3{cos(2 * pi * u) * sin(pi * v), sin(2 * pi * u) * sin(pi * v), cos(pi * v)};
        }, resolution, resolution);
    case 3:  // cylinder
        return parametric([](double u, double v) { return Vec3{cos(2 * pi * u), sin(2 * pi * u), 3.0 * v}; },
                          resolution, 4);
    case 4:  // cone
        return parametric([](double u, double v) {
            return Vec3{(1 - v) * cos(2 * pi * u), (1 - v) * sin(2 * pi * u), 2.0 * v};
        }, resolution, 4);
    case 5:  // torus
        return parametric([](double u, double v) {
            return Vec3{(2 + 0.5 * cos(2 * pi * v)) * cos(2 * pi * u), (2 + 0.5 * cos(2 * pi * v)) * sin(2 * pi * u),
                        0.5 * sin(2 * pi * v)};
        }, resolution * 2, resolution);
    case 6:  // flat plate
        return parametric([](double u, double v) { return Vec3{4 * u, 4 * v, 0.0}; }, 6, 6);
    case 7:  // wave sheet
        return parametric([](double u, double v) { return Vec3{u * 2, v * 2, 0.4 * sin(4 * pi * u)}; }, resolution, 6);
    case 8: return merge(cube({0, 0, 0}, 1.0), cube({3, 0, 0}, 1.0));
    default:  // elongated box
        return parametric([](double u, double v) { return Vec3{6 * u, 0.5 * cos(2 * pi * v), 0.5 * sin(2 * pi * v)}; },
                          8, resolution);
    }
}

/// Random triangle soup: random vertex cloud in a random box, faces are
/// random distinct index triples.
inline Mesh random_mesh(Rng& rng, std::size_t max_faces = 800) {
    Mesh m;
    const std::size_t nv = 3 + rng.index(300);
    const std::size_t nf = 1 + rng.index(max_faces);
    const Vec3 lo{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec3 size{rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
    for (std::size_t i = 0; i < nv; ++i) {
        m.vertices.push_back({lo.x + size.x * rng.uniform(), lo.y + size.y * rng.uniform(), lo.z + size.z * rng.uniform()});
    }
    while (m.faces.size() < nf) {
        const auto a = static_cast<std::uint32_t>(rng.index(nv));
        const auto b = static_cast<std::uint32_t>(rng.index(nv));
        const auto c = static_cast<std::uint32_t>(rng.index(nv));
        if (a != b && b != c && a != c) m.faces.push_back({a, b, c});
    }
    return m;
}

/// Same mesh with vertices and faces shuffled and each face rotated by a
/// random cyclic shift.
inline Mesh permuted(const Mesh& mesh, Rng& rng) {
    const std::size_t n = mesh.vertices.size();
    std::vector<std::uint32_t> perm(n);
    for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    Mesh out;
    out.vertices.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.vertices[perm[i]] = mesh.vertices[i];
    for (const auto& f : mesh.faces) {
        const Face g{perm[f[0]], perm[f[1]], perm[f[2]]};
        const auto r = rng.index(3);
        out.faces.push_back({g[r], g[(r + 1) % 3], g[(r + 2) % 3]});
    }
    for (std::size_t i = out.faces.size(); i > 1; --i) std::swap(out.faces[i - 1], out.faces[rng.index(i)]);
    return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("meshseq_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace meshseq::test
