#include "meshseq/mesh.hpp"

#include "meshseq/error.hpp"
#include "meshseq/text_io.hpp"

#include <algorithm>
#include <charconv>

namespace meshseq {

namespace {

constexpr double kNormalizedSlack = 1e-12;

double parse_coordinate(std::string_view tok, std::size_t line_no) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad coordinate '" + std::string(tok) + "'",
                    line_no);
    }
    return value;
}

std::uint32_t parse_face_index(std::string_view tok, std::size_t vertex_count, std::size_t line_no) {
    // "i", "i/t", "i//n", "i/t/n": only the position index matters.
    tok = tok.substr(0, tok.find('/'));
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    long long idx = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad face index '" + std::string(tok) + "'",
                    line_no);
    }
    const long long n = static_cast<long long>(vertex_count);
    const long long resolved = idx > 0 ? idx - 1 : n + idx;
    if (idx == 0 || resolved < 0 || resolved >= n) {
        throw Error(ErrorKind::Validation,
                    "line " + std::to_string(line_no) + ": face index " + std::to_string(idx) + " out of range (" +
                        std::to_string(vertex_count) + " vertices)",
                    line_no);
    }
    return static_cast<std::uint32_t>(resolved);
}

bool is_degenerate(const Face& f) { return f[0] == f[1] || f[1] == f[2] || f[0] == f[2]; }

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

bool already_normalized(const BoundingBox& box) {
    const Vec3 ext = box.extent();
    const double longest = std::max({ext.x, ext.y, ext.z});
    if (longest != 1.0) return false;
    for (std::size_t a = 0; a < 3; ++a) {
        if (ext[a] == longest && box.min[a] != 0.0) return false;
        if (std::abs(box.min[a] + box.max[a] - 1.0) > kNormalizedSlack) return false;
    }
    return true;
}

} // namespace

void validate(const Mesh& mesh) {
    if (mesh.vertices.empty() || mesh.faces.empty()) {
        throw Error(ErrorKind::EmptyMesh, "mesh has " + std::to_string(mesh.vertices.size()) + " vertices and " +
                                              std::to_string(mesh.faces.size()) + " faces");
    }
    const std::size_t n = mesh.vertices.size();
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const Face& f = mesh.faces[i];
        for (auto idx : f) {
            if (idx >= n) {
                throw Error(ErrorKind::Validation,
                            "face " + std::to_string(i) + " references vertex " + std::to_string(idx), i);
            }
        }
        if (is_degenerate(f)) {
            throw Error(ErrorKind::Validation, "face " + std::to_string(i) + " repeats a vertex index", i);
        }
    }
}

Mesh parse_obj(std::string_view text) {
    Mesh mesh;
    std::vector<std::string_view> tokens;
    std::vector<std::uint32_t> polygon;
    std::size_t line_no = 0;
    for_each_line(text, [&](std::string_view line) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        split_whitespace(line, tokens);
        if (tokens.empty()) return;
        if (tokens[0] == "v") {
            if (tokens.size() < 4) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": vertex needs 3 coordinates",
                            line_no);
            }
            mesh.vertices.push_back({parse_coordinate(tokens[1], line_no), parse_coordinate(tokens[2], line_no),
                                     parse_coordinate(tokens[3], line_no)});
        } else if (tokens[0] == "f") {
            if (tokens.size() < 4) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": face needs at least 3 indices",
                            line_no);
            }
            polygon.clear();
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                polygon.push_back(parse_face_index(tokens[i], mesh.vertices.size(), line_no));
            }
            for (std::size_t i = 1; i + 1 < polygon.size(); ++i) {
                const Face tri{polygon[0], polygon[i], polygon[i + 1]};
                if (!is_degenerate(tri)) mesh.faces.push_back(tri);
            }
        }
    });
    validate(mesh);
    return mesh;
}

Mesh read_obj_file(const std::filesystem::path& path) { return parse_obj(read_text_file(path)); }

std::string write_obj(const Mesh& mesh) {
    validate(mesh);
    std::string out;
    out.reserve(mesh.vertices.size() * 32 + mesh.faces.size() * 16);
    for (const auto& v : mesh.vertices) {
        out += "v ";
        out += format_double(v.x);
        out += ' ';
        out += format_double(v.y);
        out += ' ';
        out += format_double(v.z);
        out += '\n';
    }
    for (const auto& f : mesh.faces) {
        out += "f ";
        out += std::to_string(f[0] + 1);
        out += ' ';
        out += std::to_string(f[1] + 1);
        out += ' ';
        out += std::to_string(f[2] + 1);
        out += '\n';
    }
    return out;
}

void write_obj_file(const Mesh& mesh, const std::filesystem::path& path) { write_text_file(path, write_obj(mesh)); }

BoundingBox bounding_box(const Mesh& mesh) {
    if (mesh.vertices.empty()) throw Error(ErrorKind::EmptyMesh, "bounding box of a mesh without vertices");
    BoundingBox box{mesh.vertices.front(), mesh.vertices.front()};
    for (const auto& v : mesh.vertices) {
        for (std::size_t a = 0; a < 3; ++a) {
            box.min[a] = std::min(box.min[a], v[a]);
            box.max[a] = std::max(box.max[a], v[a]);
        }
    }
    return box;
}

Mesh normalize_to_unit_cube(const Mesh& mesh) {
    const BoundingBox box = bounding_box(mesh);
    const Vec3 ext = box.extent();
    const double longest = std::max({ext.x, ext.y, ext.z});
    if (!(longest > 0.0)) throw Error(ErrorKind::Degenerate, "all vertices coincide; cannot normalize");
    if (already_normalized(box)) return mesh;

    Vec3 pad;
    for (std::size_t a = 0; a < 3; ++a) pad[a] = (longest - ext[a]) / (2.0 * longest);

    Mesh out = mesh;
    for (auto& v : out.vertices) {
        for (std::size_t a = 0; a < 3; ++a) v[a] = (v[a] - box.min[a]) / longest + pad[a];
    }
    return out;
}

Mesh translated(const Mesh& mesh, const Vec3& offset) {
    Mesh out = mesh;
    for (auto& v : out.vertices) v = v + offset;
    return out;
}

double face_area(const Mesh& mesh, std::size_t face) {
    const Face& f = mesh.faces[face];
    const Vec3& a = mesh.vertices[f[0]];
    return 0.5 * norm(cross(mesh.vertices[f[1]] - a, mesh.vertices[f[2]] - a));
}

Vec3 face_centroid(const Mesh& mesh, std::size_t face) {
    const Face& f = mesh.faces[face];
    return (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) * (1.0 / 3.0);
}

} // namespace meshseq
