#include "meshseq/serializer.hpp"

#include "meshseq/error.hpp"
#include "meshseq/text_io.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <tuple>

namespace meshseq {

namespace {

bool zyx_less(const GridPoint& a, const GridPoint& b) {
    return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]);
}

Face rotate_min_first(const Face& f) {
    if (f[1] < f[0] && f[1] < f[2]) return {f[1], f[2], f[0]};
    if (f[2] < f[0] && f[2] < f[1]) return {f[2], f[0], f[1]};
    return f;
}

bool collapsed(const Face& f) { return f[0] == f[1] || f[1] == f[2] || f[0] == f[2]; }

void append_int(std::string& out, long long v) {
    char buf[24];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

void append_vertex(std::string& out, const GridPoint& p) {
    out += "v ";
    append_int(out, p[0]);
    out += ' ';
    append_int(out, p[1]);
    out += ' ';
    append_int(out, p[2]);
}

void append_face(std::string& out, const Face& f) {
    out += "f ";
    append_int(out, static_cast<long long>(f[0]) + 1);
    out += ' ';
    append_int(out, static_cast<long long>(f[1]) + 1);
    out += ' ';
    append_int(out, static_cast<long long>(f[2]) + 1);
}

// Raw records as read from text: coordinates and 1-based indices, unchecked.
struct RawRecords {
    std::vector<GridPoint> vertices;
    std::vector<std::array<long long, 3>> faces;
    std::vector<std::size_t> face_offsets;
    std::vector<std::size_t> vertex_offsets;
};

class StrictScanner {
public:
    StrictScanner(std::string_view text, std::string_view separator) : text_(text), sep_(separator) {}

    RawRecords run() {
        RawRecords raw;
        bool in_faces = false;
        if (text_.empty()) throw Error(ErrorKind::EmptyMesh, "empty mesh text");
        while (true) {
            const std::size_t record_start = pos_;
            const char tag = peek();
            if (tag == 'v') {
                if (in_faces) fail("vertex record after face records");
                ++pos_;
                GridPoint p{};
                for (int i = 0; i < 3; ++i) {
                    expect(' ');
                    p[i] = static_cast<int>(number());
                }
                raw.vertices.push_back(p);
                raw.vertex_offsets.push_back(record_start);
            } else if (tag == 'f') {
                in_faces = true;
                ++pos_;
                std::array<long long, 3> f{};
                for (int i = 0; i < 3; ++i) {
                    expect(' ');
                    f[i] = number();
                }
                raw.faces.push_back(f);
                raw.face_offsets.push_back(record_start);
            } else {
                fail("expected 'v' or 'f'");
            }
            if (pos_ == text_.size()) break;
            if (text_.substr(pos_, sep_.size()) != sep_) fail("expected line separator");
            pos_ += sep_.size();
            if (pos_ == text_.size()) break;
        }
        return raw;
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    // Canonical decimal: digits only, no leading zeros.
    long long number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        const std::size_t len = pos_ - start;
        if (len == 0) fail("expected integer", start);
        if (len > 1 && text_[start] == '0') fail("leading zero in integer", start);
        if (len > 9) fail("integer too large", start);
        long long v = 0;
        std::from_chars(text_.data() + start, text_.data() + pos_, v);
        return v;
    }

    [[noreturn]] void fail(const std::string& msg) { fail(msg, pos_); }
    [[noreturn]] void fail(const std::string& msg, std::size_t at) {
        throw Error(ErrorKind::Parse, msg + " at offset " + std::to_string(at), at);
    }

    std::string_view text_;
    std::string_view sep_;
    std::size_t pos_ = 0;
};

RawRecords scan_tolerant(std::string_view text) {
    RawRecords raw;
    std::size_t pos = 0;
    auto next_token = [&](std::size_t& start) -> std::string_view {
        while (pos < text.size() && is_space(text[pos])) ++pos;
        start = pos;
        while (pos < text.size() && !is_space(text[pos])) ++pos;
        return text.substr(start, pos - start);
    };
    auto integer = [&]() -> long long {
        std::size_t start = 0;
        std::string_view tok = next_token(start);
        if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw Error(ErrorKind::Parse, "expected integer at offset " + std::to_string(start), start);
        }
        return v;
    };
    while (true) {
        std::size_t start = 0;
        const std::string_view tag = next_token(start);
        if (tag.empty()) break;
        if (tag == "v") {
            GridPoint p{};
            for (int i = 0; i < 3; ++i) {
                const long long v = integer();
                if (v < INT32_MIN || v > INT32_MAX) {
                    throw Error(ErrorKind::Range, "coordinate at offset " + std::to_string(start), start);
                }
                p[i] = static_cast<int>(v);
            }
            raw.vertices.push_back(p);
            raw.vertex_offsets.push_back(start);
        } else if (tag == "f") {
            std::array<long long, 3> f{};
            for (auto& idx : f) idx = integer();
            raw.faces.push_back(f);
            raw.face_offsets.push_back(start);
        } else {
            throw Error(ErrorKind::Parse, "unexpected token '" + std::string(tag) + "' at offset " + std::to_string(start),
                        start);
        }
    }
    return raw;
}

QuantizedMesh check_records(const RawRecords& raw, int max_coord) {
    QuantizedMesh q;
    if (raw.vertices.empty() || raw.faces.empty()) {
        throw Error(ErrorKind::EmptyMesh, "mesh text needs at least one vertex and one face");
    }
    for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
        for (int c : raw.vertices[i]) {
            if (c < 0 || c > max_coord) {
                throw Error(ErrorKind::Range,
                            "coordinate " + std::to_string(c) + " outside [0," + std::to_string(max_coord) +
                                "] at offset " + std::to_string(raw.vertex_offsets[i]),
                            raw.vertex_offsets[i]);
            }
        }
    }
    q.vertices = raw.vertices;
    const auto n = static_cast<long long>(raw.vertices.size());
    q.faces.reserve(raw.faces.size());
    for (std::size_t i = 0; i < raw.faces.size(); ++i) {
        Face f{};
        for (int k = 0; k < 3; ++k) {
            const long long idx = raw.faces[i][k];
            if (idx < 1 || idx > n) {
                throw Error(ErrorKind::Validation,
                            "face index " + std::to_string(idx) + " out of range at offset " +
                                std::to_string(raw.face_offsets[i]),
                            raw.face_offsets[i]);
            }
            f[k] = static_cast<std::uint32_t>(idx - 1);
        }
        if (collapsed(f)) {
            throw Error(ErrorKind::Validation, "degenerate face at offset " + std::to_string(raw.face_offsets[i]),
                        raw.face_offsets[i]);
        }
        q.faces.push_back(f);
    }
    return q;
}

} // namespace

void validate(const QuantizedMesh& qmesh, int max_coord) {
    if (qmesh.vertices.empty() || qmesh.faces.empty()) throw Error(ErrorKind::EmptyMesh, "quantized mesh is empty");
    for (const auto& p : qmesh.vertices) {
        for (int c : p) {
            if (c < 0 || c > max_coord) throw Error(ErrorKind::Range, "grid coordinate " + std::to_string(c));
        }
    }
    for (std::size_t i = 0; i < qmesh.faces.size(); ++i) {
        const Face& f = qmesh.faces[i];
        for (auto idx : f) {
            if (idx >= qmesh.vertices.size()) {
                throw Error(ErrorKind::Validation, "face " + std::to_string(i) + " index out of range", i);
            }
        }
        if (collapsed(f)) throw Error(ErrorKind::Validation, "face " + std::to_string(i) + " is degenerate", i);
    }
}

QuantizedMesh quantize(const Mesh& mesh, const SerializerOptions& options) {
    validate(mesh);
    const double scale = options.max_coord;
    QuantizedMesh q;
    q.vertices.reserve(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        GridPoint p{};
        for (std::size_t a = 0; a < 3; ++a) {
            const double c = v[a];
            if (!(c >= -kQuantizeSlack && c <= 1.0 + kQuantizeSlack)) {
                throw Error(ErrorKind::Range,
                            "vertex " + std::to_string(i) + " coordinate " + std::to_string(c) + " outside [0,1]", i);
            }
            p[a] = std::clamp(static_cast<int>(std::lround(c * scale)), 0, options.max_coord);
        }
        q.vertices.push_back(p);
    }
    q.faces = mesh.faces;
    return canonical_sort(q);
}

QuantizedMesh canonical_sort(const QuantizedMesh& qmesh) {
    const std::size_t n = qmesh.vertices.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return zyx_less(qmesh.vertices[a], qmesh.vertices[b]);
    });

    QuantizedMesh out;
    out.vertices.reserve(n);
    std::vector<std::uint32_t> remap(n);
    for (std::uint32_t old : order) {
        if (out.vertices.empty() || out.vertices.back() != qmesh.vertices[old]) {
            out.vertices.push_back(qmesh.vertices[old]);
        }
        remap[old] = static_cast<std::uint32_t>(out.vertices.size() - 1);
    }

    out.faces.reserve(qmesh.faces.size());
    for (const Face& f : qmesh.faces) {
        const Face mapped{remap[f[0]], remap[f[1]], remap[f[2]]};
        if (!collapsed(mapped)) out.faces.push_back(rotate_min_first(mapped));
    }
    std::sort(out.faces.begin(), out.faces.end());
    return out;
}

bool is_canonical(const QuantizedMesh& qmesh) {
    for (std::size_t i = 1; i < qmesh.vertices.size(); ++i) {
        if (!zyx_less(qmesh.vertices[i - 1], qmesh.vertices[i])) return false;
    }
    for (std::size_t i = 0; i < qmesh.faces.size(); ++i) {
        const Face& f = qmesh.faces[i];
        if (collapsed(f) || rotate_min_first(f) != f) return false;
        if (i > 0 && qmesh.faces[i] < qmesh.faces[i - 1]) return false;
    }
    return true;
}

std::string vertex_text(const QuantizedMesh& qmesh, const SerializerOptions& options) {
    std::string out;
    out.reserve(qmesh.vertices.size() * 12);
    for (std::size_t i = 0; i < qmesh.vertices.size(); ++i) {
        if (i > 0) out += options.separator;
        append_vertex(out, qmesh.vertices[i]);
    }
    return out;
}

std::string face_text(const QuantizedMesh& qmesh, const SerializerOptions& options) {
    std::string out;
    out.reserve(qmesh.faces.size() * 12);
    for (std::size_t i = 0; i < qmesh.faces.size(); ++i) {
        if (i > 0) out += options.separator;
        append_face(out, qmesh.faces[i]);
    }
    return out;
}

MeshText to_text(const QuantizedMesh& qmesh, const SerializerOptions& options) {
    MeshText mt;
    mt.text = vertex_text(qmesh, options);
    if (!mt.text.empty() && !qmesh.faces.empty()) mt.text += options.separator;
    mt.text += face_text(qmesh, options);
    mt.token_estimate = estimate_tokens(mt.text);
    return mt;
}

QuantizedMesh from_text(std::string_view text, ParseMode mode, const SerializerOptions& options) {
    if (mode == ParseMode::Strict) {
        if (options.separator.empty()) throw Error(ErrorKind::InvalidArgument, "empty line separator");
        QuantizedMesh q = check_records(StrictScanner(text, options.separator).run(), options.max_coord);
        if (!is_canonical(q)) throw Error(ErrorKind::Validation, "mesh text is not in canonical order");
        return q;
    }
    return canonical_sort(check_records(scan_tolerant(text), options.max_coord));
}

std::size_t estimate_tokens(std::string_view text) {
    std::size_t words = 0;
    std::size_t newlines = 0;
    bool in_word = false;
    for (char c : text) {
        if (c == '\n') ++newlines;
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words + newlines;
}

Mesh dequantize(const QuantizedMesh& qmesh, int max_coord) {
    Mesh m;
    m.vertices.reserve(qmesh.vertices.size());
    const double inv = 1.0 / max_coord;
    for (const auto& p : qmesh.vertices) m.vertices.push_back({p[0] * inv, p[1] * inv, p[2] * inv});
    m.faces = qmesh.faces;
    return m;
}

} // namespace meshseq
