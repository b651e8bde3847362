#pragma once

// Canonical text form of a triangle mesh:
//
//   v X Y Z        one line per vertex, integer grid coordinates in [0, max_coord]
//   ...
//   f A B C        one line per face, 1-based vertex indices
//   ...
//
// Vertices are unique and ascend by (z, y, x). Each face is rotated so its
// smallest index comes first (cyclic order, hence orientation, is kept) and
// faces ascend lexicographically. Lines are joined by a configurable
// separator with no trailing separator.

#include "meshseq/mesh.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace meshseq {

/// Integer grid coordinate, stored as (x, y, z).
using GridPoint = std::array<int, 3>;

struct QuantizedMesh {
    std::vector<GridPoint> vertices;
    std::vector<Face> faces;

    friend bool operator==(const QuantizedMesh&, const QuantizedMesh&) = default;
};

struct SerializerOptions {
    int max_coord = 64;  // grid levels are 0..max_coord inclusive
    std::string separator = "\n";
};

struct MeshText {
    std::string text;
    std::size_t token_estimate = 0;
};

enum class ParseMode { Strict, Tolerant };

/// Tolerance on the [0,1] input range accepted by quantize().
inline constexpr double kQuantizeSlack = 1e-9;

/// Maps each coordinate c of a unit-cube mesh to round(c * max_coord), merges
/// vertices that land on the same grid point, drops faces that collapse, and
/// canonicalizes. Throws Error(Range) for coordinates outside [0,1] + slack.
QuantizedMesh quantize(const Mesh& mesh, const SerializerOptions& options = {});

QuantizedMesh canonical_sort(const QuantizedMesh& qmesh);
bool is_canonical(const QuantizedMesh& qmesh);

MeshText to_text(const QuantizedMesh& qmesh, const SerializerOptions& options = {});

/// The vertex lines and face lines of to_text(), separately. Joined with the
/// separator they reproduce to_text() byte for byte.
std::string vertex_text(const QuantizedMesh& qmesh, const SerializerOptions& options = {});
std::string face_text(const QuantizedMesh& qmesh, const SerializerOptions& options = {});

/// Strict mode accepts exactly what to_text() emits (an optional trailing
/// separator aside) and requires canonical order. Tolerant mode accepts any
/// whitespace layout and record order and canonicalizes the result.
QuantizedMesh from_text(std::string_view text, ParseMode mode = ParseMode::Strict,
                        const SerializerOptions& options = {});

/// Tokenizer-independent length proxy: whitespace-delimited words plus line
/// separators ('\n').
std::size_t estimate_tokens(std::string_view text);

/// Grid coordinates mapped back to [0,1]^3.
Mesh dequantize(const QuantizedMesh& qmesh, int max_coord = 64);

/// Throws Error(Range) / Error(Validation) when the invariants do not hold
/// (ordering excepted).
void validate(const QuantizedMesh& qmesh, int max_coord = 64);

} // namespace meshseq
