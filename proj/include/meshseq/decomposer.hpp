#pragma once

// Primitive-Mesh decomposition: a partition of a mesh's faces into labeled
// local sub-meshes, built either from surface samples (farthest-point
// centroids, nearest-centroid point labels, per-face majority vote) or from
// an externally produced per-face semantic label table.

#include "meshseq/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meshseq {

struct SurfaceSamples {
    std::vector<Vec3> points;
    std::vector<std::uint32_t> source_face;
};

/// Per-face sample counts: largest-remainder apportionment of n_points by
/// area, then every positive-area face with no points takes one from the
/// face holding the most (only possible when n_points >= positive faces).
std::vector<std::size_t> allocate_samples(std::span<const double> areas, std::size_t n_points);

/// Area-weighted uniform surface samples, grouped by face in face order.
/// Throws Error(Degenerate) when every face has zero area.
SurfaceSamples sample_surface(const Mesh& mesh, std::size_t n_points, std::uint64_t seed);

/// Greedy max-min farthest point sampling. The first index is drawn from the
/// seed; later picks maximize the squared distance to the chosen set, ties to
/// the lowest index. Throws Error(InvalidArgument) when k > points.size().
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t k, std::uint64_t seed);

/// clamp(floor(n_faces / 200), 2, 10)
std::uint32_t cluster_count(std::size_t n_faces);

struct PrimitiveSet {
    Mesh parent;
    std::vector<std::uint32_t> labels;  // per face, in [0, n_clusters)
    std::uint32_t n_clusters = 0;
    std::vector<std::string> names;     // empty, or one per cluster

    friend bool operator==(const PrimitiveSet&, const PrimitiveSet&) = default;
};

/// Throws Error(Validation) unless labels partition the faces and every
/// cluster id is used.
void validate(const PrimitiveSet& pset);

struct DecomposeOptions {
    std::optional<std::uint32_t> n_clusters;  // overrides cluster_count()
    std::size_t min_samples = 4096;
    std::size_t samples_per_face = 8;
};

PrimitiveSet knn_decompose(const Mesh& mesh, std::uint64_t seed, const DecomposeOptions& options = {});

/// Face ids (ascending) carrying the given label.
std::vector<std::uint32_t> cluster_faces(const PrimitiveSet& pset, std::uint32_t cluster);

/// Sub-mesh of one cluster. Referenced vertices are kept in ascending parent
/// order and reindexed densely; coordinates are untouched.
Mesh extract_primitive(const PrimitiveSet& pset, std::uint32_t cluster);

struct FaceLabel {
    std::size_t face = 0;
    std::string label;
};
using LabelTable = std::vector<FaceLabel>;

/// `face_index<TAB>label` per line. Blank lines and '#' comments are skipped.
LabelTable parse_label_tsv(std::string_view text);

/// {"labels": [per-face string or integer], "names": {"<id>": "<name>"}}.
/// Integer labels are resolved through "names" when present.
LabelTable parse_label_json(std::string_view text);

/// Dispatches on extension: .json is JSON, anything else TSV.
LabelTable read_label_file(const std::filesystem::path& path);

/// Cluster ids follow first occurrence in face order; names are the labels.
/// Throws Error(Coverage) for uncovered or doubly-covered faces and
/// Error(Validation) for face ids beyond the mesh.
PrimitiveSet ingest_semantic_labels(const Mesh& mesh, const LabelTable& table);

} // namespace meshseq
