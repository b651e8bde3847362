#pragma once

// Point-cloud generative metrics over Chamfer distance: MMD, COV, 1-NNA and
// nearest-training-shape retrieval.
//
// Chamfer distance (default, squared variant):
//   CD(X,Y) = 1/|X| sum_x min_y |x-y|^2 + 1/|Y| sum_y min_x |y-x|^2
// The Euclidean variant uses |x-y| in place of |x-y|^2.
//
// Nearest neighbours come from an exact kd-tree; its results are bitwise
// identical to the brute-force scan (chamfer_brute_force).

#include "meshseq/mesh.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace meshseq {

struct PointCloud {
    std::vector<Vec3> points;

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

enum class ChamferVariant { Squared, Euclidean };

std::string_view to_string(ChamferVariant variant);
std::optional<ChamferVariant> parse_chamfer_variant(std::string_view name);

inline constexpr std::size_t kDefaultCloudSize = 2048;

PointCloud mesh_to_cloud(const Mesh& mesh, std::size_t p = kDefaultCloudSize, std::uint64_t seed = 0);

/// Exact nearest-neighbour index over one cloud.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    /// Smallest squared distance from q to any indexed point. `hint` is an
    /// index whose distance seeds the search bound; it does not change the
    /// result.
    double nearest_squared(const Vec3& q, std::size_t* hint = nullptr) const;

    /// Nearest squared distance into this tree for every point of
    /// `queries`, written to out[input index]. Same values as calling
    /// nearest_squared per point.
    void nearest_all(const KdTree& queries, std::vector<double>& out) const;

    std::size_t size() const { return points_.size(); }

    /// Points in tree (leaf) order, and the input index of each.
    const std::vector<Vec3>& points() const { return points_; }
    const std::vector<std::uint32_t>& input_index() const { return index_; }

private:
    // Inner nodes hold the tight boxes of both children, axis-major, so the
    // two child bounds are computed side by side.
    struct Node {
        alignas(16) double lo[3][2];
        alignas(16) double hi[3][2];
        std::uint32_t begin = 0, end = 0;
        std::int32_t child[2] = {-1, -1};
    };
    struct Slot {
        Vec3 p;
        std::uint32_t index;
    };

    std::int32_t build(std::vector<Slot>& slots, std::uint32_t begin, std::uint32_t end, Vec3& lo, Vec3& hi);
    void search(std::int32_t node, const Vec3& q, double& best, std::size_t& best_index) const;
    void scan_leaf(const Node& leaf, const Vec3& q, double& best, std::size_t& best_index) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> index_;
    std::vector<Node> nodes_;
    std::vector<double> xs_, ys_, zs_;  // points_ by axis, for leaf scans
};

double chamfer(const PointCloud& x, const PointCloud& y, ChamferVariant variant = ChamferVariant::Squared);
double chamfer_brute_force(const PointCloud& x, const PointCloud& y, ChamferVariant variant = ChamferVariant::Squared);

/// Row-major rows x cols matrix of Chamfer distances.
struct DistanceMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

DistanceMatrix pairwise_chamfer(std::span<const PointCloud> a, std::span<const PointCloud> b,
                                ChamferVariant variant = ChamferVariant::Squared, std::size_t jobs = 1);

/// Symmetric matrix over gen ++ ref (each pair computed once).
DistanceMatrix joint_chamfer(std::span<const PointCloud> gen, std::span<const PointCloud> ref,
                             ChamferVariant variant = ChamferVariant::Squared, std::size_t jobs = 1);

/// From a |gen| x |ref| matrix: mean over references of the closest generated distance.
double mmd_from_matrix(const DistanceMatrix& gen_to_ref);
/// From a |gen| x |ref| matrix: share of references that are some generator's nearest (ties to lowest).
double cov_from_matrix(const DistanceMatrix& gen_to_ref);
/// From the joint matrix: leave-one-out 1-NN accuracy, ties to the lowest joint index.
double one_nna_from_matrix(const DistanceMatrix& joint, std::size_t n_gen);

double mmd(std::span<const PointCloud> gen, std::span<const PointCloud> ref,
           ChamferVariant variant = ChamferVariant::Squared);
double cov(std::span<const PointCloud> gen, std::span<const PointCloud> ref,
           ChamferVariant variant = ChamferVariant::Squared);
double one_nna(std::span<const PointCloud> gen, std::span<const PointCloud> ref,
               ChamferVariant variant = ChamferVariant::Squared);

struct MetricReport {
    double mmd = 0.0;
    double cov = 0.0;
    double one_nna = 0.0;
    std::size_t n_gen = 0;
    std::size_t n_ref = 0;
    std::size_t p = 0;
    std::uint64_t seed = 0;
    ChamferVariant cd_variant = ChamferVariant::Squared;
    DistanceMatrix distances;  // joint (gen ++ ref) matrix
};

MetricReport evaluate_clouds(std::span<const PointCloud> gen, std::span<const PointCloud> ref,
                             ChamferVariant variant = ChamferVariant::Squared, std::size_t jobs = 1);

struct Neighbor {
    std::size_t id = 0;
    double distance = 0.0;
};

/// The k corpus clouds closest to the query by Chamfer distance, ascending,
/// ties to the lowest id.
std::vector<Neighbor> novelty_neighbors(const PointCloud& query, std::span<const PointCloud> corpus,
                                        std::size_t k = 3, ChamferVariant variant = ChamferVariant::Squared);

} // namespace meshseq
