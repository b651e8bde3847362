#include "meshseq/metrics.hpp"

#include "meshseq/decomposer.hpp"
#include "meshseq/error.hpp"
#include "meshseq/parallel.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <numeric>

namespace meshseq {

namespace {

constexpr std::uint32_t kLeafSize = 16;

void require_nonempty(const PointCloud& c) {
    if (c.points.empty()) throw Error(ErrorKind::InvalidArgument, "empty point cloud");
}

void require_nonempty(std::span<const PointCloud> set, const char* what) {
    if (set.empty()) throw Error(ErrorKind::InvalidArgument, std::string("empty ") + what + " set");
}

// Mean over `from` of the nearest squared (or plain) distance into `tree`.
// The sum is taken in input order to match the brute-force scan bit for bit.
double directed_term(const KdTree& from_tree, const KdTree& tree, ChamferVariant variant) {
    const auto& queries = from_tree.points();
    thread_local std::vector<double> nearest;
    tree.nearest_all(from_tree, nearest);
    double sum = 0.0;
    for (double d2 : nearest) sum += variant == ChamferVariant::Squared ? d2 : std::sqrt(d2);
    return sum / static_cast<double>(queries.size());
}

double directed_term_brute(const PointCloud& from, const PointCloud& to, ChamferVariant variant) {
    double sum = 0.0;
    for (const auto& p : from.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to.points) best = std::min(best, squared_distance(p, q));
        sum += variant == ChamferVariant::Squared ? best : std::sqrt(best);
    }
    return sum / static_cast<double>(from.points.size());
}

std::vector<KdTree> build_trees(std::span<const PointCloud> clouds, std::size_t jobs) {
    std::vector<std::optional<KdTree>> slots(clouds.size());
    parallel_for(clouds.size(), jobs, [&](std::size_t i) {
        require_nonempty(clouds[i]);
        slots[i].emplace(clouds[i].points);
    });
    std::vector<KdTree> trees;
    trees.reserve(slots.size());
    for (auto& s : slots) trees.push_back(std::move(*s));
    return trees;
}

double chamfer_with_trees(const KdTree& tx, const KdTree& ty, ChamferVariant variant) {
    return directed_term(tx, ty, variant) + directed_term(ty, tx, variant);
}

} // namespace

std::string_view to_string(ChamferVariant variant) {
    return variant == ChamferVariant::Squared ? "squared_l2_mean_sum" : "l2_mean_sum";
}

std::optional<ChamferVariant> parse_chamfer_variant(std::string_view name) {
    if (name == "squared" || name == "squared_l2_mean_sum") return ChamferVariant::Squared;
    if (name == "euclidean" || name == "l2_mean_sum") return ChamferVariant::Euclidean;
    return std::nullopt;
}

PointCloud mesh_to_cloud(const Mesh& mesh, std::size_t p, std::uint64_t seed) {
    if (p == 0) throw Error(ErrorKind::InvalidArgument, "point cloud size must be positive");
    return PointCloud{sample_surface(mesh, p, seed).points};
}

KdTree::KdTree(std::span<const Vec3> points) {
    if (points.empty()) throw Error(ErrorKind::InvalidArgument, "kd-tree over no points");
    std::vector<Slot> slots(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) slots[i] = {points[i], static_cast<std::uint32_t>(i)};
    nodes_.reserve(2 * points.size() / kLeafSize + 2);
    Vec3 lo, hi;
    build(slots, 0, static_cast<std::uint32_t>(slots.size()), lo, hi);

    points_.resize(slots.size());
    index_.resize(slots.size());
    xs_.resize(slots.size());
    ys_.resize(slots.size());
    zs_.resize(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        points_[i] = slots[i].p;
        index_[i] = slots[i].index;
        xs_[i] = slots[i].p.x;
        ys_[i] = slots[i].p.y;
        zs_[i] = slots[i].p.z;
    }
}

std::int32_t KdTree::build(std::vector<Slot>& slots, std::uint32_t begin, std::uint32_t end, Vec3& lo, Vec3& hi) {
    lo = hi = slots[begin].p;
    for (std::uint32_t i = begin; i < end; ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], slots[i].p[a]);
            hi[a] = std::max(hi[a], slots[i].p[a]);
        }
    }
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.back().begin = begin;
    nodes_.back().end = end;
    if (end - begin <= kLeafSize) return id;

    const Vec3 ext = hi - lo;
    const std::size_t axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(slots.begin() + begin, slots.begin() + mid, slots.begin() + end, [axis](const Slot& a, const Slot& b) {
        return a.p[axis] < b.p[axis] || (a.p[axis] == b.p[axis] && a.index < b.index);
    });

    Vec3 clo[2], chi[2];
    const std::int32_t left = build(slots, begin, mid, clo[0], chi[0]);
    const std::int32_t right = build(slots, mid, end, clo[1], chi[1]);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.child[0] = left;
    node.child[1] = right;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t c = 0; c < 2; ++c) {
            node.lo[a][c] = clo[c][a];
            node.hi[a][c] = chi[c][a];
        }
    }
    return id;
}

void KdTree::scan_leaf(const Node& leaf, const Vec3& q, double& best, std::size_t& best_index) const {
    // Same arithmetic as squared_distance, laid out so it vectorizes.
    double d2[kLeafSize];
    const std::uint32_t n = leaf.end - leaf.begin;
    const double* xs = xs_.data() + leaf.begin;
    const double* ys = ys_.data() + leaf.begin;
    const double* zs = zs_.data() + leaf.begin;
    for (std::uint32_t k = 0; k < n; ++k) {
        const double dx = q.x - xs[k];
        const double dy = q.y - ys[k];
        const double dz = q.z - zs[k];
        d2[k] = dx * dx + dy * dy + dz * dz;
    }
    std::uint32_t found = n;
    for (std::uint32_t k = 0; k < n; ++k) {
        const bool closer = d2[k] < best;
        best = closer ? d2[k] : best;
        found = closer ? k : found;
    }
    if (found < n) best_index = leaf.begin + found;
}

namespace {

using Pair = double __attribute__((vector_size(16)));

Pair load(const double (&v)[2]) {
    Pair r;
    std::memcpy(&r, v, sizeof r);
    return r;
}

Pair gap(Pair lo, Pair hi, double q) {
    const Pair zero{0.0, 0.0};
    const Pair below = lo - q;
    const Pair above = q - hi;
    return (below > zero ? below : zero) + (above > zero ? above : zero);
}

} // namespace

// Squared distance from q to each child's box, per-axis gaps summed in the
// same order as squared_distance. At most one gap term per axis is nonzero,
// and rounding is monotone, so a bound never exceeds the computed distance of
// any point in the box and pruning on it cannot change the result.
void KdTree::search(std::int32_t node_id, const Vec3& q, double& best, std::size_t& best_index) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.child[0] < 0) {
        scan_leaf(node, q, best, best_index);
        return;
    }
    const Pair gx = gap(load(node.lo[0]), load(node.hi[0]), q.x);
    const Pair gy = gap(load(node.lo[1]), load(node.hi[1]), q.y);
    const Pair gz = gap(load(node.lo[2]), load(node.hi[2]), q.z);
    const Pair b = gx * gx + gy * gy + gz * gz;
    const double bl = b[0], br = b[1];
    if (bl <= br) {
        if (bl < best) search(node.child[0], q, best, best_index);
        if (br < best) search(node.child[1], q, best, best_index);
    } else {
        if (br < best) search(node.child[1], q, best, best_index);
        if (bl < best) search(node.child[0], q, best, best_index);
    }
}

double KdTree::nearest_squared(const Vec3& q, std::size_t* hint) const {
    std::size_t best_index = 0;
    double best = std::numeric_limits<double>::infinity();
    if (hint != nullptr && *hint < points_.size()) {
        best_index = *hint;
        best = squared_distance(q, points_[best_index]);
    }
    search(0, q, best, best_index);
    if (hint != nullptr) *hint = best_index;
    return best;
}

void KdTree::nearest_all(const KdTree& queries, std::vector<double>& out) const {
    out.assign(queries.size(), 0.0);
    std::size_t hint = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        out[queries.index_[i]] = nearest_squared(queries.points_[i], &hint);
    }
}

double chamfer(const PointCloud& x, const PointCloud& y, ChamferVariant variant) {
    require_nonempty(x);
    require_nonempty(y);
    const KdTree tx(x.points);
    const KdTree ty(y.points);
    return chamfer_with_trees(tx, ty, variant);
}

double chamfer_brute_force(const PointCloud& x, const PointCloud& y, ChamferVariant variant) {
    require_nonempty(x);
    require_nonempty(y);
    return directed_term_brute(x, y, variant) + directed_term_brute(y, x, variant);
}

DistanceMatrix pairwise_chamfer(std::span<const PointCloud> a, std::span<const PointCloud> b, ChamferVariant variant,
                                std::size_t jobs) {
    const auto ta = build_trees(a, jobs);
    const auto tb = build_trees(b, jobs);
    DistanceMatrix m{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
    parallel_for(a.size() * b.size(), jobs, [&](std::size_t k) {
        const std::size_t i = k / b.size();
        const std::size_t j = k % b.size();
        m.values[k] = chamfer_with_trees(ta[i], tb[j], variant);
    });
    return m;
}

DistanceMatrix joint_chamfer(std::span<const PointCloud> gen, std::span<const PointCloud> ref, ChamferVariant variant,
                             std::size_t jobs) {
    std::vector<PointCloud> all(gen.begin(), gen.end());
    all.insert(all.end(), ref.begin(), ref.end());
    const std::size_t n = all.size();
    const auto trees = build_trees(all, jobs);
    DistanceMatrix m{n, n, std::vector<double>(n * n, 0.0)};
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        const double d = chamfer_with_trees(trees[i], trees[j], variant);
        m.values[i * n + j] = d;
        m.values[j * n + i] = d;
    });
    // The diagonal stays 0: every point is its own nearest neighbour.
    return m;
}

double mmd_from_matrix(const DistanceMatrix& d) {
    if (d.rows == 0 || d.cols == 0) throw Error(ErrorKind::InvalidArgument, "empty distance matrix");
    double sum = 0.0;
    for (std::size_t r = 0; r < d.cols; ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < d.rows; ++g) best = std::min(best, d(g, r));
        sum += best;
    }
    return sum / static_cast<double>(d.cols);
}

double cov_from_matrix(const DistanceMatrix& d) {
    if (d.rows == 0 || d.cols == 0) throw Error(ErrorKind::InvalidArgument, "empty distance matrix");
    std::vector<char> covered(d.cols, 0);
    for (std::size_t g = 0; g < d.rows; ++g) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < d.cols; ++r) {
            if (d(g, r) < d(g, arg)) arg = r;
        }
        covered[arg] = 1;
    }
    const auto n = std::count(covered.begin(), covered.end(), 1);
    return static_cast<double>(n) / static_cast<double>(d.cols);
}

double one_nna_from_matrix(const DistanceMatrix& joint, std::size_t n_gen) {
    const std::size_t n = joint.rows;
    if (n < 2 || joint.cols != n || n_gen > n) {
        throw Error(ErrorKind::InvalidArgument, "1-NNA needs at least two clouds");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = i == 0 ? 1 : 0;
        for (std::size_t j = arg + 1; j < n; ++j) {
            if (j != i && joint(i, j) < joint(i, arg)) arg = j;
        }
        if ((i < n_gen) == (arg < n_gen)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double mmd(std::span<const PointCloud> gen, std::span<const PointCloud> ref, ChamferVariant variant) {
    require_nonempty(gen, "generated");
    require_nonempty(ref, "reference");
    return mmd_from_matrix(pairwise_chamfer(gen, ref, variant));
}

double cov(std::span<const PointCloud> gen, std::span<const PointCloud> ref, ChamferVariant variant) {
    require_nonempty(gen, "generated");
    require_nonempty(ref, "reference");
    return cov_from_matrix(pairwise_chamfer(gen, ref, variant));
}

double one_nna(std::span<const PointCloud> gen, std::span<const PointCloud> ref, ChamferVariant variant) {
    if (gen.size() + ref.size() < 2) throw Error(ErrorKind::InvalidArgument, "1-NNA needs at least two clouds");
    return one_nna_from_matrix(joint_chamfer(gen, ref, variant), gen.size());
}

MetricReport evaluate_clouds(std::span<const PointCloud> gen, std::span<const PointCloud> ref, ChamferVariant variant,
                             std::size_t jobs) {
    require_nonempty(gen, "generated");
    require_nonempty(ref, "reference");
    MetricReport report;
    report.n_gen = gen.size();
    report.n_ref = ref.size();
    report.p = gen.front().points.size();
    report.cd_variant = variant;
    report.distances = joint_chamfer(gen, ref, variant, jobs);

    DistanceMatrix cross{gen.size(), ref.size(), {}};
    cross.values.reserve(gen.size() * ref.size());
    for (std::size_t g = 0; g < gen.size(); ++g) {
        for (std::size_t r = 0; r < ref.size(); ++r) cross.values.push_back(report.distances(g, gen.size() + r));
    }
    report.mmd = mmd_from_matrix(cross);
    report.cov = cov_from_matrix(cross);
    report.one_nna = one_nna_from_matrix(report.distances, gen.size());
    return report;
}

std::vector<Neighbor> novelty_neighbors(const PointCloud& query, std::span<const PointCloud> corpus, std::size_t k,
                                        ChamferVariant variant) {
    if (k > corpus.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    "asked for " + std::to_string(k) + " neighbours in a corpus of " + std::to_string(corpus.size()));
    }
    require_nonempty(query);
    const KdTree tq(query.points);
    std::vector<Neighbor> all;
    all.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        require_nonempty(corpus[i]);
        const KdTree tc(corpus[i].points);
        all.push_back({i, chamfer_with_trees(tq, tc, variant)});
    }
    std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    all.resize(k);
    return all;
}

} // namespace meshseq
