#include "meshseq/decomposer.hpp"
#include "meshseq/error.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace meshseq;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected meshseq::Error");
    return ErrorKind::Io;
}

// Distance from p to the plane of face f.
double plane_distance(const Mesh& m, std::size_t f, const Vec3& p) {
    const Vec3& a = m.vertices[m.faces[f][0]];
    const Vec3 n = cross(m.vertices[m.faces[f][1]] - a, m.vertices[m.faces[f][2]] - a);
    return std::abs(dot(p - a, n)) / norm(n);
}

} // namespace

TEST_CASE("allocate_samples") {
    const std::vector<double> areas{1.0, 3.0};
    CHECK(allocate_samples(areas, 4) == std::vector<std::size_t>{1, 3});

    // a tiny face still gets one point when there are enough to go round
    const std::vector<double> skewed{1000.0, 1e-6, 1e-6};
    const auto counts = allocate_samples(skewed, 10);
    CHECK(counts[1] >= 1);
    CHECK(counts[2] >= 1);
    CHECK(counts[0] + counts[1] + counts[2] == 10);

    const std::vector<double> with_zero{0.0, 2.0, 2.0};
    CHECK(allocate_samples(with_zero, 5)[0] == 0);
}

TEST_CASE("sample_surface") {
    const Mesh m = test::shape(5);
    const SurfaceSamples s = sample_surface(m, 3000, 9);
    REQUIRE(s.points.size() == 3000);
    REQUIRE(s.source_face.size() == 3000);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        REQUIRE(s.source_face[i] < m.faces.size());
        CHECK(plane_distance(m, s.source_face[i], s.points[i]) <= 1e-9);
    }
    const SurfaceSamples again = sample_surface(m, 3000, 9);
    CHECK(again.points == s.points);
    CHECK(again.source_face == s.source_face);
    CHECK(sample_surface(m, 3000, 10).points != s.points);

    // sphere poles give sliver faces; points must still stay inside their face's box
    const Mesh sphere = test::shape(2);
    const SurfaceSamples ss = sample_surface(sphere, 3000, 9);
    for (std::size_t i = 0; i < ss.points.size(); ++i) {
        const Face& f = sphere.faces[ss.source_face[i]];
        for (std::size_t a = 0; a < 3; ++a) {
            const double lo = std::min({sphere.vertices[f[0]][a], sphere.vertices[f[1]][a], sphere.vertices[f[2]][a]});
            const double hi = std::max({sphere.vertices[f[0]][a], sphere.vertices[f[1]][a], sphere.vertices[f[2]][a]});
            CHECK(ss.points[i][a] >= lo - 1e-12);
            CHECK(ss.points[i][a] <= hi + 1e-12);
        }
    }

    const Mesh flat{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}};
    CHECK(kind_of([&] { sample_surface(flat, 10, 0); }) == ErrorKind::Degenerate);
}

TEST_CASE("farthest_point_sampling") {
    const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {10, 0, 0}};
    // find a seed whose first pick is index 0
    std::uint64_t seed = 0;
    while (farthest_point_sampling(pts, 1, seed)[0] != 0) ++seed;
    const auto picks = farthest_point_sampling(pts, 2, seed);
    CHECK(picks == std::vector<std::size_t>{0, 2});

    auto all = farthest_point_sampling(pts, 3, 4);
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<std::size_t>{0, 1, 2});

    CHECK(kind_of([&] { farthest_point_sampling(pts, 4, 0); }) == ErrorKind::InvalidArgument);

    // ties: square corners, from corner 0 both neighbours tie below the diagonal
    const std::vector<Vec3> square{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    seed = 0;
    while (farthest_point_sampling(square, 1, seed)[0] != 0) ++seed;
    CHECK(farthest_point_sampling(square, 3, seed) == std::vector<std::size_t>{0, 3, 1});
}

TEST_CASE("cluster_count") {
    CHECK(cluster_count(400) == 2);
    CHECK(cluster_count(5000) == 10);
    CHECK(cluster_count(150) == 2);
    CHECK(cluster_count(1) == 2);
    CHECK(cluster_count(599) == 2);
    CHECK(cluster_count(600) == 3);
    CHECK(cluster_count(1999) == 9);
    CHECK(cluster_count(2000) == 10);
    std::uint32_t prev = 0;
    for (std::size_t n = 1; n < 3000; ++n) {
        const auto c = cluster_count(n);
        CHECK(c >= prev);
        CHECK(c >= 2);
        CHECK(c <= 10);
        prev = c;
    }
}

TEST_CASE("knn_decompose separates two cubes") {
    const Mesh m = test::two_cubes();
    DecomposeOptions o;
    o.n_clusters = 2;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const PrimitiveSet p = knn_decompose(m, seed, o);
        CHECK_NOTHROW(validate(p));
        CHECK(p.n_clusters == 2);
        for (std::size_t f = 1; f < 12; ++f) CHECK(p.labels[f] == p.labels[0]);
        for (std::size_t f = 13; f < 24; ++f) CHECK(p.labels[f] == p.labels[12]);
        CHECK(p.labels[0] != p.labels[12]);
    }
}

TEST_CASE("knn_decompose partition and determinism") {
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        const Mesh m = test::random_mesh(rng, 800);
        const PrimitiveSet p = knn_decompose(m, 5);
        CHECK_NOTHROW(validate(p));
        CHECK(p.n_clusters == cluster_count(m.faces.size()));
        CHECK(p.parent == m);
        CHECK(knn_decompose(m, 5) == p);
    }
    const Mesh tiny = test::unit_triangle();
    CHECK(kind_of([&] { knn_decompose(tiny, 0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("extract_primitive") {
    const Mesh m = test::shape(5);
    const PrimitiveSet p = knn_decompose(m, 1, {3, 4096, 8});
    std::multiset<std::array<double, 9>> parent_faces, union_faces;
    auto key = [](const Mesh& mesh, const Face& f) {
        std::array<double, 9> k{};
        for (int c = 0; c < 3; ++c) {
            for (int a = 0; a < 3; ++a) k[c * 3 + a] = mesh.vertices[f[c]][a];
        }
        return k;
    };
    for (const auto& f : m.faces) parent_faces.insert(key(m, f));
    std::size_t total = 0;
    for (std::uint32_t c = 0; c < p.n_clusters; ++c) {
        const Mesh part = extract_primitive(p, c);
        CHECK_NOTHROW(validate(part));
        CHECK(part.faces.size() == cluster_faces(p, c).size());
        total += part.faces.size();
        for (const auto& f : part.faces) union_faces.insert(key(part, f));
    }
    CHECK(total == m.faces.size());
    CHECK(union_faces == parent_faces);
    CHECK(kind_of([&] { extract_primitive(p, p.n_clusters); }) == ErrorKind::InvalidArgument);

    // one cluster: same faces, same vertices (none unused here)
    PrimitiveSet single{m, std::vector<std::uint32_t>(m.faces.size(), 0), 1, {}};
    CHECK(extract_primitive(single, 0) == m);
}

TEST_CASE("semantic labels") {
    Mesh m = test::parametric([](double u, double v) { return Vec3{u, v, 0}; }, 5, 1);
    REQUIRE(m.faces.size() == 10);

    SUBCASE("two names") {
        std::string tsv = "# face\tlabel\n";
        for (int f = 0; f < 10; ++f) tsv += std::to_string(f) + "\t" + (f < 4 ? "head" : "body") + "\n";
        const PrimitiveSet p = ingest_semantic_labels(m, parse_label_tsv(tsv));
        CHECK(p.n_clusters == 2);
        CHECK(p.names == std::vector<std::string>{"head", "body"});
        CHECK(p.labels[0] == 0);
        CHECK(p.labels[9] == 1);
        CHECK_NOTHROW(validate(p));
    }
    SUBCASE("missing face 7") {
        LabelTable t;
        for (std::size_t f = 0; f < 10; ++f) {
            if (f != 7) t.push_back({f, "a"});
        }
        CHECK(kind_of([&] { ingest_semantic_labels(m, t); }) == ErrorKind::Coverage);
    }
    SUBCASE("unknown face and double coverage") {
        LabelTable t;
        for (std::size_t f = 0; f < 10; ++f) t.push_back({f, "a"});
        LabelTable extra = t;
        extra.push_back({10, "a"});
        CHECK(kind_of([&] { ingest_semantic_labels(m, extra); }) == ErrorKind::Validation);
        LabelTable twice = t;
        twice.push_back({3, "b"});
        CHECK(kind_of([&] { ingest_semantic_labels(m, twice); }) == ErrorKind::Coverage);
    }
    SUBCASE("single label") {
        LabelTable t;
        for (std::size_t f = 0; f < 10; ++f) t.push_back({f, "part"});
        const PrimitiveSet p = ingest_semantic_labels(m, t);
        CHECK(p.n_clusters == 1);
        CHECK(p.names == std::vector<std::string>{"part"});
        CHECK(extract_primitive(p, 0) == m);
    }
    SUBCASE("json variants") {
        const LabelTable a = parse_label_json(R"({"labels": ["x","x","y","y","y","x","x","x","y","y"]})");
        CHECK(ingest_semantic_labels(m, a).n_clusters == 2);
        const LabelTable b =
            parse_label_json(R"({"labels": [0,0,1,1,1,0,0,0,1,1], "names": {"0": "seat", "1": "leg"}})");
        const PrimitiveSet p = ingest_semantic_labels(m, b);
        CHECK(p.names == std::vector<std::string>{"seat", "leg"});
        CHECK(kind_of([] { parse_label_json("{}"); }) == ErrorKind::Parse);
        CHECK(kind_of([] { parse_label_json("[1,2"); }) == ErrorKind::Parse);
    }
    SUBCASE("tsv errors") {
        CHECK(kind_of([] { parse_label_tsv("0 head\n"); }) == ErrorKind::Parse);
        CHECK(kind_of([] { parse_label_tsv("x\thead\n"); }) == ErrorKind::Parse);
    }
}

TEST_CASE("validate PrimitiveSet") {
    const Mesh m = test::two_cubes();
    PrimitiveSet p{m, std::vector<std::uint32_t>(24, 0), 2, {}};
    CHECK(kind_of([&] { validate(p); }) == ErrorKind::Validation);  // cluster 1 unused
    p.labels[5] = 1;
    CHECK_NOTHROW(validate(p));
    p.labels[6] = 2;
    CHECK(kind_of([&] { validate(p); }) == ErrorKind::Validation);
    p.labels.pop_back();
    CHECK(kind_of([&] { validate(p); }) == ErrorKind::Validation);
}
