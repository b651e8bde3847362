#include "meshseq/decomposer.hpp"

#include "meshseq/error.hpp"
#include "meshseq/random.hpp"
#include "meshseq/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

namespace meshseq {

std::vector<std::size_t> allocate_samples(std::span<const double> areas, std::size_t n_points) {
    const double total = std::accumulate(areas.begin(), areas.end(), 0.0);
    std::vector<std::size_t> counts(areas.size(), 0);
    if (!(total > 0.0) || n_points == 0) return counts;

    std::vector<double> remainder(areas.size(), 0.0);
    std::size_t assigned = 0;
    for (std::size_t f = 0; f < areas.size(); ++f) {
        const double quota = static_cast<double>(n_points) * areas[f] / total;
        const double whole = std::floor(quota);
        counts[f] = static_cast<std::size_t>(whole);
        remainder[f] = quota - whole;
        assigned += counts[f];
    }
    if (assigned > n_points) {
        // Only reachable through rounding in the quotas; trim the largest.
        while (assigned > n_points) {
            auto it = std::max_element(counts.begin(), counts.end());
            --*it;
            --assigned;
        }
    }
    std::vector<std::size_t> order(areas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < n_points && i < order.size(); ++i) {
        if (areas[order[i]] > 0.0) {
            ++counts[order[i]];
            ++assigned;
        }
    }

    const auto positive = static_cast<std::size_t>(std::count_if(areas.begin(), areas.end(), [](double a) { return a > 0.0; }));
    if (n_points >= positive) {
        for (std::size_t f = 0; f < areas.size(); ++f) {
            if (areas[f] > 0.0 && counts[f] == 0) {
                auto donor = std::max_element(counts.begin(), counts.end());
                --*donor;
                counts[f] = 1;
            }
        }
    }
    return counts;
}

SurfaceSamples sample_surface(const Mesh& mesh, std::size_t n_points, std::uint64_t seed) {
    validate(mesh);
    std::vector<double> areas(mesh.num_faces());
    for (std::size_t f = 0; f < areas.size(); ++f) areas[f] = face_area(mesh, f);
    if (std::none_of(areas.begin(), areas.end(), [](double a) { return a > 0.0; })) {
        throw Error(ErrorKind::Degenerate, "every face has zero area");
    }
    const auto counts = allocate_samples(areas, n_points);

    SurfaceSamples out;
    out.points.reserve(n_points);
    out.source_face.reserve(n_points);
    Rng rng(seed);
    for (std::size_t f = 0; f < counts.size(); ++f) {
        const Face& tri = mesh.faces[f];
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        for (std::size_t i = 0; i < counts[f]; ++i) {
            const double s = std::sqrt(rng.uniform());
            const double t = rng.uniform();
            out.points.push_back(a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t));
            out.source_face.push_back(static_cast<std::uint32_t>(f));
        }
    }
    return out;
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t k, std::uint64_t seed) {
    const std::size_t n = points.size();
    if (k > n) {
        throw Error(ErrorKind::InvalidArgument,
                    "cannot pick " + std::to_string(k) + " of " + std::to_string(n) + " points");
    }
    std::vector<std::size_t> picked;
    if (k == 0) return picked;
    picked.reserve(k);

    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    std::vector<char> taken(n, 0);
    Rng rng(seed);
    std::size_t next = static_cast<std::size_t>(rng.index(n));
    while (true) {
        picked.push_back(next);
        taken[next] = 1;
        if (picked.size() == k) break;
        const Vec3 c = points[next];
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = std::min(min_d2[i], squared_distance(points[i], c));
            min_d2[i] = d2;
            if (!taken[i] && d2 > best) {
                best = d2;
                next = i;
            }
        }
    }
    return picked;
}

std::uint32_t cluster_count(std::size_t n_faces) {
    return static_cast<std::uint32_t>(std::clamp<std::size_t>(n_faces / 200, 2, 10));
}

void validate(const PrimitiveSet& pset) {
    if (pset.labels.size() != pset.parent.num_faces()) {
        throw Error(ErrorKind::Validation, "label count " + std::to_string(pset.labels.size()) + " != face count " +
                                               std::to_string(pset.parent.num_faces()));
    }
    if (pset.n_clusters == 0) throw Error(ErrorKind::Validation, "primitive set without clusters");
    if (!pset.names.empty() && pset.names.size() != pset.n_clusters) {
        throw Error(ErrorKind::Validation, "names do not match cluster count");
    }
    std::vector<std::size_t> used(pset.n_clusters, 0);
    for (std::size_t f = 0; f < pset.labels.size(); ++f) {
        if (pset.labels[f] >= pset.n_clusters) {
            throw Error(ErrorKind::Validation, "face " + std::to_string(f) + " has label " +
                                                   std::to_string(pset.labels[f]),
                        f);
        }
        ++used[pset.labels[f]];
    }
    for (std::uint32_t c = 0; c < pset.n_clusters; ++c) {
        if (used[c] == 0) throw Error(ErrorKind::Validation, "cluster " + std::to_string(c) + " has no faces", c);
    }
}

PrimitiveSet knn_decompose(const Mesh& mesh, std::uint64_t seed, const DecomposeOptions& options) {
    validate(mesh);
    const std::size_t nf = mesh.num_faces();
    const std::uint32_t n_clusters = options.n_clusters.value_or(cluster_count(nf));
    if (n_clusters == 0 || n_clusters > nf) {
        throw Error(ErrorKind::InvalidArgument,
                    std::to_string(n_clusters) + " clusters requested for " + std::to_string(nf) + " faces");
    }

    const std::size_t n_samples = std::max(options.min_samples, options.samples_per_face * nf);
    const SurfaceSamples samples = sample_surface(mesh, n_samples, derive_seed(seed, "surface"));
    const auto center_ids = farthest_point_sampling(samples.points, n_clusters, derive_seed(seed, "fps"));
    std::vector<Vec3> centers;
    centers.reserve(n_clusters);
    for (auto id : center_ids) centers.push_back(samples.points[id]);

    auto nearest_center = [&](const Vec3& p) {
        std::uint32_t best = 0;
        double best_d2 = squared_distance(p, centers[0]);
        for (std::uint32_t c = 1; c < n_clusters; ++c) {
            const double d2 = squared_distance(p, centers[c]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        return best;
    };

    std::vector<std::uint32_t> votes(nf * n_clusters, 0);
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
        ++votes[samples.source_face[i] * n_clusters + nearest_center(samples.points[i])];
    }

    PrimitiveSet pset;
    pset.parent = mesh;
    pset.n_clusters = n_clusters;
    pset.labels.resize(nf);
    std::vector<std::size_t> sizes(n_clusters, 0);
    for (std::size_t f = 0; f < nf; ++f) {
        const auto* row = &votes[f * n_clusters];
        const auto* top = std::max_element(row, row + n_clusters);
        const std::uint32_t label =
            *top > 0 ? static_cast<std::uint32_t>(top - row) : nearest_center(face_centroid(mesh, f));
        pset.labels[f] = label;
        ++sizes[label];
    }

    for (std::uint32_t c = 0; c < n_clusters; ++c) {
        if (sizes[c] > 0) continue;
        std::size_t best_face = nf;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < nf; ++f) {
            if (sizes[pset.labels[f]] < 2) continue;
            const double d2 = squared_distance(face_centroid(mesh, f), centers[c]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best_face = f;
            }
        }
        --sizes[pset.labels[best_face]];
        pset.labels[best_face] = c;
        sizes[c] = 1;
    }
    return pset;
}

std::vector<std::uint32_t> cluster_faces(const PrimitiveSet& pset, std::uint32_t cluster) {
    std::vector<std::uint32_t> out;
    for (std::size_t f = 0; f < pset.labels.size(); ++f) {
        if (pset.labels[f] == cluster) out.push_back(static_cast<std::uint32_t>(f));
    }
    return out;
}

Mesh extract_primitive(const PrimitiveSet& pset, std::uint32_t cluster) {
    if (cluster >= pset.n_clusters) {
        throw Error(ErrorKind::InvalidArgument,
                    "cluster " + std::to_string(cluster) + " >= " + std::to_string(pset.n_clusters));
    }
    const Mesh& parent = pset.parent;
    constexpr auto kUnused = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> remap(parent.num_vertices(), kUnused);
    const auto faces = cluster_faces(pset, cluster);
    for (auto f : faces) {
        for (auto v : parent.faces[f]) remap[v] = 0;
    }
    Mesh out;
    for (std::size_t v = 0; v < remap.size(); ++v) {
        if (remap[v] == kUnused) continue;
        remap[v] = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(parent.vertices[v]);
    }
    out.faces.reserve(faces.size());
    for (auto f : faces) {
        const Face& src = parent.faces[f];
        out.faces.push_back({remap[src[0]], remap[src[1]], remap[src[2]]});
    }
    return out;
}

LabelTable parse_label_tsv(std::string_view text) {
    LabelTable table;
    std::size_t line_no = 0;
    for_each_line(text, [&](std::string_view line) {
        ++line_no;
        if (line.empty() || line.front() == '#') return;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected face_index<TAB>label", line_no);
        }
        const std::string_view idx_text = line.substr(0, tab);
        std::size_t face = 0;
        const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), face);
        if (idx_text.empty() || ec != std::errc{} || ptr != idx_text.data() + idx_text.size()) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad face index", line_no);
        }
        table.push_back({face, std::string(line.substr(tab + 1))});
    });
    return table;
}

LabelTable parse_label_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array()) {
        throw Error(ErrorKind::Parse, "label JSON needs a \"labels\" array");
    }
    std::map<std::string, std::string> names;
    if (doc.contains("names")) {
        if (!doc["names"].is_object()) throw Error(ErrorKind::Parse, "\"names\" must be an object");
        for (const auto& [key, value] : doc["names"].items()) {
            if (!value.is_string()) throw Error(ErrorKind::Parse, "name for '" + key + "' is not a string");
            names[key] = value.get<std::string>();
        }
    }
    LabelTable table;
    const auto& labels = doc["labels"];
    for (std::size_t f = 0; f < labels.size(); ++f) {
        const auto& entry = labels[f];
        std::string key;
        if (entry.is_string()) {
            key = entry.get<std::string>();
        } else if (entry.is_number_integer()) {
            key = std::to_string(entry.get<long long>());
        } else {
            throw Error(ErrorKind::Parse, "label for face " + std::to_string(f) + " is neither string nor integer", f);
        }
        const auto it = names.find(key);
        table.push_back({f, it != names.end() ? it->second : key});
    }
    return table;
}

LabelTable read_label_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    return path.extension() == ".json" ? parse_label_json(text) : parse_label_tsv(text);
}

PrimitiveSet ingest_semantic_labels(const Mesh& mesh, const LabelTable& table) {
    validate(mesh);
    const std::size_t nf = mesh.num_faces();
    std::vector<const std::string*> per_face(nf, nullptr);
    for (const auto& entry : table) {
        if (entry.face >= nf) {
            throw Error(ErrorKind::Validation,
                        "label for unknown face " + std::to_string(entry.face) + " (" + std::to_string(nf) + " faces)",
                        entry.face);
        }
        if (per_face[entry.face] != nullptr) {
            throw Error(ErrorKind::Coverage, "face " + std::to_string(entry.face) + " labeled twice", entry.face);
        }
        per_face[entry.face] = &entry.label;
    }

    PrimitiveSet pset;
    pset.parent = mesh;
    pset.labels.resize(nf);
    std::unordered_map<std::string, std::uint32_t> ids;
    for (std::size_t f = 0; f < nf; ++f) {
        if (per_face[f] == nullptr) {
            throw Error(ErrorKind::Coverage, "face " + std::to_string(f) + " has no label", f);
        }
        auto [it, inserted] = ids.try_emplace(*per_face[f], static_cast<std::uint32_t>(pset.names.size()));
        if (inserted) pset.names.push_back(*per_face[f]);
        pset.labels[f] = it->second;
    }
    pset.n_clusters = static_cast<std::uint32_t>(pset.names.size());
    return pset;
}

} // namespace meshseq
