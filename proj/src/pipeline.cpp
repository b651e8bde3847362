#include "meshseq/pipeline.hpp"

#include "meshseq/decomposer.hpp"
#include "meshseq/error.hpp"
#include "meshseq/parallel.hpp"
#include "meshseq/random.hpp"
#include "meshseq/serializer.hpp"
#include "meshseq/text_io.hpp"
#include "meshseq/text_metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>

namespace meshseq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string mesh_id(const fs::path& path) { return path.stem().string(); }

// Outcome of one per-file work item.
template <typename T>
struct Outcome {
    std::optional<T> value;
    std::string error;
};

template <typename T, typename Fn>
std::vector<Outcome<T>> run_items(const std::vector<fs::path>& inputs, std::size_t jobs, Fn&& fn) {
    std::vector<Outcome<T>> out(inputs.size());
    parallel_for(inputs.size(), jobs, [&](std::size_t i) {
        try {
            out[i].value.emplace(fn(i, inputs[i]));
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

// Reports failures; returns false when the run must stop.
template <typename T>
bool report_failures(const std::vector<Outcome<T>>& outcomes, const std::vector<fs::path>& inputs, bool skip_errors,
                     std::ostream& log) {
    bool failed = false;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].value) continue;
        failed = true;
        log << (skip_errors ? "warning: skipping " : "error: ") << inputs[i].string() << ": " << outcomes[i].error
            << '\n';
    }
    return !failed || skip_errors;
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

} // namespace

std::vector<fs::path> list_inputs(const fs::path& path, const std::vector<std::string>& extensions) {
    std::error_code ec;
    if (fs::is_regular_file(path, ec)) return {path};
    if (!fs::is_directory(path, ec)) throw Error(ErrorKind::Io, "no such file or directory: " + path.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower(entry.path().extension().string());
        if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Mesh load_mesh_file(const fs::path& path, const SerializerOptions& options) {
    if (lower(path.extension().string()) == ".txt") {
        return dequantize(from_text(read_text_file(path), ParseMode::Tolerant, options), options.max_coord);
    }
    return read_obj_file(path);
}

// ---------------------------------------------------------------------------
// serialize

int run_serialize(const SerializeArgs& args, const PipelineConfig& config, std::ostream& log) {
    std::vector<fs::path> inputs;
    try {
        inputs = list_inputs(args.input, {".obj"});
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    if (inputs.empty()) {
        log << "error: no .obj files in " << args.input.string() << '\n';
        return kExitInputError;
    }

    struct Result {
        bool accepted = false;
        std::string detail;
        std::string text;
    };
    const SerializerOptions ser = config.serializer_options();
    const auto outcomes = run_items<Result>(inputs, config.jobs, [&](std::size_t, const fs::path& path) {
        const Mesh mesh = read_obj_file(path);
        Result r;
        if (!face_budget_filter(mesh, config.max_faces)) {
            r.detail = "faces=" + std::to_string(mesh.num_faces()) + " > max_faces=" + std::to_string(config.max_faces);
            return r;
        }
        const QuantizedMesh q = quantize(normalize_to_unit_cube(mesh), ser);
        const MeshText mt = to_text(q, ser);
        r.detail = "vertices=" + std::to_string(q.vertices.size()) + " faces=" + std::to_string(q.faces.size()) +
                   " tokens=" + std::to_string(mt.token_estimate);
        if (mt.token_estimate > config.token_budget) {
            r.detail += " > budget=" + std::to_string(config.token_budget);
            return r;
        }
        r.accepted = true;
        r.text = mt.text;
        return r;
    });
    if (!report_failures(outcomes, inputs, args.skip_errors, log)) return kExitInputError;

    const bool single_file = inputs.size() == 1 && fs::is_regular_file(args.input) && !fs::is_directory(args.output);
    std::size_t accepted = 0, rejected = 0, failed = 0;
    try {
        if (!single_file) ensure_directory(args.output);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto& o = outcomes[i];
            if (!o.value) {
                ++failed;
                continue;
            }
            if (!o.value->accepted) {
                ++rejected;
                log << "reject " << inputs[i].filename().string() << ' ' << o.value->detail << '\n';
                continue;
            }
            ++accepted;
            const fs::path out = single_file ? args.output : args.output / (mesh_id(inputs[i]) + ".txt");
            write_text_file(out, o.value->text);
            log << "accept " << inputs[i].filename().string() << ' ' << o.value->detail << '\n';
        }
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    log << "serialized " << accepted << ", rejected " << rejected << ", failed " << failed << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// decompose

int run_decompose(const DecomposeArgs& args, const PipelineConfig& config, std::ostream& log) {
    std::vector<fs::path> inputs;
    try {
        inputs = list_inputs(args.input, {".obj"});
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    if (inputs.empty()) {
        log << "error: no .obj files in " << args.input.string() << '\n';
        return kExitInputError;
    }

    struct Result {
        PrimitiveSet pset;
        std::string mode;
        std::uint64_t seed = 0;
    };
    const DecomposeOptions options = config.decompose_options();
    const auto outcomes = run_items<Result>(inputs, config.jobs, [&](std::size_t, const fs::path& path) {
        const Mesh mesh = read_obj_file(path);
        const std::string id = mesh_id(path);
        Result r;
        r.seed = derive_seed(config.seed, id);
        if (args.labels_dir) {
            fs::path label_file = *args.labels_dir / (id + ".labels.json");
            if (!fs::exists(label_file)) label_file = *args.labels_dir / (id + ".labels.tsv");
            if (!fs::exists(label_file)) throw Error(ErrorKind::Io, "no label file for '" + id + "'");
            r.pset = ingest_semantic_labels(mesh, read_label_file(label_file));
            r.mode = "semantic";
        } else {
            r.pset = knn_decompose(mesh, r.seed, options);
            r.mode = "knn";
        }
        return r;
    });
    if (!report_failures(outcomes, inputs, args.skip_errors, log)) return kExitInputError;

    json meshes = json::array();
    try {
        ensure_directory(args.output_dir);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (!outcomes[i].value) continue;
            const Result& r = *outcomes[i].value;
            const std::string id = mesh_id(inputs[i]);
            json parts = json::array();
            for (std::uint32_t c = 0; c < r.pset.n_clusters; ++c) {
                const std::string file = id + ".part" + std::to_string(c) + ".obj";
                write_obj_file(extract_primitive(r.pset, c), args.output_dir / file);
                json part = {{"cluster", c}, {"file", file}, {"faces", cluster_faces(r.pset, c)}};
                if (!r.pset.names.empty()) part["name"] = r.pset.names[c];
                parts.push_back(std::move(part));
            }
            meshes.push_back({{"id", id},
                              {"source", fs::absolute(inputs[i]).lexically_normal().string()},
                              {"mode", r.mode},
                              {"seed", r.seed},
                              {"n_vertices", r.pset.parent.num_vertices()},
                              {"n_faces", r.pset.parent.num_faces()},
                              {"n_clusters", r.pset.n_clusters},
                              {"labels", r.pset.labels},
                              {"names", r.pset.names},
                              {"parts", std::move(parts)}});
            log << "decomposed " << inputs[i].filename().string() << " faces=" << r.pset.parent.num_faces()
                << " clusters=" << r.pset.n_clusters << " mode=" << r.mode << '\n';
        }
        write_json(args.output_dir / "manifest.json", {{"version", 1}, {"config", to_json(config)}, {"meshes", meshes}});
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    log << "decomposed " << meshes.size() << " of " << inputs.size() << " meshes\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// build-sft

namespace {

struct ManifestEntry {
    std::string id;
    fs::path source;
    std::vector<std::uint32_t> labels;
    std::uint32_t n_clusters = 0;
    std::vector<std::string> names;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    std::vector<ManifestEntry> out;
    try {
        for (const auto& m : doc.at("meshes")) {
            ManifestEntry e;
            e.id = m.at("id").get<std::string>();
            e.source = m.at("source").get<std::string>();
            e.labels = m.at("labels").get<std::vector<std::uint32_t>>();
            e.n_clusters = m.at("n_clusters").get<std::uint32_t>();
            e.names = m.value("names", std::vector<std::string>{});
            out.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": malformed manifest: " + e.what());
    }
    return out;
}

struct TaskOutput {
    std::vector<SftSample> samples;
    std::map<std::string, std::size_t> rejects;
};

using MeshOutput = std::map<TaskKind, TaskOutput>;

bool needs_captions(TaskKind t) { return t == TaskKind::Understanding || t == TaskKind::Generation; }

MeshOutput build_for_mesh(const ManifestEntry& entry, const PipelineConfig& config, const CaptionTable& captions) {
    const Mesh raw = read_obj_file(entry.source);
    if (raw.num_faces() != entry.labels.size()) {
        throw Error(ErrorKind::Validation, "'" + entry.id + "' has " + std::to_string(raw.num_faces()) +
                                               " faces but the manifest labels " + std::to_string(entry.labels.size()));
    }
    const std::uint64_t mesh_seed = derive_seed(config.seed, entry.id);

    Mesh prepared = normalize_to_unit_cube(raw);
    std::optional<AugmentationRecord> record;
    if (config.augment) {
        auto [mesh, rec] = augment(prepared, derive_seed(mesh_seed, "augment"), config.augment_options());
        prepared = std::move(mesh);
        record = rec;
    }
    PrimitiveSet pset{prepared, entry.labels, entry.n_clusters, entry.names};
    validate(pset);
    // Vertex-face samples normalize each primitive on its own grid.
    const PrimitiveSet raw_set{raw, entry.labels, entry.n_clusters, entry.names};

    SftOptions base;
    base.serializer = config.serializer_options();
    base.token_budget = config.token_budget;
    base.mesh_id = entry.id;
    base.include_part_names = config.include_part_names;

    MeshOutput out;
    for (TaskKind task : config.tasks) {
        TaskOutput& to = out[task];
        SftOptions opts = base;
        opts.seed = derive_seed(mesh_seed, to_string(task));
        auto attempt = [&](auto&& build) {
            try {
                to.samples.push_back(build());
            } catch (const Error& e) {
                ++to.rejects[to_string(e.kind())];
            }
        };

        if (task == TaskKind::VertexToFace) {
            for (std::uint32_t c = 0; c < pset.n_clusters; ++c) {
                attempt([&] {
                    SftOptions part_opts = opts;
                    part_opts.seed = derive_seed(opts.seed, c);
                    Mesh part = normalize_to_unit_cube(extract_primitive(raw_set, c));
                    std::optional<AugmentationRecord> part_record;
                    if (config.augment) {
                        auto [m, rec] = augment(part, derive_seed(part_opts.seed, "augment"), config.augment_options());
                        part = std::move(m);
                        part_record = rec;
                    }
                    SftSample s = build_vertex_face(part, part_opts);
                    s.meta.part = c;
                    s.meta.augmentation = part_record;
                    return s;
                });
            }
            continue;
        }

        if (!face_budget_filter(prepared, config.max_faces)) {
            ++to.rejects["face budget"];
            continue;
        }
        std::string caption;
        if (needs_captions(task)) {
            const auto it = captions.find(entry.id);
            if (it == captions.end() || it->second.empty()) {
                ++to.rejects["missing caption"];
                continue;
            }
            caption = it->second.front();
        }
        attempt([&] {
            SftSample s;
            switch (task) {
            case TaskKind::Assembly: s = build_assembly(pset, derive_seed(mesh_seed, "shuffle"), opts); break;
            case TaskKind::Understanding: s = build_understanding(prepared, caption, opts); break;
            case TaskKind::Generation: s = build_generation(prepared, caption, opts); break;
            case TaskKind::VertexToFace: break;
            }
            s.meta.augmentation = record;
            return s;
        });
    }
    return out;
}

} // namespace

int run_build_sft(const BuildSftArgs& args, const PipelineConfig& config, std::ostream& log) {
    const bool wants_captions = std::any_of(config.tasks.begin(), config.tasks.end(), needs_captions);
    if (wants_captions && !args.captions) {
        log << "error: understanding/generation tasks need a caption table (--captions)\n";
        return kExitConfigError;
    }
    const fs::path replay_path = args.replay ? *args.replay : fs::path(config.replay_path);

    std::vector<ManifestEntry> entries;
    CaptionTable captions;
    std::vector<SftSample> replay;
    try {
        entries = read_manifest(args.manifest);
        if (args.captions) captions = read_caption_file(*args.captions);
        if (!replay_path.empty()) replay = read_jsonl(replay_path);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    if (entries.empty()) {
        log << "error: manifest lists no meshes\n";
        return kExitInputError;
    }

    std::vector<Outcome<MeshOutput>> outcomes(entries.size());
    parallel_for(entries.size(), config.jobs, [&](std::size_t i) {
        try {
            outcomes[i].value.emplace(build_for_mesh(entries[i], config, captions));
        } catch (const std::exception& e) {
            outcomes[i].error = e.what();
        }
    });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!outcomes[i].value) {
            log << "error: " << entries[i].id << ": " << outcomes[i].error << '\n';
            return kExitInputError;
        }
    }

    const SerializerOptions ser = config.serializer_options();
    json task_summary = json::object();
    std::vector<SftSample> current;
    try {
        ensure_directory(args.output_dir);
        for (TaskKind task : config.tasks) {
            std::vector<SftSample> samples;
            std::map<std::string, std::size_t> rejects;
            for (const auto& o : outcomes) {
                const TaskOutput& to = o.value->at(task);
                samples.insert(samples.end(), to.samples.begin(), to.samples.end());
                for (const auto& [reason, n] : to.rejects) rejects[reason] += n;
            }
            for (const auto& s : samples) {
                verify_sample(s, ser);
                if (sample_tokens(s) > config.token_budget) {
                    throw Error(ErrorKind::Budget, "emitted sample exceeds the token budget");
                }
            }
            const std::string name(to_string(task));
            emit_jsonl(samples, args.output_dir / (name + ".jsonl"));
            std::size_t rejected = 0;
            for (const auto& [reason, n] : rejects) rejected += n;
            task_summary[name] = {{"emitted", samples.size()}, {"rejected", rejected}, {"reject_reasons", rejects}};
            log << name << ": emitted " << samples.size() << ", rejected " << rejected;
            for (const auto& [reason, n] : rejects) log << " [" << reason << ": " << n << ']';
            log << '\n';
            current.insert(current.end(), samples.begin(), samples.end());
        }

        json mixing = nullptr;
        if (!replay_path.empty()) {
            if (current.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to mix: no samples were emitted");
            const MixedStream mixed = mix_datasets(current, replay, config.replay_prob, derive_seed(config.seed, "mix"));
            emit_jsonl(mixed.samples, args.output_dir / "mixed.jsonl");
            mixing = {{"replay_source", replay_path.string()},
                      {"replay_prob", config.replay_prob},
                      {"records", mixed.samples.size()},
                      {"replay_records", mixed.replay_count()},
                      {"replay_fraction", mixed.replay_fraction()}};
            log << "mixed " << mixed.samples.size() << " records, replay fraction " << mixed.replay_fraction() << '\n';
        }
        write_json(args.output_dir / "summary.json",
                   {{"config", to_json(config)}, {"meshes", entries.size()}, {"tasks", task_summary}, {"mixing", mixing}});
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

int evaluate_captions(const EvaluateArgs& args, const PipelineConfig& config, std::ostream& log) {
    CaptionTable gen, ref;
    try {
        gen = read_caption_file(args.generated);
        ref = read_caption_file(args.reference);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    json pairs = json::array();
    double bleu_sum = 0.0, rouge_sum = 0.0;
    for (const auto& [id, candidates] : gen) {
        const auto it = ref.find(id);
        if (it == ref.end() || candidates.empty()) continue;
        try {
            const double b = bleu1(candidates.front(), it->second);
            double r = 0.0;
            for (const auto& reference : it->second) r = std::max(r, rouge_l(candidates.front(), reference, config.rouge_beta));
            pairs.push_back({{"id", id}, {"bleu1", b}, {"rouge_l", r}});
            bleu_sum += b;
            rouge_sum += r;
        } catch (const Error& e) {
            log << "warning: skipping caption '" << id << "': " << e.what() << '\n';
        }
    }
    if (pairs.empty()) {
        log << "error: no caption ids shared by both tables\n";
        return kExitInputError;
    }
    const double n = static_cast<double>(pairs.size());
    const json report = {{"mode", "captions"},
                         {"n_pairs", pairs.size()},
                         {"mean_bleu1", bleu_sum / n},
                         {"mean_rouge_l", rouge_sum / n},
                         {"rouge_beta", config.rouge_beta},
                         {"pairs", pairs},
                         {"config", to_json(config)}};
    try {
        write_json(args.output_json, report);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    log << "captions: n=" << pairs.size() << " bleu1=" << bleu_sum / n << " rouge_l=" << rouge_sum / n << '\n';
    return kExitOk;
}

} // namespace

int run_evaluate(const EvaluateArgs& args, const PipelineConfig& config, std::ostream& log) {
    if (args.captions) return evaluate_captions(args, config, log);

    std::vector<fs::path> gen_files, ref_files;
    try {
        gen_files = list_inputs(args.generated, {".obj", ".txt"});
        ref_files = list_inputs(args.reference, {".obj", ".txt"});
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    if (gen_files.empty() || ref_files.empty()) {
        log << "error: " << (gen_files.empty() ? args.generated : args.reference).string() << " has no meshes\n";
        return kExitInputError;
    }

    const SerializerOptions ser = config.serializer_options();
    auto load = [&](const std::vector<fs::path>& files) {
        return run_items<PointCloud>(files, config.jobs, [&](std::size_t i, const fs::path& path) {
            return mesh_to_cloud(normalize_to_unit_cube(load_mesh_file(path, ser)), config.cloud_points,
                                 derive_seed(config.seed, static_cast<std::uint64_t>(i)));
        });
    };
    auto collect = [&](const std::vector<fs::path>& files, std::vector<PointCloud>& clouds, json& names) {
        const auto outcomes = load(files);
        if (!report_failures(outcomes, files, args.skip_errors, log)) return false;
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (!outcomes[i].value) continue;
            clouds.push_back(*outcomes[i].value);
            names.push_back(files[i].filename().string());
        }
        return true;
    };
    std::vector<PointCloud> gen, ref;
    json gen_names = json::array(), ref_names = json::array();
    if (!collect(gen_files, gen, gen_names) || !collect(ref_files, ref, ref_names)) return kExitInputError;
    if (gen.empty() || ref.empty() || gen.size() + ref.size() < 2) {
        log << "error: not enough valid meshes to evaluate\n";
        return kExitInputError;
    }

    MetricReport report = evaluate_clouds(gen, ref, config.cd_variant, config.jobs);
    report.seed = config.seed;
    json out = {{"mmd", report.mmd},
                {"cov", report.cov},
                {"one_nna", report.one_nna},
                {"n_gen", report.n_gen},
                {"n_ref", report.n_ref},
                {"p", report.p},
                {"seed", report.seed},
                {"cd_variant", std::string(to_string(report.cd_variant))},
                {"gen_files", gen_names},
                {"ref_files", ref_names},
                {"config", to_json(config)}};
    if (args.audit) {
        json rows = json::array();
        for (std::size_t r = 0; r < report.distances.rows; ++r) {
            rows.push_back(std::vector<double>(report.distances.values.begin() + static_cast<std::ptrdiff_t>(r * report.distances.cols),
                                               report.distances.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * report.distances.cols)));
        }
        out["distance_matrix"] = std::move(rows);
    }
    try {
        write_json(args.output_json, out);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    log << "mmd=" << report.mmd << " cov=" << report.cov << " one_nna=" << report.one_nna << " (n_gen=" << report.n_gen
        << ", n_ref=" << report.n_ref << ", p=" << report.p << ")\n";
    return kExitOk;
}

} // namespace meshseq
