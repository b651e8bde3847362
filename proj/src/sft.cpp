#include "meshseq/sft.hpp"

#include "meshseq/error.hpp"
#include "meshseq/random.hpp"
#include "meshseq/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace meshseq {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 10> kVertexFacePool = {
    "Given the following mesh vertices, predict the faces that connect them.",
    "Here is a list of vertices of a 3D mesh. Output the face list.",
    "Complete the mesh by generating faces for these vertices.",
    "The vertices of a triangle mesh are listed below. Which faces connect them?",
    "Predict the triangle connectivity for the vertex list below.",
    "Below are quantized vertex coordinates. Write the corresponding OBJ face lines.",
    "Infer the mesh topology: list the faces for the given vertices.",
    "Generate the face records that complete this partial OBJ mesh.",
    "These vertices belong to a 3D object. Provide its triangular faces.",
    "Using the vertices below, output the faces of the mesh in OBJ format.",
};

constexpr std::array<std::string_view, 10> kAssemblyPool = {
    "Assemble the following mesh parts into one complete mesh.",
    "Here are several parts of a 3D mesh. Combine them into the full mesh.",
    "Reconstruct the complete mesh from these primitive parts.",
    "The parts below come from a single object. Output the assembled mesh.",
    "Merge these local mesh pieces into a single OBJ mesh.",
    "Given the mesh components below, produce the whole mesh.",
    "Put these mesh parts together and write out the full mesh.",
    "Combine the listed sub-meshes into one mesh with shared vertices.",
    "These are pieces of one 3D model. Reassemble them into a complete mesh.",
    "Build the full mesh from the following partial meshes.",
};

constexpr std::array<std::string_view, 10> kUnderstandingPool = {
    "Describe the 3D object represented by this mesh.",
    "What does this mesh depict? Give a short description.",
    "Write a caption for the following 3D mesh.",
    "Here is a mesh in OBJ format. Describe what it is.",
    "Briefly describe the shape of the object below.",
    "Look at this mesh and tell me what object it represents.",
    "Provide a concise description of this 3D model.",
    "Identify and describe the object encoded by this mesh.",
    "Summarize the geometry of this mesh in one sentence.",
    "Give a natural-language description of the following mesh.",
};

constexpr std::array<std::string_view, 10> kGenerationPool = {
    "Create a 3D mesh of the following description.",
    "Generate a mesh in OBJ format for this description.",
    "Build a 3D model that matches the text below.",
    "Produce the OBJ mesh of the object described below.",
    "Model the following object as a triangle mesh.",
    "Write an OBJ mesh that depicts this description.",
    "Design a 3D mesh based on this text.",
    "Generate the vertices and faces of a mesh for the description below.",
    "Please create a 3D mesh of the object described here.",
    "Turn this description into a 3D mesh in OBJ format.",
};

std::string_view pick_instruction(TaskKind task, std::uint64_t seed) {
    const auto pool = instruction_pool(task);
    Rng rng(derive_seed(seed, to_string(task)));
    return pool[rng.index(pool.size())];
}

void enforce_budget(const SftSample& sample, std::size_t budget) {
    const std::size_t tokens = sample_tokens(sample);
    if (tokens > budget) {
        throw Error(ErrorKind::Budget, std::string(to_string(sample.task)) + " sample for '" + sample.meta.mesh_id +
                                           "' needs " + std::to_string(tokens) + " tokens, budget " +
                                           std::to_string(budget));
    }
}

SftSample start_sample(TaskKind task, const SftOptions& options) {
    SftSample s;
    s.task = task;
    s.instruction = std::string(pick_instruction(task, options.seed));
    s.meta.mesh_id = options.mesh_id;
    s.meta.seed = options.seed;
    return s;
}

QuantizedMesh quantize_for_sample(const Mesh& mesh, const SerializerOptions& options) {
    QuantizedMesh q = quantize(mesh, options);
    if (q.faces.empty()) throw Error(ErrorKind::Degenerate, "every face collapses under quantization");
    return q;
}

std::string check_caption(std::string_view caption) {
    if (std::all_of(caption.begin(), caption.end(), is_space)) throw Error(ErrorKind::InvalidArgument, "empty caption");
    return std::string(caption);
}

std::string sanitize_name(std::string_view name) {
    std::string out(name);
    std::replace_if(out.begin(), out.end(), is_space, '_');
    return out;
}

json meta_to_json(const SampleMeta& meta) {
    json j = {{"mesh_id", meta.mesh_id}, {"seed", meta.seed}};
    if (meta.augmentation) {
        const auto& a = *meta.augmentation;
        j["augmentation"] = {{"scale", a.scale}, {"translation", {a.translation.x, a.translation.y, a.translation.z}}};
    }
    if (meta.part) j["part"] = *meta.part;
    return j;
}

SampleMeta meta_from_json(const json& j) {
    SampleMeta meta;
    meta.mesh_id = j.value("mesh_id", std::string{});
    meta.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("augmentation")) {
        const auto& a = j.at("augmentation");
        const auto& t = a.at("translation");
        meta.augmentation = AugmentationRecord{a.at("scale").get<double>(),
                                               {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()}};
    }
    if (j.contains("part")) meta.part = j.at("part").get<std::uint32_t>();
    return meta;
}

} // namespace

std::string_view to_string(TaskKind task) {
    switch (task) {
    case TaskKind::VertexToFace: return "vertex_to_face";
    case TaskKind::Assembly: return "assembly";
    case TaskKind::Understanding: return "understanding";
    case TaskKind::Generation: return "generation";
    }
    return "unknown";
}

std::optional<TaskKind> parse_task(std::string_view name) {
    if (name == "vertex_to_face" || name == "v2f") return TaskKind::VertexToFace;
    if (name == "assembly" || name == "asm") return TaskKind::Assembly;
    if (name == "understanding" || name == "und") return TaskKind::Understanding;
    if (name == "generation" || name == "gen") return TaskKind::Generation;
    return std::nullopt;
}

std::span<const std::string_view> instruction_pool(TaskKind task) {
    switch (task) {
    case TaskKind::VertexToFace: return kVertexFacePool;
    case TaskKind::Assembly: return kAssemblyPool;
    case TaskKind::Understanding: return kUnderstandingPool;
    case TaskKind::Generation: return kGenerationPool;
    }
    return {};
}

std::size_t sample_tokens(const SftSample& sample) {
    return estimate_tokens(sample.instruction) + estimate_tokens(sample.input) + estimate_tokens(sample.output) + 2;
}

SftSample build_vertex_face(const Mesh& mesh, const SftOptions& options) {
    const QuantizedMesh q = quantize_for_sample(mesh, options.serializer);
    SftSample s = start_sample(TaskKind::VertexToFace, options);
    s.input = vertex_text(q, options.serializer);
    s.output = face_text(q, options.serializer);
    enforce_budget(s, options.token_budget);
    return s;
}

SftSample build_assembly(const PrimitiveSet& pset, std::uint64_t shuffle_seed, const SftOptions& options) {
    validate(pset);
    const std::string& sep = options.serializer.separator;

    std::vector<std::uint32_t> order(pset.n_clusters);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.index(i)]);
    }

    SftSample s = start_sample(TaskKind::Assembly, options);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::uint32_t cluster = order[k];
        const QuantizedMesh part = quantize_for_sample(extract_primitive(pset, cluster), options.serializer);
        if (k > 0) s.input += sep;
        s.input += "# part " + std::to_string(k + 1);
        if (options.include_part_names && !pset.names.empty()) {
            s.input += ": " + sanitize_name(pset.names[cluster]);
        }
        s.input += sep;
        s.input += to_text(part, options.serializer).text;
    }
    s.output = to_text(quantize_for_sample(pset.parent, options.serializer), options.serializer).text;
    enforce_budget(s, options.token_budget);
    return s;
}

SftSample build_understanding(const Mesh& mesh, std::string_view caption, const SftOptions& options) {
    std::string text = check_caption(caption);
    SftSample s = start_sample(TaskKind::Understanding, options);
    s.input = to_text(quantize_for_sample(mesh, options.serializer), options.serializer).text;
    s.output = std::move(text);
    enforce_budget(s, options.token_budget);
    return s;
}

SftSample build_generation(const Mesh& mesh, std::string_view caption, const SftOptions& options) {
    std::string text = check_caption(caption);
    SftSample s = start_sample(TaskKind::Generation, options);
    s.input = std::move(text);
    s.output = to_text(quantize_for_sample(mesh, options.serializer), options.serializer).text;
    enforce_budget(s, options.token_budget);
    return s;
}

void verify_sample(const SftSample& sample, const SerializerOptions& options) {
    switch (sample.task) {
    case TaskKind::VertexToFace:
        from_text(sample.input + options.separator + sample.output, ParseMode::Strict, options);
        break;
    case TaskKind::Assembly:
        for (const auto& part : split_assembly_parts(sample.input, options)) {
            from_text(part.text, ParseMode::Strict, options);
        }
        from_text(sample.output, ParseMode::Strict, options);
        break;
    case TaskKind::Understanding:
        from_text(sample.input, ParseMode::Strict, options);
        break;
    case TaskKind::Generation:
        from_text(sample.output, ParseMode::Strict, options);
        break;
    }
}

std::vector<AssemblyPart> split_assembly_parts(std::string_view input, const SerializerOptions& options) {
    const std::string_view sep = options.separator;
    constexpr std::string_view kHeader = "# part ";

    std::vector<std::size_t> starts;
    for (std::size_t pos = input.find(kHeader); pos != std::string_view::npos; pos = input.find(kHeader, pos + 1)) {
        if (pos == 0 || (pos >= sep.size() && input.substr(pos - sep.size(), sep.size()) == sep)) starts.push_back(pos);
    }
    if (starts.empty() || starts.front() != 0) {
        throw Error(ErrorKind::Parse, "assembly input must start with a part header", 0);
    }

    std::vector<AssemblyPart> parts;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        std::size_t pos = starts[i] + kHeader.size();
        AssemblyPart part;
        const std::size_t digits_end = input.find_first_not_of("0123456789", pos);
        const auto [ptr, ec] = std::from_chars(input.data() + pos, input.data() + digits_end, part.index);
        if (ec != std::errc{} || digits_end == pos) throw Error(ErrorKind::Parse, "bad part number", pos);
        pos = digits_end;
        if (input.substr(pos, 2) == ": ") {
            pos += 2;
            std::size_t name_end = pos;
            while (name_end < input.size() && !is_space(input[name_end])) ++name_end;
            part.name = std::string(input.substr(pos, name_end - pos));
            pos = name_end;
        }
        if (input.substr(pos, sep.size()) != sep) throw Error(ErrorKind::Parse, "expected separator after part header", pos);
        pos += sep.size();
        const std::size_t end = i + 1 < starts.size() ? starts[i + 1] - sep.size() : input.size();
        if (end < pos) throw Error(ErrorKind::Parse, "empty part", pos);
        part.text = std::string(input.substr(pos, end - pos));
        parts.push_back(std::move(part));
    }
    return parts;
}

std::pair<Mesh, AugmentationRecord> augment(const Mesh& mesh, std::uint64_t seed, const AugmentOptions& options) {
    const BoundingBox box = bounding_box(mesh);
    const Vec3 c = box.center();
    Rng rng(seed);
    AugmentationRecord rec;
    rec.scale = rng.uniform(options.scale_min, options.scale_max);
    for (std::size_t a = 0; a < 3; ++a) {
        const double lo = c[a] + (box.min[a] - c[a]) * rec.scale;
        const double hi = c[a] + (box.max[a] - c[a]) * rec.scale;
        const double t_min = -lo;
        const double t_max = 1.0 - hi;
        rec.translation[a] = t_max > t_min ? rng.uniform(t_min, t_max) : 0.0;
    }
    return {apply_augmentation(mesh, rec), rec};
}

Mesh apply_augmentation(const Mesh& mesh, const AugmentationRecord& record) {
    const Vec3 c = bounding_box(mesh).center();
    Vec3 offset;
    for (std::size_t a = 0; a < 3; ++a) offset[a] = c[a] * (1.0 - record.scale) + record.translation[a];
    Mesh out = mesh;
    for (auto& v : out.vertices) {
        for (std::size_t a = 0; a < 3; ++a) v[a] = std::clamp(v[a] * record.scale + offset[a], 0.0, 1.0);
    }
    return out;
}

bool face_budget_filter(const Mesh& mesh, std::size_t max_faces) {
    return mesh.num_faces() > 0 && mesh.num_faces() <= max_faces;
}

std::size_t MixedStream::replay_count() const {
    return static_cast<std::size_t>(std::count(from_replay.begin(), from_replay.end(), true));
}

double MixedStream::replay_fraction() const {
    return samples.empty() ? 0.0 : static_cast<double>(replay_count()) / static_cast<double>(samples.size());
}

MixedStream mix_datasets(std::span<const SftSample> current, std::span<const SftSample> replay, double replay_prob,
                         std::uint64_t seed) {
    if (!(replay_prob >= 0.0 && replay_prob <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "replay probability " + std::to_string(replay_prob) + " not in [0,1]");
    }
    if (current.empty()) throw Error(ErrorKind::InvalidArgument, "current stream is empty");
    if (replay.empty() && replay_prob > 0.0) throw Error(ErrorKind::InvalidArgument, "replay stream is empty");

    MixedStream out;
    out.samples.reserve(current.size());
    out.from_replay.reserve(current.size());
    Rng rng(seed);
    for (const auto& record : current) {
        // uniform() < 1 always, so replay_prob == 1 always replays and 0 never does.
        if (rng.uniform() < replay_prob) {
            out.samples.push_back(replay[rng.index(replay.size())]);
            out.from_replay.push_back(true);
        } else {
            out.samples.push_back(record);
            out.from_replay.push_back(false);
        }
    }
    return out;
}

std::string to_json_line(const SftSample& sample) {
    const json j = {{"task", to_string(sample.task)},
                    {"instruction", sample.instruction},
                    {"input", sample.input},
                    {"output", sample.output},
                    {"meta", meta_to_json(sample.meta)}};
    return j.dump();
}

SftSample from_json_line(std::string_view line) {
    try {
        const json j = json::parse(line);
        SftSample s;
        const auto task = parse_task(j.at("task").get<std::string>());
        if (!task) throw Error(ErrorKind::Parse, "unknown task '" + j.at("task").get<std::string>() + "'");
        s.task = *task;
        s.instruction = j.at("instruction").get<std::string>();
        s.input = j.at("input").get<std::string>();
        s.output = j.at("output").get<std::string>();
        if (j.contains("meta")) s.meta = meta_from_json(j.at("meta"));
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("bad JSONL record: ") + e.what());
    }
}

std::size_t write_jsonl(std::span<const SftSample> samples, std::ostream& out) {
    for (const auto& s : samples) out << to_json_line(s) << '\n';
    return samples.size();
}

std::size_t emit_jsonl(std::span<const SftSample> samples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    const std::size_t n = write_jsonl(samples, out);
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
    return n;
}

std::vector<SftSample> read_jsonl(const std::filesystem::path& path) {
    std::vector<SftSample> out;
    std::size_t line_no = 0;
    for_each_line(read_text_file(path), [&](std::string_view line) {
        ++line_no;
        if (line.empty()) return;
        try {
            out.push_back(from_json_line(line));
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    });
    return out;
}

CaptionTable parse_caption_tsv(std::string_view text) {
    CaptionTable table;
    std::size_t line_no = 0;
    for_each_line(text, [&](std::string_view line) {
        ++line_no;
        if (line.empty()) return;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected mesh_id<TAB>caption", line_no);
        }
        table[std::string(line.substr(0, tab))].emplace_back(line.substr(tab + 1));
    });
    return table;
}

CaptionTable parse_caption_json(std::string_view text) {
    CaptionTable table;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, e.what(), e.byte);
    }
    if (!doc.is_object()) throw Error(ErrorKind::Parse, "caption JSON must be an object");
    for (const auto& [id, value] : doc.items()) {
        if (value.is_string()) {
            table[id].push_back(value.get<std::string>());
        } else if (value.is_array()) {
            for (const auto& c : value) {
                if (!c.is_string()) throw Error(ErrorKind::Parse, "caption for '" + id + "' is not a string");
                table[id].push_back(c.get<std::string>());
            }
        } else {
            throw Error(ErrorKind::Parse, "caption for '" + id + "' is not a string");
        }
    }
    return table;
}

CaptionTable read_caption_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    return path.extension() == ".json" ? parse_caption_json(text) : parse_caption_tsv(text);
}

} // namespace meshseq
