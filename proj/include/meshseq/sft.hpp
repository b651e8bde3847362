#pragma once

// Supervised fine-tuning records for the four mesh tasks, budget checks,
// geometric augmentation, replay mixing and JSONL I/O.
//
// Builders expect meshes already inside [0,1]^3 (normalize_to_unit_cube,
// optionally followed by augment). Primitive sets are quantized on their
// parent's grid, so part coordinates line up with the assembled mesh.

#include "meshseq/decomposer.hpp"
#include "meshseq/mesh.hpp"
#include "meshseq/serializer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace meshseq {

enum class TaskKind { VertexToFace, Assembly, Understanding, Generation };

std::string_view to_string(TaskKind task);
/// Accepts the canonical names plus the short forms v2f, asm, und, gen.
std::optional<TaskKind> parse_task(std::string_view name);

struct AugmentationRecord {
    double scale = 1.0;
    Vec3 translation;

    friend bool operator==(const AugmentationRecord&, const AugmentationRecord&) = default;
};

struct SampleMeta {
    std::string mesh_id;
    std::uint64_t seed = 0;
    std::optional<AugmentationRecord> augmentation;
    std::optional<std::uint32_t> part;  // cluster id when the payload is one primitive

    friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

struct SftSample {
    TaskKind task = TaskKind::VertexToFace;
    std::string instruction;
    std::string input;
    std::string output;
    SampleMeta meta;

    friend bool operator==(const SftSample&, const SftSample&) = default;
};

struct SftOptions {
    SerializerOptions serializer;
    std::size_t token_budget = 8192;
    std::uint64_t seed = 0;          // instruction template choice
    std::string mesh_id;
    bool include_part_names = true;  // "# part k: name" headers in assembly input
};

/// Fixed paraphrase pool for a task's instruction.
std::span<const std::string_view> instruction_pool(TaskKind task);

/// estimate_tokens over instruction, input and output joined by '\n'.
std::size_t sample_tokens(const SftSample& sample);

/// Input is the vertex block, output the face block of the canonical text.
SftSample build_vertex_face(const Mesh& mesh, const SftOptions& options = {});

/// Input is every primitive's canonical text, shuffled by shuffle_seed, each
/// preceded by a "# part k" line; output is the parent's canonical text.
SftSample build_assembly(const PrimitiveSet& pset, std::uint64_t shuffle_seed, const SftOptions& options = {});

SftSample build_understanding(const Mesh& mesh, std::string_view caption, const SftOptions& options = {});
SftSample build_generation(const Mesh& mesh, std::string_view caption, const SftOptions& options = {});

struct AssemblyPart {
    std::size_t index = 0;  // 1-based position in the prompt
    std::string name;
    std::string text;       // mesh text of the part
};

/// Re-parses every mesh payload of the sample in strict mode; for
/// vertex_to_face the input and output are parsed joined. Throws on failure.
void verify_sample(const SftSample& sample, const SerializerOptions& options = {});

/// Inverse of the assembly input layout.
std::vector<AssemblyPart> split_assembly_parts(std::string_view input, const SerializerOptions& options = {});

struct AugmentOptions {
    double scale_min = 0.8;
    double scale_max = 1.0;
};

/// Uniform scale about the bbox center, then a translation drawn inside the
/// remaining slack so the result stays in [0,1]^3.
std::pair<Mesh, AugmentationRecord> augment(const Mesh& mesh, std::uint64_t seed, const AugmentOptions& options = {});
Mesh apply_augmentation(const Mesh& mesh, const AugmentationRecord& record);

/// Accept iff 0 < faces <= max_faces.
bool face_budget_filter(const Mesh& mesh, std::size_t max_faces = 800);

struct MixedStream {
    std::vector<SftSample> samples;
    std::vector<bool> from_replay;

    std::size_t replay_count() const;
    double replay_fraction() const;
};

/// One output record per current record: with probability replay_prob it is
/// replaced by a uniformly drawn replay record.
MixedStream mix_datasets(std::span<const SftSample> current, std::span<const SftSample> replay, double replay_prob,
                         std::uint64_t seed);

std::string to_json_line(const SftSample& sample);
SftSample from_json_line(std::string_view line);
std::size_t write_jsonl(std::span<const SftSample> samples, std::ostream& out);
std::size_t emit_jsonl(std::span<const SftSample> samples, const std::filesystem::path& path);
std::vector<SftSample> read_jsonl(const std::filesystem::path& path);

/// mesh id -> captions (several lines with the same id add references).
using CaptionTable = std::map<std::string, std::vector<std::string>>;

/// `mesh_id<TAB>caption` per line.
CaptionTable parse_caption_tsv(std::string_view text);
/// {"id": "caption"} or {"id": ["caption", ...]}.
CaptionTable parse_caption_json(std::string_view text);
CaptionTable read_caption_file(const std::filesystem::path& path);

} // namespace meshseq
