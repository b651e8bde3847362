#pragma once

// Versioned pipeline configuration. The JSON file is the single source of
// truth; command-line flags override individual fields.

#include "meshseq/metrics.hpp"
#include "meshseq/sft.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace meshseq {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kConfigEnvVar = "MESHSEQ_CONFIG";

struct PipelineConfig {
    // serializer
    int max_coord = 64;
    std::string separator = "\n";
    // budgets
    std::size_t token_budget = 8192;
    std::size_t max_faces = 800;
    // decomposition
    std::size_t min_samples = 4096;
    std::size_t samples_per_face = 8;
    std::optional<std::uint32_t> n_clusters;
    // augmentation
    bool augment = true;
    double scale_min = 0.8;
    double scale_max = 1.0;
    // sft
    std::vector<TaskKind> tasks = {TaskKind::VertexToFace, TaskKind::Assembly};
    double replay_prob = 0.3;
    bool include_part_names = true;
    // metrics
    std::size_t cloud_points = kDefaultCloudSize;
    ChamferVariant cd_variant = ChamferVariant::Squared;
    double rouge_beta = 1.2;
    // run
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string replay_path;

    SerializerOptions serializer_options() const { return {max_coord, separator}; }
    DecomposeOptions decompose_options() const { return {n_clusters, min_samples, samples_per_face}; }
    AugmentOptions augment_options() const { return {scale_min, scale_max}; }

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Throws Error(Config) naming the first out-of-range field.
void validate(const PipelineConfig& config);

nlohmann::json to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys are an Error(Config).
PipelineConfig config_from_json(const nlohmann::json& j);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

} // namespace meshseq
