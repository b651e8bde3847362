#pragma once

// Batch commands behind the `meshseq` CLI. Each returns a process exit code
// and writes a human-readable summary to `log`.

#include "meshseq/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace meshseq {

enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 1,
    kExitConfigError = 2,
};

/// Files with one of the extensions; a directory is listed (non-recursive,
/// sorted by name), a file is taken as is.
std::vector<std::filesystem::path> list_inputs(const std::filesystem::path& path,
                                               const std::vector<std::string>& extensions);

struct SerializeArgs {
    std::filesystem::path input;   // OBJ file or directory of OBJ files
    std::filesystem::path output;  // file for a single input, otherwise a directory
    bool skip_errors = false;
};
int run_serialize(const SerializeArgs& args, const PipelineConfig& config, std::ostream& log);

struct DecomposeArgs {
    std::filesystem::path input;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> labels_dir;  // <stem>.labels.tsv / .json per mesh
    bool skip_errors = false;
};
int run_decompose(const DecomposeArgs& args, const PipelineConfig& config, std::ostream& log);

struct BuildSftArgs {
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> captions;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> replay;  // overrides config.replay_path
};
int run_build_sft(const BuildSftArgs& args, const PipelineConfig& config, std::ostream& log);

struct EvaluateArgs {
    std::filesystem::path generated;  // directory of .obj / .txt meshes, or a caption table
    std::filesystem::path reference;
    std::filesystem::path output_json;
    bool captions = false;
    bool skip_errors = false;
    bool audit = false;  // include the joint distance matrix in the report
};
int run_evaluate(const EvaluateArgs& args, const PipelineConfig& config, std::ostream& log);

/// Loads a mesh from OBJ or canonical mesh text (.txt, parsed tolerantly).
Mesh load_mesh_file(const std::filesystem::path& path, const SerializerOptions& options = {});

} // namespace meshseq
