// meshseq: batch CLI for mesh text serialization, Primitive-Mesh
// decomposition, SFT dataset construction and evaluation.

#include "meshseq/config.hpp"
#include "meshseq/error.hpp"
#include "meshseq/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace meshseq;

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::size_t> max_faces;
    std::optional<std::size_t> budget;
    std::optional<std::string> tasks;
    std::optional<double> replay_prob;
    std::optional<std::size_t> points;
    std::optional<std::string> cd_variant;
    std::optional<std::uint32_t> clusters;
    bool no_augment = false;
};

PipelineConfig effective_config(const Overrides& o) {
    PipelineConfig config;
    if (o.config_path) {
        config = load_config(*o.config_path);
    } else if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
        config = load_config(env);
    }
    if (o.seed) config.seed = *o.seed;
    if (o.jobs) config.jobs = *o.jobs;
    if (o.max_faces) config.max_faces = *o.max_faces;
    if (o.budget) config.token_budget = *o.budget;
    if (o.replay_prob) config.replay_prob = *o.replay_prob;
    if (o.points) config.cloud_points = *o.points;
    if (o.clusters) config.n_clusters = *o.clusters;
    if (o.no_augment) config.augment = false;
    if (o.cd_variant) {
        const auto v = parse_chamfer_variant(*o.cd_variant);
        if (!v) throw Error(ErrorKind::Config, "unknown --cd-variant '" + *o.cd_variant + "'");
        config.cd_variant = *v;
    }
    if (o.tasks) {
        config.tasks.clear();
        std::stringstream ss(*o.tasks);
        std::string name;
        while (std::getline(ss, name, ',')) {
            const auto task = parse_task(name);
            if (!task) throw Error(ErrorKind::Config, "unknown task '" + name + "'");
            config.tasks.push_back(*task);
        }
    }
    validate(config);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"meshseq: mesh text serialization and SFT data pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config_path, std::string("Pipeline config JSON (default: $") + kConfigEnvVar + ")");
    app.add_option("--seed", o.seed, "Base seed");
    app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

    SerializeArgs ser_args;
    auto* serialize = app.add_subcommand("serialize", "OBJ file or directory -> canonical mesh text");
    serialize->add_option("input", ser_args.input, "OBJ file or directory")->required();
    serialize->add_option("output", ser_args.output, "Output file (single input) or directory")->required();
    serialize->add_flag("--skip-errors", ser_args.skip_errors, "Warn and continue on unreadable meshes");
    serialize->add_option("--max-faces", o.max_faces, "Face budget");
    serialize->add_option("--budget", o.budget, "Token budget");

    DecomposeArgs dec_args;
    std::optional<std::string> labels_dir;
    auto* decompose = app.add_subcommand("decompose", "Split meshes into Primitive-Meshes");
    decompose->add_option("input", dec_args.input, "OBJ file or directory")->required();
    decompose->add_option("output_dir", dec_args.output_dir, "Directory for part OBJs and manifest.json")->required();
    decompose->add_option("--labels", labels_dir, "Directory of <stem>.labels.tsv|json semantic label tables");
    decompose->add_option("--clusters", o.clusters, "Override the cluster count");
    decompose->add_flag("--skip-errors", dec_args.skip_errors, "Warn and continue on unreadable meshes");

    BuildSftArgs sft_args;
    std::optional<std::string> captions, replay;
    auto* build = app.add_subcommand("build-sft", "Emit SFT JSONL files from a decomposition manifest");
    build->add_option("manifest", sft_args.manifest, "manifest.json from decompose")->required();
    build->add_option("output_dir", sft_args.output_dir, "Directory for <task>.jsonl files")->required();
    build->add_option("--captions", captions, "Caption table (TSV mesh_id<TAB>caption or JSON map)");
    build->add_option("--tasks", o.tasks, "Comma list: vertex_to_face,assembly,understanding,generation");
    build->add_option("--replay", replay, "JSONL replay stream mixed into mixed.jsonl");
    build->add_option("--replay-prob", o.replay_prob, "Replay probability");
    build->add_option("--max-faces", o.max_faces, "Face budget");
    build->add_option("--budget", o.budget, "Token budget");
    build->add_flag("--no-augment", o.no_augment, "Disable random scale/translate augmentation");

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "MMD / COV / 1-NNA, or BLEU-1 / ROUGE-L with --captions");
    evaluate->add_option("generated", eval_args.generated, "Generated meshes dir (or caption table)")->required();
    evaluate->add_option("reference", eval_args.reference, "Reference meshes dir (or caption table)")->required();
    evaluate->add_option("output", eval_args.output_json, "Report JSON path")->required();
    evaluate->add_flag("--captions", eval_args.captions, "Compare caption tables instead of meshes");
    evaluate->add_flag("--skip-errors", eval_args.skip_errors, "Warn and continue on unreadable meshes");
    evaluate->add_flag("--audit", eval_args.audit, "Include the distance matrix in the report");
    evaluate->add_option("--points", o.points, "Points sampled per mesh");
    evaluate->add_option("--cd-variant", o.cd_variant, "squared | euclidean");

    auto* print_config = app.add_subcommand("print-config", "Print the effective configuration as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    PipelineConfig config;
    try {
        config = effective_config(o);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return kExitConfigError;
    }

    try {
        if (*print_config) {
            std::cout << to_json(config).dump(2) << '\n';
            return kExitOk;
        }
        if (*serialize) return run_serialize(ser_args, config, std::cout);
        if (*decompose) {
            if (labels_dir) dec_args.labels_dir = *labels_dir;
            return run_decompose(dec_args, config, std::cout);
        }
        if (*build) {
            if (captions) sft_args.captions = *captions;
            if (replay) sft_args.replay = *replay;
            return run_build_sft(sft_args, config, std::cout);
        }
        if (*evaluate) return run_evaluate(eval_args, config, std::cout);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return e.kind() == ErrorKind::Config ? kExitConfigError : kExitInputError;
    }
    return kExitOk;
}
