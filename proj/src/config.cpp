#include "meshseq/config.hpp"

#include "meshseq/error.hpp"
#include "meshseq/text_io.hpp"

#include <set>

namespace meshseq {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::Config, what);
}

template <typename T>
void read_field(const json& section, const char* key, T& out) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("field '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& section, std::initializer_list<const char*> known, const std::string& where) {
    require(section.is_object(), where + " must be an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : section.items()) {
        require(allowed.count(key) > 0, "unknown key '" + key + "' in " + where);
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    return j.contains(key) ? j.at(key) : empty;
}

} // namespace

void validate(const PipelineConfig& c) {
    require(c.max_coord >= 1 && c.max_coord <= 1'000'000, "serializer.max_coord must be in [1, 1000000]");
    require(!c.separator.empty(), "serializer.separator must not be empty");
    for (char ch : c.separator) require(is_space(ch), "serializer.separator must be whitespace");
    require(c.token_budget >= 1, "budget.tokens must be positive");
    require(c.max_faces >= 1, "budget.max_faces must be positive");
    require(c.min_samples >= 1, "decompose.min_samples must be positive");
    require(c.samples_per_face >= 1, "decompose.samples_per_face must be positive");
    require(!c.n_clusters || *c.n_clusters >= 1, "decompose.n_clusters must be positive");
    require(c.scale_min > 0.0 && c.scale_min <= c.scale_max && c.scale_max <= 1.0,
            "augment scale range must satisfy 0 < scale_min <= scale_max <= 1");
    require(!c.tasks.empty(), "sft.tasks must not be empty");
    require(c.replay_prob >= 0.0 && c.replay_prob <= 1.0, "sft.replay_prob must be in [0, 1]");
    require(c.cloud_points >= 1, "metrics.points must be positive");
    require(c.rouge_beta > 0.0, "metrics.rouge_beta must be positive");
    require(c.jobs >= 1, "jobs must be positive");
}

json to_json(const PipelineConfig& c) {
    json tasks = json::array();
    for (auto t : c.tasks) tasks.push_back(std::string(to_string(t)));
    return {
        {"version", kConfigVersion},
        {"serializer", {{"max_coord", c.max_coord}, {"separator", c.separator}}},
        {"budget", {{"tokens", c.token_budget}, {"max_faces", c.max_faces}}},
        {"decompose",
         {{"min_samples", c.min_samples},
          {"samples_per_face", c.samples_per_face},
          {"n_clusters", c.n_clusters ? json(*c.n_clusters) : json(nullptr)}}},
        {"augment", {{"enabled", c.augment}, {"scale_min", c.scale_min}, {"scale_max", c.scale_max}}},
        {"sft", {{"tasks", tasks}, {"replay_prob", c.replay_prob}, {"include_part_names", c.include_part_names}}},
        {"metrics",
         {{"points", c.cloud_points}, {"cd_variant", std::string(to_string(c.cd_variant))}, {"rouge_beta", c.rouge_beta}}},
        {"seed", c.seed},
        {"jobs", c.jobs},
        {"paths", {{"replay", c.replay_path}}},
    };
}

PipelineConfig config_from_json(const json& j) {
    reject_unknown(j, {"version", "serializer", "budget", "decompose", "augment", "sft", "metrics", "seed", "jobs", "paths"},
                   "config");
    if (j.contains("version")) {
        require(j.at("version").is_number_integer() && j.at("version").get<int>() == kConfigVersion,
                "unsupported config version");
    }
    PipelineConfig c;

    const json& ser = section(j, "serializer");
    reject_unknown(ser, {"max_coord", "separator"}, "serializer");
    read_field(ser, "max_coord", c.max_coord);
    read_field(ser, "separator", c.separator);

    const json& budget = section(j, "budget");
    reject_unknown(budget, {"tokens", "max_faces"}, "budget");
    read_field(budget, "tokens", c.token_budget);
    read_field(budget, "max_faces", c.max_faces);

    const json& dec = section(j, "decompose");
    reject_unknown(dec, {"min_samples", "samples_per_face", "n_clusters"}, "decompose");
    read_field(dec, "min_samples", c.min_samples);
    read_field(dec, "samples_per_face", c.samples_per_face);
    if (dec.contains("n_clusters") && !dec.at("n_clusters").is_null()) {
        std::uint32_t n = 0;
        read_field(dec, "n_clusters", n);
        c.n_clusters = n;
    }

    const json& aug = section(j, "augment");
    reject_unknown(aug, {"enabled", "scale_min", "scale_max"}, "augment");
    read_field(aug, "enabled", c.augment);
    read_field(aug, "scale_min", c.scale_min);
    read_field(aug, "scale_max", c.scale_max);

    const json& sft = section(j, "sft");
    reject_unknown(sft, {"tasks", "replay_prob", "include_part_names"}, "sft");
    if (sft.contains("tasks")) {
        std::vector<std::string> names;
        read_field(sft, "tasks", names);
        c.tasks.clear();
        for (const auto& name : names) {
            const auto task = parse_task(name);
            require(task.has_value(), "unknown task '" + name + "'");
            c.tasks.push_back(*task);
        }
    }
    read_field(sft, "replay_prob", c.replay_prob);
    read_field(sft, "include_part_names", c.include_part_names);

    const json& met = section(j, "metrics");
    reject_unknown(met, {"points", "cd_variant", "rouge_beta"}, "metrics");
    read_field(met, "points", c.cloud_points);
    if (met.contains("cd_variant")) {
        std::string name;
        read_field(met, "cd_variant", name);
        const auto variant = parse_chamfer_variant(name);
        require(variant.has_value(), "unknown cd_variant '" + name + "'");
        c.cd_variant = *variant;
    }
    read_field(met, "rouge_beta", c.rouge_beta);

    read_field(j, "seed", c.seed);
    read_field(j, "jobs", c.jobs);
    const json& paths = section(j, "paths");
    reject_unknown(paths, {"replay"}, "paths");
    read_field(paths, "replay", c.replay_path);

    validate(c);
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
    write_text_file(path, to_json(config).dump(2) + "\n");
}

} // namespace meshseq
