#include "meshseq/pipeline.hpp"
#include "meshseq/serializer.hpp"
#include "meshseq/text_io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>

using namespace meshseq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) { return read_text_file(p); }

// A directory of OBJ shapes, one per kind.
fs::path shape_dir(const std::string& name, int count, int resolution = 12) {
    const auto dir = test::temp_dir(name);
    for (int i = 0; i < count; ++i) write_obj_file(test::shape(i, resolution), dir / ("shape" + std::to_string(i) + ".obj"));
    return dir;
}

int cli(const std::string& args) {
    const int status = std::system((std::string(MESHSEQ_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("serialize single file") {
    const auto dir = test::temp_dir("ser_single");
    write_obj_file(test::unit_triangle(), dir / "tri.obj");
    std::ostringstream log;
    CHECK(run_serialize({dir / "tri.obj", dir / "tri.txt", false}, PipelineConfig{}, log) == kExitOk);
    // flat in z, so normalization centers it at z = 0.5
    CHECK(slurp(dir / "tri.txt") == "v 0 0 32\nv 64 0 32\nv 0 64 32\nf 1 2 3");
    CHECK(log.str().find("serialized 1, rejected 0, failed 0") != std::string::npos);
}

TEST_CASE("serialize directory with a malformed file") {
    const auto dir = shape_dir("ser_dir", 2);
    write_text_file(dir / "broken.obj", "v 0 0 0\nv 1 x 0\nv 0 1 0\nf 1 2 3\n");
    const auto out = dir / "out";

    std::ostringstream strict_log;
    CHECK(run_serialize({dir, out, false}, PipelineConfig{}, strict_log) == kExitInputError);
    CHECK(strict_log.str().find("broken.obj") != std::string::npos);

    std::ostringstream log;
    CHECK(run_serialize({dir, out, true}, PipelineConfig{}, log) == kExitOk);
    CHECK(log.str().find("warning") != std::string::npos);
    CHECK(fs::exists(out / "shape0.txt"));
    CHECK(fs::exists(out / "shape1.txt"));
    CHECK_FALSE(fs::exists(out / "broken.txt"));
    CHECK(from_text(slurp(out / "shape0.txt")) == quantize(normalize_to_unit_cube(test::shape(0))));
}

TEST_CASE("serialize reports over-budget meshes") {
    const auto dir = shape_dir("ser_budget", 3);
    PipelineConfig c;
    c.max_faces = 20;  // shape0 (12 faces) fits, shape1 (24) and shape2 do not
    std::ostringstream log;
    CHECK(run_serialize({dir, dir / "out", false}, c, log) == kExitOk);
    CHECK(log.str().find("reject shape1.obj") != std::string::npos);
    CHECK(log.str().find("serialized 1, rejected 2, failed 0") != std::string::npos);

    PipelineConfig tokens;
    tokens.token_budget = 10;
    std::ostringstream log2;
    CHECK(run_serialize({dir, dir / "out2", false}, tokens, log2) == kExitOk);
    CHECK(log2.str().find("serialized 0, rejected 3") != std::string::npos);
}

TEST_CASE("serialize is identical serial and parallel") {
    const auto dir = shape_dir("ser_jobs", 10);
    PipelineConfig one, many;
    many.jobs = 4;
    std::ostringstream a, b;
    REQUIRE(run_serialize({dir, dir / "one", false}, one, a) == kExitOk);
    REQUIRE(run_serialize({dir, dir / "many", false}, many, b) == kExitOk);
    CHECK(a.str() == b.str());
    for (int i = 0; i < 10; ++i) {
        const std::string name = "shape" + std::to_string(i) + ".txt";
        CHECK(slurp(dir / "one" / name) == slurp(dir / "many" / name));
    }
}

TEST_CASE("decompose writes parts and a partitioning manifest") {
    const auto dir = test::temp_dir("dec");
    // 20x10 grid, 400 faces -> 2 clusters
    write_obj_file(test::parametric([](double u, double v) { return Vec3{2 * u, v, 0.1 * u * v}; }, 20, 10),
                   dir / "plate.obj");
    std::ostringstream log;
    REQUIRE(run_decompose({dir / "plate.obj", dir / "out", std::nullopt, false}, PipelineConfig{}, log) == kExitOk);
    CHECK(fs::exists(dir / "out" / "plate.part0.obj"));
    CHECK(fs::exists(dir / "out" / "plate.part1.obj"));
    CHECK_FALSE(fs::exists(dir / "out" / "plate.part2.obj"));

    const json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest.at("version") == 1);
    CHECK(manifest.contains("config"));
    const auto& entry = manifest.at("meshes").at(0);
    CHECK(entry.at("n_faces") == 400);
    CHECK(entry.at("n_clusters") == 2);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& part : entry.at("parts")) {
        for (const auto& f : part.at("faces")) seen.insert(f.get<std::size_t>());
        total += part.at("faces").size();
        const Mesh m = read_obj_file(dir / "out" / part.at("file").get<std::string>());
        CHECK(m.faces.size() == part.at("faces").size());
    }
    CHECK(total == 400);
    CHECK(seen.size() == 400);

    // rerun: byte-identical
    const std::string first = slurp(dir / "out" / "manifest.json");
    const std::string part0 = slurp(dir / "out" / "plate.part0.obj");
    std::ostringstream log2;
    REQUIRE(run_decompose({dir / "plate.obj", dir / "out", std::nullopt, false}, PipelineConfig{}, log2) == kExitOk);
    CHECK(slurp(dir / "out" / "manifest.json") == first);
    CHECK(slurp(dir / "out" / "plate.part0.obj") == part0);
}

TEST_CASE("decompose with semantic labels") {
    const auto dir = test::temp_dir("dec_labels");
    write_obj_file(test::two_cubes(), dir / "pair.obj");
    fs::create_directories(dir / "labels");
    std::string tsv;
    for (int f = 0; f < 24; ++f) tsv += std::to_string(f) + "\t" + (f < 12 ? "left" : "right") + "\n";
    write_text_file(dir / "labels" / "pair.labels.tsv", tsv);
    std::ostringstream log;
    REQUIRE(run_decompose({dir / "pair.obj", dir / "out", dir / "labels", false}, PipelineConfig{}, log) == kExitOk);
    const json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    const auto& entry = manifest.at("meshes").at(0);
    CHECK(entry.at("mode") == "semantic");
    CHECK(entry.at("names") == json::array({"left", "right"}));
}

TEST_CASE("build-sft end to end") {
    const auto dir = shape_dir("sft", 10, 8);
    std::ostringstream log;
    REQUIRE(run_decompose({dir, dir / "dec", std::nullopt, false}, PipelineConfig{}, log) == kExitOk);

    PipelineConfig c;  // tasks default to vertex_to_face + assembly
    REQUIRE(run_build_sft({dir / "dec" / "manifest.json", std::nullopt, dir / "sft", std::nullopt}, c, log) == kExitOk);
    CHECK(fs::exists(dir / "sft" / "vertex_to_face.jsonl"));
    CHECK(fs::exists(dir / "sft" / "assembly.jsonl"));
    CHECK_FALSE(fs::exists(dir / "sft" / "generation.jsonl"));
    CHECK_FALSE(fs::exists(dir / "sft" / "mixed.jsonl"));

    for (const auto& s : read_jsonl(dir / "sft" / "vertex_to_face.jsonl")) {
        CHECK(sample_tokens(s) <= c.token_budget);
        CHECK_NOTHROW(verify_sample(s));
        CHECK(s.meta.part.has_value());
    }
    const auto assembly = read_jsonl(dir / "sft" / "assembly.jsonl");
    CHECK(assembly.size() == 10);
    for (const auto& s : assembly) CHECK_NOTHROW(verify_sample(s));

    const json summary = json::parse(slurp(dir / "sft" / "summary.json"));
    CHECK(summary.at("tasks").at("assembly").at("emitted") == 10);

    // rerun is byte-identical
    const std::string first = slurp(dir / "sft" / "assembly.jsonl");
    REQUIRE(run_build_sft({dir / "dec" / "manifest.json", std::nullopt, dir / "sft", std::nullopt}, c, log) == kExitOk);
    CHECK(slurp(dir / "sft" / "assembly.jsonl") == first);

    SUBCASE("generation without captions is a config error") {
        PipelineConfig g;
        g.tasks = {TaskKind::Generation};
        CHECK(run_build_sft({dir / "dec" / "manifest.json", std::nullopt, dir / "sft_gen", std::nullopt}, g, log) ==
              kExitConfigError);
    }
    SUBCASE("captions and replay") {
        std::string tsv;
        for (int i = 0; i < 10; ++i) tsv += "shape" + std::to_string(i) + "\tshape number " + std::to_string(i) + "\n";
        write_text_file(dir / "captions.tsv", tsv);
        PipelineConfig g;
        g.tasks = {TaskKind::Understanding, TaskKind::Generation};
        std::ostringstream glog;
        REQUIRE(run_build_sft({dir / "dec" / "manifest.json", dir / "captions.tsv", dir / "sft_gen",
                               dir / "sft" / "assembly.jsonl"},
                              g, glog) == kExitOk);
        const auto und = read_jsonl(dir / "sft_gen" / "understanding.jsonl");
        CHECK(und.size() == 10);
        for (const auto& s : und) CHECK(s.output.rfind("shape number ", 0) == 0);
        const auto mixed = read_jsonl(dir / "sft_gen" / "mixed.jsonl");
        CHECK(mixed.size() == 20);
        const json summary2 = json::parse(slurp(dir / "sft_gen" / "summary.json"));
        CHECK(summary2.at("mixing").at("records") == 20);
        CHECK(glog.str().find("replay fraction") != std::string::npos);
    }
}

TEST_CASE("evaluate meshes") {
    const auto dir = shape_dir("eval", 5, 6);
    PipelineConfig c;
    c.cloud_points = 256;
    std::ostringstream log;
    REQUIRE(run_evaluate({dir, dir, dir / "report.json", false, false, true}, c, log) == kExitOk);
    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(report.at("n_gen") == 5);
    CHECK(report.at("n_ref") == 5);
    CHECK(report.at("p") == 256);
    CHECK(report.at("cd_variant") == "squared_l2_mean_sum");
    CHECK(report.at("mmd").get<double>() == 0.0);
    CHECK(report.at("cov").get<double>() == 1.0);
    CHECK(report.at("distance_matrix").size() == 10);

    const auto empty = test::temp_dir("eval_empty");
    CHECK(run_evaluate({empty, dir, dir / "r2.json", false, false, false}, c, log) == kExitInputError);
}

TEST_CASE("evaluate captions") {
    const auto dir = test::temp_dir("eval_caps");
    write_text_file(dir / "gen.tsv", "a\ta red chair\nb\tblue lamp\n");
    write_text_file(dir / "ref.tsv", "a\ta red chair\nb\ta tall table\nb\tblue lamp on a desk\n");
    std::ostringstream log;
    REQUIRE(run_evaluate({dir / "gen.tsv", dir / "ref.tsv", dir / "out.json", true, false, false}, PipelineConfig{},
                         log) == kExitOk);
    const json report = json::parse(slurp(dir / "out.json"));
    CHECK(report.at("pairs").size() == 2);
    CHECK(report.at("pairs").at(0).at("bleu1").get<double>() == 1.0);
    CHECK(report.contains("mean_bleu1"));
    CHECK(report.contains("mean_rouge_l"));
}

TEST_CASE("cli exit codes") {
    const auto dir = test::temp_dir("cli");
    write_obj_file(test::unit_triangle(), dir / "tri.obj");
    const std::string d = dir.string();
    CHECK(cli("serialize " + d + "/tri.obj " + d + "/tri.txt") == 0);
    CHECK(cli("serialize " + d + "/missing.obj " + d + "/x.txt") == 1);
    CHECK(cli("--seed 3 --jobs 2 print-config") == 0);
    CHECK(cli("--jobs 0 print-config") == 2);
    CHECK(cli("print-config --config " + d + "/nope.json") == 2);
    write_text_file(dir / "bad.json", R"({"sft": {"replay_prob": 2}})");
    CHECK(cli("print-config --config " + d + "/bad.json") == 2);
    CHECK(cli("") == 2);
    CHECK(std::system(("MESHSEQ_CONFIG=" + d + "/bad.json " + MESHSEQ_CLI_PATH + " print-config >/dev/null 2>&1")
                          .c_str()) != 0);
}
