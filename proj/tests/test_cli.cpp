#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "acg/cloud_io.hpp"
#include "acg/sim.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace acg;

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout only
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(ACG_CLI_PATH) + " " + args + " 2>/tmp/acg_cli_stderr.txt";
    std::array<char, 4096> buf{};
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("version prints name and concept count") {
    const RunResult r = run_cli("version");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("acg 0.1.0") != std::string::npos);
}

TEST_CASE("validate: shipped concepts exit 0") {
    const RunResult r = run_cli("validate " + std::string(ASSET_DIR) +
                                "/concepts/*.acon --samples 100");
    CHECK(r.exit_code == 0);
}

TEST_CASE("validate: a violating file exits 1, missing file exits 2") {
    const fs::path dir = "/tmp/acg_cli_validate";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "neg.acon");
        out << R"(
concept Neg
group misc
synopsis "negative size"
param r in [0.01, 0.1] default 0.05
primitive sphere s {
  size = (r - 0.2)
  at = pose(vec(0, 0, 0))
}
grasp g {
  synopsis "g"
  pose = pose(vec(0, 0, 0))
  width = 0.01
}
force f {
  synopsis "f"
  mode linear
  dir = vec(0, 0, 1)
}
)";
    }
    const RunResult invalid = run_cli("validate " + (dir / "neg.acon").string());
    CHECK(invalid.exit_code == 1);

    // missing file dominates with exit 2, but the good file is still checked
    const RunResult missing =
        run_cli("validate " + (dir / "missing.acon").string() + " " + std::string(ASSET_DIR) +
                "/concepts/l_handle.acon --samples 50 --json");
    CHECK(missing.exit_code == 2);
    CHECK(missing.output.find("l_handle.acon") != std::string::npos);
    CHECK(missing.output.find("L_Handle") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("ground: synthesized cloud converges and replays byte-identically") {
    const auto& acon = builtin_registry().get("L_Handle");
    Rng rng(9);
    const ParamBinding params = testing::random_params(acon.structure.params, rng);
    const RigidTransform pose = random_transform(rng, 0.2);
    const PointCloud cloud = testing::synthesize_cloud(acon, params, pose, 1500, 33);
    const std::string cloud_path = "/tmp/acg_cli_handle.ply";
    save_ply(cloud, cloud_path);

    const RunResult a = run_cli("ground --cloud " + cloud_path + " --concept L_Handle --seed 7");
    CHECK(a.exit_code == 0);
    CHECK(a.output.find("\"concept_id\": \"L_Handle\"") != std::string::npos);

    const RunResult b = run_cli("ground --cloud " + cloud_path + " --concept L_Handle --seed 7");
    CHECK(a.output == b.output);  // byte-identical replay

    const Grounding g = grounding_from_json(a.output);
    CHECK(g.residual < 0.1 * cloud.bbox().diagonal());
    std::remove(cloud_path.c_str());
}

TEST_CASE("ground: mismatched concept exits 3") {
    PointCloud board;
    Rng rng(10);
    for (int i = 0; i < 1200; ++i)
        board.points.emplace_back(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15),
                                  rng.uniform(-0.002, 0.002));
    const std::string path = "/tmp/acg_cli_board.xyz";
    save_xyz(board, path);
    const RunResult r = run_cli("ground --cloud " + path + " --concept Bottle_Cap --seed 1");
    CHECK(r.exit_code == 3);
    std::remove(path.c_str());
}

TEST_CASE("ground: group selection through the mock reasoner") {
    const auto& acon = builtin_registry().get("Knob_Lid");
    const PointCloud cloud = testing::synthesize_cloud(
        acon, default_params(acon.structure.params), RigidTransform::identity(), 1400, 3);
    const std::string path = "/tmp/acg_cli_lid.ply";
    save_ply(cloud, path);
    const RunResult r = run_cli("ground --cloud " + path +
                                " --group lid --task \"lift the lid of the pot\" --seed 2");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"concept_id\": \"Knob_Lid\"") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("grasp subcommand emits grasp and force json") {
    const auto& acon = builtin_registry().get("L_Handle");
    const PointCloud cloud = testing::synthesize_cloud(
        acon, default_params(acon.structure.params), RigidTransform::identity(), 1500, 4);
    const std::string path = "/tmp/acg_cli_grasp.ply";
    save_ply(cloud, path);
    const RunResult r = run_cli("grasp --cloud " + path +
                                " --concept L_Handle --family grasp_above"
                                " --rule push_clockwise --seed 5");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"family\": \"grasp_above\"") != std::string::npos);
    CHECK(r.output.find("\"score\"") != std::string::npos);
    CHECK(r.output.find("\"mode\": \"tangential\"") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("synth writes a reproducible dataset with a usable manifest") {
    const fs::path dir1 = "/tmp/acg_cli_ds1";
    const fs::path dir2 = "/tmp/acg_cli_ds2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    CHECK(run_cli("synth --archetype drawer -n 3 --seed 11 --out " + dir1.string()).exit_code ==
          0);
    CHECK(run_cli("synth --archetype drawer -n 3 --seed 11 --out " + dir2.string()).exit_code ==
          0);

    for (const char* name :
         {"manifest.json", "obj_0000.json", "obj_0001.json", "obj_0002.json", "view_0000.ply",
          "view_0001.ply", "view_0002.ply"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir1 / name));
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));  // byte-identical dataset
    }

    // manifest seeds reproduce each object individually
    const auto manifest = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
    for (const auto& entry : manifest.at("entries")) {
        const std::uint64_t seed = entry.at("seed").get<std::uint64_t>();
        const sim::ArticulatedObject regen = sim::joint_state_init(
            sim::synth_object("drawer", {}, seed), split_seed(seed, 2));
        const std::string stored = slurp(dir1 / entry.at("object").get<std::string>());
        CHECK(sim::object_to_json(regen) == stored);
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("bench: fail-fast on a bad config, replay determinism on a small run") {
    const fs::path bad = "/tmp/acg_cli_badcfg.json";
    {
        std::ofstream out(bad);
        out << R"({"archetypes": ["warp_drive"]})";
    }
    CHECK(run_cli("bench --config " + bad.string()).exit_code == 1);
    std::remove(bad.string().c_str());

    const fs::path cfg_path = "/tmp/acg_cli_benchcfg.json";
    {
        std::ofstream out(cfg_path);
        out << R"({"archetypes": ["drawer"], "trials": 2, "seed": 5, "oracle_stage": "pose",
                   "fit_restarts": 1, "fit_max_evals": 150, "fit_downsample": 400})";
    }
    const fs::path out1 = "/tmp/acg_cli_bench1";
    const fs::path out2 = "/tmp/acg_cli_bench2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    CHECK(run_cli("bench --config " + cfg_path.string() + " --out " + out1.string()).exit_code ==
          0);
    CHECK(run_cli("bench --config " + cfg_path.string() + " --out " + out2.string()).exit_code ==
          0);
    CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
    fs::remove_all(out1);
    fs::remove_all(out2);
    std::remove(cfg_path.string().c_str());
}
