#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acg/bench.hpp"
#include "acg/cloud_io.hpp"
#include "acg/dsl/parser.hpp"
#include "acg/dsl/serialize.hpp"
#include "acg/dsl/validate.hpp"
#include "acg/grasp.hpp"
#include "acg/grounding.hpp"
#include "acg/reasoner.hpp"
#include "acg/sim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 1 validation, 2 io, 3 numerical, 4 backend
constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kIoExit = 2;
constexpr int kNumericalExit = 3;
constexpr int kBackendExit = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw acg::IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw acg::IoError("cannot write " + path);
    out << text;
}

std::unique_ptr<acg::ReasonerBackend> make_backend(const std::string& kind,
                                                   const std::string& config_path) {
    if (kind == "mock")
        return std::make_unique<acg::MockBackend>(acg::MockBackend::with_default_rules());
    if (kind == "live")
        return std::make_unique<acg::HttpBackend>(acg::load_reasoner_config(config_path));
    throw acg::Error("unknown backend: " + kind);
}

int cmd_validate(const std::vector<std::string>& paths, int samples, std::uint64_t seed,
                 bool as_json) {
    bool any_io = false;
    bool any_invalid = false;
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& path : paths) {
        nlohmann::ordered_json entry;
        entry["file"] = path;
        try {
            const std::string text = read_file(path);
            const acg::AnalyticConcept acon = acg::dsl::parse_concept(text, path);
            const auto report = acg::dsl::validate_concept(acon, samples, seed);
            entry["concept"] = report.concept_id;
            entry["samples"] = report.samples;
            entry["violations"] = nlohmann::ordered_json::array();
            for (const auto& v : report.violations) {
                nlohmann::ordered_json jv;
                jv["where"] = v.where;
                jv["message"] = v.message;
                nlohmann::ordered_json binding = nlohmann::ordered_json::object();
                for (const auto& [name, value] : v.binding) binding[name] = value;
                jv["binding"] = binding;
                entry["violations"].push_back(jv);
                std::ostringstream b;
                for (const auto& [name, value] : v.binding) b << " " << name << "=" << value;
                std::cerr << path << ": " << v.where << ": " << v.message << " at" << b.str()
                          << "\n";
                any_invalid = true;
            }
            if (report.ok())
                std::cerr << path << ": ok (" << report.concept_id << ", " << samples
                          << " samples)\n";
        } catch (const acg::IoError& e) {
            std::cerr << e.what() << "\n";
            entry["error"] = e.what();
            any_io = true;
        } catch (const acg::Error& e) {
            std::cerr << e.what() << "\n";
            entry["error"] = e.what();
            any_invalid = true;
        }
        out.push_back(entry);
    }
    if (as_json) std::cout << out.dump(2) << "\n";
    if (any_io) return kIoExit;
    return any_invalid ? kValidationError : kOk;
}

int cmd_ground(const std::string& cloud_path, std::string concept_id, const std::string& group,
               const std::string& task, const std::string& backend_kind,
               const std::string& backend_config, std::uint64_t seed) {
    const acg::PointCloud cloud = acg::load_cloud(cloud_path);
    const auto& registry = acg::builtin_registry();

    if (concept_id.empty()) {
        auto backend = make_backend(backend_kind, backend_config);
        acg::ReasonerQuery q{acg::QueryKind::ConceptSelect,
                             task.empty() ? "ground the observed part" : task,
                             registry.concepts_in_group(group), std::nullopt};
        concept_id = acg::ask(*backend, q).chosen;
        std::cerr << "concept selected: " << concept_id << "\n";
    }

    acg::GroundConfig cfg;
    cfg.fit.seed = acg::split_seed(seed, 5);
    cfg.ransac.seed = acg::split_seed(seed, 6);
    const acg::Grounding g = acg::ground(registry.get(concept_id), cloud, cfg);
    std::cout << acg::grounding_to_json(g) << "\n";
    return kOk;
}

int cmd_grasp(const std::string& cloud_path, const std::string& concept_id,
              const std::string& family_name, const std::string& rule_name, int k,
              std::uint64_t seed) {
    const acg::PointCloud cloud = acg::load_cloud(cloud_path);
    const auto& registry = acg::builtin_registry();
    const acg::AnalyticConcept& acon = registry.get(concept_id);

    acg::GroundConfig cfg;
    cfg.fit.seed = acg::split_seed(seed, 5);
    cfg.ransac.seed = acg::split_seed(seed, 6);
    const acg::Grounding grounding = acg::ground(acon, cloud, cfg);

    const acg::GraspFamily* family = acon.find_family(family_name);
    if (!family) throw acg::Error("unknown grasp family: " + family_name);
    const acg::GraspCandidate candidate = acg::select_grasp(
        acon, *family, grounding, cloud, acg::GripperSpec{}, k, acg::split_seed(seed, 7));

    nlohmann::ordered_json out;
    out["grounding"] = nlohmann::ordered_json::parse(acg::grounding_to_json(grounding));
    out["grasp"] = nlohmann::ordered_json::parse(acg::grasp_to_json(candidate, family_name));
    if (!rule_name.empty()) {
        const acg::ForceRule* rule = acon.find_rule(rule_name);
        if (!rule) throw acg::Error("unknown force rule: " + rule_name);
        const acg::ForceDirection f =
            acg::force_direction(acon, *rule, grounding, candidate.grasp);
        out["force"] = nlohmann::ordered_json::parse(acg::force_to_json(f));
    }
    std::cout << out.dump(2) << "\n";
    return kOk;
}

int cmd_synth(const std::string& archetype, int count, std::uint64_t seed,
              const std::string& outdir) {
    fs::create_directories(outdir);
    nlohmann::ordered_json manifest;
    manifest["archetype"] = archetype;
    manifest["count"] = count;
    manifest["seed"] = seed;
    manifest["entries"] = nlohmann::ordered_json::array();
    for (int i = 0; i < count; ++i) {
        const std::uint64_t obj_seed = acg::split_seed(seed, static_cast<std::uint64_t>(i));
        acg::sim::ArticulatedObject object = acg::sim::joint_state_init(
            acg::sim::synth_object(archetype, {}, obj_seed), acg::split_seed(obj_seed, 2));
        acg::Rng rng(acg::split_seed(obj_seed, 3));
        const double azimuth = rng.uniform(0.0, 360.0);
        const double elevation = rng.uniform(30.0, 60.0);
        const acg::PointCloud view =
            acg::sim::render_view(object, azimuth, elevation, 4096, acg::split_seed(obj_seed, 4));

        char name[64];
        std::snprintf(name, sizeof(name), "obj_%04d.json", i);
        const std::string obj_file = name;
        std::snprintf(name, sizeof(name), "view_%04d.ply", i);
        const std::string view_file = name;
        write_file((fs::path(outdir) / obj_file).string(), acg::sim::object_to_json(object));
        acg::save_ply(view, (fs::path(outdir) / view_file).string());

        nlohmann::ordered_json entry;
        entry["object"] = obj_file;
        entry["view"] = view_file;
        entry["seed"] = obj_seed;
        entry["azimuth"] = azimuth;
        entry["elevation"] = elevation;
        manifest["entries"].push_back(entry);
    }
    write_file((fs::path(outdir) / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cerr << "wrote " << count << " objects to " << outdir << "\n";
    return kOk;
}

int cmd_bench(const std::string& config_path, const std::string& outdir,
              const std::string& oracle_stage, const std::string& sampler, int trials,
              std::uint64_t seed, bool seed_set, int threads) {
    acg::bench::BenchmarkConfig cfg;
    if (!config_path.empty()) cfg = acg::bench::config_from_json(read_file(config_path));
    if (!oracle_stage.empty())
        cfg.oracle_stage = acg::bench::oracle_stage_from_string(oracle_stage);
    if (!sampler.empty()) {
        if (sampler != "sampled" && sampler != "estimated")
            throw acg::Error("sampler must be sampled or estimated");
        cfg.sampler = sampler == "sampled" ? acg::bench::SamplerMode::Sampled
                                           : acg::bench::SamplerMode::Estimated;
    }
    if (trials > 0) cfg.trials = trials;
    if (seed_set) cfg.seed = seed;
    if (threads > 0) cfg.threads = threads;

    const acg::bench::BenchmarkReport report = acg::bench::run_benchmark(cfg);
    const std::string table = acg::bench::report_table(report);
    std::cout << table;
    if (!outdir.empty()) {
        fs::create_directories(outdir);
        write_file((fs::path(outdir) / "report.json").string(),
                   acg::bench::report_to_json(report) + "\n");
        write_file((fs::path(outdir) / "table.txt").string(), table);
        std::cerr << "report written to " << outdir << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acg - analytic concept grounding and manipulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global --seed/--json may follow the subcommand

    std::uint64_t seed = 0;
    bool as_json = false;
    app.add_option("--seed", seed, "master random seed")->capture_default_str();
    app.add_flag("--json", as_json, "machine-readable output where supported");

    // validate
    auto* validate = app.add_subcommand("validate", "validate concept files");
    std::vector<std::string> validate_paths;
    int validate_samples = 1000;
    validate->add_option("paths", validate_paths, "concept .acon files")->required();
    validate->add_option("--samples", validate_samples, "parameter samples per concept")
        ->capture_default_str();

    // ground
    auto* ground = app.add_subcommand("ground", "fit a concept to a part cloud");
    std::string ground_cloud, ground_concept, ground_group, ground_task;
    std::string ground_backend = "mock", ground_backend_config;
    ground->add_option("--cloud", ground_cloud, "part cloud (.xyz or .ply)")->required();
    ground->add_option("--concept", ground_concept, "concept id");
    ground->add_option("--group", ground_group, "concept group (reasoner picks the concept)");
    ground->add_option("--task", ground_task, "task text for the reasoner");
    ground->add_option("--backend", ground_backend, "mock | live")->capture_default_str();
    ground->add_option("--reasoner-config", ground_backend_config, "live backend config file");

    // grasp
    auto* grasp = app.add_subcommand("grasp", "ground a cloud and select a grasp");
    std::string grasp_cloud, grasp_concept, grasp_family, grasp_rule;
    int grasp_k = 64;
    grasp->add_option("--cloud", grasp_cloud, "part cloud (.xyz or .ply)")->required();
    grasp->add_option("--concept", grasp_concept, "concept id")->required();
    grasp->add_option("--family", grasp_family, "grasp family name")->required();
    grasp->add_option("--rule", grasp_rule, "force rule to evaluate");
    grasp->add_option("-k,--candidates", grasp_k, "candidate count")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_archetype, synth_out = "dataset";
    int synth_n = 10;
    synth->add_option("--archetype", synth_archetype, "object archetype")->required();
    synth->add_option("-n,--count", synth_n, "object count")->capture_default_str();
    synth->add_option("--out", synth_out, "output directory")->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "run the manipulation benchmark");
    std::string bench_config, bench_out, bench_oracle, bench_sampler;
    int bench_trials = 0, bench_threads = 0;
    bench->add_option("--config", bench_config, "benchmark config json");
    bench->add_option("--out", bench_out, "output directory for report.json/table.txt");
    bench->add_option("--oracle-stage", bench_oracle,
                      "none|segmentation|concept|params|pose|grasp|force|all");
    bench->add_option("--sampler", bench_sampler, "sampled | estimated");
    bench->add_option("--trials", bench_trials, "trials per archetype");
    bench->add_option("--threads", bench_threads, "worker threads");

    // version
    auto* version = app.add_subcommand("version", "print version information");

    CLI11_PARSE(app, argc, argv);
    const bool seed_set = app.count("--seed") > 0;

    try {
        if (validate->parsed())
            return cmd_validate(validate_paths, validate_samples, seed, as_json);
        if (ground->parsed()) {
            if (ground_concept.empty() && ground_group.empty())
                throw acg::Error("ground: give --concept or --group");
            return cmd_ground(ground_cloud, ground_concept, ground_group, ground_task,
                              ground_backend, ground_backend_config, seed);
        }
        if (grasp->parsed())
            return cmd_grasp(grasp_cloud, grasp_concept, grasp_family, grasp_rule, grasp_k, seed);
        if (synth->parsed()) return cmd_synth(synth_archetype, synth_n, seed, synth_out);
        if (bench->parsed())
            return cmd_bench(bench_config, bench_out, bench_oracle, bench_sampler, bench_trials,
                             seed, seed_set, bench_threads);
        if (version->parsed()) {
            nlohmann::ordered_json j;
            j["name"] = "acg";
            j["version"] = kVersion;
            j["concepts"] = acg::builtin_registry().size();
            if (as_json) std::cout << j.dump(2) << "\n";
            else std::cout << "acg " << kVersion << " (" << acg::builtin_registry().size()
                           << " builtin concepts)\n";
            return kOk;
        }
    } catch (const acg::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoExit;
    } catch (const acg::FitDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalExit;
    } catch (const acg::DegenerateConfiguration& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalExit;
    } catch (const acg::NoConsensus& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalExit;
    } catch (const acg::BackendUnreachable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBackendExit;
    } catch (const acg::TimeoutError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBackendExit;
    } catch (const acg::InvalidChoice& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBackendExit;
    } catch (const acg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidationError;
    }
    return kOk;
}
