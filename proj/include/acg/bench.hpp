#pragma once

#include "acg/reasoner.hpp"
#include "acg/sim.hpp"

namespace acg::bench {

/// Pipeline stages in execution order. oracle_stage = S replaces the output
/// of every stage up to and including S with ground truth; Force means the
/// whole pipeline runs on ground truth ("all").
enum class OracleStage { None, Segmentation, Concept, Params, Pose, Grasp, Force };

OracleStage oracle_stage_from_string(const std::string& s);
std::string to_string(OracleStage s);

enum class SamplerMode { Sampled, Estimated };

enum class FailStage { Segmentation, ConceptSelect, Grounding, Grasp, Force, Rollout };
std::string to_string(FailStage s);

struct BenchmarkConfig {
    std::vector<std::string> archetypes = sim::known_archetypes();
    int trials = 50;  // per archetype; one synthesized object per trial
    std::uint64_t seed = 0;
    double azimuth_min = 0.0, azimuth_max = 360.0;
    double elevation_min = 30.0, elevation_max = 60.0;
    int view_points = 4096;
    std::string backend = "mock";  // mock | live
    std::string reasoner_config;   // key=value file, live backend only
    SamplerMode sampler = SamplerMode::Estimated;
    OracleStage oracle_stage = OracleStage::None;
    int grasp_candidates = 64;
    int min_part_points = 60;
    sim::RolloutConfig rollout;
    GroundConfig ground;
    int threads = 1;
    std::string transcript_path;
};

BenchmarkConfig config_from_json(const std::string& text);
std::string config_to_json(const BenchmarkConfig& cfg);

struct TrialResult {
    std::string archetype;
    std::uint64_t trial_seed = 0;
    bool success = false;
    std::optional<FailStage> failure_stage;
    int attempts = 0;
    double displacement = 0.0;
    double relative_displacement = 0.0;
    double grounding_residual = -1.0;
};

struct ArchetypeStats {
    std::string archetype;
    int trials = 0;
    int successes = 0;
    std::map<std::string, int> failure_histogram;  // stage name -> count

    double rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

struct BenchmarkReport {
    BenchmarkConfig config;
    std::vector<ArchetypeStats> per_archetype;
    std::vector<TrialResult> trials;

    double overall_rate_per_trial() const;
    double overall_rate_per_object() const;  // same weighting, kept for the report schema
};

/// One full pipeline trial; exposed for tests.
TrialResult run_trial(const BenchmarkConfig& cfg, const std::string& archetype,
                      std::uint64_t trial_seed, ReasonerBackend& backend,
                      TranscriptLog* transcript = nullptr);

/// Runs trials for every archetype. `backend_override` (tests) bypasses the
/// config's backend selection.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg,
                              ReasonerBackend* backend_override = nullptr);

std::string report_to_json(const BenchmarkReport& report);
std::string report_table(const BenchmarkReport& report);

}  // namespace acg::bench
