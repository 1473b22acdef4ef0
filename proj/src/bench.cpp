#include "acg/bench.hpp"

#include <atomic>
#include <cmath>
#include <future>
#include <sstream>

#include <json.hpp>

#include "acg/grounding.hpp"

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

namespace acg::bench {

OracleStage oracle_stage_from_string(const std::string& s) {
    if (s == "none") return OracleStage::None;
    if (s == "segmentation") return OracleStage::Segmentation;
    if (s == "concept") return OracleStage::Concept;
    if (s == "params") return OracleStage::Params;
    if (s == "pose") return OracleStage::Pose;
    if (s == "grasp") return OracleStage::Grasp;
    if (s == "force" || s == "all") return OracleStage::Force;
    throw Error("unknown oracle stage: " + s);
}

std::string to_string(OracleStage s) {
    switch (s) {
        case OracleStage::None: return "none";
        case OracleStage::Segmentation: return "segmentation";
        case OracleStage::Concept: return "concept";
        case OracleStage::Params: return "params";
        case OracleStage::Pose: return "pose";
        case OracleStage::Grasp: return "grasp";
        case OracleStage::Force: return "force";
    }
    return "?";
}

std::string to_string(FailStage s) {
    switch (s) {
        case FailStage::Segmentation: return "segmentation";
        case FailStage::ConceptSelect: return "concept-select";
        case FailStage::Grounding: return "grounding";
        case FailStage::Grasp: return "grasp";
        case FailStage::Force: return "force";
        case FailStage::Rollout: return "rollout";
    }
    return "?";
}

namespace {

const std::vector<std::string> kFailStageNames = {"segmentation", "concept-select", "grounding",
                                                  "grasp", "force", "rollout"};

bool at_least(OracleStage level, OracleStage stage) {
    return static_cast<int>(level) >= static_cast<int>(stage);
}

}  // namespace

double BenchmarkReport::overall_rate_per_trial() const {
    int n = 0, s = 0;
    for (const auto& a : per_archetype) {
        n += a.trials;
        s += a.successes;
    }
    return n ? static_cast<double>(s) / n : 0.0;
}

double BenchmarkReport::overall_rate_per_object() const {
    // one trial per synthesized object, so the weightings coincide
    return overall_rate_per_trial();
}

// ------------------------------------------------------------ config ---

BenchmarkConfig config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    BenchmarkConfig cfg;
    if (j.contains("archetypes")) cfg.archetypes = j["archetypes"].get<std::vector<std::string>>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("azimuth_min")) cfg.azimuth_min = j["azimuth_min"].get<double>();
    if (j.contains("azimuth_max")) cfg.azimuth_max = j["azimuth_max"].get<double>();
    if (j.contains("elevation_min")) cfg.elevation_min = j["elevation_min"].get<double>();
    if (j.contains("elevation_max")) cfg.elevation_max = j["elevation_max"].get<double>();
    if (j.contains("view_points")) cfg.view_points = j["view_points"].get<int>();
    if (j.contains("backend")) cfg.backend = j["backend"].get<std::string>();
    if (j.contains("reasoner_config")) cfg.reasoner_config = j["reasoner_config"].get<std::string>();
    if (j.contains("sampler"))
        cfg.sampler = j["sampler"].get<std::string>() == "sampled" ? SamplerMode::Sampled
                                                                   : SamplerMode::Estimated;
    if (j.contains("oracle_stage"))
        cfg.oracle_stage = oracle_stage_from_string(j["oracle_stage"].get<std::string>());
    if (j.contains("grasp_candidates")) cfg.grasp_candidates = j["grasp_candidates"].get<int>();
    if (j.contains("min_part_points")) cfg.min_part_points = j["min_part_points"].get<int>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("transcript")) cfg.transcript_path = j["transcript"].get<std::string>();
    if (j.contains("relative_threshold"))
        cfg.rollout.relative_threshold = j["relative_threshold"].get<double>();
    if (j.contains("budget")) cfg.rollout.budget = j["budget"].get<int>();
    if (j.contains("fit_restarts")) cfg.ground.fit.restarts = j["fit_restarts"].get<int>();
    if (j.contains("fit_max_evals")) cfg.ground.fit.max_evals = j["fit_max_evals"].get<int>();
    if (j.contains("fit_downsample")) cfg.ground.fit.downsample_to = j["fit_downsample"].get<int>();

    // validation: trial counts and camera ranges
    if (cfg.trials < 1) throw Error("config: trials must be >= 1");
    if (cfg.archetypes.empty()) throw Error("config: no archetypes");
    const auto known = sim::known_archetypes();
    for (const auto& a : cfg.archetypes)
        if (std::find(known.begin(), known.end(), a) == known.end()) throw UnknownArchetype(a);
    if (cfg.azimuth_min < 0 || cfg.azimuth_max > 360 || cfg.azimuth_min >= cfg.azimuth_max)
        throw Error("config: azimuth range must lie inside [0, 360)");
    if (cfg.elevation_min < 30 || cfg.elevation_max > 60 ||
        cfg.elevation_min > cfg.elevation_max)
        throw Error("config: elevation range must lie inside [30, 60]");
    if (cfg.backend != "mock" && cfg.backend != "live")
        throw Error("config: backend must be mock or live");
    return cfg;
}

std::string config_to_json(const BenchmarkConfig& cfg) {
    nlohmann::ordered_json j;
    j["archetypes"] = cfg.archetypes;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["azimuth_min"] = cfg.azimuth_min;
    j["azimuth_max"] = cfg.azimuth_max;
    j["elevation_min"] = cfg.elevation_min;
    j["elevation_max"] = cfg.elevation_max;
    j["view_points"] = cfg.view_points;
    j["backend"] = cfg.backend;
    j["sampler"] = cfg.sampler == SamplerMode::Sampled ? "sampled" : "estimated";
    j["oracle_stage"] = to_string(cfg.oracle_stage);
    j["grasp_candidates"] = cfg.grasp_candidates;
    j["min_part_points"] = cfg.min_part_points;
    j["threads"] = cfg.threads;
    j["budget"] = cfg.rollout.budget;
    j["relative_threshold"] = cfg.rollout.relative_threshold;
    j["fit_restarts"] = cfg.ground.fit.restarts;
    j["fit_max_evals"] = cfg.ground.fit.max_evals;
    j["fit_downsample"] = cfg.ground.fit.downsample_to;
    return j.dump(2);
}

// ------------------------------------------------------------- trial ---

namespace {

ParamBinding random_theta(const GraspFamily& family, Rng& rng) {
    ParamBinding b;
    for (const auto& spec : family.theta)
        b[spec.name] = spec.range.fixed ? spec.range.lo
                                        : rng.uniform(spec.range.lo, spec.range.hi);
    return b;
}

struct StageOutcome {
    bool concept_wrong = false;
    bool grounding_poor = false;
    bool rule_wrong = false;
};

}  // namespace

TrialResult run_trial(const BenchmarkConfig& cfg, const std::string& archetype,
                      std::uint64_t trial_seed, ReasonerBackend& backend,
                      TranscriptLog* transcript) {
    TrialResult result;
    result.archetype = archetype;
    result.trial_seed = trial_seed;

    const auto fail = [&](FailStage stage) {
        result.success = false;
        result.failure_stage = stage;
        return result;
    };

    const ConceptRegistry& registry = builtin_registry();
    sim::ArticulatedObject object = sim::joint_state_init(
        sim::synth_object(archetype, {}, split_seed(trial_seed, 1)), split_seed(trial_seed, 2));
    const auto& annotation = object.annotation;
    const AnalyticConcept& gt_concept = registry.get(annotation.concept_id);
    const Grounding gt_grounding = object.oracle_grounding();
    StageOutcome flags;

    // --- view + actionable-part crop ---
    Rng view_rng(split_seed(trial_seed, 3));
    const double azimuth = view_rng.uniform(cfg.azimuth_min, cfg.azimuth_max);
    const double elevation = view_rng.uniform(cfg.elevation_min, cfg.elevation_max);

    PointCloud crop;
    std::string group = annotation.group;
    if (at_least(cfg.oracle_stage, OracleStage::Segmentation)) {
        crop = object.part_cloud_world();
    } else {
        const sim::RenderedView view = sim::render_view_tagged(
            object, azimuth, elevation, cfg.view_points, split_seed(trial_seed, 4));
        for (std::size_t i = 0; i < view.cloud.size(); ++i)
            if (view.part_mask[i]) {
                crop.points.push_back(view.cloud.points[i]);
                crop.normals.push_back(view.cloud.normals[i]);
            }
        if (static_cast<int>(crop.size()) < cfg.min_part_points)
            return fail(FailStage::Segmentation);
        try {
            ReasonerQuery q{QueryKind::PartIdentify, annotation.task, {}, std::nullopt};
            group = ask(backend, q, nullptr, transcript).chosen;
        } catch (const Error&) {
            return fail(FailStage::Segmentation);
        }
        if (group != annotation.group) return fail(FailStage::Segmentation);
    }

    // --- concept identification ---
    const AnalyticConcept* acon = &gt_concept;
    if (!at_least(cfg.oracle_stage, OracleStage::Concept)) {
        try {
            ReasonerQuery q{QueryKind::ConceptSelect, annotation.task,
                            registry.concepts_in_group(group), std::nullopt};
            const std::string chosen = ask(backend, q, nullptr, transcript).chosen;
            acon = &registry.get(chosen);
            flags.concept_wrong = chosen != annotation.concept_id;
        } catch (const Error&) {
            return fail(FailStage::ConceptSelect);
        }
    }

    // --- grounding ---
    Grounding grounding;
    if (at_least(cfg.oracle_stage, OracleStage::Pose)) {
        grounding = gt_grounding;
    } else {
        GroundConfig gcfg = cfg.ground;
        gcfg.fit.seed = split_seed(trial_seed, 5);
        gcfg.ransac.seed = split_seed(trial_seed, 6);
        try {
            if (at_least(cfg.oracle_stage, OracleStage::Params))
                grounding = ground_with_params(*acon, crop, gcfg, annotation.params);
            else
                grounding = ground(*acon, crop, gcfg);
        } catch (const Error&) {
            return fail(FailStage::Grounding);
        }
        result.grounding_residual = grounding.residual;
        if (acon->identity.id == annotation.concept_id) {
            const double rot = rotation_error_mod_symmetry(acon->symmetry, gt_grounding.pose.R,
                                                           grounding.pose.R);
            const double trans = (grounding.pose.t - gt_grounding.pose.t).norm();
            double param_err = 0.0;
            for (const auto& [name, value] : grounding.params) {
                const double ref = gt_grounding.params.at(name);
                param_err = std::max(param_err,
                                     std::abs(value - ref) / std::max(1e-6, std::abs(ref)));
            }
            flags.grounding_poor = trans > 0.025 || rot > 0.25 || param_err > 0.35;
        }
    }

    // --- grasp family + candidates ---
    const GraspFamily* family = nullptr;
    std::vector<ParamBinding> proposals_theta;
    if (at_least(cfg.oracle_stage, OracleStage::Grasp)) {
        family = acon->find_family(annotation.grasp_family);
        proposals_theta.push_back(default_params(family->theta));
    } else {
        try {
            std::vector<std::pair<std::string, std::string>> options;
            for (const auto& f : acon->grasp_families)
                options.emplace_back(f.name, f.synopsis);
            ReasonerQuery q{QueryKind::GraspSelect, annotation.task, options, std::nullopt};
            family = acon->find_family(ask(backend, q, nullptr, transcript).chosen);
        } catch (const Error&) {
            return fail(FailStage::Grasp);
        }
        if (cfg.sampler == SamplerMode::Estimated) {
            try {
                const auto ranked =
                    rank_candidates(*acon, *family, grounding, crop, cfg.rollout.gripper,
                                    cfg.grasp_candidates, split_seed(trial_seed, 7));
                for (const auto& c : ranked) {
                    if (c.score < kScoreFloor) break;
                    proposals_theta.push_back(c.theta);
                    if (static_cast<int>(proposals_theta.size()) >= cfg.rollout.budget) break;
                }
            } catch (const Error&) {
                return fail(FailStage::Grasp);
            }
            if (proposals_theta.empty()) return fail(FailStage::Grasp);
        } else {
            Rng rng(split_seed(trial_seed, 8));
            for (int i = 0; i < cfg.rollout.budget; ++i)
                proposals_theta.push_back(random_theta(*family, rng));
        }
    }

    // --- force rule ---
    const ForceRule* rule = nullptr;
    if (at_least(cfg.oracle_stage, OracleStage::Force)) {
        rule = acon->find_rule(annotation.force_rule);
    } else {
        try {
            std::vector<std::pair<std::string, std::string>> options;
            for (const auto& r : acon->force_rules) options.emplace_back(r.name, r.synopsis);
            ReasonerQuery q{QueryKind::ForceSelect, annotation.task, options, std::nullopt};
            rule = acon->find_rule(ask(backend, q, nullptr, transcript).chosen);
            flags.rule_wrong = rule->name != annotation.force_rule;
        } catch (const Error&) {
            return fail(FailStage::Force);
        }
    }

    // --- budgeted execution ---
    const auto generator = [&](int i) -> std::optional<sim::Proposal> {
        if (i >= static_cast<int>(proposals_theta.size())) return std::nullopt;
        try {
            sim::Proposal p;
            p.grasp = instantiate_grasp(*acon, *family, grounding, proposals_theta[i]);
            p.force = force_direction(*acon, *rule, grounding, p.grasp);
            return p;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    const sim::BudgetResult budget =
        sim::run_with_budget(generator, object, annotation.target_joint, cfg.rollout);
    result.attempts = budget.attempts;
    result.displacement = budget.outcome.displacement;
    result.relative_displacement = budget.outcome.relative_displacement;
    result.success = budget.outcome.success;
    if (result.success) return result;

    // --- exclusive failure attribution ---
    if (flags.concept_wrong) return fail(FailStage::ConceptSelect);
    if (flags.grounding_poor) return fail(FailStage::Grounding);
    const auto reason = budget.outcome.failure_reason;
    if (budget.attempts == 0 ||
        (reason && (*reason == sim::FailureReason::Collision ||
                    *reason == sim::FailureReason::WrongPart)))
        return fail(FailStage::Grasp);
    if (flags.rule_wrong || (reason && *reason == sim::FailureReason::NoMotion))
        return fail(FailStage::Force);
    return fail(FailStage::Rollout);
}

// --------------------------------------------------------- benchmark ---

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, ReasonerBackend* backend_override) {
    std::unique_ptr<ReasonerBackend> owned;
    ReasonerBackend* backend = backend_override;
    if (!backend) {
        if (cfg.backend == "live") {
            owned = std::make_unique<HttpBackend>(load_reasoner_config(cfg.reasoner_config));
        } else {
            owned = std::make_unique<MockBackend>(MockBackend::with_default_rules());
        }
        backend = owned.get();
    }
    std::unique_ptr<TranscriptLog> transcript;
    if (!cfg.transcript_path.empty())
        transcript = std::make_unique<TranscriptLog>(cfg.transcript_path);

    struct Job {
        std::string archetype;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& archetype : cfg.archetypes) {
        const std::uint64_t arch_stream = split_seed(cfg.seed, fnv1a(archetype));
        for (int t = 0; t < cfg.trials; ++t)
            jobs.push_back({archetype, split_seed(arch_stream, static_cast<std::uint64_t>(t))});
    }

    std::vector<TrialResult> results(jobs.size());
    const int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            results[i] = run_trial(cfg, jobs[i].archetype, jobs[i].seed, *backend,
                                   transcript.get());
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        for (int w = 0; w < threads; ++w)
            workers.push_back(std::async(std::launch::async, [&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) return;
                    results[i] = run_trial(cfg, jobs[i].archetype, jobs[i].seed, *backend,
                                           transcript.get());
                }
            }));
        for (auto& w : workers) w.get();
    }

    BenchmarkReport report;
    report.config = cfg;
    report.trials = results;
    for (const auto& archetype : cfg.archetypes) {
        ArchetypeStats stats;
        stats.archetype = archetype;
        for (const auto& name : kFailStageNames) stats.failure_histogram[name] = 0;
        for (const auto& r : results) {
            if (r.archetype != archetype) continue;
            ++stats.trials;
            if (r.success) ++stats.successes;
            else ++stats.failure_histogram[to_string(*r.failure_stage)];
        }
        report.per_archetype.push_back(std::move(stats));
    }
    return report;
}

std::string report_to_json(const BenchmarkReport& report) {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(config_to_json(report.config));
    j["per_archetype"] = nlohmann::ordered_json::array();
    for (const auto& a : report.per_archetype) {
        nlohmann::ordered_json ja;
        ja["archetype"] = a.archetype;
        ja["trials"] = a.trials;
        ja["successes"] = a.successes;
        ja["success_rate"] = a.rate();
        nlohmann::ordered_json hist = nlohmann::ordered_json::object();
        for (const auto& name : kFailStageNames) hist[name] = a.failure_histogram.at(name);
        ja["failure_histogram"] = hist;
        j["per_archetype"].push_back(ja);
    }
    j["overall"]["success_rate_per_trial"] = report.overall_rate_per_trial();
    j["overall"]["success_rate_per_object"] = report.overall_rate_per_object();
    j["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : report.trials) {
        nlohmann::ordered_json jt;
        jt["archetype"] = t.archetype;
        jt["seed"] = t.trial_seed;
        jt["success"] = t.success;
        if (t.failure_stage) jt["failure_stage"] = to_string(*t.failure_stage);
        jt["attempts"] = t.attempts;
        jt["displacement"] = t.displacement;
        jt["relative_displacement"] = t.relative_displacement;
        if (t.grounding_residual >= 0.0) jt["grounding_residual"] = t.grounding_residual;
        j["trials"].push_back(jt);
    }
    return j.dump(2);
}

std::string report_table(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "archetype      trials  success  rate    ";
    for (const auto& name : kFailStageNames) out << name << "  ";
    out << "\n";
    for (const auto& a : report.per_archetype) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-14s %6d  %7d  %.3f   ", a.archetype.c_str(), a.trials,
                      a.successes, a.rate());
        out << buf;
        for (const auto& name : kFailStageNames) {
            std::snprintf(buf, sizeof(buf), "%*d  ", static_cast<int>(name.size()),
                          a.failure_histogram.at(name));
            out << buf;
        }
        out << "\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "overall per-trial %.3f | per-object %.3f\n",
                  report.overall_rate_per_trial(), report.overall_rate_per_object());
    out << buf;
    return out.str();
}

}  // namespace acg::bench
