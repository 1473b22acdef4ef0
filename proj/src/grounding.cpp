#include "acg/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

#include "acg/errors.hpp"
#include "acg/rng.hpp"

namespace acg {

// ----------------------------------------------------------- umeyama ---

RigidTransform umeyama(const std::vector<Eigen::Vector3d>& src,
                       const std::vector<Eigen::Vector3d>& dst) {
    if (src.size() != dst.size()) throw Error("umeyama: size mismatch");
    const std::size_t n = src.size();
    if (n < 3) throw DegenerateConfiguration("umeyama needs at least 3 pairs");

    Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= static_cast<double>(n);
    cd /= static_cast<double>(n);

    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d a = src[i] - cs;
        H += a * (dst[i] - cd).transpose();
        spread = std::max(spread, a.squaredNorm());
    }
    if (spread < 1e-24) throw DegenerateConfiguration("umeyama: coincident source points");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d s = svd.singularValues();
    // rank < 2 leaves a free rotation about the common line
    if (s(1) <= 1e-12 * std::max(s(0), 1e-300))
        throw DegenerateConfiguration("umeyama: collinear configuration");

    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) D(2, 2) = -1.0;

    RigidTransform T;
    T.R = svd.matrixV() * D * svd.matrixU().transpose();
    T.t = cd - T.R * cs;
    return T;
}

// ------------------------------------------------------------ ransac ---

RansacResult ransac_align(const std::vector<Eigen::Vector3d>& src,
                          const std::vector<Eigen::Vector3d>& dst, const RansacConfig& cfg) {
    if (src.size() != dst.size()) throw Error("ransac_align: size mismatch");
    const std::size_t n = src.size();
    if (n < 3) throw DegenerateConfiguration("ransac_align needs at least 3 pairs");
    if (cfg.iterations < 1 || cfg.inlier_threshold <= 0.0)
        throw Error("ransac_align: bad config");

    Rng rng(cfg.seed);
    const double thr2 = cfg.inlier_threshold * cfg.inlier_threshold;

    std::size_t best_count = 0;
    double best_rms = std::numeric_limits<double>::infinity();
    RigidTransform best_T;
    bool found = false;

    std::vector<Eigen::Vector3d> sample_src(3), sample_dst(3);
    for (int it = 0; it < cfg.iterations; ++it) {
        std::size_t i0 = rng.uniform_index(n);
        std::size_t i1 = rng.uniform_index(n);
        std::size_t i2 = rng.uniform_index(n);
        if (i0 == i1 || i1 == i2 || i0 == i2) continue;
        sample_src = {src[i0], src[i1], src[i2]};
        sample_dst = {dst[i0], dst[i1], dst[i2]};
        RigidTransform T;
        try {
            T = umeyama(sample_src, sample_dst);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        std::size_t count = 0;
        double sq_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = (T.apply(src[i]) - dst[i]).squaredNorm();
            if (d2 < thr2) {
                ++count;
                sq_sum += d2;
            }
        }
        if (count < 3) continue;
        const double rms = std::sqrt(sq_sum / static_cast<double>(count));
        if (count > best_count || (count == best_count && rms < best_rms)) {
            best_count = count;
            best_rms = rms;
            best_T = T;
            found = true;
        }
    }

    const std::size_t need = static_cast<std::size_t>(std::max(cfg.min_inliers, 3));
    if (!found || best_count < need)
        throw NoConsensus("best consensus " + std::to_string(best_count) + " of " +
                          std::to_string(n) + ", need " + std::to_string(need));

    // refit on the winning consensus set
    std::vector<Eigen::Vector3d> in_src, in_dst;
    in_src.reserve(best_count);
    in_dst.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i)
        if ((best_T.apply(src[i]) - dst[i]).squaredNorm() < thr2) {
            in_src.push_back(src[i]);
            in_dst.push_back(dst[i]);
        }

    RansacResult result;
    result.transform = best_T;
    if (in_src.size() >= 3) {
        try {
            result.transform = umeyama(in_src, in_dst);
        } catch (const DegenerateConfiguration&) {
            // keep the hypothesis transform
        }
    }

    result.inlier_mask.resize(n);
    std::size_t final_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool in = (result.transform.apply(src[i]) - dst[i]).squaredNorm() < thr2;
        result.inlier_mask[i] = in ? 1 : 0;
        final_count += in ? 1 : 0;
    }
    if (final_count < need)
        throw NoConsensus("refit consensus " + std::to_string(final_count) + ", need " +
                          std::to_string(need));
    result.inlier_fraction = static_cast<double>(final_count) / static_cast<double>(n);
    return result;
}

PointCloud canonicalize(const PointCloud& cloud, const Grounding& grounding) {
    return apply(grounding.pose.inverse(), cloud);
}

// ------------------------------------------------- structural fitting ---

namespace {

// pseudo-parameters that let the fit absorb a canonical-frame translation;
// they never reach instantiate_structure
const char* const kOffsetNames[3] = {"__off_x", "__off_y", "__off_z"};

struct Objective {
    const AnalyticConcept& acon;
    const KdTree& cloud_tree;
    const std::vector<Eigen::Vector3d>& cloud_points;
    int template_samples;
    std::uint64_t template_seed;
    bool with_offset = false;
    int evals = 0;

    double operator()(const ParamBinding& params) {
        ++evals;
        ParamBinding structural = params;
        Eigen::Vector3d offset = Eigen::Vector3d::Zero();
        if (with_offset) {
            for (int k = 0; k < 3; ++k) {
                offset[k] = structural.at(kOffsetNames[k]);
                structural.erase(kOffsetNames[k]);
            }
        }
        const PrimitiveAssembly assembly = instantiate_structure(acon.structure, structural);
        PointCloud tpl = sample_surface(assembly, template_samples, template_seed);
        if (with_offset)
            for (auto& p : tpl.points) p += offset;
        return chamfer_to_indexed(tpl, cloud_tree, cloud_points);
    }
};

constexpr double kGolden = 0.6180339887498949;

template <typename F>
double grid_then_golden(F&& f, double lo, double hi, int grid, int golden_iters,
                        double& best_value);

/// Golden-section line search over [a, b]; returns the best probed value.
template <typename F>
double golden_section(F&& f, double a, double b, int iterations, double& best_value) {
    double c = b - kGolden * (b - a);
    double d = a + kGolden * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGolden * (b - a);
            fd = f(d);
        }
    }
    if (fc < fd) {
        best_value = fc;
        return c;
    }
    best_value = fd;
    return d;
}

template <typename F>
double grid_then_golden(F&& f, double lo, double hi, int grid, int golden_iters,
                        double& best_value) {
    double best_x = lo;
    best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        const double x = lo + (i + 0.5) * (hi - lo) / grid;
        const double v = f(x);
        if (v < best_value) {
            best_value = v;
            best_x = x;
        }
    }
    const double cell = (hi - lo) / grid;
    double refined_best = 0.0;
    const double refined = golden_section(f, std::max(lo, best_x - cell),
                                          std::min(hi, best_x + cell), golden_iters,
                                          refined_best);
    if (refined_best < best_value) {
        best_value = refined_best;
        return refined;
    }
    return best_x;
}

ParamBinding coordinate_descent(Objective& obj, const std::vector<ParamSpec>& specs,
                                ParamBinding start, int max_evals, double tol) {
    ParamBinding params = std::move(start);
    double current = obj(params);
    double window = 1.0;
    const int sweeps = 6;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        const double before = current;
        for (const auto& spec : specs) {
            if (spec.range.fixed) continue;
            if (obj.evals >= max_evals) return params;
            const double half = 0.5 * window * spec.range.width();
            const double center = params.at(spec.name);
            const double a = std::max(spec.range.lo, center - half);
            const double b = std::min(spec.range.hi, center + half);
            if (b - a < 1e-9) continue;
            double line_best = 0.0;
            const double x = golden_section(
                [&](double v) {
                    ParamBinding trial = params;
                    trial[spec.name] = v;
                    return obj(trial);
                },
                a, b, 10, line_best);
            if (line_best < current) {
                params[spec.name] = x;
                current = line_best;
            }
        }
        window *= 0.55;
        if (before - current < tol) break;
    }
    return params;
}

/// Bounded Nelder-Mead polish; follows coupled valleys that per-coordinate
/// line searches cannot. Deterministic: fixed initial simplex, no restarts.
ParamBinding nelder_mead(Objective& obj, const std::vector<ParamSpec>& specs, ParamBinding start,
                         int max_evals, double tol) {
    const std::size_t dim = specs.size();
    if (dim == 0) return start;

    const auto clamp_to_range = [&](std::vector<double>& x) {
        for (std::size_t d = 0; d < dim; ++d)
            x[d] = std::clamp(x[d], specs[d].range.lo, specs[d].range.hi);
    };
    const auto to_binding = [&](const std::vector<double>& x) {
        ParamBinding b;
        for (std::size_t d = 0; d < dim; ++d) b[specs[d].name] = x[d];
        return b;
    };

    std::vector<std::vector<double>> simplex;
    std::vector<double> value;
    std::vector<double> x0(dim);
    for (std::size_t d = 0; d < dim; ++d) x0[d] = start.at(specs[d].name);
    simplex.push_back(x0);
    value.push_back(obj(to_binding(x0)));
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<double> x = x0;
        const double step = 0.16 * specs[d].range.width();
        x[d] += (x[d] + step <= specs[d].range.hi) ? step : -step;
        clamp_to_range(x);
        simplex.push_back(x);
        value.push_back(obj(to_binding(x)));
    }

    const auto order = [&] {
        std::vector<std::size_t> idx(simplex.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> v2;
        for (std::size_t i : idx) {
            s2.push_back(simplex[i]);
            v2.push_back(value[i]);
        }
        simplex.swap(s2);
        value.swap(v2);
    };

    int evals = static_cast<int>(simplex.size());
    while (evals < max_evals) {
        order();
        if (value.back() - value.front() < tol) break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d];
        for (std::size_t d = 0; d < dim; ++d) centroid[d] /= static_cast<double>(dim);

        const auto combine = [&](double coeff) {
            std::vector<double> x(dim);
            for (std::size_t d = 0; d < dim; ++d)
                x[d] = centroid[d] + coeff * (simplex.back()[d] - centroid[d]);
            clamp_to_range(x);
            return x;
        };

        const std::vector<double> reflected = combine(-1.0);
        const double fr = obj(to_binding(reflected));
        ++evals;
        if (fr < value.front()) {
            const std::vector<double> expanded = combine(-2.0);
            const double fe = obj(to_binding(expanded));
            ++evals;
            simplex.back() = fe < fr ? expanded : reflected;
            value.back() = std::min(fe, fr);
            continue;
        }
        if (fr < value[value.size() - 2]) {
            simplex.back() = reflected;
            value.back() = fr;
            continue;
        }
        const std::vector<double> contracted = combine(0.5);
        const double fc = obj(to_binding(contracted));
        ++evals;
        if (fc < value.back()) {
            simplex.back() = contracted;
            value.back() = fc;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 1; i < simplex.size() && evals < max_evals; ++i) {
            for (std::size_t d = 0; d < dim; ++d)
                simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
            value[i] = obj(to_binding(simplex[i]));
            ++evals;
        }
    }
    order();
    return to_binding(simplex.front());
}

void local_small_feature_refine(const AnalyticConcept& acon, const PointCloud& canonical,
                                ParamBinding& params, std::uint64_t seed);

/// Valley traversal: move one parameter while shifting the template so its
/// centroid stays put; this follows the param/translation couplings that
/// axis-aligned steps miss.
ParamBinding valley_search(Objective& obj, const AnalyticConcept& acon, const FitConfig& cfg,
                           const PointCloud& cloud, ParamBinding fitted) {
    const double off_bound = 0.25 * cloud.bbox().diagonal();
    double current = obj(fitted);
    for (const auto& spec : acon.structure.params) {
        if (spec.range.fixed) continue;
        const double eps = 1e-3 * spec.range.width();
        ParamBinding probe = fitted;
        probe[spec.name] = std::min(spec.range.hi, probe.at(spec.name) + eps);
        const double actual_eps = probe.at(spec.name) - fitted.at(spec.name);
        if (actual_eps <= 0.0) continue;
        const auto centroid_of = [&](const ParamBinding& b) {
            ParamBinding structural = b;
            for (const auto* n : kOffsetNames) structural.erase(n);
            return sample_surface(instantiate_structure(acon.structure, structural), 400,
                                  split_seed(cfg.seed, 0xc17u))
                .centroid();
        };
        const Eigen::Vector3d dc = (centroid_of(probe) - centroid_of(fitted)) / actual_eps;

        const double base_p = fitted.at(spec.name);
        double line_best = 0.0;
        const double t_best = golden_section(
            [&](double t) {
                ParamBinding trial = fitted;
                trial[spec.name] = base_p + t;
                for (int k = 0; k < 3; ++k) {
                    auto& off = trial[kOffsetNames[k]];
                    off = std::clamp(off - t * dc[k], -off_bound, off_bound);
                }
                return obj(trial);
            },
            spec.range.lo - base_p, spec.range.hi - base_p, 14, line_best);
        if (line_best < current) {
            current = line_best;
            fitted[spec.name] = base_p + t_best;
            for (int k = 0; k < 3; ++k) {
                auto& off = fitted[kOffsetNames[k]];
                off = std::clamp(off - t_best * dc[k], -off_bound, off_bound);
            }
        }
    }
    return fitted;
}

/// Point-to-plane parameter polish. Mean Euclidean nearest-neighbor
/// distances lose first-order sensitivity once a feature offset drops below
/// the sampling spacing; projecting residuals onto surface normals keeps
/// thin features (plate thickness, small radii) observable. One golden
/// sweep per parameter plus the canonical-frame offsets.
void plane_refine(const AnalyticConcept& acon, const PointCloud& canonical,
                  ParamBinding& params, Eigen::Vector3d& offset, Eigen::Matrix3d& spin,
                  bool with_tilt, std::uint64_t seed) {
    if (!canonical.has_normals()) return;

    const int tpl_n = 1500;
    const auto objective = [&](const ParamBinding& structural, const Eigen::Vector3d& off,
                               const Eigen::Matrix3d& spin) {
        PointCloud tpl =
            sample_surface(instantiate_structure(acon.structure, structural), tpl_n, seed);
        for (std::size_t i = 0; i < tpl.size(); ++i) {
            tpl.points[i] = spin * tpl.points[i] + off;
            tpl.normals[i] = spin * tpl.normals[i];
        }
        KdTree tree(tpl.points);
        // normal-compatible pairing: a rim point must not calibrate a face
        double sum = 0.0;
        int kept = 0;
        double sum_all = 0.0;
        for (std::size_t i = 0; i < canonical.size(); ++i) {
            const auto nn = tree.nearest(canonical.points[i]);
            const Eigen::Vector3d d = canonical.points[i] - tpl.points[nn.index];
            const double along = std::abs(d.dot(tpl.normals[nn.index]));
            sum_all += along;
            if (canonical.normals[i].dot(tpl.normals[nn.index]) > 0.6) {
                sum += along + 0.2 * d.norm();
                ++kept;
            } else {
                sum += 0.2 * d.norm();  // incompatible pairing still costs distance
            }
        }
        if (kept < static_cast<int>(canonical.size() / 5))
            return sum_all / static_cast<double>(canonical.size());
        return sum / static_cast<double>(canonical.size());
    };

    const auto sample_at = [&](const ParamBinding& b) {
        return sample_surface(instantiate_structure(acon.structure, b), 400,
                              split_seed(seed, 0xc18u));
    };

    // a dimension is observable in normal space only when moving it shifts
    // surface points along their normals; tangential motion (a panel
    // stretching in-plane) is invisible to |d . n| and must stay with the
    // euclidean fit
    const PointCloud base_sample = sample_at(params);
    const auto normal_fraction = [&](const PointCloud& moved) {
        double along = 0.0, total = 0.0;
        for (std::size_t i = 0; i < base_sample.size(); ++i) {
            const Eigen::Vector3d d = moved.points[i] - base_sample.points[i];
            along += std::abs(d.dot(base_sample.normals[i]));
            total += d.norm();
        }
        return total > 1e-12 ? along / total : 0.0;
    };

    double current = objective(params, offset, spin);
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (const auto& spec : acon.structure.params) {
            if (spec.range.fixed) continue;
            const double base = params.at(spec.name);
            const double eps = 1e-3 * spec.range.width();
            ParamBinding probe = params;
            probe[spec.name] = std::min(spec.range.hi, base + eps);
            const double actual = probe.at(spec.name) - base;
            if (actual <= 0) continue;
            const PointCloud moved = sample_at(probe);
            Eigen::Vector3d dc = (moved.centroid() - base_sample.centroid()) / actual;
            {
                // judge normal-dominance after removing the mean shift
                PointCloud centered = moved;
                for (auto& q : centered.points) q -= actual * dc;
                if (normal_fraction(centered) < 0.5) continue;
            }
            double line_best = 0.0;
            const double x = golden_section(
                [&](double v) {
                    ParamBinding trial = params;
                    trial[spec.name] = v;
                    return objective(trial, offset - (v - base) * dc, spin);
                },
                spec.range.lo, spec.range.hi, 14, line_best);
            if (line_best < current) {
                current = line_best;
                params[spec.name] = x;
                offset -= (x - base) * dc;
            }
        }
        for (int axis = 0; axis < 3; ++axis) {
            double axis_weight = 0.0;
            for (const auto& n : base_sample.normals) axis_weight += std::abs(n[axis]);
            if (axis_weight / base_sample.size() < 0.02) continue;
            const double base = offset[axis];
            double line_best = 0.0;
            const double x = grid_then_golden(
                [&](double v) {
                    Eigen::Vector3d trial = offset;
                    trial[axis] = v;
                    return objective(params, trial, spin);
                },
                base - 0.04, base + 0.04, 11, 10, line_best);
            if (line_best < current) {
                current = line_best;
                offset[axis] = x;
            }
        }
        for (int axis = 2; axis >= (with_tilt ? 0 : 2); --axis) {
            Eigen::Vector3d a = Eigen::Vector3d::Zero();
            a[axis] = 1.0;
            double line_best = 0.0;
            const double window = axis == 2 ? 0.25 : 0.55;
            const double angle = grid_then_golden(
                [&](double v) {
                    const Eigen::Matrix3d trial =
                        spin * Eigen::AngleAxisd(v, a).toRotationMatrix();
                    return objective(params, offset, trial);
                },
                -window, window, 13, 10, line_best);
            if (line_best < current) {
                current = line_best;
                spin = spin * Eigen::AngleAxisd(angle, a).toRotationMatrix();
            }
        }
    }
}

ParamBinding stratified_start(const std::vector<ParamSpec>& specs, int restart, int restarts,
                              Rng& rng) {
    ParamBinding b;
    for (const auto& spec : specs) {
        if (spec.range.fixed) {
            b[spec.name] = spec.range.lo;
            continue;
        }
        const double u = (restart + rng.uniform()) / std::max(1, restarts);
        b[spec.name] = spec.range.lo + u * spec.range.width();
    }
    return b;
}

ParamBinding fit_params_impl(const AnalyticConcept& acon, const PointCloud& canonical,
                             const FitConfig& cfg, const ParamBinding* warm_start,
                             double* out_residual, Eigen::Vector3d* out_offset,
                             bool polish = true) {
    if (canonical.empty()) throw Error("fit_structural_params: empty cloud");
    if (cfg.restarts < 1 || cfg.max_evals < 1 || cfg.downsample_to < 1 ||
        cfg.template_samples < 1 || cfg.convergence_tol <= 0.0)
        throw Error("fit_structural_params: bad config");

    const PointCloud cloud = farthest_point_downsample(canonical, cfg.downsample_to);
    KdTree tree(cloud.points);
    Objective obj{acon,
                  tree,
                  cloud.points,
                  cfg.template_samples,
                  split_seed(cfg.seed, 0x7e3fu),
                  out_offset != nullptr,
                  0};

    std::vector<ParamSpec> specs = acon.structure.params;
    if (out_offset) {
        const double bound = 0.25 * cloud.bbox().diagonal();
        for (const auto* name : kOffsetNames)
            specs.push_back({name, {-bound, bound, false}, 0.0});
    }

    Rng restart_rng(split_seed(cfg.seed, 0x51a7u));
    ParamBinding best;
    double best_residual = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        ParamBinding start;
        if (r == 0 && warm_start) start = *warm_start;
        else if (r == 0) start = default_params(acon.structure.params);
        else start = stratified_start(acon.structure.params, r, cfg.restarts, restart_rng);
        if (out_offset)
            for (const auto* name : kOffsetNames) start[name] = 0.0;

        obj.evals = 0;
        ParamBinding fitted =
            coordinate_descent(obj, specs, std::move(start), cfg.max_evals, cfg.convergence_tol);
        if (polish && out_offset) fitted = valley_search(obj, acon, cfg, cloud, std::move(fitted));
        if (polish) {
            // two polish passes: the second restarts the simplex where the
            // first collapsed, which keeps shallow coupled valleys moving
            fitted = nelder_mead(obj, specs, std::move(fitted), cfg.max_evals,
                                 cfg.convergence_tol * 0.05);
            if (out_offset) fitted = valley_search(obj, acon, cfg, cloud, std::move(fitted));
            fitted = nelder_mead(obj, specs, std::move(fitted), cfg.max_evals / 2,
                                 cfg.convergence_tol * 0.05);
        }
        const double residual = obj(fitted);
        if (residual < best_residual) {
            best_residual = residual;
            best = std::move(fitted);
        }
    }
    if (out_offset) {
        for (int k = 0; k < 3; ++k) {
            (*out_offset)[k] = best.at(kOffsetNames[k]);
            best.erase(kOffsetNames[k]);
        }
    }
    if (out_residual) *out_residual = best_residual;
    return best;
}

}  // namespace

ParamBinding fit_structural_params(const AnalyticConcept& acon, const PointCloud& canonical,
                                   const FitConfig& cfg) {
    double residual = 0.0;
    ParamBinding params = fit_params_impl(acon, canonical, cfg, nullptr, &residual, nullptr);
    local_small_feature_refine(acon, canonical, params, split_seed(cfg.seed, 0xa0fu));
    const double scale = canonical.bbox().diagonal();
    if (residual > 0.1 * scale) throw FitDiverged(residual);
    return params;
}

// ------------------------------------------------------------ ground ---

namespace {

/// Principal frame with rotation-invariant sign canonicalization: each of
/// the two dominant eigenvectors is oriented so the third central moment
/// along it is non-negative; the last column completes a proper frame.
Eigen::Matrix3d principal_frame(const std::vector<Eigen::Vector3d>& points) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : points) c += p;
    c /= static_cast<double>(points.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector3d d = p - c;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Matrix3d F;
    F.col(0) = eig.eigenvectors().col(2);  // dominant first
    F.col(1) = eig.eigenvectors().col(1);
    for (int k = 0; k < 2; ++k) {
        double skew = 0.0;
        for (const auto& p : points) {
            const double t = (p - c).dot(F.col(k));
            skew += t * t * t;
        }
        if (skew < 0.0) F.col(k) = -F.col(k);
    }
    F.col(2) = F.col(0).cross(F.col(1));
    return F;
}

struct Hypothesis {
    RigidTransform pose;
    double score = std::numeric_limits<double>::infinity();
    int index = 0;
};

/// One correspondence pass: for every cloud point, its nearest template
/// point (looked up in canonical space, so the template tree is reused).
void correspondences(const RigidTransform& pose, const KdTree& tpl_tree,
                     const std::vector<Eigen::Vector3d>& tpl_points,
                     const std::vector<Eigen::Vector3d>& cloud,
                     std::vector<Eigen::Vector3d>& src, std::vector<Eigen::Vector3d>& dst,
                     std::vector<double>& dists) {
    const RigidTransform inv = pose.inverse();
    src.clear();
    dst.clear();
    dists.clear();
    src.reserve(cloud.size());
    dst.reserve(cloud.size());
    dists.reserve(cloud.size());
    for (const auto& p : cloud) {
        const auto nn = tpl_tree.nearest(inv.apply(p));
        src.push_back(pose.apply(tpl_points[nn.index]));
        dst.push_back(p);
        dists.push_back(nn.distance);
    }
}

/// Trimmed-umeyama refinement used while screening pose hypotheses.
RigidTransform icp_trimmed(RigidTransform pose, const KdTree& tpl_tree,
                           const std::vector<Eigen::Vector3d>& tpl_points,
                           const std::vector<Eigen::Vector3d>& cloud, int iterations) {
    std::vector<Eigen::Vector3d> src, dst;
    std::vector<double> dists;
    for (int it = 0; it < iterations; ++it) {
        correspondences(pose, tpl_tree, tpl_points, cloud, src, dst, dists);
        std::vector<std::size_t> order(src.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return dists[a] < dists[b]; });
        const std::size_t keep = std::max<std::size_t>(3, order.size() * 3 / 4);
        std::vector<Eigen::Vector3d> ts, td;
        ts.reserve(keep);
        td.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            ts.push_back(src[order[i]]);
            td.push_back(dst[order[i]]);
        }
        try {
            pose = compose(umeyama(ts, td), pose);
        } catch (const DegenerateConfiguration&) {
            break;
        }
    }
    return pose;
}

/// ICP with ransac_align on the correspondence set, threshold widened to
/// the current fit quality so early iterations keep a consensus.
RigidTransform icp_ransac(RigidTransform pose, const KdTree& tpl_tree,
                          const std::vector<Eigen::Vector3d>& tpl_points,
                          const std::vector<Eigen::Vector3d>& cloud, const RansacConfig& base,
                          int iterations, std::uint64_t seed) {
    std::vector<Eigen::Vector3d> src, dst;
    std::vector<double> dists;
    for (int it = 0; it < iterations; ++it) {
        correspondences(pose, tpl_tree, tpl_points, cloud, src, dst, dists);
        std::vector<double> sorted = dists;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        RansacConfig cfg = base;
        cfg.inlier_threshold = std::max(base.inlier_threshold, 1.5 * median);
        cfg.min_inliers = 3;
        cfg.seed = split_seed(seed, static_cast<std::uint64_t>(it));
        try {
            pose = compose(ransac_align(src, dst, cfg).transform, pose);
        } catch (const NoConsensus&) {
            break;
        } catch (const DegenerateConfiguration&) {
            break;
        }
    }
    return pose;
}

double canonical_residual(const RigidTransform& pose, const KdTree& tpl_tree,
                          const std::vector<Eigen::Vector3d>& tpl_points,
                          const PointCloud& cloud) {
    const PointCloud canonical = apply(pose.inverse(), cloud);
    return chamfer_to_indexed(canonical, tpl_tree, tpl_points);
}

/// Parameters that only shape small primitives barely move the global
/// chamfer (area weighting starves them of samples). This pass refits them
/// against the local cloud region around those primitives.
void local_small_feature_refine(const AnalyticConcept& acon, const PointCloud& canonical,
                                ParamBinding& params, std::uint64_t seed) {
    const PrimitiveAssembly assembly = instantiate_structure(acon.structure, params);
    double total_area = 0.0;
    for (const auto& prim : assembly) total_area += prim.surface_area();

    std::vector<std::size_t> small;
    std::set<std::string> small_size_syms, small_syms, large_syms;
    for (std::size_t i = 0; i < assembly.size(); ++i) {
        const bool is_small = assembly[i].surface_area() < 0.2 * total_area;
        std::set<std::string>& bucket = is_small ? small_syms : large_syms;
        for (const auto& e : acon.structure.primitives[i].size) {
            dsl::collect_free_symbols(e, bucket);
            if (is_small) dsl::collect_free_symbols(e, small_size_syms);
        }
        dsl::collect_free_symbols(acon.structure.primitives[i].local_pose, bucket);
        if (is_small) small.push_back(i);
    }
    if (small.empty() || small.size() == assembly.size()) return;

    std::vector<ParamSpec> specs;
    for (const auto& spec : acon.structure.params)
        if (small_syms.count(spec.name) && !large_syms.count(spec.name) && !spec.range.fixed)
            specs.push_back(spec);
    if (specs.empty()) return;

    // crop the cloud around the small primitives; points that sit closer to
    // a large primitive belong to it and would bias the local objective
    PrimitiveAssembly small_assembly, large_assembly;
    for (std::size_t i = 0; i < assembly.size(); ++i) {
        if (std::find(small.begin(), small.end(), i) != small.end())
            small_assembly.push_back(assembly[i]);
        else
            large_assembly.push_back(assembly[i]);
    }
    Aabb region = assembly_bbox(small_assembly, 128);
    const double margin = 0.25 * region.diagonal() + 0.01;
    PointCloud local;
    for (const auto& p : canonical.points) {
        if ((p - region.center()).cwiseAbs().maxCoeff() >
            0.5 * region.extent().maxCoeff() + margin)
            continue;
        if (std::abs(assembly_sdf(small_assembly, p)) > std::abs(assembly_sdf(large_assembly, p)))
            continue;
        local.points.push_back(p);
    }
    if (local.size() < 40) return;

    KdTree local_tree(local.points);
    const std::vector<std::size_t> small_indices = small;
    const auto objective = [&](const ParamBinding& trial) {
        ParamBinding full = params;
        for (const auto& spec : specs) full[spec.name] = trial.at(spec.name);
        const PrimitiveAssembly trial_assembly = instantiate_structure(acon.structure, full);
        PrimitiveAssembly subset;
        for (std::size_t i : small_indices) subset.push_back(trial_assembly[i]);
        PointCloud tpl = sample_surface(subset, 500, split_seed(seed, 0x77));
        return chamfer_to_indexed(tpl, local_tree, local.points);
    };

    // per-coordinate golden sweeps, then accept only improvements
    ParamBinding current;
    for (const auto& spec : specs) current[spec.name] = params.at(spec.name);
    double best_value = objective(current);
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (const auto& spec : specs) {
            double line_best = 0.0;
            const double x = golden_section(
                [&](double v) {
                    ParamBinding trial = current;
                    trial[spec.name] = v;
                    return objective(trial);
                },
                spec.range.lo, spec.range.hi, 14, line_best);
            if (line_best < best_value) {
                best_value = line_best;
                current[spec.name] = x;
            }
        }
    }
    for (const auto& spec : specs) params[spec.name] = current.at(spec.name);
}

/// Rotation about the canonical up axis is weakly observable for
/// near-axisymmetric parts (point-to-point ICP trims the asymmetric
/// evidence); a direct line search over yaw locks it. For small parts the
/// tilt axes get the same treatment.
RigidTransform yaw_polish(const RigidTransform& pose_in, const KdTree& tpl_tree,
                          const std::vector<Eigen::Vector3d>& tpl_points,
                          const PointCloud& cloud, bool with_tilt = false) {
    RigidTransform pose = pose_in;
    double base = canonical_residual(pose, tpl_tree, tpl_points, cloud);
    const int axes = with_tilt ? 3 : 1;
    for (int pass = 0; pass < axes; ++pass) {
        const int axis = (2 + pass) % 3;  // z first, then x, y
        double line_best = 0.0;
        const double angle = grid_then_golden(
            [&](double phi) {
                RigidTransform spun = pose;
                Eigen::Vector3d a = Eigen::Vector3d::Zero();
                a[axis] = 1.0;
                spun.R = pose.R * Eigen::AngleAxisd(phi, a).toRotationMatrix();
                return canonical_residual(spun, tpl_tree, tpl_points, cloud);
            },
            -0.5, 0.5, 15, 10, line_best);
        if (line_best < base) {
            base = line_best;
            Eigen::Vector3d a = Eigen::Vector3d::Zero();
            a[axis] = 1.0;
            pose.R = pose.R * Eigen::AngleAxisd(angle, a).toRotationMatrix();
        }
    }
    return pose;
}

Grounding ground_impl(const AnalyticConcept& acon, const PointCloud& cloud,
                      const GroundConfig& cfg, const ParamBinding* locked) {
    if (cloud.empty()) throw Error("ground: empty cloud");
    FitConfig fit = cfg.fit;
    if (fit.max_rounds < 1 || fit.refine_hypotheses < 1 || fit.icp_iterations < 1)
        throw Error("ground: bad config");

    const double cloud_diag = cloud.bbox().diagonal();
    // large parts need denser sampling for the same chamfer resolution
    const double scale = std::clamp(cloud_diag / 0.35, 1.0, 1.7);
    fit.template_samples = static_cast<int>(fit.template_samples * scale);
    fit.downsample_to = static_cast<int>(fit.downsample_to * scale);
    const PointCloud ds = farthest_point_downsample(cloud, fit.downsample_to);

    const ParamBinding params0 = locked ? *locked : default_params(acon.structure.params);
    PointCloud tpl0 = sample_surface(instantiate_structure(acon.structure, params0),
                                     fit.template_samples, split_seed(fit.seed, 0x7e3fu));

    // principal-axes hypotheses: 4 proper sign combinations x 4 canonical yaws
    const Eigen::Matrix3d Fc = principal_frame(ds.points);
    const Eigen::Matrix3d Ft = principal_frame(tpl0.points);
    const Eigen::Vector3d c_cloud = ds.centroid();
    const Eigen::Vector3d c_tpl = tpl0.centroid();

    static const double kSigns[4][3] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    std::vector<Hypothesis> hyps;
    hyps.reserve(16);
    KdTree tpl0_tree(tpl0.points);
    const PointCloud screen_cloud = farthest_point_downsample(ds, 250);
    for (int si = 0; si < 4; ++si) {
        Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
        S(0, 0) = kSigns[si][0];
        S(1, 1) = kSigns[si][1];
        S(2, 2) = kSigns[si][2];
        for (int yaw = 0; yaw < 4; ++yaw) {
            Hypothesis raw;
            raw.index = 2 * (si * 4 + yaw);
            raw.pose.R = Fc * S * rot_z(yaw * M_PI / 2).R * Ft.transpose();
            raw.pose.t = c_cloud - raw.pose.R * c_tpl;

            // keep both the axis-aligned pose and its ICP-settled variant;
            // the settle step can drag small parts into tilted basins
            Hypothesis settled = raw;
            settled.index = raw.index + 1;
            settled.pose = icp_trimmed(raw.pose, tpl0_tree, tpl0.points, screen_cloud.points, 3);
            raw.score = canonical_residual(raw.pose, tpl0_tree, tpl0.points, screen_cloud);
            settled.score =
                canonical_residual(settled.pose, tpl0_tree, tpl0.points, screen_cloud);
            hyps.push_back(settled);
            hyps.push_back(raw);
        }
    }
    std::sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
        return a.score != b.score ? a.score < b.score : a.index < b.index;
    });

    // keep the best few *distinct* orientations; for symmetric parts the yaw
    // variants of one basin would otherwise occupy every slot
    const int keep_count = cloud_diag < 0.12 ? fit.refine_hypotheses + 2 : fit.refine_hypotheses;
    std::vector<Hypothesis> kept;
    for (const auto& h : hyps) {
        if (static_cast<int>(kept.size()) >= keep_count) break;
        bool distinct = true;
        for (const auto& k : kept)
            if (rotation_error_mod_symmetry(acon.symmetry, k.pose.R, h.pose.R) < 0.35)
                distinct = false;
        if (distinct) kept.push_back(h);
    }
    for (const auto& h : hyps) {
        if (static_cast<int>(kept.size()) >= keep_count) break;
        bool already = false;
        for (const auto& k : kept) already |= k.index == h.index;
        if (!already) kept.push_back(h);
    }

    struct Refined {
        ParamBinding params;
        RigidTransform pose;
        PointCloud tpl;
        double residual = std::numeric_limits<double>::infinity();
        int index = 0;
    };
    std::vector<Refined> refined;

    // disk-like templates leave the principal-frame phase arbitrary; detect
    // in-plane degeneracy once so only those get a yaw start sweep
    const bool z_degenerate = [&] {
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto& q : tpl0.points) {
            const Eigen::Vector3d d = q - c_tpl;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        return eig.eigenvalues()(1) > 0.75 * eig.eigenvalues()(2);
    }();

    for (std::size_t hi = 0; hi < kept.size(); ++hi) {
        RigidTransform pose = kept[hi].pose;
        if (z_degenerate) {
            double best_yaw_res = canonical_residual(pose, tpl0_tree, tpl0.points, screen_cloud);
            RigidTransform best_yaw_pose = pose;
            for (int step = 1; step < 36; ++step) {
                const RigidTransform candidate =
                    compose(pose, rot_z(step * (2.0 * M_PI / 36)));
                const double r =
                    canonical_residual(candidate, tpl0_tree, tpl0.points, screen_cloud);
                if (r < best_yaw_res) {
                    best_yaw_res = r;
                    best_yaw_pose = candidate;
                }
            }
            pose = best_yaw_pose;
        }
        ParamBinding params = params0;
        PointCloud tpl = tpl0;
        auto tree = std::make_unique<KdTree>(tpl.points);

        Refined out;
        out.index = kept[hi].index;
        for (int round = 0; round < fit.max_rounds; ++round) {
            if (!locked) {
                const PointCloud p_star = apply(pose.inverse(), ds);
                FitConfig round_cfg = fit;
                round_cfg.restarts = round == 0 ? fit.restarts : 1;
                round_cfg.max_evals = fit.max_evals / 2;
                round_cfg.seed = split_seed(fit.seed, 0x100u + kept[hi].index * 8u + round);
                Eigen::Vector3d offset = Eigen::Vector3d::Zero();
                params = fit_params_impl(acon, p_star, round_cfg, &params, nullptr, &offset,
                                         /*polish=*/false);
                pose = compose(pose, RigidTransform::translation(offset));
                tpl = sample_surface(instantiate_structure(acon.structure, params),
                                     fit.template_samples, split_seed(fit.seed, 0x7e3fu));
                tree = std::make_unique<KdTree>(tpl.points);
            }
            pose = icp_ransac(pose, *tree, tpl.points, ds.points, cfg.ransac, fit.icp_iterations,
                              split_seed(cfg.ransac.seed, 0x200u + kept[hi].index * 8u + round));
            const double residual = canonical_residual(pose, *tree, tpl.points, ds);
            if (residual < out.residual - 1e-12) {
                const double gain = out.residual - residual;
                out.residual = residual;
                out.pose = pose;
                out.params = params;
                out.tpl = tpl;
                if (gain < fit.convergence_tol) break;
            } else {
                break;  // keep the best round; the tracked residual never rises
            }
        }
        if (std::isfinite(out.residual)) refined.push_back(std::move(out));
    }
    if (refined.empty()) throw FitDiverged(std::numeric_limits<double>::infinity());

    // winner selection at a denser sampling, where near-symmetric imposters
    // separate from the true basin
    const int dense_n = std::min(3 * fit.template_samples, 3000);
    const auto dense_residual = [&](const ParamBinding& params, const RigidTransform& pose,
                                    PointCloud* tpl_out, std::unique_ptr<KdTree>* tree_out) {
        PointCloud tpl = sample_surface(instantiate_structure(acon.structure, params), dense_n,
                                        split_seed(fit.seed, 0x7e40u));
        auto tree = std::make_unique<KdTree>(tpl.points);
        const double r = canonical_residual(pose, *tree, tpl.points, ds);
        if (tpl_out) *tpl_out = std::move(tpl);
        if (tree_out) *tree_out = std::move(tree);
        return r;
    };

    // rank candidates at dense sampling and fully polish the best two;
    // near-symmetric imposters only separate from the true basin once both
    // are well converged
    for (auto& r : refined) r.residual = dense_residual(r.params, r.pose, nullptr, nullptr);
    std::sort(refined.begin(), refined.end(), [](const Refined& a, const Refined& b) {
        return a.residual != b.residual ? a.residual < b.residual : a.index < b.index;
    });
    if (std::getenv("ACG_DEBUG_GROUND")) {
        for (const auto& r : refined)
            std::fprintf(stderr, "[ground] candidate idx %d residual %.5f\n", r.index,
                         r.residual);
    }
    std::size_t polish_count = locked ? 1 : std::min<std::size_t>(2, refined.size());
    const double polish_gate = cloud_diag < 0.12 ? 2.5 : 1.45;
    while (!locked && polish_count < std::min<std::size_t>(4, refined.size()) &&
           refined[polish_count].residual < polish_gate * refined[0].residual)
        ++polish_count;

    for (std::size_t c = 0; !locked && c < polish_count; ++c) {
        Refined& cand = refined[c];
        for (int polish = 0; polish < 1; ++polish) {
            FitConfig polish_cfg = fit;
            polish_cfg.restarts = 1;
            polish_cfg.seed = split_seed(fit.seed, 0x900u + 16 * c + polish);
            Eigen::Vector3d offset = Eigen::Vector3d::Zero();
            ParamBinding params = fit_params_impl(acon, apply(cand.pose.inverse(), ds),
                                                  polish_cfg, &cand.params, nullptr, &offset);
            RigidTransform pose = compose(cand.pose, RigidTransform::translation(offset));
            local_small_feature_refine(acon, apply(pose.inverse(), ds), params,
                                       split_seed(fit.seed, 0xa00u + 16 * c + polish));
            PointCloud tpl;
            std::unique_ptr<KdTree> tree;
            dense_residual(params, pose, &tpl, &tree);
            pose = icp_ransac(pose, *tree, tpl.points, ds.points, cfg.ransac,
                              fit.icp_iterations,
                              split_seed(cfg.ransac.seed, 0x901u + 16 * c + polish));
            pose = yaw_polish(pose, *tree, tpl.points, ds, cloud_diag < 0.12);
            const double residual = canonical_residual(pose, *tree, tpl.points, ds);
            if (residual < cand.residual - 1e-12) {
                cand.residual = residual;
                cand.pose = pose;
                cand.params = params;
            } else {
                break;
            }
        }
    }

    std::size_t winner = 0;
    for (std::size_t i = 1; i < polish_count; ++i)
        if (refined[i].residual < refined[winner].residual -
                1e-15 ||
            (refined[i].residual == refined[winner].residual &&
             refined[i].index < refined[winner].index))
            winner = i;

    if (!locked) {
        Refined& cand = refined[winner];
        for (int polish = 1; polish < 3; ++polish) {
            FitConfig polish_cfg = fit;
            polish_cfg.restarts = 1;
            polish_cfg.seed = split_seed(fit.seed, 0xb00u + polish);
            Eigen::Vector3d offset = Eigen::Vector3d::Zero();
            ParamBinding params = fit_params_impl(acon, apply(cand.pose.inverse(), ds),
                                                  polish_cfg, &cand.params, nullptr, &offset);
            RigidTransform pose = compose(cand.pose, RigidTransform::translation(offset));
            local_small_feature_refine(acon, apply(pose.inverse(), ds), params,
                                       split_seed(fit.seed, 0xb40u + polish));
            PointCloud tpl;
            std::unique_ptr<KdTree> tree;
            dense_residual(params, pose, &tpl, &tree);
            pose = icp_ransac(pose, *tree, tpl.points, ds.points, cfg.ransac,
                              fit.icp_iterations,
                              split_seed(cfg.ransac.seed, 0xb80u + polish));
            pose = yaw_polish(pose, *tree, tpl.points, ds);
            const double residual = canonical_residual(pose, *tree, tpl.points, ds);
            if (residual < cand.residual - 1e-12) {
                cand.residual = residual;
                cand.pose = pose;
                cand.params = params;
            } else {
                break;
            }
        }
    }

    if (!locked) {
        // near-symmetric imposter check: rotate the fitted template about
        // its own bbox center and let each twin re-converge briefly; the
        // twin inherits the panel-scale alignment, so only genuinely
        // asymmetric evidence (a hinge barrel, a stem) decides
        Refined& cand = refined[winner];
        const Aabb tpl_box =
            assembly_bbox(instantiate_structure(acon.structure, cand.params), 256);
        const Eigen::Vector3d center = tpl_box.center();
        std::vector<std::pair<int, double>> twins = {
            {0, M_PI}, {1, M_PI}, {2, M_PI}, {2, M_PI / 2}, {2, -M_PI / 2}};
        if (cloud_diag < 0.12) {
            // small parts: tilted imposter basins sit a quarter turn away
            twins.insert(twins.end(),
                         {{0, M_PI / 2}, {0, -M_PI / 2}, {1, M_PI / 2}, {1, -M_PI / 2}});
        }
        for (const auto& [twin_axis, twin_angle] : twins) {
            Eigen::Vector3d axis = Eigen::Vector3d::Zero();
            axis[twin_axis] = 1.0;
            const RigidTransform flip = RigidTransform::about_axis(center, axis, twin_angle);
            RigidTransform pose = compose(cand.pose, flip);
            if (rotation_error_mod_symmetry(acon.symmetry, cand.pose.R, pose.R) < 0.3)
                continue;  // equivalent under the declared symmetry
            ParamBinding params = cand.params;
            FitConfig twin_cfg = fit;
            twin_cfg.restarts = 1;
            twin_cfg.max_evals = fit.max_evals / 2;
            twin_cfg.seed = split_seed(fit.seed, 0xe00u + twin_axis * 4 + (twin_angle > 0));
            Eigen::Vector3d offset = Eigen::Vector3d::Zero();
            params = fit_params_impl(acon, apply(pose.inverse(), ds), twin_cfg, &params,
                                     nullptr, &offset, /*polish=*/false);
            pose = compose(pose, RigidTransform::translation(offset));
            PointCloud tpl;
            std::unique_ptr<KdTree> tree;
            dense_residual(params, pose, &tpl, &tree);
            pose = icp_ransac(pose, *tree, tpl.points, ds.points, cfg.ransac, 3,
                              split_seed(cfg.ransac.seed, 0xe40u + twin_axis));
            pose = yaw_polish(pose, *tree, tpl.points, ds, cloud_diag < 0.12);
            const double residual = canonical_residual(pose, *tree, tpl.points, ds);
            if (residual < cand.residual - 1e-12) {
                cand.residual = residual;
                cand.pose = pose;
                cand.params = params;
            }
        }

        // final normal-space calibration: sub-spacing feature offsets are
        // invisible to the euclidean chamfer gate, so this pass is applied
        // unconditionally before the residual is re-measured
        Eigen::Vector3d plane_offset = Eigen::Vector3d::Zero();
        Eigen::Matrix3d spin = Eigen::Matrix3d::Identity();
        plane_refine(acon, apply(cand.pose.inverse(), ds), cand.params, plane_offset, spin,
                     cloud_diag < 0.12, split_seed(fit.seed, 0xd00u));
        cand.pose = compose(cand.pose, compose(RigidTransform::translation(plane_offset),
                                               RigidTransform::rotation(spin)));
        cand.residual = dense_residual(cand.params, cand.pose, nullptr, nullptr);
    }

    Grounding best;
    best.concept_id = acon.identity.id;
    best.params = refined[winner].params;
    best.pose = refined[winner].pose;
    best.residual = refined[winner].residual;

    // inlier fraction against the fitted model at the dense sampling
    PointCloud final_tpl;
    std::unique_ptr<KdTree> final_tree;
    best.residual = dense_residual(best.params, best.pose, &final_tpl, &final_tree);
    const RigidTransform inv = best.pose.inverse();
    std::size_t inliers = 0;
    for (const auto& p : ds.points)
        if (final_tree->nearest(inv.apply(p)).distance < cfg.ransac.inlier_threshold) ++inliers;
    best.inlier_fraction = static_cast<double>(inliers) / static_cast<double>(ds.size());

    if (best.residual > 0.1 * cloud_diag) throw FitDiverged(best.residual);
    return best;
}

}  // namespace

Grounding ground(const AnalyticConcept& acon, const PointCloud& cloud,
                 const GroundConfig& cfg) {
    return ground_impl(acon, cloud, cfg, nullptr);
}

Grounding ground_with_params(const AnalyticConcept& acon, const PointCloud& cloud,
                             const GroundConfig& cfg, const ParamBinding& locked_params) {
    check_binding(acon.structure.params, locked_params, "locked structural parameters");
    return ground_impl(acon, cloud, cfg, &locked_params);
}

// ---------------------------------------------------------- symmetry ---

namespace {

double geodesic(const Eigen::Matrix3d& M) {
    const double c = (M.trace() - 1.0) * 0.5;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

double angle_from_max_trace(double max_trace) {
    return std::acos(std::clamp((max_trace - 1.0) * 0.5, -1.0, 1.0));
}

}  // namespace

double rotation_error_mod_symmetry(const Symmetry& sym, const Eigen::Matrix3d& reference,
                                   const Eigen::Matrix3d& estimate) {
    const Eigen::Matrix3d Q = reference.transpose() * estimate;
    const int k = sym.axis;          // symmetry axis index
    const int i = (k + 1) % 3;       // plane indices
    const int j = (k + 2) % 3;

    switch (sym.kind) {
        case Symmetry::Kind::None:
            return geodesic(Q);
        case Symmetry::Kind::Cyclic: {
            double best = std::numeric_limits<double>::infinity();
            Eigen::Vector3d axis = Eigen::Vector3d::Zero();
            axis[k] = 1.0;
            for (int m = 0; m < sym.order; ++m) {
                const Eigen::Matrix3d S =
                    Eigen::AngleAxisd(2.0 * M_PI * m / sym.order, axis).toRotationMatrix();
                best = std::min(best, geodesic(S.transpose() * Q));
            }
            return best;
        }
        case Symmetry::Kind::Axial: {
            const double amp = std::hypot(Q(i, i) + Q(j, j), Q(j, i) - Q(i, j));
            return angle_from_max_trace(amp + Q(k, k));
        }
        case Symmetry::Kind::AxialFlip: {
            const double plain = std::hypot(Q(i, i) + Q(j, j), Q(j, i) - Q(i, j)) + Q(k, k);
            // flipped branch: pi rotation about the i axis composed with the spin
            const double flipped = std::hypot(Q(i, i) - Q(j, j), Q(j, i) + Q(i, j)) - Q(k, k);
            return angle_from_max_trace(std::max(plain, flipped));
        }
        case Symmetry::Kind::Orthorhombic: {
            double best = geodesic(Q);
            for (int axis_idx = 0; axis_idx < 3; ++axis_idx) {
                Eigen::Vector3d axis = Eigen::Vector3d::Zero();
                axis[axis_idx] = 1.0;
                const Eigen::Matrix3d S = Eigen::AngleAxisd(M_PI, axis).toRotationMatrix();
                best = std::min(best, geodesic(S.transpose() * Q));
            }
            return best;
        }
    }
    return geodesic(Q);
}

// -------------------------------------------------------------- json ---

std::string grounding_to_json(const Grounding& g) {
    nlohmann::ordered_json j;
    j["concept_id"] = g.concept_id;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [name, value] : g.params) params[name] = value;
    j["params"] = params;
    std::vector<double> r;
    r.reserve(9);
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) r.push_back(g.pose.R(row, col));
    j["pose"]["R"] = r;
    j["pose"]["t"] = {g.pose.t.x(), g.pose.t.y(), g.pose.t.z()};
    j["residual"] = g.residual;
    j["inlier_fraction"] = g.inlier_fraction;
    return j.dump(2);
}

Grounding grounding_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Grounding g;
    g.concept_id = j.at("concept_id").get<std::string>();
    for (const auto& [name, value] : j.at("params").items())
        g.params[name] = value.get<double>();
    const auto r = j.at("pose").at("R").get<std::vector<double>>();
    if (r.size() != 9) throw IoError("grounding json: pose.R must have 9 entries");
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) g.pose.R(row, col) = r[row * 3 + col];
    const auto t = j.at("pose").at("t").get<std::vector<double>>();
    if (t.size() != 3) throw IoError("grounding json: pose.t must have 3 entries");
    g.pose.t = {t[0], t[1], t[2]};
    g.residual = j.at("residual").get<double>();
    g.inlier_fraction = j.at("inlier_fraction").get<double>();
    return g;
}

}  // namespace acg
