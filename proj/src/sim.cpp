#include "acg/sim.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "acg/dsl/parser.hpp"

namespace acg::sim {

// ----------------------------------------------------- object basics ---

const Link& ArticulatedObject::link(const std::string& id) const {
    for (const auto& l : links)
        if (l.id == id) return l;
    throw Error("unknown link: " + id);
}

const Joint& ArticulatedObject::joint(const std::string& id) const {
    for (const auto& j : joints)
        if (j.id == id) return j;
    throw Error("unknown joint: " + id);
}

Joint& ArticulatedObject::joint(const std::string& id) {
    for (auto& j : joints)
        if (j.id == id) return j;
    throw Error("unknown joint: " + id);
}

namespace {

RigidTransform joint_motion(const Joint& j) {
    if (j.kind == JointKind::Revolute)
        return RigidTransform::about_axis(j.axis_point, j.axis_dir, j.state);
    return RigidTransform::translation(j.axis_dir * j.state);
}

}  // namespace

RigidTransform ArticulatedObject::link_world_pose(const std::string& id) const {
    if (id == base_link) return base_pose;
    for (const auto& j : joints)
        if (j.child == id) return compose(link_world_pose(j.parent), joint_motion(j));
    throw Error("link has no path to base: " + id);
}

bool ArticulatedObject::moves_with(const std::string& joint_id, const std::string& link_id) const {
    const Joint& j = joint(joint_id);
    std::string cur = link_id;
    while (cur != base_link) {
        bool found = false;
        for (const auto& jj : joints)
            if (jj.child == cur) {
                if (jj.id == j.id) return true;
                cur = jj.parent;
                found = true;
                break;
            }
        if (!found) return false;
    }
    return false;
}

RigidTransform ArticulatedObject::oracle_pose() const {
    return compose(link_world_pose(annotation.link_id), annotation.pose_in_link);
}

Grounding ArticulatedObject::oracle_grounding() const {
    Grounding g;
    g.concept_id = annotation.concept_id;
    g.params = annotation.params;
    g.pose = oracle_pose();
    g.residual = 0.0;
    g.inlier_fraction = 1.0;
    return g;
}

PointCloud ArticulatedObject::part_cloud_world() const {
    const Link& l = link(annotation.link_id);
    const RigidTransform T = link_world_pose(l.id);
    PointCloud out;
    for (std::size_t i = 0; i < l.cloud.size(); ++i) {
        if (!l.part_mask.empty() && !l.part_mask[i]) continue;
        out.points.push_back(T.apply(l.cloud.points[i]));
        out.normals.push_back(T.R * l.cloud.normals[i]);
    }
    return out;
}

Aabb ArticulatedObject::bbox_world() const {
    Aabb box;
    for (const auto& l : links) {
        const RigidTransform T = link_world_pose(l.id);
        for (const auto& p : l.cloud.points) box.expand(T.apply(p));
    }
    return box;
}

// ------------------------------------------------------------- synth ---

namespace {

double sample_in(Rng& rng, const std::map<std::string, double>& overrides,
                 const std::string& name, double lo, double hi) {
    const auto it = overrides.find(name);
    if (it != overrides.end()) {
        if (it->second < lo || it->second > hi)
            throw Error("override " + name + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
        return it->second;
    }
    return rng.uniform(lo, hi);
}

Primitive make_cuboid(double sx, double sy, double sz, const RigidTransform& at) {
    return Primitive{PrimitiveKind::Cuboid, {sx, sy, sz}, at};
}

Primitive make_cylinder(double r, double h, const RigidTransform& at) {
    return Primitive{PrimitiveKind::Cylinder, {r, h}, at};
}

int cloud_count_for(const PrimitiveAssembly& shapes) {
    double area = 0.0;
    for (const auto& p : shapes) area += p.surface_area();
    return std::clamp(static_cast<int>(area * 5000.0), 500, 2600);
}

constexpr int kPartCloudSamples = 1200;

void fill_link_cloud(Link& link, std::uint64_t seed) {
    // part primitives (indices >= part_first_shape) get their own denser pass
    const int part_from = link.part_first_shape;
    PrimitiveAssembly body(link.shapes.begin(),
                           part_from < 0 ? link.shapes.end() : link.shapes.begin() + part_from);
    link.cloud_seed = seed;
    link.cloud = PointCloud{};
    link.part_mask.clear();
    if (!body.empty()) {
        link.cloud = sample_surface(body, cloud_count_for(body), seed);
        link.part_mask.assign(link.cloud.size(), 0);
    }
    if (part_from >= 0) {
        PrimitiveAssembly part(link.shapes.begin() + part_from, link.shapes.end());
        PointCloud part_cloud = sample_surface(part, kPartCloudSamples, split_seed(seed, 0xbeef));
        link.part_mask.resize(link.cloud.size() + part_cloud.size(), 1);
        std::fill(link.part_mask.begin(), link.part_mask.begin() + link.cloud.size(), 0);
        link.cloud.append(part_cloud);
    }
}

ParamBinding sample_concept_params(Rng& rng, const std::map<std::string, double>& overrides,
                                   const std::vector<std::pair<std::string, Interval>>& windows) {
    ParamBinding b;
    for (const auto& [name, range] : windows)
        b[name] = sample_in(rng, overrides, name, range.lo, range.hi);
    return b;
}

/// Appends the instantiated concept geometry to a link and annotates it.
void attach_part(ArticulatedObject& obj, Link& link, const std::string& concept_id,
                 const ParamBinding& params, const RigidTransform& pose_in_link,
                 const std::string& task, const std::string& target_joint) {
    const AnalyticConcept& acon = builtin_registry().get(concept_id);
    const PrimitiveAssembly part = instantiate_structure(acon.structure, params);
    const int first_part_prim = static_cast<int>(link.shapes.size());
    for (const auto& prim : part) {
        Primitive placed = prim;
        placed.local_pose = compose(pose_in_link, prim.local_pose);
        link.shapes.push_back(placed);
    }
    obj.annotation.link_id = link.id;
    obj.annotation.concept_id = concept_id;
    obj.annotation.group = acon.identity.group;
    obj.annotation.params = params;
    obj.annotation.pose_in_link = pose_in_link;
    obj.annotation.task = task;
    obj.annotation.target_joint = target_joint;
    link.part_first_shape = first_part_prim;
    fill_link_cloud(link, split_seed(obj.seed, 0x11));
}

Eigen::Vector3d joint_jacobian(const ArticulatedObject& obj, const Joint& j,
                               const Eigen::Vector3d& attach_world) {
    const RigidTransform parent = obj.link_world_pose(j.parent);
    const Eigen::Vector3d dir = parent.R * j.axis_dir;
    if (j.kind == JointKind::Prismatic) return dir;
    return dir.cross(attach_world - parent.apply(j.axis_point));
}

/// Scripted oracle knowledge: the grasp family whose default grasp scores
/// best on the part cloud, and the force rule with the strongest initial
/// progress along the joint's admissible motion.
void script_oracle_knowledge(ArticulatedObject& obj, const RolloutConfig& roll = {}) {
    const AnalyticConcept& acon = builtin_registry().get(obj.annotation.concept_id);
    const Grounding gt = obj.oracle_grounding();
    const PointCloud part = obj.part_cloud_world();

    const GraspFamily* best_family = nullptr;
    GraspPose best_grasp;
    double best_score = -1.0;
    for (const auto& family : acon.grasp_families) {
        const GraspPose grasp =
            instantiate_grasp(acon, family, gt, default_params(family.theta));
        double score = score_grasp(grasp, part, roll.gripper);
        // penalize grasps whose swept volume hits any other geometry
        for (const auto& link : obj.links) {
            const RigidTransform T = obj.link_world_pose(link.id);
            int pen = 0;
            for (const auto& p : link.cloud.points)
                if (in_finger_or_palm(grasp, roll.gripper, T.apply(p))) ++pen;
            score -= 0.02 * pen;
        }
        if (score > best_score) {
            best_score = score;
            best_family = &family;
            best_grasp = grasp;
        }
    }
    obj.annotation.grasp_family = best_family->name;

    const Joint& joint = obj.joint(obj.annotation.target_joint);
    const Eigen::Vector3d J = joint_jacobian(obj, joint, best_grasp.pose.t);
    const double jn = J.norm();
    const ForceRule* best_rule = nullptr;
    double best_progress = -std::numeric_limits<double>::infinity();
    for (const auto& rule : acon.force_rules) {
        double progress = -1.0;
        try {
            const ForceDirection f = force_direction(acon, rule, gt, best_grasp);
            progress = jn > 1e-12 ? f.dir.dot(J / jn) : -1.0;
        } catch (const DomainError&) {
            continue;
        }
        if (progress > best_progress) {
            best_progress = progress;
            best_rule = &rule;
        }
    }
    obj.annotation.force_rule = best_rule->name;
}

using Windows = std::vector<std::pair<std::string, Interval>>;

ArticulatedObject synth_cabinet_door(const std::map<std::string, double>& ov,
                                     std::uint64_t seed) {
    ArticulatedObject obj;
    obj.archetype = "cabinet_door";
    obj.seed = seed;
    Rng rng(split_seed(seed, 0xa1));

    const double door_w = sample_in(rng, ov, "door_w", 0.35, 0.55);
    const double door_h = sample_in(rng, ov, "door_h", 0.45, 0.7);
    const double door_t = sample_in(rng, ov, "door_t", 0.016, 0.024);
    const double depth = sample_in(rng, ov, "depth", 0.3, 0.42);

    Link carcass;
    carcass.id = "carcass";
    carcass.shapes.push_back(make_cuboid(
        depth, door_w, door_h,
        RigidTransform::translation({-depth / 2 - door_t, door_w / 2, door_h / 2})));
    fill_link_cloud(carcass, split_seed(seed, 0x51));

    Link door;
    door.id = "door";
    door.shapes.push_back(make_cuboid(
        door_t, door_w, door_h, RigidTransform::translation({door_t / 2, door_w / 2, door_h / 2})));

    Joint hinge;
    hinge.id = "door_hinge";
    hinge.kind = JointKind::Revolute;
    hinge.axis_point = {0.0, 0.0, 0.0};
    hinge.axis_dir = {0.0, 0.0, -1.0};  // positive state swings the door outward (+x)
    hinge.lo = 0.0;
    hinge.hi = M_PI / 2;
    hinge.parent = "carcass";
    hinge.child = "door";

    const ParamBinding params = sample_concept_params(
        rng, ov,
        Windows{{"bar_len", {0.09, 0.16, false}},
                {"bar_thick", {0.016, 0.028, false}},
                {"stem_len", {0.045, 0.08, false}},
                {"stem_r", {0.006, 0.011, false}}});

    // stem normal +x (outward), bar running toward the hinge, mid height
    RigidTransform mount;
    mount.R.col(0) = Eigen::Vector3d(0, -1, 0);   // canonical bar axis
    mount.R.col(1) = Eigen::Vector3d(0, 0, -1);
    mount.R.col(2) = Eigen::Vector3d(1, 0, 0);    // canonical mount normal
    mount.t = {door_t, door_w - 0.06, door_h / 2};

    obj.links = {carcass, door};
    obj.joints = {hinge};
    obj.base_link = "carcass";
    attach_part(obj, obj.links[1], "L_Handle", params, mount, "open the cabinet door",
                "door_hinge");
    script_oracle_knowledge(obj);
    return obj;
}

ArticulatedObject synth_drawer(const std::map<std::string, double>& ov, std::uint64_t seed) {
    ArticulatedObject obj;
    obj.archetype = "drawer";
    obj.seed = seed;
    Rng rng(split_seed(seed, 0xa2));

    const double front_w = sample_in(rng, ov, "front_w", 0.34, 0.5);
    const double front_h = sample_in(rng, ov, "front_h", 0.14, 0.2);
    const double front_t = sample_in(rng, ov, "front_t", 0.016, 0.022);
    const double depth = sample_in(rng, ov, "depth", 0.28, 0.4);

    Link chest;
    chest.id = "chest";
    chest.shapes.push_back(make_cuboid(
        depth, front_w + 0.04, front_h + 0.04,
        RigidTransform::translation({-depth / 2 - front_t, 0, (front_h + 0.04) / 2 - 0.02})));
    fill_link_cloud(chest, split_seed(seed, 0x52));

    Link drawer;
    drawer.id = "drawer";
    drawer.shapes.push_back(make_cuboid(
        front_t, front_w, front_h, RigidTransform::translation({front_t / 2, 0, front_h / 2})));
    drawer.shapes.push_back(make_cuboid(
        depth * 0.7, front_w - 0.03, front_h - 0.03,
        RigidTransform::translation({-depth * 0.35, 0, front_h / 2})));

    Joint slide;
    slide.id = "drawer_slide";
    slide.kind = JointKind::Prismatic;
    slide.axis_point = {0, 0, 0};
    slide.axis_dir = {1, 0, 0};
    slide.lo = 0.0;
    slide.hi = 0.8 * depth;
    slide.parent = "chest";
    slide.child = "drawer";

    const ParamBinding params = sample_concept_params(
        rng, ov,
        Windows{{"span", {0.1, 0.18, false}},
                {"standoff", {0.04, 0.06, false}},
                {"bar_thick", {0.015, 0.022, false}},
                {"post_r", {0.005, 0.008, false}}});

    RigidTransform mount;
    mount.R.col(0) = Eigen::Vector3d(0, 1, 0);
    mount.R.col(1) = Eigen::Vector3d(0, 0, 1);
    mount.R.col(2) = Eigen::Vector3d(1, 0, 0);
    mount.t = {front_t, 0, front_h / 2};

    obj.links = {chest, drawer};
    obj.joints = {slide};
    obj.base_link = "chest";
    attach_part(obj, obj.links[1], "U_Handle", params, mount, "pull the drawer open",
                "drawer_slide");
    script_oracle_knowledge(obj);
    return obj;
}

ArticulatedObject synth_pot_lid(const std::map<std::string, double>& ov, std::uint64_t seed) {
    ArticulatedObject obj;
    obj.archetype = "pot_lid";
    obj.seed = seed;
    Rng rng(split_seed(seed, 0xa3));

    const double pot_r = sample_in(rng, ov, "pot_r", 0.09, 0.15);
    const double pot_h = sample_in(rng, ov, "pot_h", 0.1, 0.18);

    Link pot;
    pot.id = "pot";
    pot.shapes.push_back(make_cylinder(pot_r, pot_h, RigidTransform::translation({0, 0, pot_h / 2})));
    fill_link_cloud(pot, split_seed(seed, 0x53));

    Link lid;
    lid.id = "lid";

    Joint lift;
    lift.id = "lid_lift";
    lift.kind = JointKind::Prismatic;
    lift.axis_point = {0, 0, 0};
    lift.axis_dir = {0, 0, 1};
    lift.lo = 0.0;
    lift.hi = 0.15;
    lift.parent = "pot";
    lift.child = "lid";

    ParamBinding params = sample_concept_params(
        rng, ov,
        Windows{{"lid_t", {0.006, 0.01, false}},
                {"knob_r", {0.014, 0.022, false}}});
    params["lid_r"] = std::clamp(pot_r * 1.04, 0.07, 0.16);

    obj.links = {pot, lid};
    obj.joints = {lift};
    obj.base_link = "pot";
    attach_part(obj, obj.links[1], "Knob_Lid", params,
                RigidTransform::translation({0, 0, pot_h}), "lift the lid of the pot",
                "lid_lift");
    script_oracle_knowledge(obj);
    return obj;
}

ArticulatedObject synth_faucet(const std::map<std::string, double>& ov, std::uint64_t seed) {
    ArticulatedObject obj;
    obj.archetype = "faucet";
    obj.seed = seed;
    Rng rng(split_seed(seed, 0xa4));

    const double base_r = sample_in(rng, ov, "base_r", 0.035, 0.05);
    const double base_h = sample_in(rng, ov, "base_h", 0.1, 0.16);

    Link base;
    base.id = "base";
    base.shapes.push_back(make_cylinder(base_r, base_h, RigidTransform::translation({0, 0, base_h / 2})));
    fill_link_cloud(base, split_seed(seed, 0x54));

    Link lever;
    lever.id = "lever";

    Joint spindle;
    spindle.id = "spindle";
    spindle.kind = JointKind::Revolute;
    spindle.axis_point = {0, 0, 0};
    spindle.axis_dir = {0, 0, -1};  // positive state turns clockwise seen from above
    spindle.lo = 0.0;
    spindle.hi = M_PI / 2;
    spindle.parent = "base";
    spindle.child = "lever";

    const ParamBinding params = sample_concept_params(
        rng, ov,
        Windows{{"bar_len", {0.08, 0.14, false}},
                {"bar_thick", {0.016, 0.026, false}},
                {"stem_len", {0.045, 0.075, false}},
                {"stem_r", {0.006, 0.011, false}}});

    obj.links = {base, lever};
    obj.joints = {spindle};
    obj.base_link = "base";
    attach_part(obj, obj.links[1], "L_Handle", params,
                RigidTransform::translation({0, 0, base_h}),
                "turn the faucet handle clockwise", "spindle");
    script_oracle_knowledge(obj);
    return obj;
}

ArticulatedObject synth_laptop(const std::map<std::string, double>& ov, std::uint64_t seed) {
    ArticulatedObject obj;
    obj.archetype = "laptop";
    obj.seed = seed;
    Rng rng(split_seed(seed, 0xa5));

    const double base_d = sample_in(rng, ov, "base_d", 0.22, 0.3);   // x
    const double base_w = sample_in(rng, ov, "base_w", 0.3, 0.42);   // y
    const double base_t = sample_in(rng, ov, "base_t", 0.015, 0.025);
    const double gap = sample_in(rng, ov, "gap", 0.032, 0.05);

    Link base;
    base.id = "base";
    base.shapes.push_back(make_cuboid(base_d, base_w, base_t,
                                      RigidTransform::translation({0, 0, base_t / 2})));
    fill_link_cloud(base, split_seed(seed, 0x55));

    Link screen;
    screen.id = "screen";

    const double hinge_x = -base_d / 2;
    const double hinge_z = base_t + gap;

    Joint hinge;
    hinge.id = "screen_hinge";
    hinge.kind = JointKind::Revolute;
    hinge.axis_point = {hinge_x, 0, hinge_z};
    hinge.axis_dir = {0, -1, 0};  // positive state lifts the free edge
    hinge.lo = 0.0;
    hinge.hi = 1.75;
    hinge.parent = "base";
    hinge.child = "screen";

    ParamBinding params = sample_concept_params(
        rng, ov, Windows{{"board_t", {0.007, 0.012, false}}});
    params["board_w"] = std::clamp(base_d * 0.92, 0.18, 0.3);
    params["board_h"] = std::clamp(base_w * 0.94, 0.26, 0.42);

    obj.links = {base, screen};
    obj.joints = {hinge};
    obj.base_link = "base";
    attach_part(obj, obj.links[1], "Laptop_Board", params,
                RigidTransform::translation({hinge_x, 0, hinge_z}), "open the laptop",
                "screen_hinge");
    script_oracle_knowledge(obj);
    return obj;
}

}  // namespace

std::vector<std::string> known_archetypes() {
    return {"cabinet_door", "drawer", "pot_lid", "faucet", "laptop"};
}

ArticulatedObject synth_object(const std::string& archetype,
                               const std::map<std::string, double>& overrides,
                               std::uint64_t seed) {
    if (archetype == "cabinet_door") return synth_cabinet_door(overrides, seed);
    if (archetype == "drawer") return synth_drawer(overrides, seed);
    if (archetype == "pot_lid") return synth_pot_lid(overrides, seed);
    if (archetype == "faucet") return synth_faucet(overrides, seed);
    if (archetype == "laptop") return synth_laptop(overrides, seed);
    throw UnknownArchetype(archetype);
}

// ------------------------------------------------------------ render ---

RenderedView render_view_tagged(const ArticulatedObject& object, double azimuth_deg,
                                double elevation_deg, int n_points, std::uint64_t seed) {
    if (azimuth_deg < 0.0 || azimuth_deg >= 360.0)
        throw Error("render_view: azimuth must lie in [0, 360)");
    if (elevation_deg < 30.0 || elevation_deg > 60.0)
        throw Error("render_view: elevation must lie in [30, 60]");
    if (n_points < 1) throw Error("render_view: n_points must be >= 1");

    PointCloud world;
    std::vector<int> link_index;
    std::vector<std::uint8_t> part_mask;
    for (std::size_t li = 0; li < object.links.size(); ++li) {
        const Link& l = object.links[li];
        const RigidTransform T = object.link_world_pose(l.id);
        for (std::size_t i = 0; i < l.cloud.size(); ++i) {
            world.points.push_back(T.apply(l.cloud.points[i]));
            world.normals.push_back(T.R * l.cloud.normals[i]);
            link_index.push_back(static_cast<int>(li));
            part_mask.push_back(l.part_mask.empty() ? 0 : l.part_mask[i]);
        }
    }

    const Aabb box = world.bbox();
    const double az = azimuth_deg * M_PI / 180.0;
    const double el = elevation_deg * M_PI / 180.0;
    const double radius = std::max(0.5, 2.2 * box.diagonal());
    const Eigen::Vector3d view_dir(-std::cos(az) * std::cos(el), -std::sin(az) * std::cos(el),
                                   -std::sin(el));  // camera looks along this
    const Eigen::Vector3d cam = box.center() - radius * view_dir;

    // image-plane basis for the ortho z-buffer
    Eigen::Vector3d up = std::abs(view_dir.z()) > 0.99 ? Eigen::Vector3d::UnitX()
                                                       : Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d u = view_dir.cross(up).normalized();
    const Eigen::Vector3d v = view_dir.cross(u);

    std::vector<std::size_t> candidates;
    candidates.reserve(world.size());
    for (std::size_t i = 0; i < world.size(); ++i)
        if (world.normals[i].dot(cam - world.points[i]) > 0.0) candidates.push_back(i);

    constexpr int kGrid = 256;
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (std::size_t i : candidates) {
        const Eigen::Vector3d d = world.points[i] - cam;
        umin = std::min(umin, d.dot(u));
        umax = std::max(umax, d.dot(u));
        vmin = std::min(vmin, d.dot(v));
        vmax = std::max(vmax, d.dot(v));
    }
    const double uspan = std::max(umax - umin, 1e-9);
    const double vspan = std::max(vmax - vmin, 1e-9);
    std::vector<double> zbuf(kGrid * kGrid, std::numeric_limits<double>::infinity());
    std::vector<double> depth(candidates.size());
    std::vector<int> cell(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const Eigen::Vector3d d = world.points[candidates[k]] - cam;
        const int cu = std::min(kGrid - 1, static_cast<int>((d.dot(u) - umin) / uspan * kGrid));
        const int cv = std::min(kGrid - 1, static_cast<int>((d.dot(v) - vmin) / vspan * kGrid));
        cell[k] = cv * kGrid + cu;
        depth[k] = d.dot(view_dir);
        zbuf[cell[k]] = std::min(zbuf[cell[k]], depth[k]);
    }
    const double depth_tol = std::max(0.008, 0.015 * box.diagonal());
    std::vector<std::size_t> visible;
    visible.reserve(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k)
        if (depth[k] <= zbuf[cell[k]] + depth_tol) visible.push_back(candidates[k]);
    if (visible.empty()) visible = candidates.empty() ? std::vector<std::size_t>{0} : candidates;

    // resample to exactly n_points
    Rng rng(split_seed(seed, 0xcafe));
    std::vector<std::size_t> chosen;
    chosen.reserve(n_points);
    if (static_cast<int>(visible.size()) >= n_points) {
        rng.shuffle(visible);
        chosen.assign(visible.begin(), visible.begin() + n_points);
    } else {
        chosen = visible;
        while (static_cast<int>(chosen.size()) < n_points)
            chosen.push_back(visible[rng.uniform_index(visible.size())]);
    }

    RenderedView view;
    view.cloud.points.reserve(n_points);
    view.cloud.normals.reserve(n_points);
    for (std::size_t i : chosen) {
        view.cloud.points.push_back(world.points[i]);
        view.cloud.normals.push_back(world.normals[i]);
        view.link_index.push_back(link_index[i]);
        view.part_mask.push_back(part_mask[i]);
    }
    return view;
}

PointCloud render_view(const ArticulatedObject& object, double azimuth_deg, double elevation_deg,
                       int n_points, std::uint64_t seed) {
    return render_view_tagged(object, azimuth_deg, elevation_deg, n_points, seed).cloud;
}

ArticulatedObject joint_state_init(ArticulatedObject object, std::uint64_t seed) {
    Rng rng(split_seed(seed, 0x90d));
    for (auto& j : object.joints)
        j.state = rng.uniform() < 0.5 ? j.lo : rng.uniform(j.lo, j.hi);
    return object;
}

// ----------------------------------------------------------- rollout ---

std::string to_string(FailureReason r) {
    switch (r) {
        case FailureReason::Collision: return "collision";
        case FailureReason::Slip: return "slip";
        case FailureReason::NoMotion: return "no-motion";
        case FailureReason::WrongPart: return "wrong-part";
    }
    return "?";
}

bool success(const InteractionOutcome& outcome, const RolloutConfig& cfg) {
    return outcome.displacement > cfg.absolute_threshold ||
           outcome.relative_displacement > cfg.relative_threshold;
}

InteractionOutcome rollout(const ArticulatedObject& object_in, const std::string& target_joint,
                           const GraspPose& grasp, const ForceDirection& force,
                           const RolloutConfig& cfg) {
    if (cfg.step_size <= 0 || cfg.max_steps < 1 || cfg.grasp_slip_tolerance <= 0)
        throw Error("rollout: bad config");
    ArticulatedObject object = object_in;
    Joint& joint = object.joint(target_joint);
    const double q0 = joint.state;

    InteractionOutcome out;
    out.joint_id = target_joint;

    const Aabb box = object.bbox_world();
    if ((grasp.pose.t - box.center()).norm() > 2.5 * box.diagonal() + 0.5)
        throw InvalidGrasp("grasp outside the object workspace");

    const auto finish = [&](std::optional<FailureReason> reason) {
        out.displacement = std::abs(joint.state - q0);
        out.relative_displacement =
            joint.range() > 0 ? std::clamp(out.displacement / joint.range(), 0.0, 1.0) : 0.0;
        out.success = success(out, cfg);
        if (!out.success) out.failure_reason = reason.value_or(FailureReason::NoMotion);
        return out;
    };

    // --- attachment: closing region must hold target-part geometry and the
    // fingers must stay clear of everything ---
    int target_points = 0, other_points = 0, penetrations = 0;
    for (std::size_t li = 0; li < object.links.size(); ++li) {
        const Link& l = object.links[li];
        const bool target = object.moves_with(target_joint, l.id);
        const RigidTransform T = object.link_world_pose(l.id);
        for (const auto& p : l.cloud.points) {
            const Eigen::Vector3d w = T.apply(p);
            if (in_closing_region(grasp, cfg.gripper, w)) {
                (target ? target_points : other_points) += 1;
            } else if (in_finger_or_palm(grasp, cfg.gripper, w)) {
                ++penetrations;
            }
        }
    }
    if (penetrations >= cfg.collision_points) return finish(FailureReason::Collision);
    if (target_points < cfg.min_attach_points || other_points > target_points)
        return finish(FailureReason::WrongPart);

    // --- stepping ---
    const Joint& j = joint;
    const RigidTransform child0 = object.link_world_pose(j.child);
    const Eigen::Vector3d attach_local = child0.inverse().apply(grasp.pose.t);

    Eigen::Vector3d tangent_sign_ref = force.dir;
    double sign = 1.0;
    if (force.mode == ForceMode::TangentialAboutAxis) {
        const auto& [axis_point, axis_dir] = *force.axis;
        const Eigen::Vector3d tangent0 = axis_dir.cross(grasp.pose.t - axis_point);
        if (tangent0.norm() > 1e-12)
            sign = tangent_sign_ref.dot(tangent0) >= 0.0 ? 1.0 : -1.0;
    }

    Eigen::Vector3d attach = grasp.pose.t;
    Eigen::Vector3d intended = attach;
    bool deviated = false;
    for (int step = 0; step < cfg.max_steps; ++step) {
        Eigen::Vector3d dir = force.dir;
        if (force.mode == ForceMode::TangentialAboutAxis) {
            const auto& [axis_point, axis_dir] = *force.axis;
            Eigen::Vector3d tangent = axis_dir.cross(attach - axis_point);
            const double tn = tangent.norm();
            if (tn < 1e-12) return finish(FailureReason::NoMotion);
            dir = sign * tangent / tn;
        }
        intended += cfg.step_size * dir;

        const Eigen::Vector3d Jv = joint_jacobian(object, j, attach);
        const double jj = Jv.squaredNorm();
        double dq = jj > 1e-16 ? (intended - attach).dot(Jv) / jj : 0.0;
        const double next = std::clamp(j.state + dq, j.lo, j.hi);
        joint.state = next;
        attach = object.link_world_pose(j.child).apply(attach_local);
        out.steps_used = step + 1;

        if ((attach - intended).norm() > cfg.grasp_slip_tolerance) {
            deviated = true;
            break;
        }
    }

    if (deviated) {
        const bool no_motion = std::abs(joint.state - q0) <
                               std::max(1e-9, 1e-7 * std::max(joint.range(), 1.0));
        return finish(no_motion ? FailureReason::NoMotion : FailureReason::Slip);
    }
    return finish(FailureReason::NoMotion);
}

BudgetResult run_with_budget(const std::function<std::optional<Proposal>(int)>& proposals,
                             const ArticulatedObject& object, const std::string& target_joint,
                             const RolloutConfig& cfg) {
    BudgetResult result;
    for (int i = 0; i < cfg.budget; ++i) {
        const auto proposal = proposals(i);
        if (!proposal) break;
        result.attempts = i + 1;
        try {
            result.outcome = rollout(object, target_joint, proposal->grasp, proposal->force, cfg);
        } catch (const InvalidGrasp&) {
            result.outcome = InteractionOutcome{};
            result.outcome.joint_id = target_joint;
            result.outcome.failure_reason = FailureReason::WrongPart;
        }
        if (result.outcome.success) return result;
    }
    return result;
}

// -------------------------------------------------------------- json ---

namespace {

nlohmann::ordered_json pose_json(const RigidTransform& T) {
    std::vector<double> r;
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) r.push_back(T.R(row, col));
    nlohmann::ordered_json j;
    j["R"] = r;
    j["t"] = {T.t.x(), T.t.y(), T.t.z()};
    return j;
}

RigidTransform pose_from_json(const nlohmann::json& j) {
    RigidTransform T;
    const auto r = j.at("R").get<std::vector<double>>();
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) T.R(row, col) = r[row * 3 + col];
    const auto t = j.at("t").get<std::vector<double>>();
    T.t = {t[0], t[1], t[2]};
    return T;
}

}  // namespace

std::string object_to_json(const ArticulatedObject& object) {
    nlohmann::ordered_json j;
    j["archetype"] = object.archetype;
    j["seed"] = object.seed;
    j["base_link"] = object.base_link;
    j["base_pose"] = pose_json(object.base_pose);

    j["links"] = nlohmann::ordered_json::array();
    for (const auto& l : object.links) {
        nlohmann::ordered_json jl;
        jl["id"] = l.id;
        jl["cloud_seed"] = l.cloud_seed;
        jl["part_first_shape"] = l.part_first_shape;
        jl["shapes"] = nlohmann::ordered_json::array();
        for (const auto& s : l.shapes) {
            nlohmann::ordered_json js;
            js["kind"] = acg::to_string(s.kind);
            js["size"] = s.size;
            js["at"] = pose_json(s.local_pose);
            jl["shapes"].push_back(js);
        }
        j["links"].push_back(jl);
    }

    j["joints"] = nlohmann::ordered_json::array();
    for (const auto& jt : object.joints) {
        nlohmann::ordered_json jj;
        jj["id"] = jt.id;
        jj["kind"] = jt.kind == JointKind::Revolute ? "revolute" : "prismatic";
        jj["axis_point"] = {jt.axis_point.x(), jt.axis_point.y(), jt.axis_point.z()};
        jj["axis_dir"] = {jt.axis_dir.x(), jt.axis_dir.y(), jt.axis_dir.z()};
        jj["limits"] = {jt.lo, jt.hi};
        jj["state"] = jt.state;
        jj["parent"] = jt.parent;
        jj["child"] = jt.child;
        j["joints"].push_back(jj);
    }

    const auto& a = object.annotation;
    nlohmann::ordered_json ja;
    ja["link_id"] = a.link_id;
    ja["concept_id"] = a.concept_id;
    ja["group"] = a.group;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [name, value] : a.params) params[name] = value;
    ja["params"] = params;
    ja["pose_in_link"] = pose_json(a.pose_in_link);
    ja["grasp_family"] = a.grasp_family;
    ja["force_rule"] = a.force_rule;
    ja["task"] = a.task;
    ja["target_joint"] = a.target_joint;
    j["annotation"] = ja;
    return j.dump(2);
}

ArticulatedObject object_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ArticulatedObject object;
    object.archetype = j.at("archetype").get<std::string>();
    object.seed = j.at("seed").get<std::uint64_t>();
    object.base_link = j.at("base_link").get<std::string>();
    object.base_pose = pose_from_json(j.at("base_pose"));

    const auto& a = j.at("annotation");
    object.annotation.link_id = a.at("link_id").get<std::string>();
    object.annotation.concept_id = a.at("concept_id").get<std::string>();
    object.annotation.group = a.at("group").get<std::string>();
    for (const auto& [name, value] : a.at("params").items())
        object.annotation.params[name] = value.get<double>();
    object.annotation.pose_in_link = pose_from_json(a.at("pose_in_link"));
    object.annotation.grasp_family = a.at("grasp_family").get<std::string>();
    object.annotation.force_rule = a.at("force_rule").get<std::string>();
    object.annotation.task = a.at("task").get<std::string>();
    object.annotation.target_joint = a.at("target_joint").get<std::string>();

    for (const auto& jl : j.at("links")) {
        Link l;
        l.id = jl.at("id").get<std::string>();
        for (const auto& js : jl.at("shapes")) {
            Primitive p;
            p.kind = primitive_kind_from_string(js.at("kind").get<std::string>());
            p.size = js.at("size").get<std::vector<double>>();
            p.local_pose = pose_from_json(js.at("at"));
            l.shapes.push_back(p);
        }
        l.cloud_seed = jl.at("cloud_seed").get<std::uint64_t>();
        l.part_first_shape = jl.at("part_first_shape").get<int>();
        object.links.push_back(std::move(l));
    }

    for (const auto& jj : j.at("joints")) {
        Joint jt;
        jt.id = jj.at("id").get<std::string>();
        jt.kind = jj.at("kind").get<std::string>() == "revolute" ? JointKind::Revolute
                                                                 : JointKind::Prismatic;
        const auto ap = jj.at("axis_point").get<std::vector<double>>();
        jt.axis_point = {ap[0], ap[1], ap[2]};
        const auto ad = jj.at("axis_dir").get<std::vector<double>>();
        jt.axis_dir = {ad[0], ad[1], ad[2]};
        const auto lim = jj.at("limits").get<std::vector<double>>();
        jt.lo = lim[0];
        jt.hi = lim[1];
        jt.state = jj.at("state").get<double>();
        jt.parent = jj.at("parent").get<std::string>();
        jt.child = jj.at("child").get<std::string>();
        object.joints.push_back(std::move(jt));
    }

    // clouds are regenerated from the recorded shapes and seeds, identical
    // to what synthesis produced
    for (auto& l : object.links) fill_link_cloud(l, l.cloud_seed);
    return object;
}

std::string outcome_to_json(const InteractionOutcome& o) {
    nlohmann::ordered_json j;
    j["joint_id"] = o.joint_id;
    j["displacement"] = o.displacement;
    j["relative_displacement"] = o.relative_displacement;
    j["success"] = o.success;
    j["steps_used"] = o.steps_used;
    if (o.failure_reason) j["failure_reason"] = to_string(*o.failure_reason);
    return j.dump(2);
}

}  // namespace acg::sim
