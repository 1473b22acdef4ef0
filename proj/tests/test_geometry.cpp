#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "acg/cloud_io.hpp"
#include "acg/kdtree.hpp"
#include "acg/primitives.hpp"
#include "test_support.hpp"

using namespace acg;

TEST_CASE("rigid transform group laws") {
    Rng rng(42);
    for (int i = 0; i < 50; ++i) {
        const RigidTransform T = random_transform(rng);
        const RigidTransform I = compose(T, invert(T));
        CHECK((I.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(I.t.norm() < 1e-9);

        const RigidTransform TT = invert(invert(T));
        CHECK((TT.R - T.R).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((TT.t - T.t).norm() < 1e-12);
    }
}

TEST_CASE("apply is associative with compose and preserves distances") {
    Rng rng(7);
    const RigidTransform t1 = random_transform(rng);
    const RigidTransform t2 = random_transform(rng);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Vector3d p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Eigen::Vector3d q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        CHECK((apply(compose(t1, t2), p) - apply(t1, apply(t2, p))).norm() < 1e-12);
        CHECK(std::abs((apply(t1, p) - apply(t1, q)).norm() - (p - q).norm()) < 1e-9);
    }

    const PointCloud cloud = testing::random_cloud(rng, 64);
    const PointCloud same = apply(RigidTransform::identity(), cloud);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((same.points[i] - cloud.points[i]).norm() == 0.0);
}

TEST_CASE("kd-tree nearest matches brute force") {
    Rng rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 50 + static_cast<std::size_t>(rng.uniform_index(1950));
        const PointCloud cloud = testing::random_cloud(rng, n);
        const KdTree tree(cloud.points);
        for (int q = 0; q < 60; ++q) {
            const Eigen::Vector3d query(rng.uniform(-1.3, 1.3), rng.uniform(-1.3, 1.3),
                                        rng.uniform(-1.3, 1.3));
            const auto got = tree.nearest(query);
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = (cloud.points[i] - query).norm();
                if (d < best) {
                    best = d;
                    best_i = i;
                }
            }
            CHECK(got.index == best_i);
            CHECK(got.distance == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("chamfer basics") {
    PointCloud p;
    p.points = {{0, 0, 0}};
    PointCloud q;
    q.points = {{0, 0, 1}};
    CHECK(chamfer(p, p) == 0.0);
    CHECK(chamfer(p, q) == doctest::Approx(2.0));

    Rng rng(3);
    const PointCloud a = testing::random_cloud(rng, 200);
    const PointCloud b = testing::random_cloud(rng, 150);
    CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)));
}

TEST_CASE("chamfer is rigid invariant") {
    Rng rng(5);
    const PointCloud a = testing::random_cloud(rng, 300);
    const PointCloud b = testing::random_cloud(rng, 280);
    const double base = chamfer(a, b);
    for (int i = 0; i < 5; ++i) {
        const RigidTransform T = random_transform(rng);
        CHECK(chamfer(apply(T, a), apply(T, b)) == doctest::Approx(base).epsilon(1e-7));
    }
}

TEST_CASE("sphere sampling lies on the surface") {
    Primitive sphere{PrimitiveKind::Sphere, {1.0}, RigidTransform::identity()};
    const PointCloud cloud = sample_surface({sphere}, 10000, 123);
    for (const auto& p : cloud.points) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((cloud.normals[i] - cloud.points[i].normalized()).norm() < 1e-9);
}

TEST_CASE("implicit residual is tiny for samples of every primitive kind") {
    PrimitiveAssembly assembly = {
        {PrimitiveKind::Sphere, {0.05}, RigidTransform::translation({0.2, 0, 0})},
        {PrimitiveKind::Cuboid, {0.1, 0.05, 0.02}, rot_x(0.4)},
        {PrimitiveKind::Cylinder,
         {0.03, 0.12},
         compose(RigidTransform::translation({0, 0.1, 0}), rot_y(0.9))},
    };
    const PointCloud cloud = sample_surface(assembly, 5000, 99);
    for (const auto& p : cloud.points) CHECK(std::abs(assembly_sdf(assembly, p)) < 1e-9);
}

TEST_CASE("cuboid face hit rates follow face areas") {
    const double a = 0.3, b = 0.2, c = 0.1;
    Primitive box{PrimitiveKind::Cuboid, {a, b, c}, RigidTransform::identity()};
    const int n = 60000;
    const PointCloud cloud = sample_surface({box}, n, 2024);

    // classify by dominant normal axis
    int counts[3] = {0, 0, 0};
    for (const auto& nrm : cloud.normals) {
        int axis = 0;
        nrm.cwiseAbs().maxCoeff(&axis);
        counts[axis]++;
    }
    const double total_area = 2 * (a * b + b * c + a * c);
    const double probs[3] = {2 * b * c / total_area, 2 * a * c / total_area,
                             2 * a * b / total_area};
    for (int axis = 0; axis < 3; ++axis) {
        const double expected = probs[axis] * n;
        const double sigma = std::sqrt(n * probs[axis] * (1 - probs[axis]));
        CHECK(std::abs(counts[axis] - expected) < 3 * sigma);
    }
}

TEST_CASE("sampling is deterministic and seed sensitive") {
    Primitive cyl{PrimitiveKind::Cylinder, {0.04, 0.1}, RigidTransform::identity()};
    const PointCloud a = sample_surface({cyl}, 500, 7);
    const PointCloud b = sample_surface({cyl}, 500, 7);
    const PointCloud c = sample_surface({cyl}, 500, 8);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.points[i] != b.points[i]) identical = false;
    CHECK(identical);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.points[i] != c.points[i]) differs = true;
    CHECK(differs);
}

TEST_CASE("independent samplings of one assembly agree in chamfer") {
    // convergence: two dense samplings of the same surface are close
    PrimitiveAssembly assembly = {
        {PrimitiveKind::Cuboid, {0.12, 0.02, 0.02}, RigidTransform::translation({0.06, 0, 0.055})},
        {PrimitiveKind::Cylinder, {0.009, 0.055}, RigidTransform::translation({0, 0, 0.0275})},
    };
    const PointCloud a = sample_surface(assembly, 50000, 1);
    const PointCloud b = sample_surface(assembly, 50000, 2);
    const double d = chamfer(a, b);
    CHECK(d < 0.02 * a.bbox().diagonal());
}

TEST_CASE("farthest point downsample keeps spread and size") {
    Rng rng(31);
    const PointCloud cloud = testing::random_cloud(rng, 1000);
    const PointCloud down = farthest_point_downsample(cloud, 100);
    CHECK(down.size() == 100);
    CHECK(chamfer(down, cloud) < 0.6);
    const PointCloud rand_down = random_downsample(cloud, 100, 5);
    CHECK(rand_down.size() == 100);
}

TEST_CASE("xyz and ply io round trip") {
    Rng rng(77);
    PointCloud cloud = testing::random_cloud(rng, 123, 0.4);
    cloud.normals.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Eigen::Vector3d n(rng.gaussian(), rng.gaussian(), rng.gaussian());
        cloud.normals.push_back(n.normalized());
    }

    const std::string ply = "/tmp/acg_test_cloud.ply";
    save_ply(cloud, ply);
    const PointCloud ply_back = load_ply(ply);
    REQUIRE(ply_back.size() == cloud.size());
    REQUIRE(ply_back.has_normals());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK((ply_back.points[i] - cloud.points[i]).norm() < 1e-6);  // float storage
        CHECK((ply_back.normals[i] - cloud.normals[i]).norm() < 1e-6);
    }

    const std::string xyz = "/tmp/acg_test_cloud.xyz";
    save_xyz(cloud, xyz);
    const PointCloud xyz_back = load_xyz(xyz);
    REQUIRE(xyz_back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((xyz_back.points[i] - cloud.points[i]).norm() == 0.0);  // full precision text

    std::remove(ply.c_str());
    std::remove(xyz.c_str());
}

TEST_CASE("io rejects malformed input") {
    const std::string path = "/tmp/acg_bad_cloud.xyz";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("1 2 not_a_number\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_xyz(path), IoError);
    CHECK_THROWS_AS(load_cloud("/nonexistent/file.ply"), IoError);
    CHECK_THROWS_AS(load_cloud("/tmp/file.unknown_ext"), IoError);
    std::remove(path.c_str());
}
