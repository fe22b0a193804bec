#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "ivc/scansynth/dataset.hpp"
#include "support/oracles.hpp"

using namespace ivc;
using namespace ivc::scan;

namespace {

oracle::P3 arr(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

TriangleMesh unit_cube(const Vec3& center) {
    auto [verts, tris] = cube_surface_grid(2);
    TriangleMesh m;
    for (const auto& v : verts) m.vertices.push_back(center + 0.5 * v);
    m.triangles = tris;
    return m;
}

TriangleMesh sphere_mesh(double radius, int subdiv = 24) {
    auto [verts, tris] = cube_surface_grid(subdiv);
    TriangleMesh m;
    for (const auto& v : verts) m.vertices.push_back(radius * v.normalized());
    m.triangles = tris;
    validate_mesh(m);
    return m;
}

TriangleMesh single_triangle() {
    TriangleMesh m;
    m.vertices = {Vec3(-0.5, -0.5, 0), Vec3(0.5, -0.5, 0), Vec3(0, 0.5, 0)};
    m.triangles = {{0, 1, 2}};  // normal +z
    return m;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ivc_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Mesh, CubeGridIsWatertightAndOutward) {
    auto [verts, tris] = cube_surface_grid(5);
    TriangleMesh m{verts, tris};
    const auto r = validate_mesh(m);
    EXPECT_TRUE(r.watertight());
    EXPECT_EQ(tris.size(), 6u * 25u * 2u);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const Vec3 c = (m.corner(t, 0) + m.corner(t, 1) + m.corner(t, 2)) / 3.0;
        EXPECT_GT(m.normal(t).dot(c), 0.0);
    }
    EXPECT_NEAR(surface_area(m), 24.0, 1e-12);
}

TEST(Mesh, NormalizeOffsetCube) {
    auto [m, xf] = normalize_mesh(unit_cube(Vec3(5, 5, 5)));
    Vec3 c = Vec3::Zero();
    double total = 0, maxn = 0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        c += m.area(t) * (m.corner(t, 0) + m.corner(t, 1) + m.corner(t, 2)) / 3.0;
        total += m.area(t);
    }
    for (const auto& v : m.vertices) maxn = std::max(maxn, v.norm());
    EXPECT_LT((c / total).norm(), 1e-12);
    EXPECT_NEAR(maxn, 1.0 / 1.03, 1e-12);
    EXPECT_NEAR((xf.center - Vec3(5, 5, 5)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((xf.invert(xf.apply(Vec3(1, 2, 3))) - Vec3(1, 2, 3)).norm(), 0.0, 1e-12);
}

TEST(Mesh, NormalizeIsIdempotent) {
    auto [m1, xf1] = normalize_mesh(unit_cube(Vec3(1, -2, 0)));
    auto [m2, xf2] = normalize_mesh(m1);
    EXPECT_NEAR(xf2.center.norm(), 0.0, 1e-12);
    EXPECT_NEAR(xf2.scale, 1.0, 1e-12);
}

TEST(Mesh, HoleIsRejectedWithReport) {
    auto m = unit_cube(Vec3::Zero());
    m.triangles.pop_back();
    try {
        normalize_mesh(m);
        FAIL() << "expected rejection";
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("3 boundary edges"), std::string::npos) << e.what();
    }
}

TEST(Mesh, EmptyAndOutOfRange) {
    TriangleMesh empty;
    EXPECT_THROW(validate_mesh(empty), ContractError);
    auto m = single_triangle();
    m.triangles[0][2] = 7;
    EXPECT_THROW(validate_mesh(m), ContractError);
}

TEST(Mesh, DegenerateTrianglesDropped) {
    auto m = single_triangle();
    m.vertices.push_back(Vec3(1, 1, 1));
    m.triangles.push_back({3, 3, 0});
    const auto r = validate_mesh(m);
    EXPECT_EQ(r.degenerate_removed, 1u);
    EXPECT_EQ(m.triangles.size(), 1u);
}

TEST(Cameras, TwoAreAntipodal) {
    const auto c = sample_cameras(2, 2.0, 11);
    EXPECT_NEAR((c[0] + c[1]).norm(), 0.0, 1e-12);
    EXPECT_NEAR(c[0].norm(), 2.0, 1e-12);
}

TEST(Cameras, ThirtyAreWellSpread) {
    const auto c = sample_cameras(30, 2.0, 3);
    double min_angle = 180.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            const double cosang = std::clamp(c[i].normalized().dot(c[j].normalized()), -1.0, 1.0);
            min_angle = std::min(min_angle, std::acos(cosang) * 180.0 / std::numbers::pi);
        }
    EXPECT_GT(min_angle, 20.0);
    for (const auto& p : c) EXPECT_NEAR(p.norm(), 2.0, 1e-12);
}

TEST(Cameras, Deterministic) {
    EXPECT_EQ(sample_cameras(30, 2.0, 5), sample_cameras(30, 2.0, 5));
    EXPECT_NE(sample_cameras(30, 2.0, 5), sample_cameras(30, 2.0, 6));
    EXPECT_THROW(sample_cameras(0, 2.0, 0), ContractError);
}

TEST(Render, TriangleFacingCameraKeepsAll) {
    const auto m = single_triangle();
    const auto scan = render_partial(m, Vec3(0, 0, 2), 200, 1);
    EXPECT_EQ(scan.points.size(), 200u);
    EXPECT_EQ(scan.draws, 200u);
    for (const auto& p : scan.points.points) EXPECT_NEAR(p.z(), 0.0, 1e-15);
}

TEST(Render, TriangleFacingAwayIsSkipped) {
    EXPECT_THROW(render_partial(single_triangle(), Vec3(0, 0, -2), 200, 1), ContractError);
}

TEST(Render, SphereVisibleFraction) {
    const auto m = sphere_mesh(0.9);
    // A distant camera sees nearly a hemisphere.
    const auto far = render_partial(m, Vec3(0, 0, 1000), 4000, 2);
    EXPECT_NEAR(far.visible_fraction(), 0.5, 0.05);
    // From distance d a sphere of radius r shows a cap of area fraction (1 - r/d)/2.
    const auto near = render_partial(m, Vec3(2, 0, 0), 4000, 3);
    EXPECT_NEAR(near.visible_fraction(), (1.0 - 0.9 / 2.0) / 2.0, 0.03);
}

TEST(Render, VisiblePointsPassIndependentOcclusionCheck) {
    // Two stacked plates: the lower one is partially hidden by the upper one.
    TriangleMesh m;
    m.vertices = {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(1, 1, 0), Vec3(-1, 1, 0),
                  Vec3(-0.5, -0.5, 0.5), Vec3(0.5, -0.5, 0.5), Vec3(0.5, 0.5, 0.5), Vec3(-0.5, 0.5, 0.5)};
    m.triangles = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
    const Vec3 cam(0, 0, 3);
    const auto scan = render_partial(m, cam, 1000, 9);
    ASSERT_EQ(scan.points.size(), 1000u);
    std::size_t hidden_region = 0;
    for (const auto& p : scan.points.points) {
        // Independent analytic check: a point on z=0 is hidden iff its ray to
        // the camera crosses z=0.5 inside the upper plate.
        if (p.z() < 0.25) {
            const double t = 0.5 / 3.0;
            const Vec3 hit = p + t * (cam - p);
            const bool blocked = std::abs(hit.x()) <= 0.5 && std::abs(hit.y()) <= 0.5;
            EXPECT_FALSE(blocked) << p.transpose();
            hidden_region += std::abs(p.x()) < 0.4 && std::abs(p.y()) < 0.4;
        }
    }
    EXPECT_EQ(hidden_region, 0u);
}

TEST(Bvh, ClosestMatchesBruteForce) {
    const auto m = sphere_mesh(0.8, 6);
    const Bvh bvh(m);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng));
        double best = 1e300;
        for (std::size_t t = 0; t < m.triangles.size(); ++t)
            best = std::min(best, oracle::point_triangle_distance(arr(p), arr(m.corner(t, 0)), arr(m.corner(t, 1)),
                                                                  arr(m.corner(t, 2))));
        EXPECT_NEAR(bvh.closest(p).distance, best, 1e-9);
    }
}

TEST(Udf, OnSurfaceAndFlatOffset) {
    const auto m = single_triangle();
    const Bvh bvh(m);
    EXPECT_NEAR(bvh.closest(Vec3(0, 0, 0)).distance, 0.0, 1e-9);
    for (double d : {0.01, 0.1, 0.37}) EXPECT_NEAR(bvh.closest(Vec3(0.0, -0.1, d)).distance, d, 1e-12);
}

TEST(Udf, SamplesMatchPartialSurface) {
    const auto m = sphere_mesh(0.9, 10);
    const auto scan = render_partial(m, Vec3(0, 2, 0), 500, 5);
    const Bvh partial(m, scan.visible_triangles);
    UdfSamplingConfig cfg{200, 100, 0.05, 0.005};
    const auto samples = sample_udf(scan.points, partial, cfg, 8);
    ASSERT_EQ(samples.size(), 300u);
    for (std::size_t i = 0; i < 300; ++i) {
        double best = 1e300;
        for (auto t : scan.visible_triangles)
            best = std::min(best, oracle::point_triangle_distance(arr(samples[i].position), arr(m.corner(t, 0)),
                                                                  arr(m.corner(t, 1)), arr(m.corner(t, 2))));
        EXPECT_NEAR(samples[i].distance, best, 1e-9);
        if (i >= 200) {
            EXPECT_LE(samples[i].position.norm(), 1.0);
        }
    }
    EXPECT_THROW(sample_udf(geo::PointSet{}, partial, cfg, 0), ContractError);
}

TEST(Primitives, BoxesAreWatertightAndNormalized) {
    const auto corpus = gen_primitive_corpus(20, Family::box, 1);
    for (const auto& s : corpus) {
        TriangleMesh m = s.mesh;
        EXPECT_TRUE(validate_mesh(m).watertight());
        double maxn = 0;
        for (const auto& v : m.vertices) maxn = std::max(maxn, v.norm());
        EXPECT_NEAR(maxn, 1.0 / 1.03, 1e-12);
        const auto& p = s.params;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) EXPECT_LE(p[a] / p[b], 2.0);
    }
}

TEST(Primitives, AllFamiliesWatertight) {
    for (auto f : {Family::ellipsoid, Family::capsule_couch}) {
        for (const auto& s : gen_primitive_corpus(5, f, 2)) {
            TriangleMesh m = s.mesh;
            EXPECT_TRUE(validate_mesh(m).watertight()) << to_string(f);
        }
    }
}

TEST(Primitives, SameSeedSameCorpus) {
    const auto a = gen_primitive_corpus(5, Family::capsule_couch, 9);
    const auto b = gen_primitive_corpus(5, Family::capsule_couch, 9);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].params, b[i].params);
        EXPECT_EQ(a[i].mesh.vertices, b[i].mesh.vertices);
    }
}

TEST(Primitives, EllipsoidParamsDistinct) {
    const auto c = gen_primitive_corpus(50, Family::ellipsoid, 4);
    std::set<std::array<double, 3>> seen;
    for (const auto& s : c) seen.insert(s.params);
    EXPECT_EQ(seen.size(), 50u);
}

TEST(Primitives, MapLandsOnSurface) {
    const auto s = make_primitive(Family::ellipsoid, {0.9, 0.6, 0.7}, 16);
    const Bvh bvh(s.mesh);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_LT(bvh.closest(s.map(sample_cube_surface(rng))).distance, 0.01);
    // Vertices are exactly mapped lattice points.
    const auto box = make_primitive(Family::box, {0.5, 0.7, 0.9}, 4);
    EXPECT_NEAR((box.map(Vec3(1, 1, 1)) - box.transform.apply(Vec3(0.5, 0.7, 0.9))).norm(), 0.0, 1e-15);
    EXPECT_THROW(parse_family("torus"), ConfigError);
}

TEST(MeshIo, ObjAndPlyRoundTrip) {
    const auto dir = temp_dir("meshio");
    const auto s = make_primitive(Family::box, {0.5, 0.6, 0.7}, 3);
    {
        std::ofstream obj(dir / "m.obj");
        obj << "# comment\n";
        for (const auto& v : s.mesh.vertices) obj << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
        for (const auto& t : s.mesh.triangles) obj << "f " << t[0] + 1 << "/1 " << t[1] + 1 << "//2 " << t[2] + 1 << '\n';
    }
    const auto obj = read_mesh(dir / "m.obj");
    EXPECT_EQ(obj.triangles, s.mesh.triangles);
    write_ply(dir / "m.ply", s.mesh);
    const auto ply = read_mesh(dir / "m.ply");
    EXPECT_EQ(ply.triangles, s.mesh.triangles);
    for (std::size_t i = 0; i < ply.vertices.size(); ++i) EXPECT_NEAR((ply.vertices[i] - s.mesh.vertices[i]).norm(), 0, 1e-6);
    {
        std::ofstream a(dir / "a.ply");
        a << "ply\nformat ascii 1.0\nelement vertex 4\nproperty double x\nproperty double y\nproperty double z\n"
             "property uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
             "0 0 0 1\n1 0 0 2\n1 1 0 3\n0 1 0 4\n4 0 1 2 3\n";
    }
    const auto quad = read_mesh(dir / "a.ply");
    ASSERT_EQ(quad.triangles.size(), 2u);
    EXPECT_EQ(quad.vertices[2], Vec3(1, 1, 0));
    EXPECT_THROW(read_mesh(dir / "missing.obj"), IoError);
    EXPECT_THROW(read_mesh(dir / "m.stl"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Observation, RoundTripAndBadMagic) {
    const auto dir = temp_dir("obs");
    PartialObservation o;
    o.instance_id = 3;
    o.view_id = 17;
    o.camera_pos = Vec3(0.1, 0.2, 1.9);
    o.surface_points = geo::PointSet({Vec3(1, 2, 3), Vec3(-1, 0.5, 0)}, geo::Provenance::input);
    o.udf_samples = {{Vec3(0, 0, 0), 0.25}, {Vec3(0.1, 0.1, 0.1), 0.0}};
    write_observation(dir / "o.pudf", o);
    const auto r = read_observation(dir / "o.pudf");
    EXPECT_EQ(r.instance_id, 3u);
    EXPECT_EQ(r.view_id, 17u);
    EXPECT_EQ(r.camera_pos, o.camera_pos);
    EXPECT_EQ(r.surface_points.points, o.surface_points.points);
    ASSERT_EQ(r.udf_samples.size(), 2u);
    EXPECT_EQ(r.udf_samples[0].distance, 0.25);
    {
        std::fstream f(dir / "o.pudf", std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    try {
        read_observation(dir / "o.pudf");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("o.pudf"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST(Dataset, BookkeepingAndDeterminism) {
    DatasetConfig cfg;
    cfg.n_surface = 64;
    cfg.gt_points = 32;
    cfg.udf = {20, 10, 0.05, 0.005};
    cfg.seed = 21;
    cfg.threads = 3;
    const auto inst = primitive_instances(10, Family::box, 21, 3);
    const auto d1 = temp_dir("ds1"), d2 = temp_dir("ds2");
    const auto m = build_dataset(inst, cfg, d1);
    std::size_t files = 0;
    for (const auto& f : std::filesystem::directory_iterator(d1 / "obs")) files += f.path().extension() == ".pudf";
    EXPECT_EQ(files, 300u);
    EXPECT_EQ(m.count_refs(Split::train), 60u);
    EXPECT_EQ(m.count_refs(Split::test), 20u);
    for (const auto& e : m.instances) {
        std::set<std::uint32_t> tr(e.train_views.begin(), e.train_views.end());
        for (auto v : e.test_views) EXPECT_EQ(tr.count(v), 0u);
    }
    cfg.threads = 1;
    build_dataset(inst, cfg, d2);
    EXPECT_EQ(slurp(d1 / "manifest.json"), slurp(d2 / "manifest.json"));
    EXPECT_EQ(slurp(d1 / "obs/4_12.pudf"), slurp(d2 / "obs/4_12.pudf"));
    const auto loaded = load_manifest(d1);
    EXPECT_EQ(to_json(loaded), to_json(m));
    ASSERT_TRUE(loaded.primitive(loaded.instances[2]).has_value());
    EXPECT_EQ(loaded.primitive(loaded.instances[2])->mesh.vertices, inst[2].mesh.vertices);
    std::filesystem::remove(d1 / "obs/0_0.pudf");
    EXPECT_THROW(load_manifest(d1), IoError);
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}

TEST(Dataset, InvalidConfig) {
    DatasetConfig cfg;
    cfg.views = 5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = DatasetConfig{};
    cfg.camera_radius = 0.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
