#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivc/common/parallel.hpp"
#include "ivc/scansynth/mesh_io.hpp"
#include "ivc/scansynth/observation.hpp"
#include "ivc/scansynth/primitives.hpp"

namespace ivc::scan {

using json = nlohmann::json;

struct DatasetConfig {
    std::string corpus = "corpus";
    std::size_t views = 30;
    std::size_t train_views = 6;
    std::size_t test_views = 2;
    std::size_t n_surface = 4096;  // points per partial view
    std::size_t gt_points = 4096;  // complete-shape reference samples per instance
    double camera_radius = 2.0;
    UdfSamplingConfig udf;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void validate() const {
        if (views < 1) throw ConfigError("dataset: views must be at least 1");
        if (train_views + test_views > views)
            throw ConfigError("dataset: train_views + test_views exceeds views per instance");
        if (n_surface < 1 || gt_points < 1) throw ConfigError("dataset: point counts must be positive");
        if (!(camera_radius > 1.0)) throw ConfigError("dataset: camera_radius must lie outside the unit sphere");
        if (!(udf.sigma_wide > 0.0 && udf.sigma_narrow > 0.0)) throw ConfigError("dataset: UDF sigmas must be positive");
    }
};

/// Mesh to be scanned, already normalized.
struct DatasetInstance {
    std::string name;
    TriangleMesh mesh;
    NormalizeTransform transform;
    std::optional<Family> family;  // set for procedural primitives
    std::array<double, 3> params{};
    int subdiv = 12;
};

struct InstanceEntry {
    std::uint32_t id = 0;
    std::string name;
    std::optional<Family> family;
    std::array<double, 3> params{};
    int subdiv = 12;
    NormalizeTransform transform;
    std::vector<std::uint32_t> views_available;
    std::vector<std::uint32_t> train_views;
    std::vector<std::uint32_t> test_views;
    std::vector<std::string> skipped;  // reasons for views that produced no observation
};

struct DatasetManifest {
    DatasetConfig config;
    std::vector<InstanceEntry> instances;

    static std::string observation_name(std::uint32_t instance, std::uint32_t view) {
        return "obs/" + std::to_string(instance) + "_" + std::to_string(view) + ".pudf";
    }
    static std::string gt_name(std::uint32_t instance) { return "gt/" + std::to_string(instance) + ".ply"; }

    std::size_t count_refs(Split s) const {
        std::size_t n = 0;
        for (const auto& e : instances) n += s == Split::train ? e.train_views.size() : e.test_views.size();
        return n;
    }

    /// Rebuilds the primitive shape of an entry (for correspondence ground truth).
    std::optional<PrimitiveShape> primitive(const InstanceEntry& e) const {
        if (!e.family) return std::nullopt;
        return make_primitive(*e.family, e.params, e.subdiv);
    }
};

inline json to_json(const DatasetManifest& m) {
    const auto& c = m.config;
    json j;
    j["format_version"] = 1;
    j["corpus"] = c.corpus;
    j["seed"] = c.seed;
    j["generation"] = {{"views", c.views},
                       {"train_views", c.train_views},
                       {"test_views", c.test_views},
                       {"n_surface", c.n_surface},
                       {"gt_points", c.gt_points},
                       {"camera_radius", c.camera_radius},
                       {"n_near", c.udf.n_near},
                       {"n_uniform", c.udf.n_uniform},
                       {"sigma_wide", c.udf.sigma_wide},
                       {"sigma_narrow", c.udf.sigma_narrow}};
    json list = json::array();
    for (const auto& e : m.instances) {
        json je;
        je["id"] = e.id;
        je["name"] = e.name;
        if (e.family) {
            je["family"] = to_string(*e.family);
            je["params"] = e.params;
            je["subdiv"] = e.subdiv;
        }
        je["transform"] = {{"center", {e.transform.center.x(), e.transform.center.y(), e.transform.center.z()}},
                           {"scale", e.transform.scale}};
        je["views_available"] = e.views_available;
        je["train_views"] = e.train_views;
        je["test_views"] = e.test_views;
        je["gt_file"] = DatasetManifest::gt_name(e.id);
        if (!e.skipped.empty()) je["skipped"] = e.skipped;
        list.push_back(std::move(je));
    }
    j["instances"] = std::move(list);
    return j;
}

inline DatasetManifest manifest_from_json(const json& j) {
    DatasetManifest m;
    try {
        auto& c = m.config;
        c.corpus = j.at("corpus").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        const auto& g = j.at("generation");
        c.views = g.at("views");
        c.train_views = g.at("train_views");
        c.test_views = g.at("test_views");
        c.n_surface = g.at("n_surface");
        c.gt_points = g.at("gt_points");
        c.camera_radius = g.at("camera_radius");
        c.udf.n_near = g.at("n_near");
        c.udf.n_uniform = g.at("n_uniform");
        c.udf.sigma_wide = g.at("sigma_wide");
        c.udf.sigma_narrow = g.at("sigma_narrow");
        for (const auto& je : j.at("instances")) {
            InstanceEntry e;
            e.id = je.at("id");
            e.name = je.at("name");
            if (je.contains("family")) {
                e.family = parse_family(je.at("family"));
                e.params = je.at("params");
                e.subdiv = je.at("subdiv");
            }
            const auto& t = je.at("transform");
            e.transform.center = Vec3(t.at("center")[0], t.at("center")[1], t.at("center")[2]);
            e.transform.scale = t.at("scale");
            e.views_available = je.at("views_available").get<std::vector<std::uint32_t>>();
            e.train_views = je.at("train_views").get<std::vector<std::uint32_t>>();
            e.test_views = je.at("test_views").get<std::vector<std::uint32_t>>();
            if (je.contains("skipped")) e.skipped = je.at("skipped").get<std::vector<std::string>>();
            m.instances.push_back(std::move(e));
        }
    } catch (const json::exception& ex) {
        throw IoError(std::string("manifest: ") + ex.what());
    }
    return m;
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json(m).dump(2) << '\n';
}

/// Loads `root/manifest.json` and checks that every referenced file exists.
inline DatasetManifest load_manifest(const std::filesystem::path& root) {
    const auto path = root / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw IoError(path.string() + ": " + ex.what());
    }
    auto m = manifest_from_json(j);
    for (const auto& e : m.instances) {
        for (auto v : e.views_available) {
            const auto f = root / DatasetManifest::observation_name(e.id, v);
            if (!std::filesystem::exists(f)) throw IoError("manifest references missing file " + f.string());
        }
        const auto g = root / DatasetManifest::gt_name(e.id);
        if (!std::filesystem::exists(g)) throw IoError("manifest references missing file " + g.string());
    }
    return m;
}

inline std::vector<Vec3> load_points(const std::filesystem::path& ply) { return read_ply(ply).vertices; }

/// Scans every instance from `views` cameras, writes observation files and
/// complete-shape reference samples under `root`, then the manifest.
/// Instances run in parallel; each writes only its own files.
inline DatasetManifest build_dataset(const std::vector<DatasetInstance>& instances, const DatasetConfig& cfg,
                                     const std::filesystem::path& root) {
    cfg.validate();
    if (instances.empty()) throw ContractError("build_dataset: no instances");
    std::filesystem::create_directories(root / "obs");
    std::filesystem::create_directories(root / "gt");
    DatasetManifest manifest;
    manifest.config = cfg;
    manifest.instances.resize(instances.size());
    parallel_for(instances.size(), cfg.threads, [&](std::size_t i) {
        const auto& inst = instances[i];
        const std::uint64_t inst_seed = mix_seed(cfg.seed, i);
        InstanceEntry e;
        e.id = static_cast<std::uint32_t>(i);
        e.name = inst.name;
        e.family = inst.family;
        e.params = inst.params;
        e.subdiv = inst.subdiv;
        e.transform = inst.transform;
        const auto cams = sample_cameras(cfg.views, cfg.camera_radius, inst_seed);
        for (std::uint32_t v = 0; v < cams.size(); ++v) {
            const std::uint64_t view_seed = mix_seed(inst_seed, v + 1);
            PartialScan scan;
            try {
                scan = render_partial(inst.mesh, cams[v], cfg.n_surface, view_seed);
            } catch (const ContractError& ex) {
                e.skipped.push_back("view " + std::to_string(v) + ": " + ex.what());
                continue;
            }
            const Bvh partial_surface(inst.mesh, scan.visible_triangles);
            PartialObservation obs;
            obs.instance_id = e.id;
            obs.view_id = v;
            obs.camera_pos = cams[v];
            obs.udf_samples = sample_udf(scan.points, partial_surface, cfg.udf, mix_seed(view_seed, 0));
            obs.surface_points = std::move(scan.points);
            write_observation(root / DatasetManifest::observation_name(e.id, v), obs);
            e.views_available.push_back(v);
        }
        if (e.views_available.size() < cfg.train_views + cfg.test_views)
            throw ContractError("build_dataset: instance " + std::to_string(i) + " has only " +
                                std::to_string(e.views_available.size()) + " usable views");
        auto order = e.views_available;
        std::mt19937_64 rng(mix_seed(inst_seed, 0));
        std::shuffle(order.begin(), order.end(), rng);
        e.train_views.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.train_views));
        e.test_views.assign(order.begin() + static_cast<std::ptrdiff_t>(cfg.train_views),
                            order.begin() + static_cast<std::ptrdiff_t>(cfg.train_views + cfg.test_views));
        std::sort(e.train_views.begin(), e.train_views.end());
        std::sort(e.test_views.begin(), e.test_views.end());
        std::mt19937_64 gt_rng(mix_seed(inst_seed, 1u << 20));
        write_ply(root / DatasetManifest::gt_name(e.id), SurfaceSampler(inst.mesh).sample_points(cfg.gt_points, gt_rng));
        manifest.instances[i] = std::move(e);
    });
    write_manifest(root / "manifest.json", manifest);
    return manifest;
}

inline std::vector<DatasetInstance> primitive_instances(std::size_t n, Family family, std::uint64_t seed, int subdiv = 12) {
    auto shapes = gen_primitive_corpus(n, family, seed, subdiv);
    std::vector<DatasetInstance> out;
    out.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        auto& s = shapes[i];
        out.push_back({to_string(family) + "_" + std::to_string(i), std::move(s.mesh), s.transform, family, s.params, subdiv});
    }
    return out;
}

}  // namespace ivc::scan
