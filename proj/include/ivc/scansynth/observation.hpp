#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ivc/common/binary_io.hpp"
#include "ivc/geometry/point_set.hpp"
#include "ivc/scansynth/partial_scan.hpp"

namespace ivc::scan {

enum class Split { train, test, unused };

/// One partial view of one instance, as stored in a .pudf file.
struct PartialObservation {
    std::uint32_t instance_id = 0;
    std::uint32_t view_id = 0;
    Vec3 camera_pos = Vec3::Zero();
    geo::PointSet surface_points;
    std::vector<UdfSample> udf_samples;
    Split split = Split::unused;  // from the manifest, not stored in the file
};

inline constexpr std::uint32_t kObservationVersion = 1;

inline void write_observation(const std::filesystem::path& path, const PartialObservation& obs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    bin::put_magic(out, "PUDF");
    bin::put(out, kObservationVersion);
    bin::put(out, obs.instance_id);
    bin::put(out, obs.view_id);
    for (int k = 0; k < 3; ++k) bin::put(out, obs.camera_pos[k]);
    bin::put(out, static_cast<std::uint32_t>(obs.surface_points.size()));
    for (const auto& p : obs.surface_points.points)
        for (int k = 0; k < 3; ++k) bin::put(out, p[k]);
    bin::put(out, static_cast<std::uint32_t>(obs.udf_samples.size()));
    for (const auto& s : obs.udf_samples) {
        for (int k = 0; k < 3; ++k) bin::put(out, s.position[k]);
        bin::put(out, s.distance);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline PartialObservation read_observation(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    const std::string p = path.string();
    if (!in) throw IoError("cannot open " + p);
    bin::expect_magic(in, "PUDF", p);
    const auto version = bin::get<std::uint32_t>(in, p);
    if (version != kObservationVersion) throw IoError(p + ": unsupported observation version " + std::to_string(version));
    PartialObservation obs;
    obs.instance_id = bin::get<std::uint32_t>(in, p);
    obs.view_id = bin::get<std::uint32_t>(in, p);
    for (int k = 0; k < 3; ++k) obs.camera_pos[k] = bin::get<double>(in, p);
    const auto n_surface = bin::get<std::uint32_t>(in, p);
    obs.surface_points.points.resize(n_surface);
    for (auto& pt : obs.surface_points.points)
        for (int k = 0; k < 3; ++k) pt[k] = bin::get<double>(in, p);
    obs.surface_points.tags.assign(n_surface, geo::Provenance::input);
    const auto n_udf = bin::get<std::uint32_t>(in, p);
    obs.udf_samples.resize(n_udf);
    for (auto& s : obs.udf_samples) {
        for (int k = 0; k < 3; ++k) s.position[k] = bin::get<double>(in, p);
        s.distance = bin::get<double>(in, p);
        if (!(s.distance >= 0.0)) throw IoError(p + ": negative or non-finite UDF distance");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(p + ": trailing bytes after observation");
    return obs;
}

}  // namespace ivc::scan
