#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <vector>

#include "ivc/autodiff/tensor.hpp"
#include "ivc/scansynth/dataset.hpp"

namespace ivc::train {

using ad::Tensor;

/// Observations of one split, loaded into memory and grouped by instance.
struct SplitData {
    std::filesystem::path root;
    scan::DatasetManifest manifest;
    scan::Split split = scan::Split::train;
    std::vector<scan::PartialObservation> observations;
    std::vector<std::vector<std::size_t>> by_instance;  // per instance slot, rows of `observations`
    std::vector<std::uint32_t> instance_ids;            // instance id of each slot
    std::map<std::uint32_t, std::vector<Vec3>> gt;      // complete reference samples, when loaded

    std::size_t instance_count() const { return instance_ids.size(); }
};

inline SplitData load_split(const std::filesystem::path& root, scan::Split split, bool with_gt) {
    SplitData d;
    d.root = root;
    d.split = split;
    d.manifest = scan::load_manifest(root);
    for (const auto& e : d.manifest.instances) {
        const auto& views = split == scan::Split::train ? e.train_views : e.test_views;
        if (views.empty()) continue;
        std::vector<std::size_t> rows;
        for (auto v : views) {
            auto obs = scan::read_observation(root / scan::DatasetManifest::observation_name(e.id, v));
            if (obs.instance_id != e.id || obs.view_id != v)
                throw IoError((root / scan::DatasetManifest::observation_name(e.id, v)).string() +
                              ": header names a different instance or view");
            obs.split = split;
            rows.push_back(d.observations.size());
            d.observations.push_back(std::move(obs));
        }
        d.by_instance.push_back(std::move(rows));
        d.instance_ids.push_back(e.id);
        if (with_gt) {
            const auto path = root / scan::DatasetManifest::gt_name(e.id);
            if (!std::filesystem::exists(path)) throw ConfigError("missing complete reference samples " + path.string());
            d.gt[e.id] = scan::load_points(path);
        }
    }
    if (d.observations.empty()) throw ConfigError(root.string() + ": split holds no observations");
    return d;
}

/// batch_size observations from pairwise-distinct instances, one random view each.
inline std::vector<std::size_t> build_batch(const SplitData& data, std::size_t batch_size, std::mt19937_64& rng) {
    if (batch_size > data.instance_count())
        throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds the " +
                          std::to_string(data.instance_count()) + " distinct instances in the split");
    std::vector<std::size_t> slots(data.instance_count());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    std::vector<std::size_t> out;
    out.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, slots.size() - 1);
        std::swap(slots[k], slots[pick(rng)]);
        const auto& rows = data.by_instance[slots[k]];
        std::uniform_int_distribution<std::size_t> view(0, rows.size() - 1);
        out.push_back(rows[view(rng)]);
    }
    return out;
}

/// k distinct indices out of n (partial Fisher-Yates); all of them, in order, when k >= n.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k >= n) return idx;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

inline Tensor points_tensor(const std::vector<Vec3>& pts, const std::vector<std::size_t>& idx) {
    std::vector<double> flat;
    flat.reserve(idx.size() * 3);
    for (auto i : idx)
        for (int c = 0; c < 3; ++c) flat.push_back(pts[i][c]);
    return Tensor({idx.size(), 3}, std::move(flat));
}

inline Tensor points_tensor(const std::vector<Vec3>& pts) {
    std::vector<double> flat;
    flat.reserve(pts.size() * 3);
    for (const auto& p : pts)
        for (int c = 0; c < 3; ++c) flat.push_back(p[c]);
    return Tensor({pts.size(), 3}, std::move(flat));
}

/// Evaluation input: a fixed random subset of the observation's surface points.
inline Tensor eval_input(const scan::PartialObservation& obs, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, (static_cast<std::uint64_t>(obs.instance_id) << 32) | obs.view_id));
    const auto& pts = obs.surface_points.points;
    return points_tensor(pts, sample_indices(pts.size(), n, rng));
}

}  // namespace ivc::train
