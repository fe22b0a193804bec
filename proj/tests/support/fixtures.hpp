#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ivc/scansynth/dataset.hpp"
#include "ivc/trainer/config.hpp"

namespace fixture {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ivc_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Small primitive corpus: n instances, 4 views (2 train, 1 test), few points.
inline ivc::scan::DatasetManifest tiny_dataset(const std::filesystem::path& root, std::size_t n = 4,
                                               ivc::scan::Family family = ivc::scan::Family::box,
                                               std::uint64_t seed = 5) {
    ivc::scan::DatasetConfig cfg;
    cfg.corpus = "tiny";
    cfg.views = 4;
    cfg.train_views = 2;
    cfg.test_views = 1;
    cfg.n_surface = 256;
    cfg.gt_points = 256;
    cfg.udf.n_near = 200;
    cfg.udf.n_uniform = 50;
    cfg.seed = seed;
    return ivc::scan::build_dataset(ivc::scan::primitive_instances(n, family, seed, 4), cfg, root);
}

/// Networks with a few hundred to a few thousand parameters.
inline ivc::NetworkConfig tiny_network() {
    ivc::NetworkConfig n;
    n.code_dim = 8;
    n.enc_point_dims = {16, 16};
    n.enc_head_hidden = 16;
    n.gen_hidden = 16;
    n.n_seeds = 16;
    n.n_coarse = 48;
    n.up_ratio = 2;
    n.up_hidden = {16};
    n.warp_width = 16;
    n.warp_layers = 2;
    n.udf_width = 16;
    n.udf_layers = 3;
    return n;
}

inline ivc::train::TrainConfig tiny_train_config(const std::filesystem::path& dataset) {
    ivc::train::TrainConfig c;
    c.dataset = dataset.string();
    c.network = tiny_network();
    c.batch_size = 2;
    c.max_iterations = 10;
    c.warmup_iterations = 4;
    c.template_refresh = 4;
    c.template_points = 64;
    c.template_extraction.n_candidates = 256;
    c.template_extraction.iterations = 5;
    c.template_extraction.level_tol = 0.05;
    c.n_input_points = 64;
    c.n_udf_samples = 64;
    c.checkpoint_every = 0;
    c.seed = 11;
    return c;
}

}  // namespace fixture
