#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ivc/common/error.hpp"

namespace ivc {

/// Layer sizes for every network. Defaults follow the full-size model;
/// `desk()` is the reduced preset for CPU runs.
struct NetworkConfig {
    std::size_t code_dim = 128;
    std::vector<std::size_t> enc_point_dims{64, 128};  // per-point MLP widths before max-pool
    std::size_t enc_head_hidden = 128;
    std::size_t gen_hidden = 256;
    double gen_final_std = 1e-2;
    std::size_t n_seeds = 128;   // |Y|
    std::size_t n_coarse = 512;  // |X_c|
    std::size_t up_ratio = 4;    // children per parent, |X| = n_coarse * up_ratio
    std::vector<std::size_t> up_hidden{128, 64};
    double offset_scale = 0.1;
    std::size_t warp_width = 256;
    std::size_t warp_layers = 8;  // hidden layers of the residual branch
    double warp_final_std = 1e-4;
    std::size_t udf_width = 256;
    std::size_t udf_layers = 4;  // affine layers including the output one

    std::size_t n_output() const { return n_coarse * up_ratio; }

    void validate() const {
        if (code_dim == 0 || enc_point_dims.empty() || gen_hidden == 0 || warp_width == 0 || udf_width == 0)
            throw ConfigError("network: layer widths must be positive");
        for (auto d : enc_point_dims)
            if (d == 0) throw ConfigError("network: enc_point_dims entries must be positive");
        for (auto d : up_hidden)
            if (d == 0) throw ConfigError("network: up_hidden entries must be positive");
        if (n_seeds == 0 || n_coarse == 0 || up_ratio == 0) throw ConfigError("network: point counts must be positive");
        if (warp_layers == 0) throw ConfigError("network: warp_layers must be at least 1");
        if (udf_layers < 2) throw ConfigError("network: udf_layers must be at least 2");
        if (!(offset_scale > 0.0)) throw ConfigError("network: offset_scale must be positive");
    }

    static NetworkConfig desk() {
        NetworkConfig c;
        c.n_seeds = 32;
        c.n_coarse = 128;
        c.up_ratio = 4;
        return c;
    }
};

}  // namespace ivc
