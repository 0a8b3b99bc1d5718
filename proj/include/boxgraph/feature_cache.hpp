#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace boxgraph {

/// Per-node feature vectors keyed by node id, as stored in a BGHF cache file:
/// header {"BGHF", version u32, dim u32, count u64}, then per record a
/// u32-length-prefixed id string and `dim` float32 values, all little-endian.
struct FeatureCache {
    static constexpr std::uint32_t kVersion = 1;

    std::uint32_t dim = 0;
    std::vector<std::string> ids;
    std::vector<std::vector<float>> features;

    friend bool operator==(const FeatureCache&, const FeatureCache&) = default;
};

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache read_feature_cache(const std::filesystem::path& path);

}  // namespace boxgraph
