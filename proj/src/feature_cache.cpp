#include "boxgraph/feature_cache.hpp"

#include <fstream>

#include "boxgraph/binary_io.hpp"
#include "boxgraph/error.hpp"

namespace boxgraph {

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache) {
    if (cache.ids.size() != cache.features.size())
        throw std::invalid_argument("feature cache ids and features differ in length");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write("BGHF", 4);
    binary::put<std::uint32_t>(out, FeatureCache::kVersion);
    binary::put<std::uint32_t>(out, cache.dim);
    binary::put<std::uint64_t>(out, cache.ids.size());
    for (std::size_t i = 0; i < cache.ids.size(); ++i) {
        if (cache.features[i].size() != cache.dim)
            throw std::invalid_argument("feature vector length differs from cache dim");
        binary::put_string(out, cache.ids[i]);
        out.write(reinterpret_cast<const char*>(cache.features[i].data()),
                  static_cast<std::streamsize>(cache.dim * sizeof(float)));
    }
}

FeatureCache read_feature_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    binary::expect_magic(in, "BGHF", path.string());
    const auto version = binary::get<std::uint32_t>(in);
    if (version != FeatureCache::kVersion)
        throw DataError(path.string() + ": unsupported feature cache version " + std::to_string(version));
    FeatureCache cache;
    cache.dim = binary::get<std::uint32_t>(in);
    const auto count = binary::get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        cache.ids.push_back(binary::get_string(in));
        std::vector<float> v(cache.dim);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(cache.dim * sizeof(float)));
        if (!in) throw DataError(path.string() + ": truncated feature cache");
        cache.features.push_back(std::move(v));
    }
    return cache;
}

}  // namespace boxgraph
