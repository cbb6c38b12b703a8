#include "sct/nn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sct::nn {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
    auto p = stem;
    p += suffix;
    return p;
}

float to_le(float f) {
    if constexpr (std::endian::native == std::endian::big) {
        auto b = std::bit_cast<std::array<unsigned char, 4>>(f);
        std::reverse(b.begin(), b.end());
        return std::bit_cast<float>(b);
    }
    return f;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& stem) {
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    std::vector<float> blob;
    params.visit([&](const std::string& name, const Tensor& t) {
        nlohmann::ordered_json entry;
        entry["name"] = name;
        entry["shape"] = t.shape();
        entry["offset"] = blob.size();
        manifest.push_back(std::move(entry));
        for (double v : t.values()) blob.push_back(to_le(static_cast<float>(v)));
    });
    nlohmann::ordered_json doc;
    doc["descriptor"] = to_json(params.desc);
    doc["manifest"] = std::move(manifest);

    std::ofstream js(with_suffix(stem, ".json"), std::ios::trunc);
    if (!js) throw ModelError("cannot write checkpoint " + stem.string());
    js << doc.dump(2) << '\n';
    std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary | std::ios::trunc);
    if (!bin) throw ModelError("cannot write checkpoint " + stem.string());
    bin.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
    if (!bin) throw ModelError("write failed for checkpoint " + stem.string());
}

ModelParams load_checkpoint(const std::filesystem::path& stem) {
    std::ifstream js(with_suffix(stem, ".json"));
    if (!js) throw ModelError("cannot open checkpoint " + stem.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    ModelParams params = build_model(descriptor_from_json(doc.at("descriptor")));

    std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
    if (!bin) throw ModelError("cannot open checkpoint blob " + stem.string());
    const std::vector<char> raw{std::istreambuf_iterator<char>(bin), std::istreambuf_iterator<char>()};
    if (raw.size() % sizeof(float) != 0) throw ModelError("checkpoint blob has a partial value");
    const std::size_t count = raw.size() / sizeof(float);

    const auto& manifest = doc.at("manifest");
    std::size_t k = 0;
    params.visit([&](const std::string& name, Tensor& t) {
        if (k >= manifest.size()) throw ModelError("checkpoint manifest is missing " + name);
        const auto& entry = manifest[k++];
        if (entry.at("name").get<std::string>() != name || entry.at("shape").get<std::vector<int>>() != t.shape())
            throw ModelError("checkpoint manifest does not match the descriptor at " + name);
        const auto offset = entry.at("offset").get<std::size_t>();
        if (offset + t.size() > count) throw ModelError("checkpoint blob too short for " + name);
        for (std::size_t i = 0; i < t.size(); ++i) {
            float f;
            std::memcpy(&f, raw.data() + (offset + i) * sizeof(float), sizeof(float));
            t[i] = to_le(f);
        }
    });
    if (k != manifest.size()) throw ModelError("checkpoint manifest has extra entries");
    return params;
}

void round_to_float(ModelParams& params) {
    params.visit([](const std::string&, Tensor& t) {
        for (double& v : t.values()) v = static_cast<float>(v);
    });
}

}  // namespace sct::nn
