#include "sct/volume/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

namespace sct {

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename T>
T byteswap_value(T v) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

template <typename T>
T read_le(const unsigned char* p, bool swap) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) swap = !swap;
    return swap ? byteswap_value(v) : v;
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw VolumeError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Volume load_volume(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto nl = std::find(bytes.begin(), bytes.end(), '\n');
    if (nl == bytes.end()) throw VolumeError("malformed vvol header in " + path.string() + ": no newline");

    Dims3 dims;
    Spacing spacing;
    Domain domain;
    try {
        const auto header = ordered_json::parse(bytes.begin(), nl);
        const auto& d = header.at("dims");
        const auto& s = header.at("spacing");
        if (!d.is_array() || d.size() != 3 || !s.is_array() || s.size() != 3)
            throw VolumeError("dims and spacing must have three entries");
        dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
        spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
        domain = domain_from_string(header.at("domain").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw VolumeError("malformed vvol header in " + path.string() + ": " + e.what());
    }
    if (!all_positive(dims)) throw VolumeError("malformed vvol header: non-positive dims");

    const auto payload_bytes = static_cast<std::size_t>(bytes.end() - (nl + 1));
    const auto expected = static_cast<std::size_t>(dims.volume());
    if (payload_bytes != expected * sizeof(float)) {
        std::ostringstream os;
        os << "vvol length mismatch in " << path.string() << ": header dims " << dims << " need " << expected
           << " floats, payload holds " << payload_bytes / sizeof(float)
           << (payload_bytes % sizeof(float) ? " (plus a partial value)" : "");
        throw VolumeError(os.str());
    }
    std::vector<float> data(expected);
    const auto* p = reinterpret_cast<const unsigned char*>(&*(nl + 1));
    for (std::size_t i = 0; i < expected; ++i) data[i] = read_le<float>(p + i * sizeof(float), false);
    return Volume(dims, spacing, domain, std::move(data));
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
    ordered_json header;
    header["dims"] = {v.dims().z, v.dims().y, v.dims().x};
    header["spacing"] = {v.spacing().z, v.spacing().y, v.spacing().x};
    header["domain"] = std::string(to_string(v.domain()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw VolumeError("cannot write " + path.string());
    const std::string line = header.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(v.data().data()),
                  static_cast<std::streamsize>(v.size() * sizeof(float)));
    } else {
        for (float f : v.data()) {
            const float s = byteswap_value(f);
            out.write(reinterpret_cast<const char*>(&s), sizeof(float));
        }
    }
    if (!out) throw VolumeError("write failed for " + path.string());
}

BinaryMask load_mask(const std::filesystem::path& path) {
    const Volume v = load_volume(path);
    for (float f : v.data())
        if (f != 0.0f && f != 1.0f) throw VolumeError("mask file " + path.string() + " holds non-binary values");
    return volume_to_mask(v);
}

void save_mask(const BinaryMask& m, const std::filesystem::path& path, Spacing spacing) {
    save_volume(mask_to_volume(m, spacing), path);
}

Volume import_nifti(const std::filesystem::path& path, NiftiKind kind) {
    constexpr std::size_t kHeaderSize = 348;
    const auto file = read_file(path);
    if (file.size() < kHeaderSize + 4) throw VolumeError("NIfTI file too short: " + path.string());
    const auto* h = reinterpret_cast<const unsigned char*>(file.data());

    bool swap = false;
    const auto sizeof_hdr = read_le<std::int32_t>(h, false);
    if (sizeof_hdr != 348) {
        if (byteswap_value(sizeof_hdr) != 348) throw VolumeError("not a NIfTI-1 header (sizeof_hdr)");
        swap = true;
    }
    if (std::memcmp(h + 344, "n+1\0", 4) != 0)
        throw VolumeError("NIfTI magic mismatch: only single-file NIfTI-1 (\"n+1\") is supported");

    std::array<std::int16_t, 8> dim{};
    for (int i = 0; i < 8; ++i) dim[i] = read_le<std::int16_t>(h + 40 + 2 * i, swap);
    const auto datatype = read_le<std::int16_t>(h + 70, swap);
    std::array<float, 8> pixdim{};
    for (int i = 0; i < 8; ++i) pixdim[i] = read_le<float>(h + 76 + 4 * i, swap);
    const auto vox_offset = read_le<float>(h + 108, swap);
    float slope = read_le<float>(h + 112, swap);
    const float inter = read_le<float>(h + 116, swap);

    if (dim[0] < 3 || dim[0] > 7) throw VolumeError("NIfTI dim[0] out of range");
    for (int i = 4; i <= dim[0]; ++i)
        if (dim[i] > 1) throw VolumeError("NIfTI volumes with more than three dimensions are not supported");
    const Dims3 dims{dim[3], dim[2], dim[1]};
    if (!all_positive(dims)) throw VolumeError("NIfTI dims must be positive");

    std::size_t elem = 0;
    if (datatype == 4) elem = 2;        // DT_INT16
    else if (datatype == 16) elem = 4;  // DT_FLOAT32
    else throw VolumeError("unsupported NIfTI datatype " + std::to_string(datatype));

    const auto offset = static_cast<std::size_t>(vox_offset);
    const auto n = static_cast<std::size_t>(dims.volume());
    if (offset < kHeaderSize || offset + n * elem > file.size())
        throw VolumeError("NIfTI payload shorter than header dims");

    // scl_slope == 0 means no scaling.
    const bool scaled = slope != 0.0f && std::isfinite(slope);
    if (!scaled) slope = 1.0f;
    const float intercept = scaled ? inter : 0.0f;

    std::vector<float> data(n);
    const unsigned char* p = h + offset;
    for (std::size_t i = 0; i < n; ++i) {
        const float raw = datatype == 4 ? static_cast<float>(read_le<std::int16_t>(p + 2 * i, swap))
                                        : read_le<float>(p + 4 * i, swap);
        float v = slope * raw + intercept;
        if (kind == NiftiKind::CT) v = std::clamp(v, kHuMin, kHuMax);
        data[i] = v;
    }
    const Spacing spacing{std::abs(pixdim[3]) > 0 ? std::abs(pixdim[3]) : 1.0,
                          std::abs(pixdim[2]) > 0 ? std::abs(pixdim[2]) : 1.0,
                          std::abs(pixdim[1]) > 0 ? std::abs(pixdim[1]) : 1.0};
    return Volume(dims, spacing, kind == NiftiKind::CT ? Domain::HU : Domain::RAW, std::move(data));
}

}  // namespace sct
