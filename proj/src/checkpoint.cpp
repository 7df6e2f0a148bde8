#include "fairsvt/checkpoint.hpp"

#include "fairsvt/binio.hpp"

#include <fstream>

namespace fairsvt::nn {

namespace {
constexpr char kMagic[8] = {'F', 'S', 'V', 'T', 'C', 'K', 'P', 'T'};
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    binio::put_le<std::uint32_t>(out, kCheckpointVersion);
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
        out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        binio::put_le<std::uint32_t>(out, 2);
        binio::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(r.value.rows()));
        binio::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(r.value.cols()));
        for (Eigen::Index i = 0; i < r.value.size(); ++i) binio::put_f64(out, r.value.data()[i]);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

std::vector<NamedMatrix> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMagic))
        throw binio::FormatError("not a checkpoint file: " + path.string());
    const auto version = binio::get_le<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw binio::FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto count = binio::get_le<std::uint32_t>(in);
    std::vector<NamedMatrix> records;
    records.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedMatrix r;
        r.name.resize(binio::get_le<std::uint32_t>(in));
        if (!in.read(r.name.data(), static_cast<std::streamsize>(r.name.size())))
            throw binio::FormatError("truncated checkpoint record name");
        const auto ndim = binio::get_le<std::uint32_t>(in);
        if (ndim != 2) throw binio::FormatError("checkpoint record '" + r.name + "' is not two-dimensional");
        const auto rows = binio::get_le<std::uint64_t>(in);
        const auto cols = binio::get_le<std::uint64_t>(in);
        r.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < r.value.size(); ++i) r.value.data()[i] = binio::get_f64(in);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace fairsvt::nn
