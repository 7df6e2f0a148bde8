#pragma once

#include "fairsvt/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fairsvt::nn {

struct NamedMatrix {
    std::string name;
    Matrix value;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary parameter checkpoint:
///   "FSVTCKPT" | u32 version | u32 count |
///   count x { u32 name_len | name | u32 ndim | u64 dims[ndim] | f64 data[] }
/// All integers and floats little-endian, data row-major.
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& records);
std::vector<NamedMatrix> read_checkpoint(const std::filesystem::path& path);

}  // namespace fairsvt::nn
