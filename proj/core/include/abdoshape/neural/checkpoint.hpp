#pragma once

#include <filesystem>
#include <string>

#include "abdoshape/neural/parameters.hpp"

namespace abdoshape::neural {

// "TNSR", u32 array count, then per array: u16 name length, name bytes,
// u8 rank, u32 dims[rank], f64 values; all little-endian.
std::string encode_checkpoint(const ParameterStore& store);
ParameterStore decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store);
ParameterStore read_checkpoint(const std::filesystem::path& path);

}  // namespace abdoshape::neural
