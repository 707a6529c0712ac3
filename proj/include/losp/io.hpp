#pragma once

#include "losp/encoding.hpp"
#include "losp/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace losp {

/// In-memory form of a LOSPARR1 file: row-major complex entries.
struct ArrayFile
{
  std::vector<std::uint64_t> dims;
  std::vector<Cx> data;

  std::uint64_t element_count() const;
};

/// magic "LOSPARR1", u8 ndims, little-endian u64 dims, float32 (re, im) pairs.
void write_array(ArrayFile const &array, std::filesystem::path const &path);
ArrayFile read_array(std::filesystem::path const &path);

ArrayFile to_array(CxImage const &img);
ArrayFile to_array(RealImage const &img);
ArrayFile to_array(ShotArray const &shots);
/// dims (J, n_coils, M, N).
ArrayFile to_array(MultiShotKSpace const &data);

CxImage image_from_array(ArrayFile const &array);
ShotArray shots_from_array(ArrayFile const &array);
MultiShotKSpace kspace_from_array(ArrayFile const &array, ShotSampling const &sampling);

void write_json(nlohmann::json const &j, std::filesystem::path const &path);
nlohmann::json read_json(std::filesystem::path const &path);

} // namespace losp
