#include "losp/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace losp {

std::uint64_t ArrayFile::element_count() const
{
  std::uint64_t n = 1;
  for (auto d : dims) {
    n *= d;
  }
  return n;
}

namespace {

constexpr char kArrayMagic[8] = {'L', 'O', 'S', 'P', 'A', 'R', 'R', '1'};

template <class T>
void put(std::ostream &os, T v)
{
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<char const *>(&v), sizeof(T));
}

template <class T>
T get(std::istream &is)
{
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!is) {
    throw ConfigError("array file is truncated");
  }
  return v;
}

void expect_dims(ArrayFile const &a, std::size_t n, char const *what)
{
  if (a.dims.size() != n) {
    throw ConfigError(std::string(what) + " needs a " + std::to_string(n) + "-dimensional array, got " +
                      std::to_string(a.dims.size()));
  }
}

} // namespace

void write_array(ArrayFile const &array, std::filesystem::path const &path)
{
  if (array.dims.size() > 255) {
    throw ConfigError("too many array dimensions");
  }
  if (array.element_count() != array.data.size()) {
    throw ConfigError("array data does not match its dimensions");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  os.write(kArrayMagic, 8);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(array.dims.size()));
  for (auto d : array.dims) {
    put<std::uint64_t>(os, d);
  }
  for (auto const &v : array.data) {
    put(os, static_cast<float>(v.real()));
    put(os, static_cast<float>(v.imag()));
  }
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

ArrayFile read_array(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open array " + path.string());
  }
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kArrayMagic, 8) != 0) {
    throw ConfigError(path.string() + " is not a LOSPARR1 array");
  }
  ArrayFile a;
  a.dims.resize(get<std::uint8_t>(is));
  for (auto &d : a.dims) {
    d = get<std::uint64_t>(is);
  }
  auto const n = a.element_count();
  auto const file_size = std::filesystem::file_size(path);
  if (n > file_size / 8) {
    throw ConfigError(path.string() + " is truncated");
  }
  a.data.resize(n);
  for (auto &v : a.data) {
    float const re = get<float>(is);
    float const im = get<float>(is);
    v = Cx(re, im);
  }
  return a;
}

ArrayFile to_array(CxImage const &img)
{
  ArrayFile a;
  a.dims = {static_cast<std::uint64_t>(img.rows()), static_cast<std::uint64_t>(img.cols())};
  a.data.reserve(img.size());
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      a.data.push_back(img(r, c));
    }
  }
  return a;
}

ArrayFile to_array(RealImage const &img) { return to_array(CxImage(img.cast<Cx>())); }

ArrayFile to_array(ShotArray const &shots)
{
  if (shots.empty()) {
    throw ConfigError("no shots to serialize");
  }
  ArrayFile a;
  a.dims = {shots.size(), static_cast<std::uint64_t>(shots.front().rows()),
            static_cast<std::uint64_t>(shots.front().cols())};
  for (auto const &s : shots) {
    auto const one = to_array(s);
    a.data.insert(a.data.end(), one.data.begin(), one.data.end());
  }
  return a;
}

ArrayFile to_array(MultiShotKSpace const &data)
{
  if (data.n_shots() == 0 || data.n_coils() == 0) {
    throw ConfigError("no k-space data to serialize");
  }
  auto const &first = data.data.front().front();
  ArrayFile a;
  a.dims = {static_cast<std::uint64_t>(data.n_shots()), static_cast<std::uint64_t>(data.n_coils()),
            static_cast<std::uint64_t>(first.rows()), static_cast<std::uint64_t>(first.cols())};
  for (auto const &shot : data.data) {
    for (auto const &k : shot) {
      auto const one = to_array(k);
      a.data.insert(a.data.end(), one.data.begin(), one.data.end());
    }
  }
  return a;
}

namespace {

CxImage slab(ArrayFile const &a, std::size_t offset, Eigen::Index rows, Eigen::Index cols)
{
  CxImage img(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      img(r, c) = a.data[offset + r * cols + c];
    }
  }
  return img;
}

} // namespace

CxImage image_from_array(ArrayFile const &array)
{
  expect_dims(array, 2, "image");
  return slab(array, 0, static_cast<Eigen::Index>(array.dims[0]), static_cast<Eigen::Index>(array.dims[1]));
}

ShotArray shots_from_array(ArrayFile const &array)
{
  expect_dims(array, 3, "shot array");
  auto const rows = static_cast<Eigen::Index>(array.dims[1]);
  auto const cols = static_cast<Eigen::Index>(array.dims[2]);
  ShotArray shots;
  for (std::uint64_t j = 0; j < array.dims[0]; ++j) {
    shots.push_back(slab(array, j * rows * cols, rows, cols));
  }
  return shots;
}

MultiShotKSpace kspace_from_array(ArrayFile const &array, ShotSampling const &sampling)
{
  expect_dims(array, 4, "multi-shot k-space");
  auto const rows = static_cast<Eigen::Index>(array.dims[2]);
  auto const cols = static_cast<Eigen::Index>(array.dims[3]);
  if (array.dims[0] != static_cast<std::uint64_t>(sampling.n_shots) || cols != sampling.n_pe) {
    throw ConfigError("k-space array does not match the sampling");
  }
  MultiShotKSpace Y;
  Y.sampling = sampling;
  std::size_t offset = 0;
  for (std::uint64_t j = 0; j < array.dims[0]; ++j) {
    std::vector<CxImage> coils;
    for (std::uint64_t c = 0; c < array.dims[1]; ++c) {
      coils.push_back(slab(array, offset, rows, cols));
      offset += rows * cols;
    }
    Y.data.push_back(std::move(coils));
  }
  return Y;
}

void write_json(nlohmann::json const &j, std::filesystem::path const &path)
{
  std::ofstream os(path);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  os << j.dump(2) << "\n";
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

nlohmann::json read_json(std::filesystem::path const &path)
{
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(is);
  } catch (nlohmann::json::exception const &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

} // namespace losp
