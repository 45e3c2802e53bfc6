#include "dgpe/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace dgpe {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot encoding assumes a little-endian host");

template <class T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

template <class T>
T get(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::string encode_snapshot(const Field& u) {
  std::string out;
  out.reserve(kSnapshotHeaderBytes + 16 * u.size());
  out.append("DGPE", 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(out, static_cast<std::uint32_t>(u.grid.n[a]));
  for (int a = 0; a < 3; ++a) put<double>(out, u.grid.box[a]);
  put<std::uint32_t>(out, u.real ? 1u : 0u);
  out.resize(kSnapshotHeaderBytes, '\0');
  for (const cplx& z : u.values) {
    put<double>(out, z.real());
    put<double>(out, z.imag());
  }
  return out;
}

Field decode_snapshot(std::string_view bytes) {
  if (bytes.size() < kSnapshotHeaderBytes || bytes.substr(0, 4) != "DGPE") {
    throw std::runtime_error("snapshot: bad magic");
  }
  if (get<std::uint32_t>(bytes, 4) != kSnapshotVersion) {
    throw std::runtime_error("snapshot: unsupported version");
  }
  Grid3 grid;
  for (int a = 0; a < 3; ++a) grid.n[a] = static_cast<int>(get<std::uint32_t>(bytes, 8 + 4 * a));
  for (int a = 0; a < 3; ++a) grid.box[a] = get<double>(bytes, 20 + 8 * a);
  grid.validate();
  const std::uint32_t flags = get<std::uint32_t>(bytes, 44);
  if (bytes.size() != kSnapshotHeaderBytes + 16 * grid.size()) {
    throw std::runtime_error("snapshot: payload size does not match header");
  }
  Field u(grid);
  u.real = (flags & 1u) != 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::size_t off = kSnapshotHeaderBytes + 16 * i;
    u[i] = {get<double>(bytes, off), get<double>(bytes, off + 8)};
  }
  return u;
}

void write_snapshot(const std::string& path, const Field& u) {
  const std::string bytes = encode_snapshot(u);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("snapshot: cannot open " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("snapshot: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Field read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace dgpe
