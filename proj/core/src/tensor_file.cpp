#include "raincast/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "raincast/errors.hpp"

namespace raincast {

namespace {

constexpr char kMagic[4] = {'G', 'T', 'F', '1'};

// All multi-byte quantities are little-endian on disk regardless of host order.
void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  out.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

}  // namespace

std::uint64_t gtf_file_size(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return 8 + 4ull * dims.size() + 4ull * n;
}

void write_gtf(std::ostream& out, const GtfTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > kGtfMaxRank) {
    throw ValidationError("GTF1 rank must be in [1, " + std::to_string(kGtfMaxRank) +
                          "], got " + std::to_string(tensor.dims.size()));
  }
  std::uint64_t n = 1;
  for (auto d : tensor.dims) {
    if (d == 0) throw ValidationError("GTF1 dims must be positive");
    n *= d;
  }
  if (n != tensor.values.size()) {
    throw ValidationError("GTF1 payload size " + std::to_string(tensor.values.size()) +
                          " does not match dims product " + std::to_string(n));
  }
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(tensor.values.data()),
              4 * static_cast<std::streamsize>(tensor.values.size()));
  } else {
    for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("GTF1 write failed");
}

void write_gtf_file(const std::filesystem::path& path, const GtfTensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_gtf(out, tensor);
  out.flush();
  if (!out) throw IoError("short write to " + path.string());
}

GtfTensor read_gtf(std::istream& in, const std::string& context) {
  const std::uint64_t base = static_cast<std::uint64_t>(in.tellg());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) {
    throw FormatError(context + ": truncated GTF1 header", base);
  }
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(context + ": bad magic \"" + std::string(magic, 4) + "\"", base);
  }
  std::uint32_t rank = 0;
  if (!get_u32(in, rank)) throw FormatError(context + ": truncated rank field", base + 4);
  if (rank == 0 || rank > kGtfMaxRank) {
    throw FormatError(context + ": rank " + std::to_string(rank) + " out of range", base + 4);
  }
  GtfTensor tensor;
  tensor.dims.resize(rank);
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    if (!get_u32(in, tensor.dims[i])) {
      throw FormatError(context + ": truncated dims", base + 8 + 4ull * i);
    }
    if (tensor.dims[i] == 0) {
      throw FormatError(context + ": zero dimension", base + 8 + 4ull * i);
    }
    if (n > std::numeric_limits<std::uint64_t>::max() / tensor.dims[i]) {
      throw FormatError(context + ": dimension overflow", base + 8 + 4ull * i);
    }
    n *= tensor.dims[i];
  }
  // 1 GiB of payload is far beyond anything this toolkit produces.
  if (n > (1ull << 28)) {
    throw FormatError(context + ": payload of " + std::to_string(n) + " elements too large",
                      base + 8);
  }
  tensor.values.resize(n);
  const std::uint64_t payload_start = base + 8 + 4ull * rank;
  in.read(reinterpret_cast<char*>(tensor.values.data()), 4 * static_cast<std::streamsize>(n));
  const std::uint64_t got = static_cast<std::uint64_t>(in.gcount());
  if (got != 4 * n) {
    throw FormatError(context + ": truncated payload", payload_start + (got & ~3ull));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : tensor.values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      bits = __builtin_bswap32(bits);
      v = std::bit_cast<float>(bits);
    }
  }
  return tensor;
}

GtfTensor read_gtf_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_gtf(in, path.string());
}

}  // namespace raincast
