#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace raincast {

// GTF1: the toolkit's binary tensor format.
//
//   bytes 0..3   magic "GTF1"
//   bytes 4..7   rank, u32 little-endian
//   then         rank x u32 LE dims
//   then         product(dims) IEEE-754 binary32 LE values, row-major,
//                channel as the slowest axis
//
// Round-trips are bit-exact. Readers fail with a FormatError carrying the
// byte offset of the first inconsistency.

struct GtfTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::uint64_t numel() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

inline constexpr std::uint32_t kGtfMaxRank = 8;

// Header + payload size in bytes for a tensor of the given dims.
std::uint64_t gtf_file_size(const std::vector<std::uint32_t>& dims);

void write_gtf(std::ostream& out, const GtfTensor& tensor);
void write_gtf_file(const std::filesystem::path& path, const GtfTensor& tensor);

// `context` names the source (file path, container slot) for error messages.
GtfTensor read_gtf(std::istream& in, const std::string& context);
GtfTensor read_gtf_file(const std::filesystem::path& path);

}  // namespace raincast
