#include "disco/blob.h"

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace disco {

void WriteF64Blob(std::ostream &out, std::span<const double> values) {
  char buf[8];
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
    out.write(buf, 8);
  }
}

std::vector<double> ReadF64Blob(std::istream &in, std::size_t count) {
  std::vector<double> values(count);
  unsigned char buf[8];
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char *>(buf), 8)) {
      throw std::runtime_error("weight blob truncated at value " + std::to_string(i) +
                               " of " + std::to_string(count));
    }
    std::uint64_t bits = 0;
    for (int k = 7; k >= 0; --k) bits = (bits << 8) | buf[k];
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace disco
