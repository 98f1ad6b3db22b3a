// Little-endian float64 weight blobs shared by model and checkpoint files.

#ifndef DISCO_BLOB_H_
#define DISCO_BLOB_H_

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace disco {

void WriteF64Blob(std::ostream &out, std::span<const double> values);
// Throws std::runtime_error on a short read.
std::vector<double> ReadF64Blob(std::istream &in, std::size_t count);

}  // namespace disco

#endif  // DISCO_BLOB_H_
