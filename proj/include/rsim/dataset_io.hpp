#pragma once

#include <iosfwd>
#include <string>

#include "rsim/model.hpp"

namespace rsim {

enum class DatasetFormat { Text, Binary };

// Text: "d=<int> n=<int>" then n rows of d+1 reals (x then y).
// Binary: u64 d, u64 n, then n*(d+1) little-endian doubles, row-major.
void write_dataset(std::ostream& out, const Dataset& data, DatasetFormat format);
void write_dataset(const std::string& path, const Dataset& data, DatasetFormat format);

Dataset read_dataset(std::istream& in);  // format detected from the first bytes
Dataset read_dataset(const std::string& path);

DatasetFormat format_from_path(const std::string& path);  // ".bin" -> Binary

}  // namespace rsim
