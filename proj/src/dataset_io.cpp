#include "rsim/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace rsim {

namespace {

static_assert(std::endian::native == std::endian::little, "binary dataset format assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("dataset: truncated binary header");
  return v;
}

Dataset read_text(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("dataset: missing header");
  long long d = -1, n = -1;
  if (std::sscanf(header.c_str(), "d=%lld n=%lld", &d, &n) != 2 || d < 1 || n < 0) {
    throw Error("dataset: malformed header '" + header + "'");
  }
  RowMatrix x(n, d);
  Vec y(n);
  for (long long i = 0; i < n; ++i) {
    for (long long k = 0; k < d; ++k) {
      if (!(in >> x(i, k))) throw Error("dataset: truncated text row " + std::to_string(i));
    }
    if (!(in >> y[i])) throw Error("dataset: truncated text row " + std::to_string(i));
  }
  double extra;
  if (in >> extra) throw Error("dataset: more rows than the header declares");
  return Dataset(std::move(x), std::move(y));
}

Dataset read_binary(std::istream& in) {
  auto d = get_u64(in);
  auto n = get_u64(in);
  if (d < 1 || d > (1u << 24)) throw Error("dataset: implausible binary dimension");
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Vec y(static_cast<Eigen::Index>(n));
  std::vector<double> row(d + 1);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)))) {
      throw Error("dataset: truncated binary payload");
    }
    std::memcpy(&x(static_cast<Eigen::Index>(i), 0), row.data(), d * sizeof(double));
    y[static_cast<Eigen::Index>(i)] = row[d];
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data, DatasetFormat format) {
  const auto d = static_cast<std::size_t>(data.dim());
  if (format == DatasetFormat::Binary) {
    put_u64(out, d);
    put_u64(out, data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto r = data.row(i);
      out.write(reinterpret_cast<const char*>(r.data()), static_cast<std::streamsize>(d * sizeof(double)));
      double y = data.y()[static_cast<Eigen::Index>(i)];
      out.write(reinterpret_cast<const char*>(&y), sizeof y);
    }
  } else {
    out << "d=" << d << " n=" << data.size() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (double v : data.row(i)) {
        std::snprintf(buf, sizeof buf, "%.17g ", v);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g\n", data.y()[static_cast<Eigen::Index>(i)]);
      out << buf;
    }
  }
  if (!out) throw Error("dataset: write failed");
}

void write_dataset(const std::string& path, const Dataset& data, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dataset: cannot open " + path + " for writing");
  write_dataset(out, data, format);
}

Dataset read_dataset(std::istream& in) {
  char head[2] = {0, 0};
  in.read(head, 2);
  if (in.gcount() < 2) throw Error("dataset: empty input");
  in.seekg(-2, std::ios::cur);
  if (!in) throw Error("dataset: input stream is not seekable");
  if (head[0] == 'd' && head[1] == '=') return read_text(in);
  return read_binary(in);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("dataset: cannot open " + path);
  return read_dataset(in);
}

DatasetFormat format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".bin") return DatasetFormat::Binary;
  return DatasetFormat::Text;
}

}  // namespace rsim
