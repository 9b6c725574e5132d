#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "rsim/dataset_io.hpp"
#include "rsim/synth.hpp"

using namespace rsim;

namespace {

Dataset sample_data() {
  GroundTruth t;
  t.w_star = Vec::Unit(4, 1);
  t.sigma = Activation::relu(0.1, 1.3);
  t.B = 10.0;
  return generate(t, 257, 4, 11);
}

void check_equal(const Dataset& a, const Dataset& b) {
  REQUIRE(a.size() == b.size());
  REQUIRE(a.dim() == b.dim());
  CHECK(a.x() == b.x());
  CHECK(a.y() == b.y());
}

}  // namespace

TEST_CASE("text round trip is exact") {
  auto data = sample_data();
  std::stringstream ss;
  write_dataset(ss, data, DatasetFormat::Text);
  check_equal(read_dataset(ss), data);
}

TEST_CASE("binary round trip is exact") {
  auto data = sample_data();
  std::stringstream ss;
  write_dataset(ss, data, DatasetFormat::Binary);
  check_equal(read_dataset(ss), data);
}

TEST_CASE("file round trip and format from extension") {
  auto dir = std::filesystem::temp_directory_path();
  auto data = sample_data();
  for (std::string name : {"rsim_io_test.dat", "rsim_io_test.bin"}) {
    auto path = (dir / name).string();
    write_dataset(path, data, format_from_path(path));
    check_equal(read_dataset(path), data);
    std::filesystem::remove(path);
  }
  CHECK(format_from_path("a.bin") == DatasetFormat::Binary);
  CHECK(format_from_path("a.txt") == DatasetFormat::Text);
}

TEST_CASE("malformed input is rejected") {
  std::stringstream bad_header("dims=3\n");
  CHECK_THROWS_AS(read_dataset(bad_header), Error);
  std::stringstream short_rows("d=2 n=2\n1 2 3\n");
  CHECK_THROWS_AS(read_dataset(short_rows), Error);
  std::stringstream extra("d=1 n=1\n1 2\n3 4\n");
  CHECK_THROWS_AS(read_dataset(extra), Error);
}
