#include "rsim/rng.hpp"

#include <stdexcept>

namespace rsim {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (auto label : path) {
    s = mix64(s ^ mix64(label + 0x632be59bd9b4e019ULL));
  }
  return s;
}

std::uint64_t tag(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

Eigen::VectorXd random_unit_vector(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("random_unit_vector: dimension must be positive");
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(d);
  double n2 = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
    n2 = v.squaredNorm();
  } while (n2 < 1e-24);
  return v / std::sqrt(n2);
}

}  // namespace rsim
