#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace rsim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn (seed, counter) pairs into
/// decorrelated engine seeds.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based stream derivation: every stream is a pure function of the
/// master seed and a path of integer labels, so streams can be created in any
/// order (or in parallel) without changing their contents.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Hash of a short text tag, for readable stream labels ("x", "noise", ...).
std::uint64_t tag(std::string_view name);

Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Uniformly random unit vector in R^d.
Eigen::VectorXd random_unit_vector(int d, Rng& rng);

}  // namespace rsim
