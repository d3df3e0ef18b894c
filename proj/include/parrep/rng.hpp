// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace parrep {

/// Mixes a parent stream id with up to two tags into a child id.
///
/// Every consumer of randomness derives its stream from (phase, replica) style
/// tags, so the draws a replica sees never depend on how work is scheduled.
std::uint64_t derive_stream_id(std::uint64_t parent, std::uint64_t tag_a,
                               std::uint64_t tag_b = 0) noexcept;

/// A reproducible random stream identified by (master_seed, stream_id).
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  /// A stream whose normal draws are all zero and whose uniforms are 1/2.
  /// Used to force deterministic paths in tests.
  static RngStream silent(std::uint64_t stream_id = 0);

  RngStream child(std::uint64_t tag_a, std::uint64_t tag_b = 0) const;

  double normal();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  bool is_silent() const noexcept { return silent_; }

 private:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id, bool silent);

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  bool silent_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace parrep
