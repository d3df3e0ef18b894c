// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/rng.hpp"

namespace parrep {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t derive_stream_id(std::uint64_t parent, std::uint64_t tag_a,
                               std::uint64_t tag_b) noexcept {
  std::uint64_t h = splitmix64(parent ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ tag_a);
  h = splitmix64(h ^ (tag_b + 0x632be59bd9b4e019ULL));
  return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : RngStream(master_seed, stream_id, false) {}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id, bool silent)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      silent_(silent),
      engine_(silent ? std::mt19937_64() : seeded_engine(master_seed, stream_id)) {}

RngStream RngStream::silent(std::uint64_t stream_id) { return RngStream(0, stream_id, true); }

RngStream RngStream::child(std::uint64_t tag_a, std::uint64_t tag_b) const {
  return RngStream(master_seed_, derive_stream_id(stream_id_, tag_a, tag_b), silent_);
}

double RngStream::normal() {
  if (silent_) return 0.0;
  return normal_(engine_);
}

double RngStream::uniform() {
  if (silent_) return 0.5;
  // 53 random bits mapped to the centre of their cell, never 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t RngStream::index(std::size_t n) {
  if (silent_ || n <= 1) return 0;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return pick(engine_);
}

}  // namespace parrep
