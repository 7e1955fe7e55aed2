#ifndef WMMF_RNG_HPP
#define WMMF_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace wmmf {

// splitmix64 finalizer; used to turn structured stream coordinates into seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t combine_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// Deterministic random stream. Identical seeds yield bit-identical draw
// sequences; uniform01() is strictly inside (0,1) so log/pow transforms are
// safe without rejection loops.
class RandomStream {
 public:
  RandomStream() : RandomStream(0) {}
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  double uniform01() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
};

enum class StreamPurpose : std::uint64_t {
  interarrival = 1,
  service = 2,
  initial_state = 3,
  scratch = 4,
};

inline RandomStream derive_stream(std::uint64_t global_seed, std::uint64_t replication,
                                  std::uint64_t route, StreamPurpose purpose) {
  return RandomStream(combine_seed(
      {global_seed, replication, route, static_cast<std::uint64_t>(purpose)}));
}

// Per-replication bundle of independent streams, one per (route, purpose).
// Parallel replications derive their streams from (global seed, replication id)
// only, so results do not depend on scheduling.
class StreamSet {
 public:
  StreamSet(std::uint64_t global_seed, std::uint64_t replication, std::size_t num_routes)
      : seed_(global_seed), replication_(replication) {
    interarrival_.reserve(num_routes);
    service_.reserve(num_routes);
    for (std::size_t r = 0; r < num_routes; ++r) {
      interarrival_.push_back(derive_stream(global_seed, replication, r, StreamPurpose::interarrival));
      service_.push_back(derive_stream(global_seed, replication, r, StreamPurpose::service));
    }
  }

  RandomStream& interarrival(std::size_t route) { return interarrival_[route]; }
  RandomStream& service(std::size_t route) { return service_[route]; }
  std::uint64_t global_seed() const { return seed_; }
  std::uint64_t replication() const { return replication_; }

 private:
  std::uint64_t seed_;
  std::uint64_t replication_;
  std::vector<RandomStream> interarrival_;
  std::vector<RandomStream> service_;
};

}  // namespace wmmf

#endif  // WMMF_RNG_HPP
