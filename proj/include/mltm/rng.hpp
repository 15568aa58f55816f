#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace mltm {

// xoshiro256++ with splitmix64 seeding. All sampling below is built from raw
// 64-bit draws only, so sequences are identical across platforms and standard
// library implementations. Streams for independent chains/documents are
// derived from (base seed, stream id) and never depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  static Rng for_stream(std::uint64_t base_seed, std::uint64_t stream_id) {
    // golden-ratio mix keeps nearby stream ids far apart in seed space
    return Rng(base_seed ^ (stream_id * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
  }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // index sampled proportionally to non-negative weights; the caller
  // guarantees at least one strictly positive weight
  int categorical(const double* weights, int n);
  int categorical(const Eigen::VectorXd& weights) {
    return categorical(weights.data(), static_cast<int>(weights.size()));
  }

  // as above but on log scale; returns -1 if every weight is -inf
  int categorical_log(const double* log_weights, int n);

  double normal();

  // Marsaglia-Tsang, unit scale
  double gamma(double shape);

  void dirichlet(const Eigen::VectorXd& concentration, Eigen::VectorXd& out);
  Eigen::VectorXd dirichlet_symmetric(int dim, double concentration);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace mltm
