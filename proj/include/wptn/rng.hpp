#pragma once

// Seeded random streams. Every consumer (each node, the mobility planner)
// draws from its own substream keyed by (seed, stream id) so that adding a
// node does not perturb anyone else's draws.

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

namespace wptn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Stream identifiers. ETx j uses kEtxStreamBase + j for its protocol draws
// and kShadowingStreamBase + j for control-band shadowing of packets it hears.
inline constexpr std::uint64_t kMobilityStream = 1;
inline constexpr std::uint64_t kErxStream = 2;
inline constexpr std::uint64_t kEtxStreamBase = 1000;
inline constexpr std::uint64_t kShadowingStreamBase = 2000;

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [lo, hi); the conversion is spelled out rather than using
  // std::uniform_real_distribution, whose output differs across libraries.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

// Source of every random draw a simulation makes.
class DrawSource {
 public:
  virtual ~DrawSource() = default;
  virtual double uniform(std::uint64_t stream, double lo, double hi) = 0;
};

class SeededDraws final : public DrawSource {
 public:
  explicit SeededDraws(std::uint64_t seed) : seed_(seed) {}

  double uniform(std::uint64_t stream, double lo, double hi) override {
    auto it = streams_.find(stream);
    if (it == streams_.end()) it = streams_.emplace(stream, RandomStream(mix_seed(seed_, stream))).first;
    return it->second.uniform(lo, hi);
  }

 private:
  std::uint64_t seed_;
  std::map<std::uint64_t, RandomStream> streams_;
};

// Replays previously recorded draws, per stream, in order.
class ReplayDraws final : public DrawSource {
 public:
  void push(std::uint64_t stream, double value) { recorded_[stream].push_back(value); }

  double uniform(std::uint64_t stream, double, double) override {
    auto& q = recorded_[stream];
    std::size_t& pos = cursor_[stream];
    if (pos >= q.size()) throw std::runtime_error("replay exhausted for stream");
    return q[pos++];
  }

 private:
  std::map<std::uint64_t, std::vector<double>> recorded_;
  std::map<std::uint64_t, std::size_t> cursor_;
};

}  // namespace wptn
