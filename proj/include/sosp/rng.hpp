#pragma once

#include <cstdint>
#include <array>
#include <Eigen/Core>

namespace sosp {

/// Counter-based pseudorandom stream (Philox4x32-10).
///
/// A stream is identified by (seed, stream_id). The n-th draw of a stream is
/// a pure function of (seed, stream_id, n), so replays are bitwise identical
/// across runs, machines and worker counts. Distinct stream_ids give
/// statistically independent streams; `substream` derives fresh stream_ids
/// for per-worker / per-trial use without coordination.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream. Deterministic in (parent ids, k).
  RngStream substream(std::uint64_t k) const;

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double next_uniform();

  /// Standard normal draw (Box-Muller, second value cached).
  double next_gaussian();

  Eigen::VectorXd gaussian_vector(int dim, double sigma = 1.0);

  /// Uniform point in the closed ball of the given radius.
  /// Gaussian direction, radius scaled by U^(1/d).
  Eigen::VectorXd uniform_ball(int dim, double radius);

  /// Uniform point on the unit sphere.
  Eigen::VectorXd unit_sphere(int dim);

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t key_ = 0;      // mixed from (seed, stream_id)
  std::uint64_t counter_ = 0;  // block index
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  double gauss_cache_ = 0.0;
  bool has_gauss_ = false;
};

/// i.i.d. N(0, sigma^2) coordinates. Rejects sigma <= 0 or dim <= 0.
Eigen::VectorXd draw_gaussian(RngStream& rng, int dim, double sigma);

/// SplitMix64 finalizer, used for key derivation.
std::uint64_t mix64(std::uint64_t z);

}  // namespace sosp
