#include "sosp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sosp {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t* lo,
                     std::uint32_t* hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  *lo = static_cast<std::uint32_t>(p);
  *hi = static_cast<std::uint32_t>(p >> 32);
}

// One block of Philox4x32-10. Counter words: (block index, stream id).
std::array<std::uint32_t, 4> philox_block(std::uint64_t counter,
                                          std::uint64_t stream,
                                          std::uint64_t key) {
  std::uint32_t c[4] = {
      static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t k[2] = {static_cast<std::uint32_t>(key),
                        static_cast<std::uint32_t>(key >> 32)};
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mul_hilo(kPhiloxM0, c[0], &lo0, &hi0);
    mul_hilo(kPhiloxM1, c[2], &lo1, &hi1);
    const std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
    const std::uint32_t n3 = lo0;
    c[0] = n0; c[1] = n1; c[2] = n2; c[3] = n3;
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return {c[0], c[1], c[2], c[3]};
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(mix64(seed ^ mix64(stream_id))) {}

RngStream RngStream::substream(std::uint64_t k) const {
  return RngStream(seed_, mix64(stream_id_ * 0x9E3779B97F4A7C15ull + k + 1));
}

void RngStream::refill() {
  block_ = philox_block(counter_++, stream_id_, key_);
  block_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (block_pos_ > 2) refill();
  const std::uint64_t lo = block_[block_pos_];
  const std::uint64_t hi = block_[block_pos_ + 1];
  block_pos_ += 2;
  return (hi << 32) | lo;
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_gauss_) {
    has_gauss_ = false;
    return gauss_cache_;
  }
  // u1 in (0,1] so the log is finite.
  const double u1 = 1.0 - next_uniform();
  const double u2 = next_uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  gauss_cache_ = mag * std::sin(ang);
  has_gauss_ = true;
  return mag * std::cos(ang);
}

Eigen::VectorXd RngStream::gaussian_vector(int dim, double sigma) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z[i] = sigma * next_gaussian();
  return z;
}

Eigen::VectorXd RngStream::uniform_ball(int dim, double radius) {
  Eigen::VectorXd dir = unit_sphere(dim);
  const double u = next_uniform();
  return dir * (radius * std::pow(u, 1.0 / dim));
}

Eigen::VectorXd RngStream::unit_sphere(int dim) {
  Eigen::VectorXd z(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) z[i] = next_gaussian();
    norm2 = z.squaredNorm();
  } while (norm2 == 0.0);
  return z / std::sqrt(norm2);
}

Eigen::VectorXd draw_gaussian(RngStream& rng, int dim, double sigma) {
  if (dim <= 0) throw std::invalid_argument("draw_gaussian: dim must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("draw_gaussian: sigma must be positive");
  return rng.gaussian_vector(dim, sigma);
}

}  // namespace sosp
