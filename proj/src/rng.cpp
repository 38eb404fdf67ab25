#include "kylesim/rng.hpp"

#include <cmath>
#include <numbers>

namespace kylesim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t x = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
    return (static_cast<double>(x) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t path, Stream stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(path),
           static_cast<std::uint32_t>(path >> 32)} {}

void NormalStream::refill() {
    block_ = philox4x32(ctr_, key_);
    ++ctr_[0];
    used_ = 0;
}

double NormalStream::uniform() {
    if (used_ > 2) refill();
    const double u = to_unit(block_[used_], block_[used_ + 1]);
    used_ += 2;
    return u;
}

double NormalStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

}  // namespace kylesim
