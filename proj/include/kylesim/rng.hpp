#pragma once

#include <array>
#include <cstdint>

namespace kylesim {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32-10 block function (Salmon et al. counter-based generator).
Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key);

enum class Stream : std::uint32_t { noise = 0, fundamental = 1, auxiliary = 2 };

// Draws keyed by (seed, path index, stream); the block counter walks the draws.
// Any two keys give independent sequences regardless of evaluation order.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, Stream stream);

    double uniform();  // in (0, 1)
    double normal();

private:
    void refill();

    Philox4x32Key key_;
    Philox4x32Counter ctr_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace kylesim
