#pragma once

#include <cstdint>

namespace fieldseg {

/// sum / count rounded half to even, for sum >= 0, count > 0.
constexpr std::int64_t round_half_even(std::int64_t sum, std::int64_t count) noexcept {
    const std::int64_t q = sum / count;
    const std::int64_t twice_rem = 2 * (sum % count);
    if (twice_rem > count) return q + 1;
    if (twice_rem == count) return q + (q & 1);
    return q;
}

} // namespace fieldseg
