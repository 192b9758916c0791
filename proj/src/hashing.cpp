#include "reldata/hashing.hpp"

#include <array>
#include <fstream>

#include "reldata/types.hpp"

namespace reldata {

std::string to_hex64(std::uint64_t value) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw DataError("cannot read " + path.string());
    std::uint64_t state = kFnvOffsetBasis;
    std::array<char, 1 << 16> buffer{};
    while (in) {
        in.read(buffer.data(), buffer.size());
        const auto got = static_cast<std::size_t>(in.gcount());
        state = fnv1a64(std::string_view{buffer.data(), got}, state);
    }
    return to_hex64(state);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
    // Rejection sampling keeps the draw unbiased for any bound.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
}

}  // namespace reldata
