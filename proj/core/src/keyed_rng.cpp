#include "tpt/keyed_rng.hpp"

namespace tpt {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

__extension__ using u128 = unsigned __int128;

void fnv_byte(std::uint64_t& h, unsigned char b) noexcept {
    h ^= b;
    h *= kFnvPrime;
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) noexcept {
    for (int i = 0; i < 8; ++i) fnv_byte(h, static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_key(std::initializer_list<KeyedStream::Piece> key) noexcept {
    std::uint64_t h = kFnvOffset;
    for (const auto& piece : key) {
        if (const auto* i = std::get_if<std::int64_t>(&piece)) {
            fnv_byte(h, 'i');
            fnv_u64(h, static_cast<std::uint64_t>(*i));
        } else {
            const auto s = std::get<std::string_view>(piece);
            fnv_byte(h, 's');
            fnv_u64(h, s.size());
            for (char c : s) fnv_byte(h, static_cast<unsigned char>(c));
        }
    }
    return h;
}

KeyedStream::KeyedStream(std::initializer_list<Piece> key) : key_(hash_key(key)) {}

std::uint64_t KeyedStream::bits(std::uint64_t counter) const noexcept {
    return splitmix64(key_ + counter * kGolden);
}

double KeyedStream::uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

std::uint64_t KeyedStream::below(std::uint64_t counter, std::uint64_t bound) const noexcept {
    // Multiply-shift; bias is < bound / 2^64 which is irrelevant here.
    return static_cast<std::uint64_t>((static_cast<u128>(bits(counter)) * bound) >> 64);
}

std::int64_t derive_sample_seed(std::int64_t run_seed, std::string_view purpose, int round,
                                std::string_view problem_id, int sample_index) noexcept {
    const auto h = hash_key({run_seed, purpose, std::int64_t{round}, problem_id, std::int64_t{sample_index}});
    // Keep seeds non-negative; some endpoints reject negative values.
    return static_cast<std::int64_t>(splitmix64(h) >> 1);
}

}  // namespace tpt
