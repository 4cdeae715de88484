#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>

namespace tpt {

// Counter-based random stream. The key is a 64-bit FNV-1a hash over a
// tagged encoding of the tuple pieces; draw i is splitmix64(key + i * golden).
// Outputs depend only on the key tuple and the counter, never on call order
// across streams, so parallel generation cannot perturb results.
class KeyedStream {
public:
    using Piece = std::variant<std::int64_t, std::string_view>;

    explicit KeyedStream(std::initializer_list<Piece> key);
    explicit KeyedStream(std::uint64_t key) : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }

    std::uint64_t bits(std::uint64_t counter) const noexcept;
    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform(std::uint64_t counter) const noexcept;
    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept;

private:
    std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t hash_key(std::initializer_list<KeyedStream::Piece> key) noexcept;

// Per-sample seed derived from (run seed, purpose, round, problem id, sample index).
std::int64_t derive_sample_seed(std::int64_t run_seed, std::string_view purpose, int round,
                                std::string_view problem_id, int sample_index) noexcept;

}  // namespace tpt
