#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aquadapt {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Portable seeded generator. Unlike std::uniform_int_distribution and
/// std::shuffle, every draw here is fully specified, so sequences are identical
/// across standard library implementations.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();

    /// Uniform integer in [0, bound). `bound` must be > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace aquadapt
