#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace kgda::util {

// FNV-1a, 64 bit. Used for checkpoint checksums and split manifests.
class Fnv1a {
  public:
    static constexpr std::uint64_t kOffset = 1469598103934665603ULL;
    static constexpr std::uint64_t kPrime = 1099511628211ULL;

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= kPrime;
        }
    }

    void update(std::string_view s) { update(s.data(), s.size()); }

    void update_u64(std::uint64_t v) {
        unsigned char b[8];
        std::memcpy(b, &v, 8);
        update(b, 8);
    }

    void update_f64(double v) {
        unsigned char b[8];
        std::memcpy(b, &v, 8);
        update(b, 8);
    }

    std::uint64_t digest() const { return h_; }

  private:
    std::uint64_t h_ = kOffset;
};

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
    Fnv1a h;
    h.update(data, n);
    return h.digest();
}

inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

}  // namespace kgda::util
