#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string_view>

namespace habcast {

/// 64-bit FNV-1a over the exact bit patterns of the values fed in.
class Fnv1a {
  public:
    void add_bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void add(std::uint64_t v) { add_bytes(&v, sizeof v); }
    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
    void add(std::string_view s) {
        add(static_cast<std::uint64_t>(s.size()));
        add_bytes(s.data(), s.size());
    }
    void add(std::span<const double> values) {
        add(static_cast<std::uint64_t>(values.size()));
        for (double v : values) add(v);
    }
    [[nodiscard]] std::uint64_t value() const { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

} // namespace habcast
