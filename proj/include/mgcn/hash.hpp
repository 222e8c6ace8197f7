#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace mgcn {

/// Incremental 64-bit FNV-1a hash used for artifact provenance.
class Fnv1a {
public:
    void update(const void* data, std::size_t bytes)
    {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            m_state ^= p[i];
            m_state *= 0x100000001b3ULL;
        }
    }

    template <typename T>
    void update_value(const T& value)
    {
        update(&value, sizeof(T));
    }

    void update_string(const std::string& s) { update(s.data(), s.size()); }

    std::uint64_t digest() const { return m_state; }

private:
    std::uint64_t m_state = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::uint64_t h);

} // namespace mgcn
