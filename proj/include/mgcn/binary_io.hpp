#pragma once

#include "mgcn/error.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace mgcn::io {

// Little-endian host assumed; all artifact files are written and read on the same family of machines.

template <typename T>
void write_pod(std::ostream& out, const T& value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in)
{
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ValidationError("unexpected end of file");
    return value;
}

inline void write_string(std::ostream& out, const std::string& s)
{
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::uint64_t max_size = 1u << 28)
{
    const auto size = read_pod<std::uint64_t>(in);
    if (size > max_size) throw ValidationError("corrupt string length in file");
    std::string s(size, '\0');
    in.read(s.data(), static_cast<std::streamsize>(size));
    if (!in) throw ValidationError("unexpected end of file");
    return s;
}

inline void write_magic(std::ostream& out, const char (&magic)[9])
{
    out.write(magic, 8);
}

inline void expect_magic(std::istream& in, const char (&magic)[9], const std::string& what)
{
    char buf[8];
    in.read(buf, 8);
    if (!in || std::memcmp(buf, magic, 8) != 0) {
        throw ValidationError("not a " + what + " file (bad magic)");
    }
}

/// Doubles of a dense matrix in column-major order, preceded by rows/cols.
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m)
{
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

inline Eigen::MatrixXd read_matrix(std::istream& in)
{
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    if (rows > (1ull << 32) || cols > (1ull << 32) || rows * cols > (1ull << 34)) {
        throw ValidationError("corrupt matrix header in file");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw ValidationError("unexpected end of file");
    return m;
}

} // namespace mgcn::io
