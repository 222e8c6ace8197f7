#pragma once

#include "mgcn/mesh.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mgcn {

enum class MeshFormat { Off, Obj, Ply };

/// Guess the format from the file extension (case-insensitive).
MeshFormat format_from_path(const std::filesystem::path& path);

/// Reads and validates a triangle mesh. OBJ indices are converted to 0-based;
/// polygon faces are fan-triangulated. PLY may be ASCII or binary little-endian.
TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt);

TriMesh read_off(std::istream& in);
TriMesh read_obj(std::istream& in);
TriMesh read_ply(std::istream& in);

void write_off(const std::filesystem::path& path, const TriMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

using Rgb = std::array<std::uint8_t, 3>;

/// ASCII PLY with per-vertex red/green/blue properties.
void write_colored_ply(const std::filesystem::path& path, const TriMesh& mesh, const std::vector<Rgb>& colors);

} // namespace mgcn
