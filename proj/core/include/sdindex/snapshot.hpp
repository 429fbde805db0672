#pragma once

#include <sdindex/multidim.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace sdindex {

inline constexpr std::uint32_t snapshot_version = 1;

/// Binary image of a built index: a 4-byte magic, the format version, then the
/// serialized index. Reloading yields an index that answers every query the same.
void write_snapshot(std::ostream& out, const multidim_index& index);
[[nodiscard]] multidim_index read_snapshot(std::istream& in);

void save_snapshot(const std::filesystem::path& path, const multidim_index& index);
[[nodiscard]] multidim_index load_snapshot(const std::filesystem::path& path);

/// Byte image of a lone projection tree, used to check that queries leave it untouched.
[[nodiscard]] std::string tree_bytes(const projection_tree& tree);

}  // namespace sdindex
