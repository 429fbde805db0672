#include <sdindex/snapshot.hpp>

#include <sdindex/error.hpp>

#include <cereal/archives/binary.hpp>
#include <cereal/types/array.hpp>
#include <cereal/types/optional.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/unordered_map.hpp>
#include <cereal/types/vector.hpp>

#include <array>
#include <fstream>
#include <sstream>

namespace sdindex {

namespace {

constexpr std::array<char, 4> magic = {'S', 'D', 'I', 'X'};

}  // namespace

void write_snapshot(std::ostream& out, const multidim_index& index)
{
    out.write(magic.data(), magic.size());
    cereal::BinaryOutputArchive ar(out);
    ar(snapshot_version, index);
}

multidim_index read_snapshot(std::istream& in)
{
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    if (!in || head != magic) {
        throw error(errc::parse_error, "not an index snapshot");
    }
    std::uint32_t version = 0;
    multidim_index index;
    try {
        cereal::BinaryInputArchive ar(in);
        ar(version);
        if (version != snapshot_version) {
            throw error(errc::parse_error, "unsupported snapshot version " + std::to_string(version));
        }
        ar(index);
    } catch (const cereal::Exception& e) {
        throw error(errc::parse_error, std::string("truncated or corrupt snapshot: ") + e.what());
    }
    return index;
}

void save_snapshot(const std::filesystem::path& path, const multidim_index& index)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error(errc::io_error, "cannot write " + path.string());
    }
    write_snapshot(out, index);
    if (!out) {
        throw error(errc::io_error, "write failed for " + path.string());
    }
}

multidim_index load_snapshot(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    return read_snapshot(in);
}

std::string tree_bytes(const projection_tree& tree)
{
    std::ostringstream out(std::ios::binary);
    {
        cereal::BinaryOutputArchive ar(out);
        ar(tree);
    }
    return out.str();
}

}  // namespace sdindex
