#pragma once

#include <sdindex/column.hpp>
#include <sdindex/dataset.hpp>
#include <sdindex/multidim.hpp>
#include <sdindex/topk.hpp>

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sdindex {

/// Ranks every row; the reference answer for all engines.
[[nodiscard]] std::vector<scored> scan_topk(const dataset& data, const query_spec& spec);

/// One sorted column per dimension for the threshold-algorithm baseline: repulsive
/// dimensions are read farthest-first, attractive ones closest-first.
class ta_index {
public:
    ta_index() = default;
    explicit ta_index(const dataset& data);

    [[nodiscard]] solve_result topk(const dataset& data, const query_spec& spec) const;
    [[nodiscard]] const sorted_column& column(std::size_t dim) const { return columns_[dim]; }

private:
    std::vector<sorted_column> columns_;
};

enum class distribution { uniform, correlated, anticorrelated };

[[nodiscard]] const char* to_string(distribution d) noexcept;
/// Throws error(invalid_argument) for an unknown name.
[[nodiscard]] distribution parse_distribution(std::string_view name);

struct generator_params {
    distribution dist = distribution::uniform;
    std::size_t n = 1000;
    std::size_t dims = 2;
    double sigma = 0.05;
    std::uint64_t seed = 1;
};

/// The generator every random stream in the library uses.
using random_engine = std::mt19937_64;
inline constexpr std::string_view random_engine_name = "mt19937_64";

/// Uniform in [0, 1) from the top 53 bits of one draw.
[[nodiscard]] double unit_uniform(random_engine& rng) noexcept;
/// Standard normal via Box-Muller (one of the pair, two draws per call).
[[nodiscard]] double standard_normal(random_engine& rng) noexcept;

/// Ids 0..n-1; coordinates in [0, 1]. Correlated rows scatter every coordinate
/// around one base value t, anticorrelated rows alternate t and 1 - t.
[[nodiscard]] dataset generate(const generator_params& params);

/// Repulsive dimensions [0, ceil(dims / 2)), attractive the rest.
struct dimension_roles {
    std::vector<std::size_t> repulsive;
    std::vector<std::size_t> attractive;
};
[[nodiscard]] dimension_roles default_roles(std::size_t dims);

/// Query point uniform in [0, 1]^dims and weights uniform in (0, 1].
[[nodiscard]] query_spec random_query(random_engine& rng, std::size_t dims,
                                      const dimension_roles& roles, std::size_t k);

}  // namespace sdindex
