#pragma once

#include <sdindex/column.hpp>
#include <sdindex/dataset.hpp>
#include <sdindex/projection_tree.hpp>
#include <sdindex/top1_index.hpp>
#include <sdindex/topk.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sdindex {

/// Query coordinates over every dataset dimension, the repulsive and attractive
/// dimension lists with one weight each, and k.
struct query_spec {
    std::vector<double> coords;
    std::vector<std::size_t> repulsive;
    std::vector<std::size_t> attractive;
    std::vector<double> alpha;  // one per repulsive dimension
    std::vector<double> beta;   // one per attractive dimension
    std::size_t k = 1;
};

/// Throws error(dimension_mismatch) for a wrong arity, error(invalid_k) for k == 0
/// and error(invalid_spec) for overlapping or unknown dimensions, missing or
/// non-positive weights.
void validate(const query_spec& spec, std::size_t dims);

/// Sum of alpha_i |p_i - q_i| over repulsive minus beta_j |p_j - q_j| over attractive
/// dimensions. Terms are accumulated as (repulsive[i], attractive[i]) pairs first,
/// then leftover repulsive, then leftover attractive dimensions.
[[nodiscard]] double sd_score_nd(std::span<const double> row, const query_spec& spec);

struct dimension_pair {
    std::size_t repulsive = 0;
    std::size_t attractive = 0;

    friend bool operator==(const dimension_pair&, const dimension_pair&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(repulsive, attractive);
    }
};

struct pairing {
    std::vector<dimension_pair> pairs;
    std::vector<std::size_t> residual_repulsive;
    std::vector<std::size_t> residual_attractive;

    friend bool operator==(const pairing&, const pairing&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(pairs, residual_repulsive, residual_attractive);
    }
};

/// i-th repulsive with i-th attractive dimension; the rest become 1D subproblems.
[[nodiscard]] pairing pair_dimensions(std::span<const std::size_t> repulsive,
                                      std::span<const std::size_t> attractive);

/// Uses `explicit_pairs` (validated against both lists) and leaves the remainder
/// in declaration order.
[[nodiscard]] pairing pair_dimensions(std::span<const std::size_t> repulsive,
                                      std::span<const std::size_t> attractive,
                                      std::span<const dimension_pair> explicit_pairs);

/// Dimension roles fixed at build time.
struct index_schema {
    std::vector<std::size_t> repulsive;
    std::vector<std::size_t> attractive;
    std::vector<dimension_pair> explicit_pairs;  // empty: declaration order

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(repulsive, attractive, explicit_pairs);
    }
};

struct solve_result {
    std::vector<scored> ranked;
    bool used_scan = false;
    std::size_t iterations = 0;
    std::vector<double> thresholds;  // after each round
};

/// Best-first stream of one 2D subproblem over its pair's tree.
using pair_stream = score_stream;

/// Paired projection trees plus sorted columns for the residual dimensions,
/// aggregated with a threshold stop.
class multidim_index {
public:
    multidim_index() = default;

    /// Throws error(empty_dataset) and error(invalid_spec) for a bad schema.
    [[nodiscard]] static multidim_index build(dataset data, index_schema schema,
                                              tree_config cfg = {});

    /// Falls back to a full scan (used_scan = true) when the spec's dimension
    /// roles differ from the schema or a pair's angle is not covered.
    [[nodiscard]] solve_result solve(const query_spec& spec) const;

    /// True when `spec` can run on the indexes rather than the scan fallback.
    [[nodiscard]] bool matches_schema(const query_spec& spec) const;

    [[nodiscard]] const dataset& data() const noexcept { return data_; }
    [[nodiscard]] const index_schema& schema() const noexcept { return schema_; }
    [[nodiscard]] const pairing& pairs() const noexcept { return pairing_; }
    [[nodiscard]] const tree_config& config() const noexcept { return config_; }
    [[nodiscard]] std::span<const projection_tree> trees() const noexcept { return trees_; }
    [[nodiscard]] std::span<const top1_index> top1() const noexcept { return top1_; }
    [[nodiscard]] std::span<const sorted_column> residual_columns() const noexcept
    {
        return columns_;
    }

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(data_, schema_, pairing_, config_, trees_, top1_, columns_);
    }

private:
    /// The spec reordered so that term order follows this index's pairing.
    [[nodiscard]] query_spec canonical(const query_spec& spec) const;

    dataset data_;
    index_schema schema_;
    pairing pairing_;
    tree_config config_;
    std::vector<projection_tree> trees_;  // one per pair, x = attractive, y = repulsive
    std::vector<top1_index> top1_;        // one per pair, 45 degrees
    std::vector<sorted_column> columns_;  // residual repulsive, then residual attractive
};

}  // namespace sdindex
