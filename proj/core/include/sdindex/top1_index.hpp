#pragma once

#include <sdindex/geometry.hpp>
#include <sdindex/topk.hpp>

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace sdindex {

/// One x-interval [previous boundary, boundary_x) with constant extreme-projection
/// providers. The last cell ends at +infinity.
struct region_cell {
    double boundary_x = std::numeric_limits<double>::infinity();
    std::optional<point_id> lower_provider;
    std::optional<point_id> upper_provider;

    friend bool operator==(const region_cell&, const region_cell&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(boundary_x, lower_provider, upper_provider);
    }
};

/// Region decomposition of the x-axis answering top-1 queries for one fixed
/// projection slope in O(log n).
///
/// The lower sweep orders points by their llp intercept (highest first) and keeps
/// the current provider until a candidate's llp cuts the provider's rlp; the upper
/// sweep does the same with lup (lowest first) against rup. The two provider
/// sequences are merged into one cell array. Both sorted lists are retained so that
/// inserts and deletes re-sweep only the affected run of providers.
class top1_index {
public:
    struct envelope_entry {
        point_id provider = 0;
        double boundary = std::numeric_limits<double>::infinity();

        friend bool operator==(const envelope_entry&, const envelope_entry&) = default;

        template <class Archive>
        void serialize(Archive& ar)
        {
            ar(provider, boundary);
        }
    };

    top1_index() = default;
    /// Empty index for the given slope (beta / alpha).
    explicit top1_index(double slope);

    /// Throws error(empty_dataset) on empty input and error(duplicate_id) on repeated ids.
    [[nodiscard]] static top1_index build(std::span<const point2> points, double slope);

    /// Best point for q. Throws error(wrong_slope) unless q's beta/alpha equals the
    /// build slope, error(empty_dataset) on an empty index.
    [[nodiscard]] scored query(const query2& q) const;

    void insert(const point2& p);
    void erase(point_id id);

    [[nodiscard]] std::span<const region_cell> cells() const noexcept { return cells_; }
    [[nodiscard]] std::span<const envelope_entry> lower_envelope() const noexcept
    {
        return lower_.envelope;
    }
    [[nodiscard]] std::span<const envelope_entry> upper_envelope() const noexcept
    {
        return upper_.envelope;
    }
    [[nodiscard]] double slope() const noexcept { return slope_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] bool contains(point_id id) const { return points_.contains(id); }
    [[nodiscard]] const point2& point(point_id id) const;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(slope_, points_, lower_.list, lower_.envelope, upper_.list, upper_.envelope, cells_);
    }

private:
    enum class side { lower, upper };

    struct sweep_item {
        double key = 0.0;  // larger sweeps first
        point_id id = 0;

        template <class Archive>
        void serialize(Archive& ar)
        {
            ar(key, id);
        }
    };

    struct sweep_state {
        std::vector<sweep_item> list;
        std::vector<envelope_entry> envelope;
    };

    [[nodiscard]] sweep_item item_for(side s, const point2& p) const noexcept;
    [[nodiscard]] std::optional<double> cut(side s, const point2& provider,
                                            const point2& candidate) const noexcept;
    [[nodiscard]] bool dominated(side s, const point2& p) const;
    void sweep_all(side s);
    void resweep(side s, const sweep_item& changed, std::optional<point_id> removed);
    void merge_cells();

    [[nodiscard]] sweep_state& state(side s) noexcept { return s == side::lower ? lower_ : upper_; }

    double slope_ = 1.0;
    std::unordered_map<point_id, point2> points_;
    sweep_state lower_;
    sweep_state upper_;
    std::vector<region_cell> cells_;
};

}  // namespace sdindex
