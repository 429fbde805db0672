#pragma once

#include <sdindex/column.hpp>
#include <sdindex/geometry.hpp>
#include <sdindex/topk.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace sdindex {

struct tree_config {
    std::size_t branching = 16;
    /// Indexed projection angles in degrees, strictly increasing in [0, 90).
    /// 90 degrees is always available through the sorted-x fallback; a trailing
    /// 90 in this list is accepted and dropped.
    std::vector<double> angles = {0.0, 23.0, 45.0, 67.0};
    /// Rebuild once the share of leaves deeper than ceil(log_b n) exceeds this.
    double rebuild_threshold = 0.1;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(branching, angles, rebuild_threshold);
    }
};

/// Child reference: an internal node index, or a leaf slot tagged with `leaf_flag`.
using node_ref = std::uint32_t;
inline constexpr node_ref leaf_flag = 0x8000'0000u;
inline constexpr node_ref no_node = 0xFFFF'FFFFu;

[[nodiscard]] constexpr bool is_leaf(node_ref r) noexcept { return r != no_node && (r & leaf_flag) != 0; }
[[nodiscard]] constexpr std::uint32_t leaf_slot(node_ref r) noexcept { return r & ~leaf_flag; }
[[nodiscard]] constexpr node_ref leaf_ref(std::uint32_t slot) noexcept { return slot | leaf_flag; }

/// Best projection in a subtree for one (angle, kind). Keys are oriented so that a
/// larger key is always better: lower kinds use the intercept, upper kinds its
/// negation. Equal keys fall back to the smaller point id.
struct projection_bound {
    double key = -std::numeric_limits<double>::infinity();
    point_id id = std::numeric_limits<point_id>::max();
    std::uint32_t slot = std::numeric_limits<std::uint32_t>::max();

    [[nodiscard]] bool empty() const noexcept
    {
        return slot == std::numeric_limits<std::uint32_t>::max();
    }

    friend bool operator==(const projection_bound&, const projection_bound&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(key, id, slot);
    }
};

[[nodiscard]] constexpr bool bound_better(const projection_bound& a,
                                          const projection_bound& b) noexcept
{
    return a.key > b.key || (a.key == b.key && a.id < b.id);
}

/// Oriented key of p's projection of `kind` at `slope` on the reference line.
[[nodiscard]] inline double oriented_key(const point2& p, projection_kind kind,
                                         double slope) noexcept
{
    const double v = intercept_value(p, kind, slope);
    return is_lower(kind) ? v : -v;
}

/// Indexed angle selector: an index into the configured slopes, or the 90 degree
/// (alpha = 0) fallback answered from the sorted x column.
struct angle_ref {
    static constexpr std::size_t vertical = std::numeric_limits<std::size_t>::max();
    std::size_t index = 0;

    [[nodiscard]] bool is_vertical() const noexcept { return index == vertical; }
};

class query_overlay;

/// Balanced b-ary tree over x whose internal nodes carry, per indexed angle, the
/// best llp/rlp/lup/rup intercept of their subtree. Leaves hold single points.
///
/// Queries never modify the tree: per-query bound changes live in a query_overlay,
/// so one tree can serve concurrent readers. insert/erase/maybe_rebuild need
/// exclusive access.
class projection_tree {
public:
    struct internal_node {
        node_ref parent = no_node;
        std::vector<double> separators;  // child i holds x <= separators[i]
        std::vector<node_ref> children;

        template <class Archive>
        void serialize(Archive& ar)
        {
            ar(parent, separators, children);
        }
    };

    struct slot_entry {
        point2 point{};
        node_ref parent = no_node;
        std::uint32_t depth = 0;
        bool alive = false;

        template <class Archive>
        void serialize(Archive& ar)
        {
            ar(point, parent, depth, alive);
        }
    };

    explicit projection_tree(tree_config cfg = {});

    /// Throws error(empty_dataset) on empty input, error(duplicate_id) on repeated ids.
    [[nodiscard]] static projection_tree build(std::span<const point2> points,
                                               tree_config cfg = {});

    void insert(const point2& p);
    void erase(point_id id);
    /// Rebuilds when |U| / n exceeds the configured threshold; returns true if it did.
    bool maybe_rebuild();

    /// Top-k when q's beta/alpha equals the slope of indexed angle `angle_index`.
    [[nodiscard]] std::vector<scored> query_topk_fixed(const query2& q, std::size_t k,
                                                       std::size_t angle_index) const;
    /// Top-k for arbitrary weights by bracketing between two indexed angles.
    /// alpha == 0 is answered from the sorted x column.
    [[nodiscard]] std::vector<scored> query_topk_arbitrary(const query2& q, std::size_t k) const;
    /// False when beta/alpha lies below the smallest indexed angle.
    [[nodiscard]] bool can_answer(const weights2& w) const noexcept;

    /// Rounding allowance when comparing scores derived from differently
    /// evaluated expressions (stream keys vs. direct scores).
    [[nodiscard]] double score_slack(const query2& q) const noexcept;

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] const tree_config& config() const noexcept { return config_; }
    [[nodiscard]] std::span<const double> slopes() const noexcept { return slopes_; }
    [[nodiscard]] std::size_t angle_count() const noexcept { return slopes_.size(); }
    /// Index of the indexed angle whose slope equals `slope` exactly.
    [[nodiscard]] std::optional<std::size_t> find_slope(double slope) const noexcept;

    [[nodiscard]] node_ref root() const noexcept { return root_; }
    [[nodiscard]] std::size_t height() const noexcept;
    /// ceil(log_b n); 0 for n <= 1.
    [[nodiscard]] std::size_t balanced_height() const noexcept;
    /// Leaves whose root path is longer than balanced_height().
    [[nodiscard]] std::size_t imbalance_count() const noexcept;

    [[nodiscard]] const internal_node& node(node_ref r) const { return nodes_[r]; }
    [[nodiscard]] const point2& leaf_point(node_ref r) const { return slots_[leaf_slot(r)].point; }
    [[nodiscard]] node_ref parent_of(node_ref r) const noexcept;
    [[nodiscard]] std::span<const node_ref> children(node_ref r) const
    {
        return nodes_[r].children;
    }
    /// Stored bound for an internal node, computed bound for a leaf.
    [[nodiscard]] projection_bound bound(node_ref r, std::size_t angle, projection_kind kind) const;
    /// An internal node's children, best bound first, padded with no_node up to
    /// the branching factor.
    [[nodiscard]] const node_ref* ranked_run(node_ref r, std::size_t angle,
                                             projection_kind kind) const noexcept
    {
        return &ranked_[ranked_offset(r, angle, kind)];
    }
    [[nodiscard]] const point2* find(point_id id) const;
    /// Stored bound of an internal node.
    [[nodiscard]] const projection_bound& node_bound(node_ref r, std::size_t angle,
                                                     projection_kind kind) const
    {
        return bounds_of(r, angle)[kind_index(kind)];
    }
    /// Smallest and largest x below an internal node.
    [[nodiscard]] const std::array<double, 2>& extent(node_ref r) const { return extents_[r]; }
    [[nodiscard]] const sorted_column& x_column() const noexcept { return x_column_; }
    /// All stored points in x order.
    [[nodiscard]] std::vector<point2> points() const;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(config_, slopes_, nodes_, free_nodes_, slots_, free_slots_, bounds_, ranked_, extents_, by_id_, root_,
           size_, depth_counts_, x_column_, y_scale_);
    }

private:
    friend class query_overlay;

    using bound_block = std::array<projection_bound, 4>;

    [[nodiscard]] node_ref new_node();
    [[nodiscard]] std::uint32_t new_slot(const point2& p);
    node_ref build_range(std::span<const std::uint32_t> slots, node_ref parent, std::uint32_t depth);
    void recompute(node_ref r);
    void recompute_to_root(node_ref r);
    void shift_depths(node_ref r, int delta);
    void count_depth(std::uint32_t depth, int delta);
    [[nodiscard]] bound_block& bounds_of(node_ref r, std::size_t angle)
    {
        return bounds_[r * slopes_.size() + angle];
    }
    [[nodiscard]] const bound_block& bounds_of(node_ref r, std::size_t angle) const
    {
        return bounds_[r * slopes_.size() + angle];
    }
    [[nodiscard]] std::size_t ranked_offset(node_ref r, std::size_t angle,
                                            projection_kind kind) const noexcept
    {
        return ((r * slopes_.size() + angle) * 4 + kind_index(kind)) * config_.branching;
    }
    [[nodiscard]] projection_bound leaf_bound(std::uint32_t slot, std::size_t angle,
                                              projection_kind kind) const noexcept;

    tree_config config_;
    std::vector<double> slopes_;
    std::vector<internal_node> nodes_;
    std::vector<node_ref> free_nodes_;
    std::vector<slot_entry> slots_;
    std::vector<std::uint32_t> free_slots_;
    std::vector<bound_block> bounds_;
    std::vector<node_ref> ranked_;
    std::vector<std::array<double, 2>> extents_;
    std::unordered_map<point_id, std::uint32_t> by_id_;
    node_ref root_ = no_node;
    std::size_t size_ = 0;
    std::vector<std::size_t> depth_counts_;
    sorted_column x_column_;
    double y_scale_ = 0.0;  // max |y| ever stored since the last build
    std::vector<projection_bound> scratch_bounds_;  // recompute() workspace
    std::vector<std::size_t> scratch_positions_;
};

struct stream_item {
    point2 point{};
    double projected_y = 0.0;
};

/// Per-query state: the separating path for x_q plus, per (angle, kind), a
/// best-first frontier of subtrees whose points can still be fetched. Path nodes
/// are split into their children on the allowed side of x_q.
class query_overlay {
public:
    struct path_step {
        node_ref node = no_node;
        std::uint32_t pos = 0;  // index of the child the path continues into
    };

    query_overlay(const projection_tree& tree, double x_q);

    [[nodiscard]] std::span<const path_step> path() const noexcept { return path_; }
    [[nodiscard]] node_ref path_leaf() const noexcept { return path_leaf_; }
    [[nodiscard]] double x_q() const noexcept { return x_q_; }

    /// Best projection still fetchable from one stream; empty once it is drained.
    [[nodiscard]] projection_bound root_bound(std::size_t angle, projection_kind kind);

    /// Next point of the stream in projection order, skipping points whose
    /// selected projection for (x_q, y_q) is of the other vertical kind.
    [[nodiscard]] std::optional<stream_item> next(std::size_t angle, projection_kind kind,
                                                  double y_q);

    /// One frontier item: a whole subtree, or the children of `node` from `rank`
    /// on in that node's per-stream ranking.
    struct frontier_entry {
        static constexpr std::uint32_t single = std::numeric_limits<std::uint32_t>::max();
        projection_bound bound{};
        node_ref node = no_node;
        std::uint32_t rank = single;
    };

private:
    struct stream_state {
        bool ready = false;
        std::vector<frontier_entry> heap;
    };

    stream_state& stream(std::size_t angle, projection_kind kind);
    void push(stream_state& st, node_ref r, std::uint32_t rank, std::size_t angle,
              projection_kind kind) const;

    const projection_tree* tree_;
    double x_q_;
    std::vector<path_step> path_;
    node_ref path_leaf_ = no_node;
    std::vector<stream_state> streams_;
};

/// Merge of the four projection streams at one angle, always handing out the best
/// of the four stream heads by score under `q.weights` (ties by id). The vertical
/// angle walks the sorted x column outward from x_q instead.
class ranked_cursor {
public:
    /// q.weights are the ranking weights; for an indexed angle their ratio should
    /// equal that angle's slope.
    ranked_cursor(const projection_tree& tree, query_overlay& overlay, const query2& q,
                  angle_ref angle);

    struct item {
        point2 point{};
        double score = 0.0;  // score under the cursor's ranking weights
    };

    [[nodiscard]] std::optional<item> next();
    [[nodiscard]] std::optional<item> peek();
    /// Accepted stream fetches so far (excluding filtered leaves).
    [[nodiscard]] std::size_t fetches() const noexcept { return fetches_; }

private:
    void refill(projection_kind kind);
    void fill_pending();
    [[nodiscard]] std::optional<std::size_t> best_candidate() const;

    const projection_tree* tree_;
    query_overlay* overlay_;
    query2 q_;
    angle_ref angle_;
    std::array<std::optional<item>, 4> candidates_{};
    std::optional<std::size_t> best_;
    std::optional<column_cursor> column_;
    std::vector<item> pending_;
    std::size_t pending_pos_ = 0;
    std::size_t fetches_ = 0;
};

/// Best-first stream of all points under arbitrary weights, in exact result
/// order (score descending, ties by id). Subtrees are ranked by an upper bound on
/// their best true score, derived from the stored bounds of the bracketing
/// indexed angles and the subtree's x extent.
class score_stream {
public:
    /// Throws error(invalid_weights) when the tree cannot answer q.weights.
    score_stream(const projection_tree& tree, const query2& q);

    [[nodiscard]] std::optional<scored> next();

private:
    enum class mode { single, bracket, vertical_bracket, vertical };

    struct entry {
        double priority = 0.0;  // exact score for a point, upper bound for a subtree
        point_id id = 0;
        node_ref node = no_node;
        bool right_side = false;  // subtree lies at x >= x_q
    };
    /// Sorted slice [pos, end) of runs_, keyed by its first entry.
    struct run {
        std::size_t pos = 0;
        std::size_t end = 0;
    };
    struct run_order {
        const std::vector<entry>* runs;
        bool operator()(const run& a, const run& b) const noexcept
        {
            return before((*runs)[b.pos], (*runs)[a.pos]);
        }
    };

    [[nodiscard]] static bool before(const entry& a, const entry& b) noexcept;
    [[nodiscard]] entry make_entry(node_ref r, bool right_side) const;
    [[nodiscard]] double subtree_bound(node_ref r, bool right_side) const;
    void add_run(std::size_t begin);

    const projection_tree* tree_;
    query2 q_;
    mode mode_ = mode::single;
    std::size_t lower_ = 0;
    std::size_t upper_ = 0;
    // score / alpha = c_lower * lower + c_upper * upper, and it moves away from
    // either bracket score by d * |dx|.
    double c_lower_ = 1.0;
    double c_upper_ = 0.0;
    double d_lower_ = 0.0;
    double d_upper_ = 0.0;
    std::array<double, 4> offset_lower_{};  // bracket score = oriented key + offset
    std::array<double, 4> offset_upper_{};
    double slack_ = 0.0;
    std::vector<entry> runs_;
    std::vector<run> heap_;
};

}  // namespace sdindex
