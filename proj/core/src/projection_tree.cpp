#include <sdindex/projection_tree.hpp>

#include <sdindex/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

namespace sdindex {

namespace {

bool point_less(const point2& a, const point2& b) noexcept
{
    return a.x < b.x || (a.x == b.x && a.id < b.id);
}


// Index of the first separator >= x, or separators.size() when x is right of all.
std::size_t descend_index(const std::vector<double>& separators, double x) noexcept
{
    return static_cast<std::size_t>(
        std::lower_bound(separators.begin(), separators.end(), x) - separators.begin());
}

}  // namespace

// ---- projection_tree --------------------------------------------------------

projection_tree::projection_tree(tree_config cfg) : config_(std::move(cfg))
{
    if (config_.branching < 2) {
        throw error(errc::invalid_argument, "branching must be >= 2");
    }
    if (!(config_.rebuild_threshold > 0.0) || config_.rebuild_threshold > 1.0) {
        throw error(errc::invalid_argument, "rebuild threshold must lie in (0, 1]");
    }
    auto angles = config_.angles;
    if (!angles.empty() && angles.back() == 90.0) {
        angles.pop_back();
    }
    if (angles.empty()) {
        throw error(errc::invalid_argument, "at least one indexed angle below 90 is required");
    }
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (i > 0 && !(angles[i] > angles[i - 1])) {
            throw error(errc::invalid_argument, "indexed angles must be strictly increasing");
        }
        slopes_.push_back(slope_for_angle(angles[i]));
    }
    config_.angles = std::move(angles);
}

projection_tree projection_tree::build(std::span<const point2> points, tree_config cfg)
{
    if (points.empty()) {
        throw error(errc::empty_dataset, "cannot build a projection tree over no points");
    }
    projection_tree t(std::move(cfg));
    std::vector<point2> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(), point_less);

    t.slots_.reserve(sorted.size());
    t.by_id_.reserve(sorted.size());
    std::vector<column_entry> xs;
    xs.reserve(sorted.size());
    std::vector<std::uint32_t> order;
    order.reserve(sorted.size());
    for (const point2& p : sorted) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw error(errc::invalid_argument, "coordinates must be finite");
        }
        if (t.by_id_.contains(p.id)) {
            throw error(errc::duplicate_id, "point id " + std::to_string(p.id));
        }
        const std::uint32_t slot = t.new_slot(p);
        order.push_back(slot);
        xs.push_back({p.x, p.id});
    }
    t.x_column_ = sorted_column(std::move(xs));
    t.root_ = t.build_range(order, no_node, 0);
    return t;
}

std::uint32_t projection_tree::new_slot(const point2& p)
{
    std::uint32_t slot = 0;
    if (!free_slots_.empty()) {
        slot = free_slots_.back();
        free_slots_.pop_back();
    } else {
        slot = static_cast<std::uint32_t>(slots_.size());
        slots_.emplace_back();
    }
    slots_[slot] = {p, no_node, 0, true};
    by_id_[p.id] = slot;
    y_scale_ = std::max(y_scale_, std::abs(p.y));
    ++size_;
    return slot;
}

node_ref projection_tree::new_node()
{
    if (!free_nodes_.empty()) {
        const node_ref r = free_nodes_.back();
        free_nodes_.pop_back();
        nodes_[r] = {};
        return r;
    }
    const auto r = static_cast<node_ref>(nodes_.size());
    nodes_.emplace_back();
    bounds_.resize(nodes_.size() * slopes_.size());
    ranked_.resize(nodes_.size() * slopes_.size() * 4 * config_.branching, no_node);
    extents_.resize(nodes_.size());
    return r;
}

node_ref projection_tree::build_range(std::span<const std::uint32_t> slots, node_ref parent,
                                      std::uint32_t depth)
{
    if (slots.size() == 1) {
        slot_entry& s = slots_[slots.front()];
        s.parent = parent;
        s.depth = depth;
        count_depth(depth, +1);
        return leaf_ref(slots.front());
    }
    const node_ref r = new_node();
    nodes_[r].parent = parent;
    const std::size_t parts = std::min(config_.branching, slots.size());
    const std::size_t base = slots.size() / parts;
    const std::size_t extra = slots.size() % parts;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < parts; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        const auto part = slots.subspan(begin, len);
        const node_ref child = build_range(part, r, depth + 1);
        nodes_[r].children.push_back(child);
        nodes_[r].separators.push_back(slots_[part.back()].point.x);
        begin += len;
    }
    recompute(r);
    return r;
}

void projection_tree::count_depth(std::uint32_t depth, int delta)
{
    if (depth_counts_.size() <= depth) {
        depth_counts_.resize(depth + 1, 0);
    }
    depth_counts_[depth] = static_cast<std::size_t>(static_cast<long long>(depth_counts_[depth]) + delta);
}

projection_bound projection_tree::leaf_bound(std::uint32_t slot, std::size_t angle,
                                             projection_kind kind) const noexcept
{
    const point2& p = slots_[slot].point;
    return {oriented_key(p, kind, slopes_[angle]), p.id, slot};
}

projection_bound projection_tree::bound(node_ref r, std::size_t angle, projection_kind kind) const
{
    if (is_leaf(r)) {
        return leaf_bound(leaf_slot(r), angle, kind);
    }
    return bounds_of(r, angle)[kind_index(kind)];
}

void projection_tree::recompute(node_ref r)
{
    const internal_node& n = nodes_[r];
    const std::size_t width = n.children.size();
    std::vector<projection_bound>& child_bounds = scratch_bounds_;
    std::vector<std::size_t>& pos = scratch_positions_;
    pos.resize(width);
    std::array<double, 2> ext{std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity()};
    for (node_ref c : n.children) {
        if (is_leaf(c)) {
            ext[0] = std::min(ext[0], leaf_point(c).x);
            ext[1] = std::max(ext[1], leaf_point(c).x);
        } else {
            ext[0] = std::min(ext[0], extents_[c][0]);
            ext[1] = std::max(ext[1], extents_[c][1]);
        }
    }
    extents_[r] = ext;
    for (std::size_t a = 0; a < slopes_.size(); ++a) {
        bound_block block{};
        for (projection_kind k : all_kinds) {
            child_bounds.clear();
            for (node_ref c : n.children) {
                child_bounds.push_back(bound(c, a, k));
            }
            std::iota(pos.begin(), pos.end(), std::size_t{0});
            std::sort(pos.begin(), pos.end(), [&](std::size_t x, std::size_t y) {
                return bound_better(child_bounds[x], child_bounds[y]);
            });
            node_ref* run = &ranked_[ranked_offset(r, a, k)];
            for (std::size_t i = 0; i < config_.branching; ++i) {
                run[i] = i < width ? n.children[pos[i]] : no_node;
            }
            if (width > 0) {
                block[kind_index(k)] = child_bounds[pos.front()];
            }
        }
        bounds_of(r, a) = block;
    }
}

void projection_tree::recompute_to_root(node_ref r)
{
    while (r != no_node) {
        recompute(r);
        r = nodes_[r].parent;
    }
}

node_ref projection_tree::parent_of(node_ref r) const noexcept
{
    if (r == no_node) {
        return no_node;
    }
    return is_leaf(r) ? slots_[leaf_slot(r)].parent : nodes_[r].parent;
}

void projection_tree::shift_depths(node_ref r, int delta)
{
    if (is_leaf(r)) {
        slot_entry& s = slots_[leaf_slot(r)];
        count_depth(s.depth, -1);
        s.depth = static_cast<std::uint32_t>(static_cast<int>(s.depth) + delta);
        count_depth(s.depth, +1);
        return;
    }
    for (node_ref c : nodes_[r].children) {
        shift_depths(c, delta);
    }
}

void projection_tree::insert(const point2& p)
{
    if (by_id_.contains(p.id)) {
        throw error(errc::duplicate_id, "point id " + std::to_string(p.id));
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw error(errc::invalid_argument, "coordinates must be finite");
    }
    const std::uint32_t slot = new_slot(p);
    x_column_.insert({p.x, p.id});
    if (root_ == no_node) {
        root_ = leaf_ref(slot);
        count_depth(0, +1);
        return;
    }

    // Two leaves sharing a fresh internal node, ordered by (x, id).
    auto pair_up = [&](node_ref old_leaf, node_ref parent, std::uint32_t depth) {
        const node_ref fresh = new_node();
        const std::uint32_t old_slot = leaf_slot(old_leaf);
        const bool new_first = point_less(p, slots_[old_slot].point);
        const std::uint32_t first = new_first ? slot : old_slot;
        const std::uint32_t second = new_first ? old_slot : slot;
        nodes_[fresh].parent = parent;
        nodes_[fresh].children = {leaf_ref(first), leaf_ref(second)};
        nodes_[fresh].separators = {slots_[first].point.x, slots_[second].point.x};
        count_depth(slots_[old_slot].depth, -1);
        count_depth(depth + 1, +2);
        for (std::uint32_t s : {first, second}) {
            slots_[s].parent = fresh;
            slots_[s].depth = depth + 1;
        }
        recompute(fresh);
        return fresh;
    };

    if (is_leaf(root_)) {
        root_ = pair_up(root_, no_node, 0);
        return;
    }

    node_ref r = root_;
    std::uint32_t depth = 0;
    for (;;) {
        internal_node& n = nodes_[r];
        const bool room = n.children.size() < config_.branching;
        std::size_t i = descend_index(n.separators, p.x);
        if (i == n.children.size()) {
            if (room) {
                n.children.push_back(leaf_ref(slot));
                n.separators.push_back(p.x);
                slots_[slot].parent = r;
                slots_[slot].depth = depth + 1;
                count_depth(depth + 1, +1);
                break;
            }
            i = n.children.size() - 1;
            n.separators[i] = p.x;
        }
        const node_ref c = n.children[i];
        if (!is_leaf(c)) {
            r = c;
            ++depth;
            continue;
        }
        if (room) {
            // Sibling next to the leaf it would have collided with.
            const double cx = slots_[leaf_slot(c)].point.x;
            const auto at = static_cast<std::ptrdiff_t>(i);
            if (p.x <= cx) {
                n.children.insert(n.children.begin() + at, leaf_ref(slot));
                n.separators.insert(n.separators.begin() + at, p.x);
            } else {
                const double outer = n.separators[i];
                n.children.insert(n.children.begin() + at + 1, leaf_ref(slot));
                n.separators.insert(n.separators.begin() + at + 1, outer);
                n.separators[i] = cx;
            }
            slots_[slot].parent = r;
            slots_[slot].depth = depth + 1;
            count_depth(depth + 1, +1);
            break;
        }
        const node_ref fresh = pair_up(c, r, depth + 1);
        nodes_[r].children[i] = fresh;
        break;
    }
    recompute_to_root(r);
}

void projection_tree::erase(point_id id)
{
    auto found = by_id_.find(id);
    if (found == by_id_.end()) {
        throw error(errc::not_found, "point id " + std::to_string(id));
    }
    const std::uint32_t slot = found->second;
    slot_entry& s = slots_[slot];
    x_column_.erase({s.point.x, s.point.id});
    count_depth(s.depth, -1);
    const node_ref parent = s.parent;
    s.alive = false;
    s.parent = no_node;
    by_id_.erase(found);
    free_slots_.push_back(slot);
    --size_;

    if (parent == no_node) {
        root_ = no_node;
        return;
    }
    internal_node& n = nodes_[parent];
    const auto pos = std::find(n.children.begin(), n.children.end(), leaf_ref(slot)) -
                     n.children.begin();
    n.children.erase(n.children.begin() + pos);
    n.separators.erase(n.separators.begin() + pos);

    if (n.children.size() > 1) {
        recompute_to_root(parent);
        return;
    }
    // A single remaining child takes its parent's place.
    const node_ref only = n.children.front();
    const node_ref grand = n.parent;
    if (is_leaf(only)) {
        slots_[leaf_slot(only)].parent = grand;
    } else {
        nodes_[only].parent = grand;
    }
    shift_depths(only, -1);
    if (grand == no_node) {
        root_ = only;
    } else {
        auto& siblings = nodes_[grand].children;
        *std::find(siblings.begin(), siblings.end(), parent) = only;
    }
    nodes_[parent] = {};
    free_nodes_.push_back(parent);
    recompute_to_root(grand);
}

bool projection_tree::maybe_rebuild()
{
    if (size_ == 0) {
        return false;
    }
    const double share = static_cast<double>(imbalance_count()) / static_cast<double>(size_);
    if (!(share > config_.rebuild_threshold)) {
        return false;
    }
    const std::vector<point2> pts = points();
    *this = build(pts, config_);
    return true;
}

std::optional<std::size_t> projection_tree::find_slope(double slope) const noexcept
{
    for (std::size_t i = 0; i < slopes_.size(); ++i) {
        if (slopes_[i] == slope) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t projection_tree::height() const noexcept
{
    for (std::size_t d = depth_counts_.size(); d > 0; --d) {
        if (depth_counts_[d - 1] > 0) {
            return d - 1;
        }
    }
    return 0;
}

std::size_t projection_tree::balanced_height() const noexcept
{
    std::size_t h = 0;
    std::size_t reach = 1;
    while (reach < size_) {
        reach *= config_.branching;
        ++h;
    }
    return h;
}

std::size_t projection_tree::imbalance_count() const noexcept
{
    std::size_t count = 0;
    for (std::size_t d = balanced_height() + 1; d < depth_counts_.size(); ++d) {
        count += depth_counts_[d];
    }
    return count;
}

const point2* projection_tree::find(point_id id) const
{
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &slots_[it->second].point;
}

std::vector<point2> projection_tree::points() const
{
    std::vector<point2> out;
    out.reserve(size_);
    for (const column_entry& e : x_column_.entries()) {
        out.push_back(slots_[by_id_.at(e.id)].point);
    }
    return out;
}

bool projection_tree::can_answer(const weights2& w) const noexcept
{
    if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || (w.alpha == 0.0 && w.beta == 0.0)) {
        return false;
    }
    if (w.alpha == 0.0) {
        return true;
    }
    return w.beta / w.alpha >= slopes_.front();
}

double projection_tree::score_slack(const query2& q) const noexcept
{
    double x_scale = 0.0;
    if (!x_column_.empty()) {
        x_scale = std::max(std::abs(x_column_.entries().front().value),
                           std::abs(x_column_.entries().back().value));
    }
    const double magnitude = q.weights.alpha * (y_scale_ + std::abs(q.y)) +
                             q.weights.beta * (x_scale + std::abs(q.x));
    return 1e-12 * (1.0 + magnitude);
}

namespace {

// Drains `cursor` into a best-k collector until no stream head can still reach the
// k-th score. Heads are ordered by stream key, which agrees with the score up to
// rounding; `slack` absorbs that.
std::vector<scored> collect_topk(ranked_cursor& cursor, std::size_t k, double slack,
                                 const query2& truth)
{
    topk_collector best(k);
    for (;;) {
        const auto head = cursor.peek();
        if (!head) {
            break;
        }
        if (const auto kth = best.kth(); kth && head->score < kth->score - slack) {
            break;
        }
        const auto it = cursor.next();
        best.offer({it->point.id, sd_score_2d(it->point, truth)});
    }
    return best.sorted();
}

}  // namespace

std::vector<scored> projection_tree::query_topk_fixed(const query2& q, std::size_t k,
                                                      std::size_t angle_index) const
{
    if (k < 1) {
        throw error(errc::invalid_k, "k must be >= 1");
    }
    if (angle_index >= slopes_.size()) {
        throw error(errc::invalid_argument, "angle index out of range");
    }
    if (projection_slope(q.weights) != slopes_[angle_index]) {
        throw error(errc::wrong_slope, "query slope differs from the indexed angle");
    }
    if (empty()) {
        return {};
    }
    query_overlay overlay(*this, q.x);
    ranked_cursor cursor(*this, overlay, q, {angle_index});
    return collect_topk(cursor, k, score_slack(q), q);
}

std::vector<scored> projection_tree::query_topk_arbitrary(const query2& q, std::size_t k) const
{
    if (k < 1) {
        throw error(errc::invalid_k, "k must be >= 1");
    }
    const weights2& w = q.weights;
    if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || (w.alpha == 0.0 && w.beta == 0.0) ||
        !std::isfinite(w.alpha) || !std::isfinite(w.beta)) {
        throw error(errc::invalid_weights, "weights must be non-negative and not both zero");
    }
    if (empty()) {
        return {};
    }
    if (w.alpha == 0.0) {
        query_overlay overlay(*this, q.x);
        ranked_cursor cursor(*this, overlay, q, {angle_ref::vertical});
        return collect_topk(cursor, k, score_slack(q), q);
    }
    const double s = w.beta / w.alpha;
    if (const auto exact = find_slope(s)) {
        return query_topk_fixed(q, k, *exact);
    }
    if (s < slopes_.front()) {
        throw error(errc::invalid_weights, "query angle lies below the smallest indexed angle");
    }
    const auto upper = static_cast<std::size_t>(
        std::upper_bound(slopes_.begin(), slopes_.end(), s) - slopes_.begin());
    const std::size_t lower = upper - 1;

    query_overlay overlay(*this, q.x);

    // Both bracket rankings are walked over one separating path. Every point either
    // cursor hands out is scored at the true weights right away.
    query2 ql = q;
    ql.weights = {1.0, slopes_[lower]};
    query2 qu = q;
    angle_ref upper_ref{upper};
    if (upper == slopes_.size()) {
        qu.weights = {0.0, 1.0};
        upper_ref = {angle_ref::vertical};
    } else {
        qu.weights = {1.0, slopes_[upper]};
    }
    ranked_cursor at_lower(*this, overlay, ql, {lower});
    ranked_cursor at_upper(*this, overlay, qu, upper_ref);
    const double slack_l = score_slack(ql);
    const double slack_u = score_slack(qu);
    const double slack_q = score_slack(q);

    // The true score is a fixed blend of the two bracket scores:
    // score / alpha = c_l * lower + c_u * upper.
    double c_l = 1.0;
    double c_u = s - slopes_[lower];
    if (upper < slopes_.size()) {
        c_l = (slopes_[upper] - s) / (slopes_[upper] - slopes_[lower]);
        c_u = 1.0 - c_l;
    }

    topk_collector best(k);
    std::unordered_set<point_id> seen;
    auto take = [&](ranked_cursor& cursor) {
        const auto it = cursor.next();
        if (seen.insert(it->point.id).second) {
            best.offer({it->point.id, sd_score_2d(it->point, q)});
        }
    };
    // No point left unseen by both cursors can beat the blend of their heads.
    auto blend_settled = [&](double lower_head, double upper_head) {
        const auto kth = best.kth();
        const double bound =
            w.alpha * (c_l * (lower_head + slack_l) + c_u * (upper_head + slack_u)) + slack_q;
        return kth && kth->score >= bound;
    };

    // Top-k at the lower bracket angle: the anchor set.
    topk_collector anchor(k);
    for (;;) {
        const auto head = at_lower.peek();
        if (!head) {
            return best.sorted();  // every point has been seen
        }
        if (const auto kth = anchor.kth(); kth && head->score < kth->score - slack_l) {
            break;
        }
        anchor.offer({head->point.id, head->score});
        take(at_lower);
    }

    // Fetch along the upper bracket ranking until it covers the anchor set and
    // falls below the anchor's weakest upper score. The blended bound usually
    // settles much earlier, so the lower cursor keeps advancing alongside.
    std::unordered_set<point_id> missing;
    double floor_score = std::numeric_limits<double>::infinity();
    for (const scored& a : anchor.sorted()) {
        missing.insert(a.id);
        floor_score = std::min(floor_score, sd_score_2d(*find(a.id), qu));
    }
    floor_score -= slack_u;

    for (;;) {
        const auto up = at_upper.peek();
        if (!up || (missing.empty() && up->score < floor_score)) {
            break;
        }
        const auto low = at_lower.peek();
        if (!low || blend_settled(low->score, up->score)) {
            break;
        }
        missing.erase(up->point.id);
        take(at_upper);
        if (at_lower.peek()) {
            take(at_lower);
        }
    }
    return best.sorted();
}

// ---- query_overlay ----------------------------------------------------------

namespace {

// Max-heap order: the top is the entry with the best bound.
bool frontier_less(const query_overlay::frontier_entry& a, const query_overlay::frontier_entry& b)
{
    return bound_better(b.bound, a.bound);
}

}  // namespace

query_overlay::query_overlay(const projection_tree& tree, double x_q)
    : tree_(&tree), x_q_(x_q), streams_(tree.slopes_.size() * 4)
{
    node_ref r = tree.root_;
    while (r != no_node && !is_leaf(r)) {
        const auto& n = tree.nodes_[r];
        const std::size_t i = descend_index(n.separators, x_q);
        path_.push_back({r, static_cast<std::uint32_t>(i)});
        r = i < n.children.size() ? n.children[i] : no_node;
    }
    path_leaf_ = r;
}

void query_overlay::push(stream_state& st, node_ref r, std::uint32_t rank, std::size_t angle,
                         projection_kind kind) const
{
    node_ref target = r;
    if (rank != frontier_entry::single) {
        if (rank >= tree_->config_.branching) {
            return;
        }
        target = tree_->ranked_run(r, angle, kind)[rank];
        if (target == no_node) {
            return;
        }
    }
    const projection_bound b = tree_->bound(target, angle, kind);
    if (b.empty()) {
        return;
    }
    st.heap.push_back({b, r, rank});
    std::push_heap(st.heap.begin(), st.heap.end(), frontier_less);
}

query_overlay::stream_state& query_overlay::stream(std::size_t angle, projection_kind kind)
{
    stream_state& st = streams_[angle * 4 + kind_index(kind)];
    if (st.ready) {
        return st;
    }
    st.ready = true;
    // Leftward rays reach x_q only from points at or right of it, and vice versa.
    for (const path_step& step : path_) {
        const auto& children = tree_->nodes_[step.node].children;
        const std::size_t begin = is_left(kind) ? step.pos : 0;
        const std::size_t end =
            is_left(kind) ? children.size() : std::min<std::size_t>(step.pos + 1, children.size());
        for (std::size_t i = begin; i < end; ++i) {
            if (i != step.pos) {
                push(st, children[i], frontier_entry::single, angle, kind);
            }
        }
    }
    if (path_leaf_ != no_node) {
        const bool right_side = tree_->leaf_point(path_leaf_).x >= x_q_;
        if (right_side == is_left(kind)) {
            push(st, path_leaf_, frontier_entry::single, angle, kind);
        }
    }
    return st;
}

projection_bound query_overlay::root_bound(std::size_t angle, projection_kind kind)
{
    const stream_state& st = stream(angle, kind);
    return st.heap.empty() ? projection_bound{} : st.heap.front().bound;
}

std::optional<stream_item> query_overlay::next(std::size_t angle, projection_kind kind, double y_q)
{
    stream_state& st = stream(angle, kind);
    while (!st.heap.empty()) {
        std::pop_heap(st.heap.begin(), st.heap.end(), frontier_less);
        const frontier_entry top = st.heap.back();
        st.heap.pop_back();
        node_ref r = top.node;
        if (top.rank != frontier_entry::single) {
            r = tree_->ranked_run(top.node, angle, kind)[top.rank];
            push(st, top.node, top.rank + 1, angle, kind);
        }
        // Children are kept ranked per stream, so the descent follows rank 0 and
        // leaves the rest of each level behind as one frontier entry.
        while (!is_leaf(r)) {
            push(st, r, 1, angle, kind);
            r = tree_->ranked_run(r, angle, kind)[0];
        }
        const point2& p = tree_->leaf_point(r);
        const bool lower_side = p.y >= y_q;
        if (lower_side == is_lower(kind)) {
            return stream_item{p, project_onto_axis(p, kind, tree_->slopes_[angle], x_q_)};
        }
    }
    return std::nullopt;
}

// ---- ranked_cursor ----------------------------------------------------------

ranked_cursor::ranked_cursor(const projection_tree& tree, query_overlay& overlay,
                             const query2& q, angle_ref angle)
    : tree_(&tree), overlay_(&overlay), q_(q), angle_(angle)
{
    if (angle_.is_vertical()) {
        column_.emplace(tree.x_column(), q.x, stream_mode::attractive);
        return;
    }
    for (projection_kind k : all_kinds) {
        refill(k);
    }
    best_ = best_candidate();
}

void ranked_cursor::refill(projection_kind kind)
{
    auto& slot = candidates_[kind_index(kind)];
    slot.reset();
    if (auto hit = overlay_->next(angle_.index, kind, q_.y)) {
        ++fetches_;
        slot = item{hit->point, sd_score_2d(hit->point, q_)};
    }
}

std::optional<std::size_t> ranked_cursor::best_candidate() const
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        if (!candidates_[i]) {
            continue;
        }
        if (!best) {
            best = i;
            continue;
        }
        const item& a = *candidates_[i];
        const item& b = *candidates_[*best];
        if (ranks_before({a.point.id, a.score}, {b.point.id, b.score})) {
            best = i;
        }
    }
    return best;
}

// Equal x-distances surface in column order, not id order; gather each tie group
// and sort it.
void ranked_cursor::fill_pending()
{
    if (pending_pos_ < pending_.size()) {
        return;
    }
    pending_.clear();
    pending_pos_ = 0;
    const auto first = column_->next();
    if (!first) {
        return;
    }
    auto emit = [&](const column_hit& h) {
        const point2& p = *tree_->find(h.id);
        pending_.push_back({p, sd_score_2d(p, q_)});
        ++fetches_;
    };
    emit(*first);
    while (const auto more = column_->peek()) {
        if (more->distance != first->distance) {
            break;
        }
        emit(*column_->next());
    }
    std::sort(pending_.begin(), pending_.end(), [](const item& a, const item& b) {
        return ranks_before({a.point.id, a.score}, {b.point.id, b.score});
    });
}

std::optional<ranked_cursor::item> ranked_cursor::peek()
{
    if (angle_.is_vertical()) {
        fill_pending();
        if (pending_pos_ < pending_.size()) {
            return pending_[pending_pos_];
        }
        return std::nullopt;
    }
    if (!best_) {
        return std::nullopt;
    }
    return candidates_[*best_];
}

std::optional<ranked_cursor::item> ranked_cursor::next()
{
    if (angle_.is_vertical()) {
        fill_pending();
        if (pending_pos_ < pending_.size()) {
            return pending_[pending_pos_++];
        }
        return std::nullopt;
    }
    if (!best_) {
        return std::nullopt;
    }
    const item out = *candidates_[*best_];
    refill(all_kinds[*best_]);
    best_ = best_candidate();
    return out;
}

// ---- score_stream -----------------------------------------------------------

namespace {

// Score under weights (1, slope) of a point whose `kind` key is `key`:
// key + offset.
double key_offset(projection_kind kind, double slope, const query2& q)
{
    const double g = line_gradient(kind, slope);
    return is_lower(kind) ? g * q.x - q.y : q.y - g * q.x;
}

}  // namespace

bool score_stream::before(const entry& a, const entry& b) noexcept
{
    if (a.priority != b.priority) {
        return a.priority > b.priority;
    }
    // A subtree tied with a point may still hold an equal point with a smaller id.
    const bool a_leaf = is_leaf(a.node);
    if (a_leaf != is_leaf(b.node)) {
        return !a_leaf;
    }
    return a.id < b.id;
}

score_stream::score_stream(const projection_tree& tree, const query2& q) : tree_(&tree), q_(q)
{
    const weights2& w = q.weights;
    if (!tree.can_answer(w)) {
        throw error(errc::invalid_weights, "query angle lies below the smallest indexed angle");
    }
    query2 widest = q;
    if (w.alpha == 0.0) {
        mode_ = mode::vertical;
    } else {
        const double s = projection_slope(w);
        const auto slopes = tree.slopes();
        if (const auto exact = tree.find_slope(s)) {
            lower_ = *exact;
        } else {
            upper_ = static_cast<std::size_t>(
                std::upper_bound(slopes.begin(), slopes.end(), s) - slopes.begin());
            lower_ = upper_ - 1;
            d_lower_ = s - slopes[lower_];
            if (upper_ == slopes.size()) {
                mode_ = mode::vertical_bracket;
            } else {
                mode_ = mode::bracket;
                c_lower_ = (slopes[upper_] - s) / (slopes[upper_] - slopes[lower_]);
                c_upper_ = 1.0 - c_lower_;
                d_upper_ = slopes[upper_] - s;
                widest.weights.beta = std::max(w.beta, w.alpha * slopes[upper_]);
            }
        }
        for (projection_kind k : all_kinds) {
            offset_lower_[kind_index(k)] = key_offset(k, slopes[lower_], q);
            if (mode_ == mode::bracket) {
                offset_upper_[kind_index(k)] = key_offset(k, slopes[upper_], q);
            }
        }
    }
    slack_ = tree.score_slack(widest);

    // Subtrees off the separating path lie wholly on one side of x_q.
    const query_overlay path(tree, q.x);
    for (const query_overlay::path_step& step : path.path()) {
        const auto& children = tree.node(step.node).children;
        for (std::size_t i = 0; i < children.size(); ++i) {
            if (i != step.pos) {
                runs_.push_back(make_entry(children[i], i > step.pos));
            }
        }
    }
    if (path.path_leaf() != no_node) {
        runs_.push_back(make_entry(path.path_leaf(), true));
    }
    add_run(0);
}

double score_stream::subtree_bound(node_ref r, bool right_side) const
{
    const auto& ext = tree_->extent(r);
    const double gap = std::max(0.0, right_side ? ext[0] - q_.x : q_.x - ext[1]);
    if (mode_ == mode::vertical) {
        return -q_.weights.beta * gap + slack_;
    }
    const double far = right_side ? ext[1] - q_.x : q_.x - ext[0];
    const std::array<projection_kind, 2> kinds =
        right_side ? std::array{projection_kind::llp, projection_kind::lup}
                   : std::array{projection_kind::rlp, projection_kind::rup};
    double best = -std::numeric_limits<double>::infinity();
    for (projection_kind k : kinds) {
        const std::size_t ki = kind_index(k);
        const double at_lower = tree_->node_bound(r, lower_, k).key + offset_lower_[ki];
        double b = at_lower;
        if (mode_ == mode::vertical_bracket) {
            b = at_lower - d_lower_ * gap;
        } else if (mode_ == mode::bracket) {
            const double at_upper = tree_->node_bound(r, upper_, k).key + offset_upper_[ki];
            b = std::min({c_lower_ * at_lower + c_upper_ * at_upper, at_lower - d_lower_ * gap,
                          at_upper + d_upper_ * far});
        }
        best = std::max(best, b);
    }
    return q_.weights.alpha * best + slack_;
}

score_stream::entry score_stream::make_entry(node_ref r, bool right_side) const
{
    if (is_leaf(r)) {
        const point2& p = tree_->leaf_point(r);
        return {sd_score_2d(p, q_), p.id, r, right_side};
    }
    return {subtree_bound(r, right_side), 0, r, right_side};
}

void score_stream::add_run(std::size_t begin)
{
    if (begin == runs_.size()) {
        return;
    }
    std::sort(runs_.begin() + static_cast<std::ptrdiff_t>(begin), runs_.end(), before);
    heap_.push_back({begin, runs_.size()});
    std::push_heap(heap_.begin(), heap_.end(), run_order{&runs_});
}

std::optional<scored> score_stream::next()
{
    const run_order order{&runs_};
    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), order);
        run& top = heap_.back();
        const entry e = runs_[top.pos++];
        if (top.pos < top.end) {
            std::push_heap(heap_.begin(), heap_.end(), order);
        } else {
            heap_.pop_back();
        }
        if (is_leaf(e.node)) {
            return scored{e.id, e.priority};
        }
        // Children become one sorted run behind a single heap entry.
        const std::size_t begin = runs_.size();
        for (node_ref c : tree_->node(e.node).children) {
            runs_.push_back(make_entry(c, e.right_side));
        }
        add_run(begin);
    }
    return std::nullopt;
}

}  // namespace sdindex
