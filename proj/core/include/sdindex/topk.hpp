#pragma once

#include <sdindex/geometry.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

namespace sdindex {

struct scored {
    point_id id = 0;
    double score = 0.0;

    friend bool operator==(const scored&, const scored&) = default;
};

/// Result order everywhere: higher score first, smaller id on ties.
[[nodiscard]] constexpr bool ranks_before(const scored& a, const scored& b) noexcept
{
    return a.score > b.score || (a.score == b.score && a.id < b.id);
}

/// Bounded best-k accumulator. The heap front is the current k-th entry.
class topk_collector {
public:
    explicit topk_collector(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    bool offer(scored s)
    {
        if (k_ == 0) {
            return false;
        }
        if (heap_.size() < k_) {
            heap_.push_back(s);
            std::push_heap(heap_.begin(), heap_.end(), ranks_before);
            return true;
        }
        if (!ranks_before(s, heap_.front())) {
            return false;
        }
        std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
        heap_.back() = s;
        std::push_heap(heap_.begin(), heap_.end(), ranks_before);
        return true;
    }

    [[nodiscard]] bool full() const noexcept { return heap_.size() == k_; }
    [[nodiscard]] std::size_t size() const noexcept { return heap_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return k_; }

    /// The k-th best entry so far; empty until k entries were accepted.
    [[nodiscard]] std::optional<scored> kth() const
    {
        if (!full() || heap_.empty()) {
            return std::nullopt;
        }
        return heap_.front();
    }

    [[nodiscard]] std::vector<scored> sorted() const
    {
        std::vector<scored> out = heap_;
        std::sort(out.begin(), out.end(), ranks_before);
        return out;
    }

private:
    std::size_t k_;
    std::vector<scored> heap_;
};

/// Membership flags for the dense ids 0..n-1 of a dataset.
class seen_ids {
public:
    explicit seen_ids(std::size_t n) : flags_(n, false) {}

    /// True if `id` was not seen before.
    bool insert(point_id id)
    {
        if (flags_[id]) {
            return false;
        }
        flags_[id] = true;
        return true;
    }
    [[nodiscard]] bool contains(point_id id) const { return id < flags_.size() && flags_[id]; }

private:
    std::vector<bool> flags_;
};

/// Threshold stop shared by the aggregating engines: true once no unseen point
/// (score <= threshold) can displace the k-th entry. On an exact tie with the
/// threshold an unseen point could still win on id, so every smaller id has to
/// have been seen already.
template <class SeenSet>
[[nodiscard]] bool threshold_reached(const topk_collector& best, double threshold,
                                     const SeenSet& seen)
{
    const auto kth = best.kth();
    if (!kth || kth->score < threshold) {
        return false;
    }
    if (kth->score > threshold) {
        return true;
    }
    for (point_id id = 0; id < kth->id; ++id) {
        if (!seen.contains(id)) {
            return false;
        }
    }
    return true;
}

}  // namespace sdindex
