#include <sdindex/column.hpp>

#include <algorithm>
#include <cmath>

namespace sdindex {

namespace {

bool entry_less(const column_entry& a, const column_entry& b) noexcept
{
    return a.value < b.value || (a.value == b.value && a.id < b.id);
}

}  // namespace

sorted_column::sorted_column(std::vector<column_entry> entries) : entries_(std::move(entries))
{
    std::sort(entries_.begin(), entries_.end(), entry_less);
}

void sorted_column::insert(column_entry e)
{
    entries_.insert(std::upper_bound(entries_.begin(), entries_.end(), e, entry_less), e);
}

bool sorted_column::erase(column_entry e)
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), e, entry_less);
    if (it == entries_.end() || *it != e) {
        return false;
    }
    entries_.erase(it);
    return true;
}

std::size_t sorted_column::lower_bound(double v) const noexcept
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), v,
                               [](const column_entry& e, double x) { return e.value < x; });
    return static_cast<std::size_t>(it - entries_.begin());
}

column_cursor::column_cursor(const sorted_column& column, double q, stream_mode mode)
    : entries_(column.entries()), q_(q), mode_(mode),
      size_(static_cast<std::ptrdiff_t>(column.size()))
{
    if (mode_ == stream_mode::attractive) {
        right_ = static_cast<std::ptrdiff_t>(column.lower_bound(q));
        left_ = right_ - 1;
    } else {
        left_ = 0;
        right_ = size_ - 1;
    }
}

std::optional<bool> column_cursor::choose_left() const
{
    bool has_left = false;
    bool has_right = false;
    if (mode_ == stream_mode::attractive) {
        has_left = left_ >= 0;
        has_right = right_ < size_;
    } else {
        has_left = has_right = left_ <= right_;
    }
    if (!has_left && !has_right) {
        return std::nullopt;
    }
    if (!has_left || !has_right) {
        return has_left;
    }
    const column_entry& l = entries_[static_cast<std::size_t>(left_)];
    const column_entry& r = entries_[static_cast<std::size_t>(right_)];
    const double dl = std::abs(l.value - q_);
    const double dr = std::abs(r.value - q_);
    if (dl == dr) {
        return l.id < r.id;
    }
    return mode_ == stream_mode::attractive ? dl < dr : dl > dr;
}

std::optional<column_hit> column_cursor::peek() const
{
    const auto side = choose_left();
    if (!side) {
        return std::nullopt;
    }
    const column_entry& e = entries_[static_cast<std::size_t>(*side ? left_ : right_)];
    return column_hit{e.id, e.value, std::abs(e.value - q_)};
}

std::optional<column_hit> column_cursor::next()
{
    const auto side = choose_left();
    if (!side) {
        return std::nullopt;
    }
    const column_entry& e = entries_[static_cast<std::size_t>(*side ? left_ : right_)];
    const bool outward = mode_ == stream_mode::attractive;
    if (*side) {
        left_ += outward ? -1 : 1;
    } else {
        right_ += outward ? 1 : -1;
    }
    return column_hit{e.id, e.value, std::abs(e.value - q_)};
}

}  // namespace sdindex
