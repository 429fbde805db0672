#pragma once

#include <sdindex/geometry.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sdindex {

struct column_entry {
    double value = 0.0;
    point_id id = 0;

    friend bool operator==(const column_entry&, const column_entry&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(value, id);
    }
};

/// One dimension's values, ascending, ties ordered by id.
class sorted_column {
public:
    sorted_column() = default;
    explicit sorted_column(std::vector<column_entry> entries);

    void insert(column_entry e);
    /// Removes the entry (value, id); returns false if absent.
    bool erase(column_entry e);

    [[nodiscard]] std::span<const column_entry> entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    /// Index of the first entry whose value is >= v.
    [[nodiscard]] std::size_t lower_bound(double v) const noexcept;

    friend bool operator==(const sorted_column&, const sorted_column&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(entries_);
    }

private:
    std::vector<column_entry> entries_;
};

enum class stream_mode { repulsive, attractive };

struct column_hit {
    point_id id = 0;
    double value = 0.0;
    double distance = 0.0;
};

/// Bidirectional cursor over a sorted column. Attractive mode starts at the
/// binary-search position and walks outward emitting the closer frontier entry;
/// repulsive mode starts at both ends and walks inward emitting the farther one.
/// Ties go to the smaller id. The column must outlive the cursor.
class column_cursor {
public:
    column_cursor(const sorted_column& column, double q, stream_mode mode);

    [[nodiscard]] std::optional<column_hit> next();
    [[nodiscard]] std::optional<column_hit> peek() const;
    [[nodiscard]] bool exhausted() const { return !choose_left().has_value(); }

private:
    [[nodiscard]] std::optional<bool> choose_left() const;

    std::span<const column_entry> entries_;
    double q_;
    stream_mode mode_;
    std::ptrdiff_t left_;
    std::ptrdiff_t right_;
    std::ptrdiff_t size_;
};

}  // namespace sdindex
