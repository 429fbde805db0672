#pragma once

#include <sdindex/geometry.hpp>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sdindex {

/// Row-major point store. Point ids are row indices; the original id tokens of a
/// CSV file are kept as labels.
class dataset {
public:
    dataset() = default;
    explicit dataset(std::vector<std::string> dimension_names);

    /// Appends a row; throws error(duplicate_id) for a repeated label and
    /// error(dimension_mismatch) for a wrong arity.
    point_id add(std::string label, std::span<const double> values);

    [[nodiscard]] std::size_t dims() const noexcept { return names_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return labels_.empty(); }

    [[nodiscard]] std::span<const double> row(point_id id) const
    {
        return {values_.data() + static_cast<std::size_t>(id) * dims(), dims()};
    }
    [[nodiscard]] double value(point_id id, std::size_t dim) const
    {
        return values_[static_cast<std::size_t>(id) * dims() + dim];
    }
    [[nodiscard]] const std::string& label(point_id id) const { return labels_[id]; }
    [[nodiscard]] std::span<const std::string> names() const noexcept { return names_; }
    [[nodiscard]] std::optional<std::size_t> dimension(std::string_view name) const;
    [[nodiscard]] std::optional<point_id> find_label(std::string_view label) const;

    /// Free-form '#' comment lines (without the marker), e.g. generator settings.
    [[nodiscard]] const std::vector<std::string>& comments() const noexcept { return comments_; }
    void add_comment(std::string line) { comments_.push_back(std::move(line)); }

    /// Two-column view for one (attractive x, repulsive y) dimension pair.
    [[nodiscard]] std::vector<point2> project(std::size_t x_dim, std::size_t y_dim) const;

    friend bool operator==(const dataset& a, const dataset& b)
    {
        return a.names_ == b.names_ && a.labels_ == b.labels_ && a.values_ == b.values_ &&
               a.comments_ == b.comments_;
    }

    template <class Archive>
    void save(Archive& ar) const
    {
        ar(names_, labels_, values_, comments_);
    }

    template <class Archive>
    void load(Archive& ar)
    {
        ar(names_, labels_, values_, comments_);
        reindex();
    }

private:
    void reindex();

    std::vector<std::string> names_;
    std::vector<std::string> labels_;
    std::vector<double> values_;
    std::vector<std::string> comments_;
    std::unordered_map<std::string, point_id> by_label_;
};

/// CSV: optional '#' comment lines, a header "id,<dim>,...", then one row per point.
[[nodiscard]] dataset read_csv(std::istream& in);
[[nodiscard]] dataset load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const dataset& data);
void save_csv(const std::filesystem::path& path, const dataset& data);

/// Shortest text that parses back to exactly `v`.
[[nodiscard]] std::string format_double(double v);

}  // namespace sdindex
