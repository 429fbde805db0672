#include <sdindex/dataset.hpp>

#include <sdindex/error.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace sdindex {

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_value(std::string_view field, std::size_t line_no)
{
    field = trim(field);
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || end != field.data() + field.size() || !std::isfinite(v)) {
        throw error(errc::parse_error,
                    "line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
    }
    return v;
}

}  // namespace

dataset::dataset(std::vector<std::string> dimension_names) : names_(std::move(dimension_names)) {}

point_id dataset::add(std::string label, std::span<const double> values)
{
    if (values.size() != dims()) {
        throw error(errc::dimension_mismatch, "row '" + label + "' has " +
                                                  std::to_string(values.size()) + " values, expected " +
                                                  std::to_string(dims()));
    }
    const auto id = static_cast<point_id>(labels_.size());
    if (!by_label_.emplace(label, id).second) {
        throw error(errc::duplicate_id, "id '" + label + "' appears twice");
    }
    labels_.push_back(std::move(label));
    values_.insert(values_.end(), values.begin(), values.end());
    return id;
}

std::optional<std::size_t> dataset::dimension(std::string_view name) const
{
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<point_id> dataset::find_label(std::string_view label) const
{
    auto it = by_label_.find(std::string(label));
    if (it == by_label_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<point2> dataset::project(std::size_t x_dim, std::size_t y_dim) const
{
    std::vector<point2> out;
    out.reserve(size());
    for (point_id id = 0; id < size(); ++id) {
        out.push_back({id, value(id, x_dim), value(id, y_dim)});
    }
    return out;
}

void dataset::reindex()
{
    by_label_.clear();
    by_label_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        by_label_.emplace(labels_[i], static_cast<point_id>(i));
    }
}

dataset read_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> comments;
    std::optional<dataset> data;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) {
            continue;
        }
        if (view.front() == '#') {
            std::string_view text = view.substr(1);
            if (!text.empty() && text.front() == ' ') {
                text.remove_prefix(1);
            }
            comments.emplace_back(text);
            continue;
        }
        const auto fields = split_fields(view);
        if (!data) {
            if (fields.size() < 2) {
                throw error(errc::parse_error, "header needs an id column and at least one dimension");
            }
            std::vector<std::string> names;
            for (std::size_t i = 1; i < fields.size(); ++i) {
                const auto name = trim(fields[i]);
                if (name.empty()) {
                    throw error(errc::parse_error, "empty dimension name in header");
                }
                names.emplace_back(name);
            }
            data.emplace(std::move(names));
            continue;
        }
        if (fields.size() != data->dims() + 1) {
            throw error(errc::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(data->dims() + 1) + " fields");
        }
        const auto label = trim(fields[0]);
        if (label.empty()) {
            throw error(errc::parse_error, "line " + std::to_string(line_no) + ": empty id");
        }
        row.clear();
        for (std::size_t i = 1; i < fields.size(); ++i) {
            row.push_back(parse_value(fields[i], line_no));
        }
        data->add(std::string(label), row);
    }
    if (!data) {
        throw error(errc::parse_error, "missing header line");
    }
    for (auto& c : comments) {
        data->add_comment(std::move(c));
    }
    return std::move(*data);
}

dataset load_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    return read_csv(in);
}

std::string format_double(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_csv(std::ostream& out, const dataset& data)
{
    for (const auto& c : data.comments()) {
        out << "# " << c << '\n';
    }
    out << "id";
    for (const auto& n : data.names()) {
        out << ',' << n;
    }
    out << '\n';
    for (point_id id = 0; id < data.size(); ++id) {
        out << data.label(id);
        for (double v : data.row(id)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const dataset& data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error(errc::io_error, "cannot write " + path.string());
    }
    write_csv(out, data);
    if (!out) {
        throw error(errc::io_error, "write failed for " + path.string());
    }
}

}  // namespace sdindex
