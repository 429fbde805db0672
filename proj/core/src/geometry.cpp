#include <sdindex/geometry.hpp>

#include <sdindex/error.hpp>

#include <cmath>
#include <numbers>

namespace sdindex {

const char* to_string(errc code) noexcept
{
    switch (code) {
    case errc::invalid_weights: return "invalid weights";
    case errc::no_intersection: return "no intersection";
    case errc::empty_dataset: return "empty dataset";
    case errc::wrong_slope: return "wrong slope";
    case errc::duplicate_id: return "duplicate id";
    case errc::not_found: return "not found";
    case errc::invalid_k: return "invalid k";
    case errc::dimension_mismatch: return "dimension mismatch";
    case errc::invalid_spec: return "invalid query spec";
    case errc::invalid_argument: return "invalid argument";
    case errc::parse_error: return "parse error";
    case errc::io_error: return "i/o error";
    }
    return "unknown error";
}

const char* to_string(projection_kind k) noexcept
{
    switch (k) {
    case projection_kind::llp: return "llp";
    case projection_kind::rlp: return "rlp";
    case projection_kind::lup: return "lup";
    case projection_kind::rup: return "rup";
    }
    return "?";
}

double sd_score_2d(const point2& p, const query2& q) noexcept
{
    return q.weights.alpha * std::abs(p.y - q.y) - q.weights.beta * std::abs(p.x - q.x);
}

double projection_angle(const weights2& w)
{
    if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || (w.alpha == 0.0 && w.beta == 0.0)) {
        throw error(errc::invalid_weights, "weights must be non-negative and not both zero");
    }
    if (w.alpha == 0.0) {
        return 90.0;
    }
    return std::atan(w.beta / w.alpha) * 180.0 / std::numbers::pi;
}

double projection_slope(const weights2& w)
{
    if (!(w.alpha > 0.0) || !(w.beta >= 0.0) || !std::isfinite(w.alpha) ||
        !std::isfinite(w.beta)) {
        throw error(errc::invalid_weights, "projection needs alpha > 0 and beta >= 0");
    }
    return w.beta / w.alpha;
}

double slope_for_angle(double degrees)
{
    if (!(degrees >= 0.0) || !(degrees < 90.0)) {
        throw error(errc::invalid_argument, "indexed angles must lie in [0, 90)");
    }
    if (degrees == 0.0) {
        return 0.0;
    }
    if (degrees == 45.0) {
        return 1.0;
    }
    return std::tan(degrees * std::numbers::pi / 180.0);
}

projection_kind select_projection(const point2& p, const query2& q) noexcept
{
    const bool below = p.y < q.y;
    if (p.x >= q.x) {
        return below ? projection_kind::lup : projection_kind::llp;
    }
    return below ? projection_kind::rup : projection_kind::rlp;
}

double project_onto_axis(const point2& p, projection_kind kind, double slope, double axis_x)
{
    if (is_left(kind) ? axis_x > p.x : axis_x < p.x) {
        throw error(errc::no_intersection, "projection does not reach the axis");
    }
    const double offset = slope * std::abs(axis_x - p.x);
    return is_lower(kind) ? p.y - offset : p.y + offset;
}

double score_from_projection(const point2& p, const query2& q)
{
    const double slope = projection_slope(q.weights);
    const projection_kind kind = select_projection(p, q);
    const double projected = project_onto_axis(p, kind, slope, q.x);
    return is_lower(kind) ? q.weights.alpha * (projected - q.y)
                          : q.weights.alpha * (q.y - projected);
}

intercept intercept_at_reference(const projection_ray& r) noexcept
{
    return intercept{intercept_value(r.origin, r.kind, r.slope)};
}

namespace {

bool reaches(const projection_ray& r, double x) noexcept
{
    return is_left(r.kind) ? x <= r.origin.x : x >= r.origin.x;
}

}  // namespace

std::optional<xy> ray_intersection(const projection_ray& r1, const projection_ray& r2) noexcept
{
    const double m1 = line_gradient(r1.kind, r1.slope);
    const double m2 = line_gradient(r2.kind, r2.slope);
    if (m1 == m2) {
        return std::nullopt;
    }
    const double a1 = intercept_value(r1.origin, r1.kind, r1.slope);
    const double a2 = intercept_value(r2.origin, r2.kind, r2.slope);
    const double x = (a2 - a1) / (m1 - m2);
    if (!std::isfinite(x) || !reaches(r1, x) || !reaches(r2, x)) {
        return std::nullopt;
    }
    return xy{x, a1 + m1 * x};
}

}  // namespace sdindex
