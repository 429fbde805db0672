#pragma once

#include <compare>
#include <cstdint>
#include <optional>

namespace sdindex {

using point_id = std::uint32_t;

/// A 2D point: x is the attractive coordinate, y the repulsive one.
struct point2 {
    point_id id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const point2&, const point2&) = default;

    template <class Archive>
    void serialize(Archive& ar)
    {
        ar(id, x, y);
    }
};

struct weights2 {
    double alpha = 1.0;  // repulsive (y)
    double beta = 1.0;   // attractive (x)

    friend bool operator==(const weights2&, const weights2&) = default;
};

struct query2 {
    double x = 0.0;
    double y = 0.0;
    weights2 weights{};
};

/// The four projection rays leaving a point: left/right lower, left/right upper.
enum class projection_kind : std::uint8_t { llp = 0, rlp = 1, lup = 2, rup = 3 };

inline constexpr projection_kind all_kinds[4] = {
    projection_kind::llp, projection_kind::rlp, projection_kind::lup, projection_kind::rup};

[[nodiscard]] constexpr std::size_t kind_index(projection_kind k) noexcept
{
    return static_cast<std::size_t>(k);
}

[[nodiscard]] constexpr bool is_lower(projection_kind k) noexcept
{
    return k == projection_kind::llp || k == projection_kind::rlp;
}
[[nodiscard]] constexpr bool is_upper(projection_kind k) noexcept { return !is_lower(k); }
[[nodiscard]] constexpr bool is_left(projection_kind k) noexcept
{
    return k == projection_kind::llp || k == projection_kind::lup;
}
[[nodiscard]] constexpr bool is_right(projection_kind k) noexcept { return !is_left(k); }
[[nodiscard]] const char* to_string(projection_kind k) noexcept;

/// A projection ray. `slope` is the magnitude tan(theta) = beta / alpha.
struct projection_ray {
    point2 origin{};
    projection_kind kind = projection_kind::llp;
    double slope = 1.0;
};

/// Value of a ray's supporting line at the reference line x = 0. Parallel rays
/// keep this order at every vertical line they both reach.
struct intercept {
    double value = 0.0;

    friend auto operator<=>(const intercept&, const intercept&) = default;
};

struct xy {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const xy&, const xy&) = default;
};

/// alpha * |y_p - y_q| - beta * |x_p - x_q|
[[nodiscard]] double sd_score_2d(const point2& p, const query2& q) noexcept;

/// Projection angle in degrees, arctan(beta / alpha); 90 when alpha == 0.
/// Throws error(invalid_weights) when both weights are zero or any is negative.
[[nodiscard]] double projection_angle(const weights2& w);

/// beta / alpha. Throws error(invalid_weights) unless alpha > 0 and beta >= 0.
[[nodiscard]] double projection_slope(const weights2& w);

/// tan(degrees) with 0 and 45 mapped exactly onto 0 and 1. Valid for [0, 90).
[[nodiscard]] double slope_for_angle(double degrees);

/// Which of the four rays of p is the isoline through q's axis.
[[nodiscard]] projection_kind select_projection(const point2& p, const query2& q) noexcept;

/// y-value where the ray of `kind` from p meets the vertical line x = axis_x.
/// Throws error(no_intersection) when the ray points away from the axis.
[[nodiscard]] double project_onto_axis(const point2& p, projection_kind kind, double slope,
                                       double axis_x);

/// SD-score recovered from the signed offset between p's projected point and q.
[[nodiscard]] double score_from_projection(const point2& p, const query2& q);

/// Slope of the supporting line in the (x, y) plane: +s for llp/rup, -s for rlp/lup.
[[nodiscard]] constexpr double line_gradient(projection_kind k, double slope) noexcept
{
    return (k == projection_kind::llp || k == projection_kind::rup) ? slope : -slope;
}

[[nodiscard]] inline double intercept_value(const point2& p, projection_kind k,
                                            double slope) noexcept
{
    return p.y - line_gradient(k, slope) * p.x;
}

[[nodiscard]] intercept intercept_at_reference(const projection_ray& r) noexcept;

/// Crossing point of two rays, present only if it lies on both (rays end at their
/// origins). Parallel rays never cross.
[[nodiscard]] std::optional<xy> ray_intersection(const projection_ray& r1,
                                                 const projection_ray& r2) noexcept;

}  // namespace sdindex
