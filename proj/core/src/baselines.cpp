#include <sdindex/baselines.hpp>

#include <sdindex/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sdindex {

std::vector<scored> scan_topk(const dataset& data, const query_spec& spec)
{
    validate(spec, data.dims());
    topk_collector best(spec.k);
    for (point_id id = 0; id < data.size(); ++id) {
        best.offer({id, sd_score_nd(data.row(id), spec)});
    }
    return best.sorted();
}

ta_index::ta_index(const dataset& data)
{
    columns_.reserve(data.dims());
    std::vector<column_entry> entries;
    for (std::size_t d = 0; d < data.dims(); ++d) {
        entries.clear();
        entries.reserve(data.size());
        for (point_id id = 0; id < data.size(); ++id) {
            entries.push_back({data.value(id, d), id});
        }
        columns_.emplace_back(entries);
    }
}

solve_result ta_index::topk(const dataset& data, const query_spec& spec) const
{
    validate(spec, data.dims());
    const std::size_t paired = std::min(spec.repulsive.size(), spec.attractive.size());
    std::vector<column_cursor> rep;
    std::vector<column_cursor> att;
    for (std::size_t d : spec.repulsive) {
        rep.emplace_back(columns_[d], spec.coords[d], stream_mode::repulsive);
    }
    for (std::size_t d : spec.attractive) {
        att.emplace_back(columns_[d], spec.coords[d], stream_mode::attractive);
    }

    solve_result out;
    topk_collector best(spec.k);
    seen_ids seen(data.size());
    std::vector<double> rep_dist(rep.size());
    std::vector<double> att_dist(att.size());
    for (;;) {
        ++out.iterations;
        bool exhausted = false;
        auto pull = [&](column_cursor& cur, double& dist) {
            if (const auto hit = cur.next()) {
                dist = hit->distance;
                if (seen.insert(hit->id)) {
                    best.offer({hit->id, sd_score_nd(data.row(hit->id), spec)});
                }
            } else {
                exhausted = true;
            }
        };
        for (std::size_t i = 0; i < rep.size(); ++i) {
            pull(rep[i], rep_dist[i]);
        }
        for (std::size_t i = 0; i < att.size(); ++i) {
            pull(att[i], att_dist[i]);
        }
        // Same term order as sd_score_nd, so the bound is exact in floating point.
        double threshold = 0.0;
        for (std::size_t i = 0; i < paired; ++i) {
            threshold += spec.alpha[i] * rep_dist[i] - spec.beta[i] * att_dist[i];
        }
        for (std::size_t i = paired; i < rep.size(); ++i) {
            threshold += spec.alpha[i] * rep_dist[i];
        }
        for (std::size_t i = paired; i < att.size(); ++i) {
            threshold -= spec.beta[i] * att_dist[i];
        }
        if (exhausted) {
            threshold = -std::numeric_limits<double>::infinity();
        }
        out.thresholds.push_back(threshold);
        if (exhausted || threshold_reached(best, threshold, seen)) {
            break;
        }
    }
    out.ranked = best.sorted();
    return out;
}

const char* to_string(distribution d) noexcept
{
    switch (d) {
    case distribution::uniform: return "uniform";
    case distribution::correlated: return "correlated";
    case distribution::anticorrelated: return "anticorrelated";
    }
    return "?";
}

distribution parse_distribution(std::string_view name)
{
    for (distribution d :
         {distribution::uniform, distribution::correlated, distribution::anticorrelated}) {
        if (name == to_string(d)) {
            return d;
        }
    }
    throw error(errc::invalid_argument, "unknown distribution '" + std::string(name) + "'");
}

double unit_uniform(random_engine& rng) noexcept
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(random_engine& rng) noexcept
{
    const double u1 = 1.0 - unit_uniform(rng);  // (0, 1], keeps log finite
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

dataset generate(const generator_params& params)
{
    if (params.n < 1 || params.dims < 1) {
        throw error(errc::invalid_argument, "need n >= 1 and dims >= 1");
    }
    if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma)) {
        throw error(errc::invalid_argument, "sigma must be finite and >= 0");
    }
    std::vector<std::string> names;
    for (std::size_t d = 0; d < params.dims; ++d) {
        names.push_back("d" + std::to_string(d));
    }
    dataset data(std::move(names));
    data.add_comment("generator=" + std::string(random_engine_name) +
                     " dist=" + to_string(params.dist) + " n=" + std::to_string(params.n) +
                     " dims=" + std::to_string(params.dims) + " sigma=" +
                     format_double(params.sigma) + " seed=" + std::to_string(params.seed));

    random_engine rng(params.seed);
    auto jitter = [&](double v) {
        if (params.sigma == 0.0) {
            return v;
        }
        return std::clamp(v + params.sigma * standard_normal(rng), 0.0, 1.0);
    };
    std::vector<double> row(params.dims);
    for (std::size_t i = 0; i < params.n; ++i) {
        if (params.dist == distribution::uniform) {
            for (double& v : row) {
                v = unit_uniform(rng);
            }
        } else {
            const double t = unit_uniform(rng);
            for (std::size_t d = 0; d < params.dims; ++d) {
                const bool flip = params.dist == distribution::anticorrelated && d % 2 == 1;
                row[d] = jitter(flip ? 1.0 - t : t);
            }
        }
        data.add(std::to_string(i), row);
    }
    return data;
}

dimension_roles default_roles(std::size_t dims)
{
    dimension_roles roles;
    const std::size_t half = (dims + 1) / 2;
    for (std::size_t d = 0; d < dims; ++d) {
        (d < half ? roles.repulsive : roles.attractive).push_back(d);
    }
    return roles;
}

query_spec random_query(random_engine& rng, std::size_t dims, const dimension_roles& roles,
                        std::size_t k)
{
    query_spec spec;
    spec.k = k;
    spec.repulsive = roles.repulsive;
    spec.attractive = roles.attractive;
    for (std::size_t d = 0; d < dims; ++d) {
        spec.coords.push_back(unit_uniform(rng));
    }
    for (std::size_t i = 0; i < roles.repulsive.size(); ++i) {
        spec.alpha.push_back(1.0 - unit_uniform(rng));
    }
    for (std::size_t i = 0; i < roles.attractive.size(); ++i) {
        spec.beta.push_back(1.0 - unit_uniform(rng));
    }
    return spec;
}

}  // namespace sdindex
