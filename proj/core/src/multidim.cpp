#include <sdindex/multidim.hpp>

#include <sdindex/baselines.hpp>
#include <sdindex/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdindex {

namespace {

constexpr double minus_infinity = -std::numeric_limits<double>::infinity();

bool same_set(std::vector<std::size_t> a, std::vector<std::size_t> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

void check_roles(std::span<const std::size_t> repulsive, std::span<const std::size_t> attractive,
                 std::size_t dims)
{
    if (repulsive.empty() && attractive.empty()) {
        throw error(errc::invalid_spec, "no repulsive or attractive dimension given");
    }
    std::vector<bool> used(dims, false);
    for (auto list : {repulsive, attractive}) {
        for (std::size_t d : list) {
            if (d >= dims) {
                throw error(errc::invalid_spec, "dimension " + std::to_string(d) + " out of range");
            }
            if (used[d]) {
                throw error(errc::invalid_spec,
                            "dimension " + std::to_string(d) + " listed more than once");
            }
            used[d] = true;
        }
    }
}

std::size_t position_of(const std::vector<std::size_t>& list, std::size_t d)
{
    return static_cast<std::size_t>(std::find(list.begin(), list.end(), d) - list.begin());
}

solve_result scan_result(const dataset& data, const query_spec& spec)
{
    solve_result out;
    out.ranked = scan_topk(data, spec);
    out.used_scan = true;
    return out;
}

}  // namespace

void validate(const query_spec& spec, std::size_t dims)
{
    if (spec.coords.size() != dims) {
        throw error(errc::dimension_mismatch, "query has " + std::to_string(spec.coords.size()) +
                                                  " coordinates, dataset has " + std::to_string(dims));
    }
    if (spec.k < 1) {
        throw error(errc::invalid_k, "k must be >= 1");
    }
    check_roles(spec.repulsive, spec.attractive, dims);
    if (spec.alpha.size() != spec.repulsive.size() || spec.beta.size() != spec.attractive.size()) {
        throw error(errc::invalid_spec, "need exactly one weight per listed dimension");
    }
    for (const auto* list : {&spec.alpha, &spec.beta}) {
        for (double w : *list) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw error(errc::invalid_spec, "weights must be positive and finite");
            }
        }
    }
    for (double c : spec.coords) {
        if (!std::isfinite(c)) {
            throw error(errc::invalid_spec, "query coordinates must be finite");
        }
    }
}

double sd_score_nd(std::span<const double> row, const query_spec& spec)
{
    const auto& q = spec.coords;
    const std::size_t paired = std::min(spec.repulsive.size(), spec.attractive.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < paired; ++i) {
        const std::size_t r = spec.repulsive[i];
        const std::size_t a = spec.attractive[i];
        acc += spec.alpha[i] * std::abs(row[r] - q[r]) - spec.beta[i] * std::abs(row[a] - q[a]);
    }
    for (std::size_t i = paired; i < spec.repulsive.size(); ++i) {
        const std::size_t r = spec.repulsive[i];
        acc += spec.alpha[i] * std::abs(row[r] - q[r]);
    }
    for (std::size_t i = paired; i < spec.attractive.size(); ++i) {
        const std::size_t a = spec.attractive[i];
        acc -= spec.beta[i] * std::abs(row[a] - q[a]);
    }
    return acc;
}

pairing pair_dimensions(std::span<const std::size_t> repulsive,
                        std::span<const std::size_t> attractive)
{
    pairing out;
    const std::size_t paired = std::min(repulsive.size(), attractive.size());
    for (std::size_t i = 0; i < paired; ++i) {
        out.pairs.push_back({repulsive[i], attractive[i]});
    }
    out.residual_repulsive.assign(repulsive.begin() + static_cast<std::ptrdiff_t>(paired),
                                  repulsive.end());
    out.residual_attractive.assign(attractive.begin() + static_cast<std::ptrdiff_t>(paired),
                                   attractive.end());
    return out;
}

pairing pair_dimensions(std::span<const std::size_t> repulsive,
                        std::span<const std::size_t> attractive,
                        std::span<const dimension_pair> explicit_pairs)
{
    if (explicit_pairs.empty()) {
        return pair_dimensions(repulsive, attractive);
    }
    if (explicit_pairs.size() != std::min(repulsive.size(), attractive.size())) {
        throw error(errc::invalid_spec, "explicit pairing must pair min(|repulsive|, |attractive|) "
                                        "dimensions");
    }
    pairing out;
    std::vector<std::size_t> rest_r(repulsive.begin(), repulsive.end());
    std::vector<std::size_t> rest_a(attractive.begin(), attractive.end());
    for (const dimension_pair& p : explicit_pairs) {
        auto r = std::find(rest_r.begin(), rest_r.end(), p.repulsive);
        auto a = std::find(rest_a.begin(), rest_a.end(), p.attractive);
        if (r == rest_r.end() || a == rest_a.end()) {
            throw error(errc::invalid_spec, "explicit pair (" + std::to_string(p.repulsive) + ", " +
                                                std::to_string(p.attractive) +
                                                ") is not a free repulsive/attractive pair");
        }
        rest_r.erase(r);
        rest_a.erase(a);
        out.pairs.push_back(p);
    }
    out.residual_repulsive = std::move(rest_r);
    out.residual_attractive = std::move(rest_a);
    return out;
}

// ---- multidim_index ---------------------------------------------------------

multidim_index multidim_index::build(dataset data, index_schema schema, tree_config cfg)
{
    if (data.empty()) {
        throw error(errc::empty_dataset, "cannot index an empty dataset");
    }
    check_roles(schema.repulsive, schema.attractive, data.dims());
    multidim_index idx;
    idx.pairing_ = pair_dimensions(schema.repulsive, schema.attractive, schema.explicit_pairs);
    idx.config_ = cfg;
    for (const dimension_pair& p : idx.pairing_.pairs) {
        const std::vector<point2> pts = data.project(p.attractive, p.repulsive);
        idx.trees_.push_back(projection_tree::build(pts, cfg));
        idx.top1_.push_back(top1_index::build(pts, 1.0));
    }
    auto add_column = [&](std::size_t d) {
        std::vector<column_entry> entries;
        entries.reserve(data.size());
        for (point_id id = 0; id < data.size(); ++id) {
            entries.push_back({data.value(id, d), id});
        }
        idx.columns_.emplace_back(std::move(entries));
    };
    for (std::size_t d : idx.pairing_.residual_repulsive) {
        add_column(d);
    }
    for (std::size_t d : idx.pairing_.residual_attractive) {
        add_column(d);
    }
    idx.config_ = idx.trees_.empty() ? projection_tree(cfg).config() : idx.trees_.front().config();
    idx.data_ = std::move(data);
    idx.schema_ = std::move(schema);
    return idx;
}

bool multidim_index::matches_schema(const query_spec& spec) const
{
    return same_set(spec.repulsive, schema_.repulsive) &&
           same_set(spec.attractive, schema_.attractive);
}

query_spec multidim_index::canonical(const query_spec& spec) const
{
    query_spec c;
    c.coords = spec.coords;
    c.k = spec.k;
    auto add_r = [&](std::size_t d) {
        c.repulsive.push_back(d);
        c.alpha.push_back(spec.alpha[position_of(spec.repulsive, d)]);
    };
    auto add_a = [&](std::size_t d) {
        c.attractive.push_back(d);
        c.beta.push_back(spec.beta[position_of(spec.attractive, d)]);
    };
    for (const dimension_pair& p : pairing_.pairs) {
        add_r(p.repulsive);
        add_a(p.attractive);
    }
    for (std::size_t d : pairing_.residual_repulsive) {
        add_r(d);
    }
    for (std::size_t d : pairing_.residual_attractive) {
        add_a(d);
    }
    return c;
}

solve_result multidim_index::solve(const query_spec& spec) const
{
    validate(spec, data_.dims());
    if (!matches_schema(spec)) {
        return scan_result(data_, spec);
    }
    const query_spec c = canonical(spec);
    const std::size_t n_pairs = pairing_.pairs.size();

    std::vector<query2> pair_queries;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const dimension_pair& p = pairing_.pairs[i];
        const query2 q{c.coords[p.attractive], c.coords[p.repulsive], {c.alpha[i], c.beta[i]}};
        if (!trees_[i].can_answer(q.weights)) {
            return scan_result(data_, spec);
        }
        pair_queries.push_back(q);
    }

    solve_result out;
    auto finish = [&](std::vector<scored> ranked) {
        for (scored& s : ranked) {
            s.score = sd_score_nd(data_.row(s.id), spec);
        }
        std::sort(ranked.begin(), ranked.end(), ranks_before);
        out.ranked = std::move(ranked);
        return out;
    };

    // A single pair without residuals is answered by its tree directly.
    if (n_pairs == 1 && columns_.empty()) {
        out.iterations = 1;
        if (spec.k == 1 && c.alpha[0] == c.beta[0]) {
            return finish({top1_[0].query(pair_queries[0])});
        }
        return finish(trees_[0].query_topk_arbitrary(pair_queries[0], spec.k));
    }

    std::vector<pair_stream> pair_streams;
    pair_streams.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        pair_streams.emplace_back(trees_[i], pair_queries[i]);
    }
    const std::size_t n_rep = pairing_.residual_repulsive.size();
    std::vector<column_cursor> cursors;
    std::vector<double> weights;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        const bool repulsive = j < n_rep;
        const std::size_t d = repulsive ? pairing_.residual_repulsive[j]
                                        : pairing_.residual_attractive[j - n_rep];
        cursors.emplace_back(columns_[j], c.coords[d],
                             repulsive ? stream_mode::repulsive : stream_mode::attractive);
        weights.push_back(repulsive ? c.alpha[n_pairs + j] : c.beta[n_pairs + (j - n_rep)]);
    }

    topk_collector best(spec.k);
    seen_ids seen(data_.size());
    auto visit = [&](point_id id) {
        if (seen.insert(id)) {
            best.offer({id, sd_score_nd(data_.row(id), c)});
        }
    };

    for (;;) {
        ++out.iterations;
        bool exhausted = false;
        double threshold = 0.0;
        for (auto& s : pair_streams) {
            if (const auto hit = s.next()) {
                visit(hit->id);
                threshold += hit->score;
            } else {
                exhausted = true;
            }
        }
        for (std::size_t j = 0; j < cursors.size(); ++j) {
            if (const auto hit = cursors[j].next()) {
                visit(hit->id);
                if (j < n_rep) {
                    threshold += weights[j] * hit->distance;
                } else {
                    threshold -= weights[j] * hit->distance;
                }
            } else {
                exhausted = true;
            }
        }
        if (exhausted) {
            threshold = minus_infinity;
        }
        out.thresholds.push_back(threshold);
        if (exhausted || threshold_reached(best, threshold, seen)) {
            break;
        }
    }
    return finish(best.sorted());
}

}  // namespace sdindex
