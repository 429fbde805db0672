#include <sdindex/top1_index.hpp>

#include <sdindex/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace sdindex {

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

template <class Item>
bool sweeps_before(const Item& a, const Item& b) noexcept
{
    return a.key > b.key || (a.key == b.key && a.id < b.id);
}

}  // namespace

top1_index::top1_index(double slope) : slope_(slope)
{
    if (!(slope >= 0.0) || !std::isfinite(slope)) {
        throw error(errc::invalid_argument, "top-1 index slope must be finite and >= 0");
    }
}

top1_index top1_index::build(std::span<const point2> points, double slope)
{
    if (points.empty()) {
        throw error(errc::empty_dataset, "cannot build a top-1 index over no points");
    }
    top1_index idx(slope);
    idx.points_.reserve(points.size());
    for (const point2& p : points) {
        if (!idx.points_.emplace(p.id, p).second) {
            throw error(errc::duplicate_id, "point id " + std::to_string(p.id));
        }
    }
    for (side s : {side::lower, side::upper}) {
        auto& list = idx.state(s).list;
        list.reserve(points.size());
        for (const point2& p : points) {
            list.push_back(idx.item_for(s, p));
        }
        std::sort(list.begin(), list.end(), sweeps_before<sweep_item>);
        idx.sweep_all(s);
    }
    idx.merge_cells();
    return idx;
}

const point2& top1_index::point(point_id id) const
{
    auto it = points_.find(id);
    if (it == points_.end()) {
        throw error(errc::not_found, "point id " + std::to_string(id));
    }
    return it->second;
}

top1_index::sweep_item top1_index::item_for(side s, const point2& p) const noexcept
{
    if (s == side::lower) {
        return {intercept_value(p, projection_kind::llp, slope_), p.id};
    }
    return {-intercept_value(p, projection_kind::lup, slope_), p.id};
}

std::optional<double> top1_index::cut(side s, const point2& provider,
                                      const point2& candidate) const noexcept
{
    const projection_kind right = s == side::lower ? projection_kind::rlp : projection_kind::rup;
    const projection_kind left = s == side::lower ? projection_kind::llp : projection_kind::lup;
    const auto hit = ray_intersection({provider, right, slope_}, {candidate, left, slope_});
    if (!hit) {
        return std::nullopt;
    }
    // Candidate sitting on the provider's right ray only ties it from there on.
    if (intercept_value(candidate, right, slope_) == intercept_value(provider, right, slope_) &&
        candidate.id > provider.id) {
        return std::nullopt;
    }
    return hit->x;
}

void top1_index::sweep_all(side s)
{
    sweep_state& st = state(s);
    st.envelope.clear();
    if (st.list.empty()) {
        return;
    }
    const point2* provider = &points_.at(st.list.front().id);
    for (std::size_t i = 1; i < st.list.size(); ++i) {
        const point2& candidate = points_.at(st.list[i].id);
        if (const auto x = cut(s, *provider, candidate)) {
            st.envelope.push_back({provider->id, *x});
            provider = &candidate;
        }
    }
    st.envelope.push_back({provider->id, infinity});
}

// Re-runs the sweep from the last provider that precedes `changed` in sweep order
// and stops as soon as it switches to a provider of the old envelope that follows
// `changed`; from there on the old envelope is still valid.
void top1_index::resweep(side s, const sweep_item& changed, std::optional<point_id> removed)
{
    sweep_state& st = state(s);
    const std::vector<envelope_entry> old = std::move(st.envelope);
    st.envelope.clear();
    if (st.list.empty()) {
        return;
    }

    std::ptrdiff_t last_before = -1;
    for (std::size_t i = 0; i < old.size(); ++i) {
        if (removed && old[i].provider == *removed) {
            break;
        }
        if (!sweeps_before(item_for(s, points_.at(old[i].provider)), changed)) {
            break;
        }
        last_before = static_cast<std::ptrdiff_t>(i);
    }

    const point2* provider = nullptr;
    std::size_t pos = 0;
    if (last_before < 0) {
        provider = &points_.at(st.list.front().id);
        pos = 1;
    } else {
        const auto j = static_cast<std::size_t>(last_before);
        st.envelope.assign(old.begin(), old.begin() + last_before);
        provider = &points_.at(old[j].provider);
        const sweep_item key = item_for(s, *provider);
        pos = static_cast<std::size_t>(
            std::upper_bound(st.list.begin(), st.list.end(), key, sweeps_before<sweep_item>) -
            st.list.begin());
    }

    std::unordered_map<point_id, std::size_t> tail;
    for (std::size_t i = static_cast<std::size_t>(last_before + 1); i < old.size(); ++i) {
        if (!removed || old[i].provider != *removed) {
            tail.emplace(old[i].provider, i);
        }
    }

    for (; pos < st.list.size(); ++pos) {
        const point2& candidate = points_.at(st.list[pos].id);
        const auto x = cut(s, *provider, candidate);
        if (!x) {
            continue;
        }
        st.envelope.push_back({provider->id, *x});
        provider = &candidate;
        if (auto it = tail.find(candidate.id); it != tail.end()) {
            st.envelope.insert(st.envelope.end(),
                               old.begin() + static_cast<std::ptrdiff_t>(it->second), old.end());
            return;
        }
    }
    st.envelope.push_back({provider->id, infinity});
}

void top1_index::merge_cells()
{
    cells_.clear();
    if (lower_.envelope.empty()) {
        return;
    }
    const auto& lo = lower_.envelope;
    const auto& up = upper_.envelope;
    std::size_t i = 0;
    std::size_t j = 0;
    double prev = -infinity;
    for (;;) {
        const double b = std::min(lo[i].boundary, up[j].boundary);
        if (b > prev) {
            cells_.push_back({b, lo[i].provider, up[j].provider});
            prev = b;
        }
        if (b == infinity) {
            break;
        }
        while (lo[i].boundary <= b) {
            ++i;
        }
        while (up[j].boundary <= b) {
            ++j;
        }
    }
}

scored top1_index::query(const query2& q) const
{
    const double s = projection_slope(q.weights);
    if (s != slope_) {
        throw error(errc::wrong_slope, "query slope differs from the top-1 build slope");
    }
    if (cells_.empty()) {
        throw error(errc::empty_dataset, "top-1 index is empty");
    }
    auto it = std::upper_bound(cells_.begin(), cells_.end(), q.x,
                               [](double x, const region_cell& c) { return x < c.boundary_x; });
    // The last cell ends at +inf, so `it` is always valid for finite x.
    if (it == cells_.end()) {
        --it;
    }

    std::optional<scored> best;
    auto consider = [&](const std::optional<point_id>& id) {
        if (!id) {
            return;
        }
        const scored cand{*id, sd_score_2d(points_.at(*id), q)};
        if (!best || ranks_before(cand, *best)) {
            best = cand;
        }
    };
    consider(it->lower_provider);
    consider(it->upper_provider);
    // On an exact boundary every provider whose closed interval touches q.x ties,
    // including zero-width ones that never made it into a cell.
    if (it != cells_.begin() && std::prev(it)->boundary_x == q.x) {
        for (const auto* env : {&lower_.envelope, &upper_.envelope}) {
            auto e = std::lower_bound(env->begin(), env->end(), q.x,
                                      [](const envelope_entry& a, double x) { return a.boundary < x; });
            for (; e != env->end() && e->boundary == q.x; ++e) {
                consider(e->provider);
            }
        }
    }
    return *best;
}

bool top1_index::dominated(side s, const point2& p) const
{
    const auto& env = s == side::lower ? lower_.envelope : upper_.envelope;
    auto it = std::upper_bound(env.begin(), env.end(), p.x,
                               [](double x, const envelope_entry& e) { return x < e.boundary; });
    if (it == env.end()) {
        --it;
    }
    const point2& provider = points_.at(it->provider);
    const double offset = slope_ * std::abs(p.x - provider.x);
    return s == side::lower ? p.y < provider.y - offset : p.y > provider.y + offset;
}

void top1_index::insert(const point2& p)
{
    if (points_.contains(p.id)) {
        throw error(errc::duplicate_id, "point id " + std::to_string(p.id));
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw error(errc::invalid_argument, "coordinates must be finite");
    }
    std::array<bool, 2> affected{};
    for (side s : {side::lower, side::upper}) {
        affected[static_cast<std::size_t>(s)] = state(s).envelope.empty() || !dominated(s, p);
    }
    points_.emplace(p.id, p);
    for (side s : {side::lower, side::upper}) {
        auto& list = state(s).list;
        const sweep_item item = item_for(s, p);
        list.insert(std::upper_bound(list.begin(), list.end(), item, sweeps_before<sweep_item>),
                    item);
        if (affected[static_cast<std::size_t>(s)]) {
            resweep(s, item, std::nullopt);
        }
    }
    merge_cells();
}

void top1_index::erase(point_id id)
{
    auto found = points_.find(id);
    if (found == points_.end()) {
        throw error(errc::not_found, "point id " + std::to_string(id));
    }
    const point2 p = found->second;
    bool changed = false;
    for (side s : {side::lower, side::upper}) {
        sweep_state& st = state(s);
        const sweep_item item = item_for(s, p);
        auto it = std::lower_bound(st.list.begin(), st.list.end(), item, sweeps_before<sweep_item>);
        st.list.erase(it);
        const bool provider = std::any_of(st.envelope.begin(), st.envelope.end(),
                                          [&](const envelope_entry& e) { return e.provider == id; });
        if (provider) {
            if (st.list.empty()) {
                st.envelope.clear();
            } else {
                resweep(s, item, id);
            }
            changed = true;
        }
    }
    points_.erase(found);
    if (changed) {
        merge_cells();
    }
}

}  // namespace sdindex
