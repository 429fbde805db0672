#include <doctest.h>

#include <sdindex/error.hpp>
#include <sdindex/projection_tree.hpp>
#include <sdindex/snapshot.hpp>

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace sdindex;

namespace {

void require_same(const std::vector<scored>& got, const std::vector<scored>& want)
{
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(got[i].score == want[i].score);
    }
}

tree_config small_config(std::size_t b)
{
    tree_config cfg;
    cfg.branching = b;
    return cfg;
}

}  // namespace

TEST_CASE("single point tree is one leaf carrying its own intercepts")
{
    const std::vector<point2> pts{{7, 2.0, 3.0}};
    const auto t = projection_tree::build(pts);
    CHECK(is_leaf(t.root()));
    CHECK(t.height() == 0);
    for (std::size_t a = 0; a < t.angle_count(); ++a) {
        for (projection_kind k : all_kinds) {
            const auto b = t.bound(t.root(), a, k);
            CHECK(b.id == 7);
            CHECK(b.key == oriented_key(pts[0], k, t.slopes()[a]));
        }
    }
    const query2 q{0.0, 0.0, {1.0, 1.0}};
    const auto r = t.query_topk_arbitrary(q, 3);
    REQUIRE(r.size() == 1);
    CHECK(r[0].score == sd_score_2d(pts[0], q));
}

TEST_CASE("empty input and bad configuration are rejected")
{
    CHECK_THROWS_AS((void)projection_tree::build(std::vector<point2>{}), error);
    tree_config bad;
    bad.branching = 1;
    CHECK_THROWS_AS(projection_tree{bad}, error);
    bad = {};
    bad.angles = {45.0, 23.0};
    CHECK_THROWS_AS(projection_tree{bad}, error);
    bad.angles = {90.0};
    CHECK_THROWS_AS(projection_tree{bad}, error);
    const std::vector<point2> dup{{1, 0.0, 0.0}, {1, 1.0, 1.0}};
    CHECK_THROWS_AS((void)projection_tree::build(dup), error);
}

TEST_CASE("trailing 90 degrees is the x fallback, not a stored slope")
{
    tree_config cfg;
    cfg.angles = {0.0, 45.0, 90.0};
    const std::vector<point2> pts{{0, 0.0, 0.0}, {1, 1.0, 1.0}};
    const auto t = projection_tree::build(pts, cfg);
    CHECK(t.angle_count() == 2);
    CHECK(t.slopes()[1] == 1.0);
}

TEST_CASE("binary build is balanced and separators are subset maxima")
{
    std::mt19937_64 rng(11);
    for (std::size_t n : {2u, 3u, 7u, 8u, 9u, 100u, 1000u}) {
        const auto pts = oracle::random_points(rng, n, false);
        const auto t = projection_tree::build(pts, small_config(2));
        std::size_t want = 0;
        while ((std::size_t{1} << want) < n) {
            ++want;
        }
        CHECK(t.height() == want);
        CHECK(t.balanced_height() == want);
        CHECK(t.imbalance_count() == 0);
        CHECK(oracle::check_tree(t) == "");
        const auto& root = t.node(t.root());
        for (std::size_t i = 0; i < root.children.size(); ++i) {
            std::vector<point2> sub;
            oracle::collect(t, root.children[i], sub);
            double mx = -1.0;
            for (const auto& p : sub) {
                mx = std::max(mx, p.x);
            }
            CHECK(root.separators[i] == mx);
        }
    }
}

TEST_CASE("heap property for several branchings, with heavy duplicates")
{
    std::mt19937_64 rng(12);
    for (std::size_t b : {2u, 3u, 5u, 16u}) {
        for (bool grid : {false, true}) {
            const auto pts = oracle::random_points(rng, 300, grid);
            const auto t = projection_tree::build(pts, small_config(b));
            CHECK(oracle::check_tree(t) == "");
            std::size_t h = 0;
            std::size_t reach = 1;
            while (reach < pts.size()) {
                reach *= b;
                ++h;
            }
            CHECK(t.height() == h);
        }
    }
}

TEST_CASE("query left of every point leaves only the leftward streams")
{
    const std::vector<point2> pts{{0, 1.0, 1.0}, {1, 2.0, 5.0}, {2, 3.0, 2.0}};
    const auto t = projection_tree::build(pts, small_config(2));
    query_overlay ov(t, -10.0);
    for (std::size_t a = 0; a < t.angle_count(); ++a) {
        CHECK(ov.root_bound(a, projection_kind::llp) == t.bound(t.root(), a, projection_kind::llp));
        CHECK(ov.root_bound(a, projection_kind::lup) == t.bound(t.root(), a, projection_kind::lup));
        CHECK(ov.root_bound(a, projection_kind::rlp).empty());
        CHECK(ov.root_bound(a, projection_kind::rup).empty());
    }
}

TEST_CASE("path restriction: the root llp bound drops to the best point at or right of the axis")
{
    // At 45 degrees the llp intercepts (y - x) are: id0 8, id1 -1, id2 1, id3 -3.
    const std::vector<point2> pts{{0, 1.0, 9.0}, {1, 3.0, 2.0}, {2, 5.0, 6.0}, {3, 7.0, 4.0}};
    tree_config cfg = small_config(2);
    cfg.angles = {45.0};
    const auto t = projection_tree::build(pts, cfg);
    CHECK(t.bound(t.root(), 0, projection_kind::llp).id == 0);
    query_overlay ov(t, 4.0);
    const auto b = ov.root_bound(0, projection_kind::llp);
    CHECK(b.id == 2);
    CHECK(b.key == 1.0);

    // First fetch returns id2 and the bound falls to the next right-side point.
    const auto first = ov.next(0, projection_kind::llp, 0.0);
    REQUIRE(first);
    CHECK(first->point.id == 2);
    CHECK(first->projected_y == 5.0);
    CHECK(ov.root_bound(0, projection_kind::llp).id == 3);
}

TEST_CASE("streams come out in projection order and skip the wrong vertical side")
{
    std::mt19937_64 rng(13);
    for (int round = 0; round < 40; ++round) {
        const bool grid = round % 2 == 1;
        const auto pts = oracle::random_points(rng, 200, grid);
        const auto t = projection_tree::build(pts, small_config(3 + round % 5));
        const query2 q = oracle::random_query2(rng, grid);
        query_overlay ov(t, q.x);
        for (std::size_t a = 0; a < t.angle_count(); ++a) {
            for (projection_kind k : all_kinds) {
                std::vector<point_id> got;
                double last = is_lower(k) ? INFINITY : -INFINITY;
                while (auto it = ov.next(a, k, q.y)) {
                    CHECK(select_projection(it->point, q) == k);
                    if (is_lower(k)) {
                        CHECK(it->projected_y <= last);
                    } else {
                        CHECK(it->projected_y >= last);
                    }
                    last = it->projected_y;
                    got.push_back(it->point.id);
                }
                std::size_t want = 0;
                for (const auto& p : pts) {
                    want += select_projection(p, q) == k ? 1 : 0;
                }
                CHECK(got.size() == want);
            }
        }
    }
}

TEST_CASE("fixed-angle example ranks by exact score")
{
    const std::vector<point2> pts{{0, 0.0, 0.0}, {1, 2.0, 4.0}, {2, 5.0, 1.0}};
    tree_config cfg;
    const auto t = projection_tree::build(pts, cfg);
    const query2 q{3.0, 0.0, {1.0, 1.0}};
    const auto r = t.query_topk_fixed(q, 2, *t.find_slope(1.0));
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == 1);
    CHECK(r[0].score == 3.0);
    CHECK(r[1].id == 2);
    CHECK(r[1].score == -1.0);

    CHECK_THROWS_AS((void)t.query_topk_fixed(q, 0, 0), error);
    CHECK_THROWS_AS((void)t.query_topk_fixed({3.0, 0.0, {1.0, 2.0}}, 1, *t.find_slope(1.0)), error);
}

TEST_CASE("k >= n returns every point ranked")
{
    std::mt19937_64 rng(14);
    const auto pts = oracle::random_points(rng, 50, true);
    const auto t = projection_tree::build(pts, small_config(4));
    const query2 q = oracle::random_query2(rng, true);
    require_same(t.query_topk_arbitrary(q, 80), oracle::topk_2d(pts, q, 80));
}

TEST_CASE("fixed queries at every indexed angle match the scan")
{
    std::mt19937_64 rng(15);
    for (int round = 0; round < 60; ++round) {
        const bool grid = round % 3 == 0;
        const auto pts = oracle::random_points(rng, 400, grid);
        const auto t = projection_tree::build(pts, small_config(2 + round % 15));
        query2 q = oracle::random_query2(rng, grid);
        const std::size_t a = static_cast<std::size_t>(round) % t.angle_count();
        q.weights = {0.5, 0.5 * t.slopes()[a]};
        if (projection_slope(q.weights) != t.slopes()[a]) {
            q.weights = {1.0, t.slopes()[a]};
        }
        for (std::size_t k : {1u, 5u, 20u}) {
            require_same(t.query_topk_fixed(q, k, a), oracle::topk_2d(pts, q, k));
        }
    }
}

TEST_CASE("arbitrary weights match the scan, including ties and steep angles")
{
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> w(0.0, 1.0);
    for (int round = 0; round < 150; ++round) {
        const bool grid = round % 3 == 0;
        const std::size_t n = 1 + static_cast<std::size_t>(w(rng) * 2000);
        const auto pts = oracle::random_points(rng, n, grid);
        const auto t = projection_tree::build(pts, small_config(2 + round % 17));
        query2 q = oracle::random_query2(rng, grid);
        if (round % 10 == 1) {
            q.weights = {0.05, 1.0};  // beyond the largest stored angle
        }
        if (round % 10 == 2) {
            q.weights = {0.0, 0.7};  // pure attraction
        }
        if (round % 10 == 3) {
            q.weights = {2.0, 1.0};
        }
        for (std::size_t k : {1u, 5u, 20u}) {
            require_same(t.query_topk_arbitrary(q, k), oracle::topk_2d(pts, q, k));
        }
    }
}

TEST_CASE("queries on exact separators and on data coordinates")
{
    std::mt19937_64 rng(17);
    const auto pts = oracle::random_points(rng, 300, true);
    const auto t = projection_tree::build(pts, small_config(3));
    for (const auto& p : pts) {
        for (const weights2 w : {weights2{1.0, 1.0}, weights2{0.3, 0.9}, weights2{1.0, 0.1}}) {
            const query2 q{p.x, p.y, w};
            require_same(t.query_topk_arbitrary(q, 5), oracle::topk_2d(pts, q, 5));
        }
    }
}

TEST_CASE("no filtering means k + 3 accepted fetches")
{
    // Every point is above the query, so no stream ever surfaces a wrong-side point.
    std::mt19937_64 rng(18);
    auto pts = oracle::random_points(rng, 500, false);
    for (auto& p : pts) {
        p.y += 10.0;
    }
    const auto t = projection_tree::build(pts);
    const query2 q{0.5, 0.0, {1.0, 1.0}};
    query_overlay ov(t, q.x);
    ranked_cursor cur(t, ov, q, {*t.find_slope(1.0)});
    // The upper streams are empty; the lower ones each hold one candidate.
    for (std::size_t k = 1; k <= 10; ++k) {
        (void)cur.next();
        CHECK(cur.fetches() <= k + 3);
    }
}

TEST_CASE("queries leave the shared tree byte-identical")
{
    std::mt19937_64 rng(19);
    const auto pts = oracle::random_points(rng, 500, false);
    const auto t = projection_tree::build(pts, small_config(5));
    const std::string before = tree_bytes(t);
    for (int i = 0; i < 50; ++i) {
        (void)t.query_topk_arbitrary(oracle::random_query2(rng, false), 10);
    }
    CHECK(tree_bytes(t) == before);
}

TEST_CASE("insert into an empty tree, then delete the only point")
{
    projection_tree t;
    t.insert({4, 1.0, 2.0});
    CHECK(is_leaf(t.root()));
    CHECK(t.size() == 1);
    t.erase(4);
    CHECK(t.empty());
    CHECK(t.root() == no_node);
    CHECK(t.query_topk_arbitrary({0.0, 0.0, {1.0, 1.0}}, 3).empty());
    CHECK_THROWS_AS(t.erase(4), error);
}

TEST_CASE("inserts and deletes keep the heap property and oracle answers")
{
    std::mt19937_64 rng(20);
    for (bool grid : {false, true}) {
        auto pts = oracle::random_points(rng, 100, grid);
        auto t = projection_tree::build(pts, small_config(3));
        point_id next_id = 1000;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int op = 0; op < 400; ++op) {
            if (!pts.empty() && u(rng) < 0.45) {
                const auto at = static_cast<std::size_t>(u(rng) * static_cast<double>(pts.size()));
                t.erase(pts[at].id);
                pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(at));
            } else {
                auto p = oracle::random_points(rng, 1, grid, 1.0, next_id++).front();
                t.insert(p);
                pts.push_back(p);
            }
            REQUIRE(oracle::check_tree(t) == "");
            if (op % 20 == 0 && !pts.empty()) {
                const query2 q = oracle::random_query2(rng, grid);
                require_same(t.query_topk_arbitrary(q, 5), oracle::topk_2d(pts, q, 5));
            }
        }
        CHECK_THROWS_AS(t.insert(pts.front()), error);
    }
}

TEST_CASE("delete then re-insert gives identical answers")
{
    std::mt19937_64 rng(21);
    const auto pts = oracle::random_points(rng, 200, false);
    auto t = projection_tree::build(pts, small_config(4));
    std::vector<query2> qs;
    std::vector<std::vector<scored>> before;
    for (int i = 0; i < 20; ++i) {
        qs.push_back(oracle::random_query2(rng, false));
        before.push_back(t.query_topk_arbitrary(qs.back(), 7));
    }
    t.erase(pts[17].id);
    t.insert(pts[17]);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        require_same(t.query_topk_arbitrary(qs[i], 7), before[i]);
    }
}

TEST_CASE("skewed inserts trigger a rebuild that restores balance")
{
    std::mt19937_64 rng(22);
    auto pts = oracle::random_points(rng, 64, false);
    tree_config cfg = small_config(2);
    cfg.rebuild_threshold = 0.2;
    auto t = projection_tree::build(pts, cfg);
    CHECK_FALSE(t.maybe_rebuild());
    for (point_id i = 0; i < 64; ++i) {
        point2 p{1000 + i, 2.0 + i, static_cast<double>(i % 7)};
        t.insert(p);
        pts.push_back(p);
    }
    CHECK(static_cast<double>(t.imbalance_count()) / static_cast<double>(t.size()) > 0.2);
    std::vector<query2> qs;
    std::vector<std::vector<scored>> before;
    for (int i = 0; i < 30; ++i) {
        qs.push_back(oracle::random_query2(rng, false, 60.0));
        before.push_back(t.query_topk_arbitrary(qs.back(), 5));
    }
    CHECK(t.maybe_rebuild());
    CHECK(t.height() == t.balanced_height());
    CHECK(t.imbalance_count() == 0);
    CHECK(oracle::check_tree(t) == "");
    for (std::size_t i = 0; i < qs.size(); ++i) {
        require_same(t.query_topk_arbitrary(qs[i], 5), before[i]);
        require_same(before[i], oracle::topk_2d(pts, qs[i], 5));
    }
}

TEST_CASE("angles below the smallest indexed angle are refused")
{
    tree_config cfg;
    cfg.angles = {23.0, 45.0};
    const std::vector<point2> pts{{0, 0.0, 0.0}, {1, 1.0, 1.0}};
    const auto t = projection_tree::build(pts, cfg);
    CHECK_FALSE(t.can_answer({1.0, 0.1}));
    CHECK(t.can_answer({1.0, 0.5}));
    CHECK(t.can_answer({0.0, 0.5}));
    CHECK_THROWS_AS((void)t.query_topk_arbitrary({0.0, 0.0, {1.0, 0.1}}, 1), error);
}
