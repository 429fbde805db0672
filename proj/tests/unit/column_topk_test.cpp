#include <doctest.h>

#include <sdindex/column.hpp>
#include <sdindex/topk.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace sdindex;

namespace {

// Coverage column of the publisher table: A 25, E 50, C 68, B 80, D 85.
sorted_column coverage()
{
    return sorted_column({{25, 0}, {80, 1}, {68, 2}, {85, 3}, {50, 4}});
}

}  // namespace

TEST_CASE("attractive cursor starts at the binary-search position")
{
    const auto col = coverage();
    column_cursor cur(col, 75.0, stream_mode::attractive);
    const std::vector<std::pair<point_id, double>> want{{1, 5}, {2, 7}, {3, 10}, {4, 25}, {0, 50}};
    for (const auto& [id, d] : want) {
        const auto hit = cur.next();
        REQUIRE(hit);
        CHECK(hit->id == id);
        CHECK(hit->distance == d);
    }
    CHECK_FALSE(cur.next());
    CHECK(cur.exhausted());
}

TEST_CASE("repulsive cursor starts at the extremes")
{
    const auto col = coverage();
    column_cursor cur(col, 75.0, stream_mode::repulsive);
    const auto first = cur.next();
    REQUIRE(first);
    CHECK(first->id == 0);
    CHECK(first->distance == 50.0);
    std::size_t count = 1;
    while (cur.next()) {
        ++count;
    }
    CHECK(count == 5);
}

TEST_CASE("cursor distances are monotone and ties go to the smaller id")
{
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> g(0, 20);
    for (int round = 0; round < 300; ++round) {
        std::vector<column_entry> entries;
        for (point_id i = 0; i < 60; ++i) {
            entries.push_back({static_cast<double>(g(rng)), i});
        }
        const sorted_column col(entries);
        const double q = g(rng) + 0.5 * (round % 2);
        for (stream_mode mode : {stream_mode::attractive, stream_mode::repulsive}) {
            column_cursor cur(col, q, mode);
            std::vector<column_hit> hits;
            while (auto h = cur.next()) {
                hits.push_back(*h);
            }
            REQUIRE(hits.size() == entries.size());
            for (std::size_t i = 1; i < hits.size(); ++i) {
                if (mode == stream_mode::attractive) {
                    CHECK(hits[i].distance >= hits[i - 1].distance);
                } else {
                    CHECK(hits[i].distance <= hits[i - 1].distance);
                }
            }
        }
    }
}

TEST_CASE("sorted_column insert and erase")
{
    sorted_column col({{3, 1}, {1, 2}});
    col.insert({2, 7});
    col.insert({2, 3});
    REQUIRE(col.size() == 4);
    CHECK(col.entries()[1] == column_entry{2, 3});
    CHECK(col.entries()[2] == column_entry{2, 7});
    CHECK(col.erase({2, 7}));
    CHECK_FALSE(col.erase({2, 7}));
    CHECK(col.lower_bound(2.5) == 2);
}

TEST_CASE("topk_collector keeps the best k with the id tie-break")
{
    topk_collector c(3);
    for (scored s : {scored{5, 1.0}, scored{2, 3.0}, scored{9, 3.0}, scored{1, 1.0}, scored{4, 0.5}}) {
        c.offer(s);
    }
    const auto out = c.sorted();
    REQUIRE(out.size() == 3);
    CHECK(out[0] == scored{2, 3.0});
    CHECK(out[1] == scored{9, 3.0});
    CHECK(out[2] == scored{1, 1.0});
    CHECK(c.kth()->id == 1);
    topk_collector none(0);
    CHECK_FALSE(none.offer({1, 1.0}));
}
