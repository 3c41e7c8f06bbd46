#include <doctest.h>

#include <algorithm>
#include <random>

#include "actionsense/triplets.hpp"

using namespace actionsense;
using namespace actionsense::triplets;

namespace {

EventRef ev(const std::string& video, int seg, const std::string& verb, const std::string& ing) {
  return {video, seg, verb, ing, {verb}};
}

}  // namespace

TEST_CASE("bacon bucket S1, S2, S7") {
  std::vector<EventRef> events = {ev("blt", 7, "place", "bacon"), ev("blt", 1, "fry", "bacon"), ev("blt", 2, "cook", "bacon")};
  auto buckets = group_by_ingredient(events);
  REQUIRE(buckets.count("bacon"));
  const auto& b = buckets.at("bacon").at("blt");
  REQUIRE(b.size() == 3);
  CHECK(b[0].segment_index == 1);
  CHECK(b[1].segment_index == 2);
  CHECK(b[2].segment_index == 7);
  auto t = build_adjoining_triplets(b);
  REQUIRE(t.size() == 1);
  CHECK(t[0].past.verb == "fry");
  CHECK(t[0].current.verb == "cook");
  CHECK(t[0].future.verb == "place");
  CHECK(t[0].ingredient == "bacon");
}

TEST_CASE("window counts") {
  CHECK(group_by_ingredient({}).empty());
  CHECK(build_adjoining_triplets({}).empty());
  CHECK(build_adjoining_triplets({ev("v", 1, "a", "x"), ev("v", 2, "b", "x")}).empty());
  std::vector<EventRef> four = {ev("v", 1, "a", "x"), ev("v", 2, "b", "x"), ev("v", 3, "c", "x"), ev("v", 4, "d", "x")};
  auto t = build_adjoining_triplets(four);
  REQUIRE(t.size() == 2);
  CHECK(t[0] == SegmentTriplet{"x", four[0], four[1], four[2]});
  CHECK(t[1] == SegmentTriplet{"x", four[1], four[2], four[3]});
}

TEST_CASE("same-segment verbs collapse into one event") {
  extraction::VerbIngredientPair grill{"grill", "tomato", "blt", 1, 0};
  extraction::VerbIngredientPair put{"put", "tomato", "blt", 1, 8};
  auto buckets = group_by_ingredient(events_from_pairs({grill, put}));
  const auto& b = buckets.at("tomato").at("blt");
  REQUIRE(b.size() == 1);
  CHECK(b[0].verb == "grill");
  CHECK(b[0].verbs == std::vector<std::string>{"grill", "put"});
}

TEST_CASE("triplets never span videos") {
  std::vector<EventRef> events = {ev("a", 1, "cut", "x"), ev("a", 2, "fry", "x"), ev("b", 1, "boil", "x"),
                                  ev("b", 5, "drain", "x")};
  CHECK(build_all_triplets(group_by_ingredient(events)).empty());
}

TEST_CASE("random corpora: sort oracle and window enumeration") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EventRef> events;
    const int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      events.push_back(ev("v" + std::to_string(rng() % 3), static_cast<int>(1 + rng() % 12), "verb" + std::to_string(rng() % 4),
                          "ing" + std::to_string(rng() % 4)));
    }
    auto buckets = group_by_ingredient(events);
    for (const auto& [ing, by_video] : buckets) {
      for (const auto& [video, bucket] : by_video) {
        // distinct segment indices, ascending
        std::vector<int> expect;
        for (const auto& e : events) {
          if (e.ingredient == ing && e.video_id == video) expect.push_back(e.segment_index);
        }
        std::sort(expect.begin(), expect.end());
        expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
        std::vector<int> got;
        for (const auto& e : bucket) got.push_back(e.segment_index);
        CHECK(got == expect);

        auto t = build_adjoining_triplets(bucket);
        const size_t k = bucket.size();
        CHECK(t.size() == (k >= 2 ? k - 2 : 0));
        for (size_t i = 0; i + 2 < k; ++i) {
          CHECK(t[i].past == bucket[i]);
          CHECK(t[i].current == bucket[i + 1]);
          CHECK(t[i].future == bucket[i + 2]);
          CHECK(t[i].past.segment_index < t[i].current.segment_index);
          CHECK(t[i].current.segment_index < t[i].future.segment_index);
        }
      }
    }
  }
}

TEST_CASE("json round trip") {
  SegmentTriplet t{"bacon", ev("blt", 1, "fry", "bacon"), ev("blt", 2, "cook", "bacon"), ev("blt", 7, "place", "bacon")};
  CHECK(triplet_from_json(triplet_to_json(t)) == t);
  auto j = triplet_to_json(t);
  CHECK(j["video_id"] == "blt");
  CHECK(j["ingredient"] == "bacon");
}
