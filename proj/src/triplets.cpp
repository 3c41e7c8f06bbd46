#include "actionsense/triplets.hpp"

#include <algorithm>

#include "actionsense/error.hpp"

namespace actionsense::triplets {

using nlohmann::json;

std::vector<EventRef> events_from_pairs(const std::vector<extraction::VerbIngredientPair>& pairs) {
  std::vector<EventRef> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.video_id, p.segment_index, p.verb, p.ingredient, {p.verb}});
  }
  return out;
}

IngredientBuckets group_by_ingredient(const std::vector<EventRef>& events) {
  IngredientBuckets buckets;
  for (const auto& e : events) buckets[e.ingredient][e.video_id].push_back(e);
  for (auto& [ingredient, videos] : buckets) {
    for (auto& [video, list] : videos) {
      std::stable_sort(list.begin(), list.end(), [](const EventRef& a, const EventRef& b) {
        return a.segment_index < b.segment_index;
      });
      std::vector<EventRef> merged;
      for (auto& e : list) {
        if (e.verbs.empty()) e.verbs.push_back(e.verb);
        if (!merged.empty() && merged.back().segment_index == e.segment_index) {
          auto& into = merged.back().verbs;
          for (const auto& v : e.verbs) {
            if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
          }
        } else {
          merged.push_back(std::move(e));
        }
      }
      list = std::move(merged);
    }
  }
  return buckets;
}

std::vector<SegmentTriplet> build_adjoining_triplets(const std::vector<EventRef>& bucket) {
  std::vector<SegmentTriplet> out;
  for (size_t i = 0; i + 2 < bucket.size(); ++i) {
    const EventRef& a = bucket[i];
    const EventRef& b = bucket[i + 1];
    const EventRef& c = bucket[i + 2];
    if (a.video_id != b.video_id || b.video_id != c.video_id) {
      throw Error(ErrorCode::kInvalidArgument, "triplet bucket spans videos");
    }
    if (!(a.segment_index < b.segment_index && b.segment_index < c.segment_index)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bucket for '" + b.ingredient + "' in " + b.video_id + " is not strictly ascending");
    }
    out.push_back({b.ingredient, a, b, c});
  }
  return out;
}

std::vector<SegmentTriplet> build_all_triplets(const IngredientBuckets& buckets) {
  std::vector<SegmentTriplet> out;
  for (const auto& [ingredient, videos] : buckets) {
    for (const auto& [video, list] : videos) {
      auto ts = build_adjoining_triplets(list);
      out.insert(out.end(), ts.begin(), ts.end());
    }
  }
  return out;
}

json event_to_json(const EventRef& e) {
  return {{"segment_index", e.segment_index}, {"verb", e.verb}, {"verbs", e.verbs}};
}

EventRef event_from_json(const json& j) {
  EventRef e;
  e.segment_index = j.at("segment_index").get<int>();
  e.verb = j.at("verb").get<std::string>();
  e.verbs = j.value("verbs", std::vector<std::string>{e.verb});
  return e;
}

json triplet_to_json(const SegmentTriplet& t) {
  return {{"ingredient", t.ingredient},
          {"video_id", t.video_id()},
          {"past", event_to_json(t.past)},
          {"current", event_to_json(t.current)},
          {"future", event_to_json(t.future)}};
}

SegmentTriplet triplet_from_json(const json& j) {
  SegmentTriplet t;
  t.ingredient = j.at("ingredient").get<std::string>();
  std::string video = j.at("video_id").get<std::string>();
  t.past = event_from_json(j.at("past"));
  t.current = event_from_json(j.at("current"));
  t.future = event_from_json(j.at("future"));
  for (EventRef* e : {&t.past, &t.current, &t.future}) {
    e->video_id = video;
    e->ingredient = t.ingredient;
  }
  return t;
}

}  // namespace actionsense::triplets
