#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actionsense/extraction.hpp"

namespace actionsense::triplets {

// One ingredient occurrence in one segment. `verbs` holds every verb acting
// on the ingredient in that segment, in sentence order; `verb` is the first.
struct EventRef {
  std::string video_id;
  int segment_index = 0;
  std::string verb;
  std::string ingredient;
  std::vector<std::string> verbs;

  bool operator==(const EventRef&) const = default;
};

struct SegmentTriplet {
  std::string ingredient;
  EventRef past;
  EventRef current;
  EventRef future;

  const std::string& video_id() const { return current.video_id; }
  bool operator==(const SegmentTriplet&) const = default;
};

// Converts pairs to events, one per (video, segment, verb, ingredient).
std::vector<EventRef> events_from_pairs(const std::vector<extraction::VerbIngredientPair>& pairs);

// ingredient -> video -> events sorted by segment. Events of one ingredient in
// the same segment are merged (verbs concatenated in input order).
using IngredientBuckets = std::map<std::string, std::map<std::string, std::vector<EventRef>>>;

IngredientBuckets group_by_ingredient(const std::vector<EventRef>& events);

// Consecutive windows of three: max(0, K - 2) triplets for K events.
std::vector<SegmentTriplet> build_adjoining_triplets(const std::vector<EventRef>& bucket);

// All triplets of all buckets, ordered by (ingredient, video, window start).
std::vector<SegmentTriplet> build_all_triplets(const IngredientBuckets& buckets);

nlohmann::json event_to_json(const EventRef& e);
EventRef event_from_json(const nlohmann::json& j);
nlohmann::json triplet_to_json(const SegmentTriplet& t);
SegmentTriplet triplet_from_json(const nlohmann::json& j);

}  // namespace actionsense::triplets
