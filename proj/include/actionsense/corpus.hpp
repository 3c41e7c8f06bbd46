#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace actionsense::corpus {

// Recipe ids are opaque; integer ids in the input are stored in decimal form.
using RecipeId = std::string;

struct RecipeIndex {
  std::map<RecipeId, std::string> entries;

  const std::string* find(const RecipeId& id) const;
};

struct BoundingBox {
  double t = 0.0;  // frame time, seconds
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  bool operator==(const BoundingBox&) const = default;
};

struct ObjectAnnotation {
  std::string label;
  std::vector<BoundingBox> boxes;

  bool operator==(const ObjectAnnotation&) const = default;
};

struct Segment {
  int index = 0;  // 1-based
  double t_start = 0.0;
  double t_end = 0.0;
  std::string sentence;
  std::vector<ObjectAnnotation> objects;

  double midpoint() const { return 0.5 * (t_start + t_end); }
  bool operator==(const Segment&) const = default;
};

struct TranscriptLine {
  double t_start = 0.0;
  double t_end = 0.0;
  std::string text;

  bool operator==(const TranscriptLine&) const = default;
};

// A pre-cut clip. Without explicit metadata a clip is assumed to run at
// kDefaultFps for the whole segment duration.
struct ClipInfo {
  static constexpr double kDefaultFps = 30.0;

  std::string path;
  double fps = kDefaultFps;
  std::optional<long> frame_count;

  bool operator==(const ClipInfo&) const = default;
};

struct MediaRef {
  std::map<int, ClipInfo> clips;         // segment index -> clip
  std::map<int, std::string> frames;     // segment index -> extracted frame image
  bool resolved = false;                 // every referenced path exists on disk

  bool operator==(const MediaRef&) const = default;
};

enum class VideoFlag {
  kNoTranscript,
  kNoMedia,
  kMediaUnresolved,
};

std::string_view video_flag_name(VideoFlag flag);

struct VideoRecord {
  std::string video_id;
  RecipeId recipe_id;
  std::vector<Segment> segments;
  std::vector<TranscriptLine> transcript;
  std::optional<MediaRef> media;
  std::set<VideoFlag> flags;

  const Segment* segment(int index) const;
  bool has_flag(VideoFlag f) const { return flags.count(f) > 0; }
  bool operator==(const VideoRecord&) const = default;
};

struct Corpus {
  std::vector<VideoRecord> videos;
  RecipeIndex recipes;

  const VideoRecord* find(const std::string& video_id) const;
};

struct LoadOptions {
  // Reject records that violate type invariants. When false they are kept
  // and surface through validate_corpus.
  bool strict = true;
  // Check media paths on disk to set MediaRef::resolved.
  bool check_media = true;
};

RecipeIndex load_recipe_index(const std::filesystem::path& path);
RecipeIndex parse_recipe_index(const nlohmann::json& doc, const std::string& source);

Corpus load_corpus(const std::filesystem::path& annotation_file,
                   const std::filesystem::path& recipe_index_file,
                   const LoadOptions& options = {});

// `base_dir` resolves relative media paths.
Corpus parse_corpus(const nlohmann::json& annotations, RecipeIndex recipes,
                    const std::string& source, const std::filesystem::path& base_dir,
                    const LoadOptions& options = {});

nlohmann::json corpus_to_json(const Corpus& corpus);
nlohmann::json recipe_index_to_json(const RecipeIndex& index);

struct TranscriptWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  std::string text;
  std::vector<TranscriptLine> lines;
  bool no_transcript = false;

  bool empty() const { return lines.empty(); }
};

// All lines overlapping [t0, t1), in time order. A zero-length window is empty.
TranscriptWindow slice_transcript(const VideoRecord& video, double t0, double t1);

struct FrameRef {
  std::string video_id;
  int segment_index = 0;
  std::string path;       // frame image when one was extracted, else the clip
  long frame_index = 0;   // within the clip
  double timestamp = 0.0; // absolute, seconds from the start of the video

  bool operator==(const FrameRef&) const = default;
};

FrameRef middle_frame(const MediaRef& media, const Segment& segment,
                      const std::string& video_id = {});

struct Violation {
  std::string video_id;
  std::optional<int> segment_index;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // Videos whose media or transcripts are unavailable. Not violations.
  std::vector<std::string> flagged_videos;

  bool clean() const { return violations.empty(); }
};

ValidationReport validate_corpus(const Corpus& corpus);

}  // namespace actionsense::corpus
