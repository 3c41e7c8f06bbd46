#include "actionsense/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "actionsense/error.hpp"
#include "actionsense/text.hpp"

namespace actionsense::corpus {

using nlohmann::json;

const std::string* RecipeIndex::find(const RecipeId& id) const {
  auto it = entries.find(id);
  return it == entries.end() ? nullptr : &it->second;
}

std::string_view video_flag_name(VideoFlag flag) {
  switch (flag) {
    case VideoFlag::kNoTranscript: return "no_transcript";
    case VideoFlag::kNoMedia: return "no_media";
    case VideoFlag::kMediaUnresolved: return "media_unresolved";
  }
  return "unknown";
}

const Segment* VideoRecord::segment(int index) const {
  for (const auto& s : segments) {
    if (s.index == index) return &s;
  }
  return nullptr;
}

const VideoRecord* Corpus::find(const std::string& video_id) const {
  for (const auto& v : videos) {
    if (v.video_id == video_id) return &v;
  }
  return nullptr;
}

namespace {

[[noreturn]] void malformed(const std::string& source, const std::string& where,
                            const std::string& what) {
  throw Error(ErrorCode::kMalformedAnnotation, source + " " + where + ": " + what);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedAnnotation, path.string() + ": " + e.what());
  }
}

std::string id_to_string(const json& v, const std::string& source, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  malformed(source, where, "id must be a string or integer");
}

// Accepts plain seconds or "[hh:]mm:ss[.fff]" strings.
double to_seconds(const json& v, const std::string& source, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    double total = 0.0;
    std::stringstream ss(s);
    std::string part;
    int parts = 0;
    while (std::getline(ss, part, ':')) {
      try {
        size_t used = 0;
        double value = std::stod(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
        total = total * 60.0 + value;
      } catch (const std::exception&) {
        malformed(source, where, "bad timestamp '" + s + "'");
      }
      ++parts;
    }
    if (parts == 0 || parts > 3) malformed(source, where, "bad timestamp '" + s + "'");
    return total;
  }
  malformed(source, where, "timestamp must be a number or string");
}

const json& require(const json& obj, const char* key, const std::string& source,
                    const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    malformed(source, where, std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& source,
                           const std::string& where) {
  const json& v = require(obj, key, source, where);
  if (!v.is_string()) malformed(source, where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

ObjectAnnotation parse_object(const json& j, const std::string& source, const std::string& where) {
  ObjectAnnotation obj;
  obj.label = require_string(j, "label", source, where);
  if (j.contains("boxes")) {
    const json& boxes = j.at("boxes");
    if (!boxes.is_array()) malformed(source, where, "'boxes' must be an array");
    for (const auto& b : boxes) {
      if (!b.is_array() || b.size() != 5) malformed(source, where, "box must be [t,x1,y1,x2,y2]");
      for (const auto& x : b) {
        if (!x.is_number()) malformed(source, where, "box entries must be numbers");
      }
      obj.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                           b[3].get<double>(), b[4].get<double>()});
    }
  }
  return obj;
}

ClipInfo parse_clip(const json& j, const std::string& source, const std::string& where) {
  ClipInfo clip;
  if (j.is_string()) {
    clip.path = j.get<std::string>();
    return clip;
  }
  clip.path = require_string(j, "path", source, where);
  if (j.contains("fps")) {
    if (!j.at("fps").is_number()) malformed(source, where, "'fps' must be a number");
    clip.fps = j.at("fps").get<double>();
  }
  if (j.contains("frame_count")) {
    if (!j.at("frame_count").is_number_integer()) {
      malformed(source, where, "'frame_count' must be an integer");
    }
    clip.frame_count = j.at("frame_count").get<long>();
  }
  return clip;
}

int segment_key(const std::string& key, const std::string& source, const std::string& where) {
  try {
    size_t used = 0;
    int v = std::stoi(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    malformed(source, where, "media key '" + key + "' is not a segment index");
  }
}

MediaRef parse_media(const json& j, const std::string& source, const std::string& where) {
  MediaRef media;
  if (!j.is_object()) malformed(source, where, "'media' must be an object");
  if (j.contains("clips")) {
    if (!j.at("clips").is_object()) malformed(source, where, "'clips' must be an object");
    for (const auto& [k, v] : j.at("clips").items()) {
      media.clips[segment_key(k, source, where)] = parse_clip(v, source, where);
    }
  }
  if (j.contains("frames")) {
    if (!j.at("frames").is_object()) malformed(source, where, "'frames' must be an object");
    for (const auto& [k, v] : j.at("frames").items()) {
      if (!v.is_string()) malformed(source, where, "frame paths must be strings");
      media.frames[segment_key(k, source, where)] = v.get<std::string>();
    }
  }
  return media;
}

bool media_paths_exist(const MediaRef& media, const std::filesystem::path& base) {
  std::error_code ec;
  for (const auto& [idx, clip] : media.clips) {
    if (!std::filesystem::exists(base / clip.path, ec)) return false;
  }
  for (const auto& [idx, path] : media.frames) {
    if (!std::filesystem::exists(base / path, ec)) return false;
  }
  return true;
}

std::vector<Violation> video_violations(const VideoRecord& v, const RecipeIndex& recipes) {
  std::vector<Violation> out;
  auto add = [&](std::optional<int> seg, std::string msg) {
    out.push_back({v.video_id, seg, std::move(msg)});
  };
  if (v.video_id.empty()) add(std::nullopt, "empty video_id");
  if (!recipes.find(v.recipe_id)) add(std::nullopt, "recipe_id '" + v.recipe_id + "' not in recipe index");
  for (size_t i = 0; i < v.segments.size(); ++i) {
    const Segment& s = v.segments[i];
    if (s.index != static_cast<int>(i) + 1) {
      add(s.index, "segment indices must be contiguous from 1 (expected " +
                       std::to_string(i + 1) + ")");
    }
    if (!(s.t_start < s.t_end)) add(s.index, "t_start must be < t_end");
    if (text::trim(s.sentence).empty()) add(s.index, "empty sentence");
    if (i > 0 && !(v.segments[i - 1].t_start < s.t_start)) {
      add(s.index, "segments not strictly ordered by start time");
    }
    for (const auto& o : s.objects) {
      if (text::trim(o.label).empty()) add(s.index, "object with empty label");
      for (const auto& b : o.boxes) {
        if (!(b.x1 < b.x2) || !(b.y1 < b.y2)) {
          add(s.index, "degenerate bounding box for '" + o.label + "'");
        }
      }
    }
  }
  for (const auto& line : v.transcript) {
    if (line.t_start > line.t_end) add(std::nullopt, "transcript line with t_start > t_end");
  }
  return out;
}

}  // namespace

RecipeIndex parse_recipe_index(const json& doc, const std::string& source) {
  RecipeIndex index;
  if (!doc.is_object()) malformed(source, "root", "recipe index must be an object id -> name");
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_string() || text::trim(v.get<std::string>()).empty()) {
      malformed(source, "recipe " + k, "name must be a non-empty string");
    }
    index.entries.emplace(k, v.get<std::string>());
  }
  return index;
}

RecipeIndex load_recipe_index(const std::filesystem::path& path) {
  return parse_recipe_index(read_json_file(path), path.string());
}

Corpus parse_corpus(const json& annotations, RecipeIndex recipes, const std::string& source,
                    const std::filesystem::path& base_dir, const LoadOptions& options) {
  Corpus corpus;
  corpus.recipes = std::move(recipes);
  const json& videos = require(annotations, "videos", source, "root");
  if (!videos.is_array()) malformed(source, "root", "'videos' must be an array");

  std::set<std::string> seen;
  for (size_t vi = 0; vi < videos.size(); ++vi) {
    const json& jv = videos[vi];
    const std::string where = "videos[" + std::to_string(vi) + "]";
    VideoRecord v;
    v.video_id = require_string(jv, "video_id", source, where);
    v.recipe_id = id_to_string(require(jv, "recipe_id", source, where), source, where);
    if (!seen.insert(v.video_id).second) {
      throw Error(ErrorCode::kDuplicateVideoId, source + " " + where + ": '" + v.video_id + "'");
    }

    const json& segs = require(jv, "segments", source, where);
    if (!segs.is_array()) malformed(source, where, "'segments' must be an array");
    for (size_t si = 0; si < segs.size(); ++si) {
      const json& js = segs[si];
      const std::string swhere = where + ".segments[" + std::to_string(si) + "]";
      Segment s;
      const json& idx = require(js, "index", source, swhere);
      if (!idx.is_number_integer()) malformed(source, swhere, "'index' must be an integer");
      s.index = idx.get<int>();
      s.t_start = to_seconds(require(js, "start", source, swhere), source, swhere);
      s.t_end = to_seconds(require(js, "end", source, swhere), source, swhere);
      s.sentence = require_string(js, "sentence", source, swhere);
      if (js.contains("objects")) {
        if (!js.at("objects").is_array()) malformed(source, swhere, "'objects' must be an array");
        for (const auto& jo : js.at("objects")) s.objects.push_back(parse_object(jo, source, swhere));
      }
      v.segments.push_back(std::move(s));
    }

    if (jv.contains("transcript") && !jv.at("transcript").is_null()) {
      if (!jv.at("transcript").is_array()) malformed(source, where, "'transcript' must be an array");
      for (const auto& jl : jv.at("transcript")) {
        TranscriptLine line;
        line.t_start = to_seconds(require(jl, "start", source, where), source, where);
        line.t_end = to_seconds(require(jl, "end", source, where), source, where);
        line.text = require_string(jl, "text", source, where);
        v.transcript.push_back(std::move(line));
      }
      std::stable_sort(v.transcript.begin(), v.transcript.end(),
                       [](const TranscriptLine& a, const TranscriptLine& b) {
                         return a.t_start < b.t_start;
                       });
    }
    if (v.transcript.empty()) v.flags.insert(VideoFlag::kNoTranscript);

    if (jv.contains("media") && !jv.at("media").is_null()) {
      MediaRef media = parse_media(jv.at("media"), source, where);
      media.resolved = options.check_media && media_paths_exist(media, base_dir);
      if (!media.resolved) v.flags.insert(VideoFlag::kMediaUnresolved);
      v.media = std::move(media);
    } else {
      v.flags.insert(VideoFlag::kNoMedia);
    }

    if (options.strict) {
      auto violations = video_violations(v, corpus.recipes);
      if (!violations.empty()) {
        const auto& first = violations.front();
        std::string seg = first.segment_index ? " segment " + std::to_string(*first.segment_index) : "";
        malformed(source, where, "video '" + v.video_id + "'" + seg + ": " + first.message);
      }
    }
    corpus.videos.push_back(std::move(v));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& annotation_file,
                   const std::filesystem::path& recipe_index_file, const LoadOptions& options) {
  json annotations = read_json_file(annotation_file);
  RecipeIndex recipes = load_recipe_index(recipe_index_file);
  return parse_corpus(annotations, std::move(recipes), annotation_file.string(),
                      annotation_file.parent_path(), options);
}

json recipe_index_to_json(const RecipeIndex& index) {
  json out = json::object();
  for (const auto& [k, v] : index.entries) out[k] = v;
  return out;
}

json corpus_to_json(const Corpus& corpus) {
  json videos = json::array();
  for (const auto& v : corpus.videos) {
    json jv;
    jv["video_id"] = v.video_id;
    jv["recipe_id"] = v.recipe_id;
    json segs = json::array();
    for (const auto& s : v.segments) {
      json js;
      js["index"] = s.index;
      js["start"] = s.t_start;
      js["end"] = s.t_end;
      js["sentence"] = s.sentence;
      json objs = json::array();
      for (const auto& o : s.objects) {
        json boxes = json::array();
        for (const auto& b : o.boxes) boxes.push_back({b.t, b.x1, b.y1, b.x2, b.y2});
        objs.push_back({{"label", o.label}, {"boxes", boxes}});
      }
      js["objects"] = objs;
      segs.push_back(js);
    }
    jv["segments"] = segs;
    json lines = json::array();
    for (const auto& l : v.transcript) {
      lines.push_back({{"start", l.t_start}, {"end", l.t_end}, {"text", l.text}});
    }
    jv["transcript"] = lines;
    if (v.media) {
      json clips = json::object();
      for (const auto& [idx, c] : v.media->clips) {
        if (c.fps == ClipInfo::kDefaultFps && !c.frame_count) {
          clips[std::to_string(idx)] = c.path;
        } else {
          json jc = {{"path", c.path}, {"fps", c.fps}};
          if (c.frame_count) jc["frame_count"] = *c.frame_count;
          clips[std::to_string(idx)] = jc;
        }
      }
      json frames = json::object();
      for (const auto& [idx, p] : v.media->frames) frames[std::to_string(idx)] = p;
      jv["media"] = {{"clips", clips}, {"frames", frames}};
    }
    videos.push_back(jv);
  }
  return {{"videos", videos}};
}

TranscriptWindow slice_transcript(const VideoRecord& video, double t0, double t1) {
  if (t0 > t1) {
    throw Error(ErrorCode::kInvalidWindow, "window [" + std::to_string(t0) + ", " +
                                               std::to_string(t1) + ") of video " + video.video_id);
  }
  TranscriptWindow window;
  window.t0 = t0;
  window.t1 = t1;
  window.no_transcript = video.transcript.empty();
  if (t0 == t1) return window;
  std::vector<std::string> pieces;
  for (const auto& line : video.transcript) {
    // half-open overlap; zero-length lines count when they fall inside
    bool overlaps = line.t_start < t1 && (line.t_end > t0 || (line.t_end == line.t_start &&
                                                              line.t_start >= t0));
    if (overlaps) {
      window.lines.push_back(line);
      pieces.push_back(text::trim(line.text));
    }
  }
  window.text = text::join(pieces, " ");
  return window;
}

FrameRef middle_frame(const MediaRef& media, const Segment& segment, const std::string& video_id) {
  auto it = media.clips.find(segment.index);
  if (it == media.clips.end()) {
    throw Error(ErrorCode::kMissingClip, "no clip for segment " + std::to_string(segment.index) +
                                             (video_id.empty() ? "" : " of video " + video_id));
  }
  const ClipInfo& clip = it->second;
  const double duration = segment.t_end - segment.t_start;
  FrameRef frame;
  frame.video_id = video_id;
  frame.segment_index = segment.index;

  long frame_count = 1;
  if (clip.frame_count) {
    frame_count = std::max(1L, *clip.frame_count);
  } else if (clip.fps > 0.0 && duration > 0.0) {
    frame_count = std::max(1L, static_cast<long>(std::floor(clip.fps * duration)));
  }
  long index = 0;
  if (clip.fps > 0.0 && duration > 0.0) {
    index = static_cast<long>(std::floor(clip.fps * (duration / 2.0)));
  }
  index = std::clamp(index, 0L, frame_count - 1);
  frame.frame_index = index;
  double offset = clip.fps > 0.0 ? static_cast<double>(index) / clip.fps : 0.0;
  frame.timestamp = segment.t_start + std::min(offset, std::max(0.0, duration));

  auto fit = media.frames.find(segment.index);
  frame.path = fit != media.frames.end() ? fit->second : clip.path;
  return frame;
}

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport report;
  for (const auto& v : corpus.videos) {
    auto vs = video_violations(v, corpus.recipes);
    report.violations.insert(report.violations.end(), vs.begin(), vs.end());
    if (v.has_flag(VideoFlag::kNoMedia) || v.has_flag(VideoFlag::kMediaUnresolved) ||
        v.has_flag(VideoFlag::kNoTranscript)) {
      report.flagged_videos.push_back(v.video_id);
    }
  }
  return report;
}

}  // namespace actionsense::corpus
