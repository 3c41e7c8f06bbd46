#include "actionsense/assembly.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "actionsense/error.hpp"
#include "actionsense/text.hpp"

namespace actionsense::assembly {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

std::string label_key(const std::string& label) { return text::normalize_phrase(label); }

int tag_number(const std::string& tag) {
  // "[Object12]" -> 12
  try {
    return std::stoi(tag.substr(7, tag.size() - 8));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// GroundedText / InferenceSet

std::vector<std::string> GroundedText::tags() const {
  std::vector<std::string> out;
  for (const auto& [tag, obj] : bindings) out.push_back(tag);
  std::sort(out.begin(), out.end(),
            [](const std::string& a, const std::string& b) { return tag_number(a) < tag_number(b); });
  return out;
}

std::string GroundedText::plain() const {
  std::string out = text;
  for (const auto& tag : tags()) {
    const std::string& label = bindings.at(tag).label;
    for (size_t pos = out.find(tag); pos != std::string::npos; pos = out.find(tag, pos + label.size())) {
      out.replace(pos, tag.size(), label);
    }
  }
  return out;
}

void InferenceSet::add(const std::string& value) {
  std::string surface = text::trim(value);
  std::string key = text::normalize_phrase(surface);
  if (key.empty()) return;
  auto it = by_key_.find(key);
  if (it == by_key_.end()) {
    by_key_.emplace(std::move(key), std::move(surface));
  } else if (surface < it->second) {
    it->second = std::move(surface);
  }
}

void InferenceSet::merge(const InferenceSet& other) {
  for (const auto& [key, surface] : other.by_key_) add(surface);
}

std::vector<std::string> InferenceSet::values() const {
  std::vector<std::string> out;
  out.reserve(by_key_.size());
  for (const auto& [key, surface] : by_key_) out.push_back(surface);
  std::sort(out.begin(), out.end());
  return out;
}

bool InferenceSet::contains(const std::string& value) const {
  return by_key_.count(text::normalize_phrase(value)) > 0;
}

// ---------------------------------------------------------------------------
// RC providers

std::unique_ptr<TableRCProvider> TableRCProvider::from_file(const std::filesystem::path& path) {
  json doc = read_json(path);
  std::map<std::string, std::optional<std::string>> table;
  for (const auto& [q, a] : doc.items()) {
    table.emplace(q, a.is_null() ? std::nullopt : std::optional<std::string>(a.get<std::string>()));
  }
  return std::make_unique<TableRCProvider>(std::move(table));
}

std::optional<std::string> TableRCProvider::answer(const std::string&, const std::string& question) {
  auto it = table_.find(question);
  return it == table_.end() ? std::nullopt : it->second;
}

std::unique_ptr<KeywordRCProvider> KeywordRCProvider::from_file(const std::filesystem::path& path) {
  json doc = read_json(path);
  std::map<std::string, std::vector<std::string>> vocab;
  for (const auto& [kind, words] : doc.items()) vocab[kind] = words.get<std::vector<std::string>>();
  return std::make_unique<KeywordRCProvider>(std::move(vocab));
}

std::optional<std::string> KeywordRCProvider::answer(const std::string& context, const std::string& question) {
  auto qtokens = text::tokenize(question);
  const std::vector<std::string>* words = nullptr;
  for (const auto& t : qtokens) {
    if (auto it = vocab_.find(t); it != vocab_.end()) {
      words = &it->second;
      break;
    }
  }
  if (!words) return std::nullopt;
  const std::string lowered = text::to_lower(context);
  auto boundary = [&](size_t pos) {
    return pos >= lowered.size() || !std::isalnum(static_cast<unsigned char>(lowered[pos]));
  };
  size_t best = std::string::npos;
  size_t best_len = 0;
  for (const auto& w : *words) {
    std::string lw = text::to_lower(w);
    if (lw.empty()) continue;
    for (size_t pos = lowered.find(lw); pos != std::string::npos; pos = lowered.find(lw, pos + 1)) {
      bool left = pos == 0 || boundary(pos - 1);
      if (left && boundary(pos + lw.size())) {
        if (pos < best || (pos == best && lw.size() > best_len)) {
          best = pos;
          best_len = lw.size();
        }
        break;
      }
    }
  }
  if (best == std::string::npos) return std::nullopt;
  return context.substr(best, best_len);
}

std::optional<std::string> HttpRCProvider::answer(const std::string& context, const std::string& question) {
  json response = client_.post(
      {{"task", "rc"}, {"inputs", json::array({{{"context", context}, {"question", question}}})}});
  try {
    const json& outputs = response.at("outputs");
    if (!outputs.is_array() || outputs.size() != 1) {
      throw Error(ErrorCode::kProviderError, "rc output length mismatch");
    }
    if (outputs[0].is_null()) return std::nullopt;
    return outputs[0].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("bad rc response: ") + e.what());
  }
}

CachingRCProvider::CachingRCProvider(std::shared_ptr<RCProvider> inner, provider::ResponseCache cache,
                                     provider::RetryPolicy retry)
    : inner_(std::move(inner)), cache_(std::move(cache)), retry_(retry) {}

std::optional<std::string> CachingRCProvider::answer(const std::string& context, const std::string& question) {
  const std::string key = json::array({question, context}).dump();
  if (auto hit = cache_.get("rc", key)) {
    if (hit->is_null()) return std::nullopt;
    return hit->get<std::string>();
  }
  auto out = provider::with_retries(retry_, [&] { return inner_->answer(context, question); });
  cache_.put("rc", key, out ? json(*out) : json(nullptr));
  return out;
}

// ---------------------------------------------------------------------------
// Context

const corpus::VideoRecord& AssemblyContext::video(const std::string& video_id) const {
  const corpus::VideoRecord* v = corpus ? corpus->find(video_id) : nullptr;
  if (!v) throw Error(ErrorCode::kInvalidArgument, "unknown video " + video_id);
  return *v;
}

const corpus::Segment& AssemblyContext::segment(const std::string& video_id, int index) const {
  const corpus::Segment* s = video(video_id).segment(index);
  if (!s) {
    throw Error(ErrorCode::kInvalidArgument, "video " + video_id + " has no segment " + std::to_string(index));
  }
  return *s;
}

std::string AssemblyContext::sentence(const std::string& video_id, int index) const {
  if (auto it = resolved.find(video_id); it != resolved.end()) {
    const auto& v = video(video_id);
    for (size_t i = 0; i < v.segments.size() && i < it->second.resolved.size(); ++i) {
      if (v.segments[i].index == index) return it->second.resolved[i];
    }
  }
  return segment(video_id, index).sentence;
}

// ---------------------------------------------------------------------------
// Components

namespace {

struct Piece {
  std::string lead;
  std::string word;
  std::string trail;
};

std::vector<Piece> split_pieces(const std::string& sentence) {
  std::vector<Piece> out;
  for (const auto& raw : text::split_whitespace(sentence)) {
    size_t b = 0;
    size_t e = raw.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(raw[b])) && raw[b] != '[') ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1])) && raw[e - 1] != ']') --e;
    out.push_back({raw.substr(0, b), raw.substr(b, e - b), raw.substr(e)});
  }
  return out;
}

bool is_article(const std::string& w) {
  std::string l = text::to_lower(w);
  return l == "a" || l == "an" || l == "the" || l == "some";
}

}  // namespace

GroundedText ground_text(const std::string& sentence, const std::vector<corpus::ObjectAnnotation>& objects,
                         const std::string& verb) {
  GroundedText out;

  // one candidate per distinct label, longest label first
  struct Candidate {
    const corpus::ObjectAnnotation* object;
    std::vector<std::string> lemmas;
  };
  std::vector<Candidate> candidates;
  std::set<std::string> seen;
  for (const auto& o : objects) {
    std::string key = label_key(o.label);
    if (key.empty() || !seen.insert(key).second) continue;
    Candidate c{&o, {}};
    for (const auto& w : text::tokenize(o.label)) c.lemmas.push_back(text::lemmatize_noun(w));
    candidates.push_back(std::move(c));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.lemmas.size() > b.lemmas.size();
  });

  std::vector<Piece> pieces = split_pieces(sentence);
  std::vector<std::string> lemmas;
  for (const auto& p : pieces) lemmas.push_back(text::lemmatize_noun(text::to_lower(p.word)));

  std::map<const corpus::ObjectAnnotation*, std::string> assigned;
  std::vector<Piece> rewritten;
  for (size_t i = 0; i < pieces.size();) {
    const Candidate* match = nullptr;
    for (const auto& c : candidates) {
      size_t len = c.lemmas.size();
      if (len == 0 || i + len > pieces.size()) continue;
      bool ok = true;
      for (size_t k = 0; k < len && ok; ++k) {
        ok = lemmas[i + k] == c.lemmas[k] && (k + 1 == len || pieces[i + k].trail.empty()) &&
             (k == 0 || pieces[i + k].lead.empty());
      }
      if (ok) {
        match = &c;
        break;
      }
    }
    if (!match) {
      rewritten.push_back(pieces[i]);
      ++i;
      continue;
    }
    auto [it, inserted] = assigned.emplace(match->object, "");
    if (inserted) {
      it->second = "[Object" + std::to_string(assigned.size()) + "]";
      out.bindings[it->second] = *match->object;
    }
    Piece tag{pieces[i].lead, it->second, pieces[i + match->lemmas.size() - 1].trail};
    if (!rewritten.empty() && is_article(rewritten.back().word) && rewritten.back().trail.empty() &&
        tag.lead.empty()) {
      tag.lead = rewritten.back().lead;
      rewritten.pop_back();
    }
    rewritten.push_back(std::move(tag));
    i += match->lemmas.size();
  }

  // caption form: the leading imperative verb becomes a participle
  if (!verb.empty() && !rewritten.empty() && text::to_lower(rewritten.front().word) == text::to_lower(verb)) {
    std::string g = text::gerund(verb);
    if (std::isupper(static_cast<unsigned char>(rewritten.front().word[0]))) {
      g[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(g[0])));
    }
    rewritten.front().word = g;
  }

  std::vector<std::string> words;
  for (const auto& p : rewritten) words.push_back(p.lead + p.word + p.trail);
  out.text = text::join(words, " ");

  for (const auto& c : candidates) {
    if (!assigned.count(c.object)) out.image_only.push_back(*c.object);
  }
  return out;
}

GroundedText form_textual_description(const triplets::SegmentTriplet& triplet, const AssemblyContext& ctx) {
  const auto& seg = ctx.segment(triplet.video_id(), triplet.current.segment_index);
  return ground_text(ctx.sentence(triplet.video_id(), seg.index), seg.objects, triplet.current.verb);
}

ActionObject form_action_object_pair(const triplets::SegmentTriplet& triplet) {
  const auto& e = triplet.current;
  std::string verb = !e.verbs.empty() ? e.verbs.front() : e.verb;
  return {verb, e.ingredient};
}

std::vector<ActionObject> action_object_pairs(const triplets::SegmentTriplet& triplet) {
  std::vector<ActionObject> out;
  const auto& e = triplet.current;
  if (e.verbs.empty()) return {{e.verb, e.ingredient}};
  for (const auto& v : e.verbs) out.push_back({v, e.ingredient});
  return out;
}

std::vector<std::string> goal_templates(const std::string& recipe_name) {
  return {"Make " + recipe_name, "Cook " + recipe_name, "Prepare " + recipe_name};
}

std::vector<std::string> form_goal(const triplets::SegmentTriplet& triplet, const corpus::Corpus& corpus) {
  const corpus::VideoRecord* v = corpus.find(triplet.video_id());
  if (!v) throw Error(ErrorCode::kInvalidArgument, "unknown video " + triplet.video_id());
  const std::string* name = corpus.recipes.find(v->recipe_id);
  if (!name) throw Error(ErrorCode::kUnknownRecipeId, "recipe id '" + v->recipe_id + "'");
  return goal_templates(*name);
}

Preconditions form_preconditions(const triplets::SegmentTriplet& triplet, const corpus::Corpus& corpus) {
  const corpus::VideoRecord* v = corpus.find(triplet.video_id());
  if (!v) throw Error(ErrorCode::kInvalidArgument, "unknown video " + triplet.video_id());
  InferenceSet labels;
  for (int idx : {triplet.past.segment_index, triplet.current.segment_index}) {
    if (const corpus::Segment* s = v->segment(idx)) {
      for (const auto& o : s->objects) labels.add(o.label);
    }
  }
  Preconditions out;
  out.labels = labels.values();
  out.no_objects = out.labels.empty();
  return out;
}

std::vector<EffectQuestion> effect_questions(const std::string& ingredient) {
  return {
      {"color", "What color is " + ingredient + "?"},
      {"texture", "What texture is " + ingredient + "?"},
      {"shape", "What shape is " + ingredient + "?"},
      {"attribute", "What attribute is related to " + ingredient + "?"},
      {"property", "What property is related to " + ingredient + "?"},
  };
}

Effects extract_effects(const triplets::SegmentTriplet& triplet, const corpus::Corpus& corpus, RCProvider& rc) {
  const corpus::VideoRecord* v = corpus.find(triplet.video_id());
  if (!v) throw Error(ErrorCode::kInvalidArgument, "unknown video " + triplet.video_id());
  const corpus::Segment* cur = v->segment(triplet.current.segment_index);
  const corpus::Segment* fut = v->segment(triplet.future.segment_index);
  if (!cur || !fut) throw Error(ErrorCode::kInvalidArgument, "triplet segment missing in " + v->video_id);

  Effects out;
  out.window = corpus::slice_transcript(*v, cur->t_start, fut->t_start);
  out.no_transcript = out.window.no_transcript;
  if (out.window.empty()) return out;

  InferenceSet phrases;
  for (const auto& q : effect_questions(triplet.ingredient)) {
    std::optional<std::string> ans;
    try {
      ans = rc.answer(out.window.text, q.text);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderError) throw;
      throw Error(ErrorCode::kProviderError, "video " + v->video_id + " segment " +
                                                 std::to_string(cur->index) + ": " + e.what());
    }
    if (!ans) continue;
    std::string a = text::trim(*ans);
    if (a.empty()) continue;
    if (out.window.text.find(a) == std::string::npos) {
      throw Error(ErrorCode::kProviderError, "rc answer '" + a + "' is not a span of its context");
    }
    auto toks = text::tokenize(a);
    if (toks.size() > kMaxEffectTokens) continue;
    if (std::find(toks.begin(), toks.end(), q.kind) != toks.end()) continue;
    phrases.add(a);
  }
  out.phrases = phrases.values();
  return out;
}

std::pair<std::string, std::string> form_before_after(const triplets::SegmentTriplet& triplet,
                                                      const AssemblyContext& ctx) {
  return {ctx.sentence(triplet.video_id(), triplet.past.segment_index),
          ctx.sentence(triplet.video_id(), triplet.future.segment_index)};
}

CommonsenseInstance assemble_instance(const triplets::SegmentTriplet& triplet, const AssemblyContext& ctx,
                                      RCProvider& rc) {
  const auto& video = ctx.video(triplet.video_id());
  const auto& current = ctx.segment(video.video_id, triplet.current.segment_index);

  CommonsenseInstance inst;
  inst.instance_id = video.video_id + ":" + std::to_string(current.index) + ":" + triplet.ingredient;
  if (video.media && video.media->clips.count(current.index)) {
    inst.image = corpus::middle_frame(*video.media, current, video.video_id);
  } else {
    inst.flags.insert("text_only");
  }
  inst.text_description = form_textual_description(triplet, ctx);
  inst.action_object = form_action_object_pair(triplet);
  for (const auto& g : form_goal(triplet, *ctx.corpus)) inst.goals.add(g);

  Preconditions pre = form_preconditions(triplet, *ctx.corpus);
  for (const auto& l : pre.labels) inst.preconditions.add(l);
  if (pre.no_objects) inst.flags.insert("no_objects");

  Effects eff = extract_effects(triplet, *ctx.corpus, rc);
  for (const auto& e : eff.phrases) inst.effects.add(e);
  if (eff.no_transcript) inst.flags.insert("no_transcript");

  auto [before, after] = form_before_after(triplet, ctx);
  inst.before_events.add(before);
  inst.after_events.add(after);

  if (auto it = ctx.resolved.find(video.video_id); it != ctx.resolved.end() && it->second.failed) {
    inst.flags.insert("coref_failed");
  }
  inst.provenance.push_back({video.video_id, video.recipe_id, triplet, inst.image, inst.text_description});
  return inst;
}

// ---------------------------------------------------------------------------
// Merge

namespace {

bool provenance_less(const Provenance& a, const Provenance& b) {
  return std::tie(a.video_id, a.triplet.current.segment_index, a.triplet.ingredient,
                  a.triplet.past.segment_index, a.triplet.future.segment_index) <
         std::tie(b.video_id, b.triplet.current.segment_index, b.triplet.ingredient,
                  b.triplet.past.segment_index, b.triplet.future.segment_index);
}

bool provenance_same(const Provenance& a, const Provenance& b) {
  return !provenance_less(a, b) && !provenance_less(b, a);
}

}  // namespace

std::vector<CommonsenseInstance> merge_by_action_object(const std::vector<CommonsenseInstance>& instances) {
  std::map<ActionObject, std::vector<const CommonsenseInstance*>> groups;
  for (const auto& inst : instances) groups[inst.action_object].push_back(&inst);

  std::vector<CommonsenseInstance> out;
  for (const auto& [ao, members] : groups) {
    CommonsenseInstance merged;
    merged.action_object = ao;
    merged.instance_id = ao.verb + ":" + ao.ingredient;
    for (const auto* m : members) {
      merged.goals.merge(m->goals);
      merged.preconditions.merge(m->preconditions);
      merged.effects.merge(m->effects);
      merged.before_events.merge(m->before_events);
      merged.after_events.merge(m->after_events);
      merged.provenance.insert(merged.provenance.end(), m->provenance.begin(), m->provenance.end());
      merged.flags.insert(m->flags.begin(), m->flags.end());
    }
    std::stable_sort(merged.provenance.begin(), merged.provenance.end(), provenance_less);
    merged.provenance.erase(std::unique(merged.provenance.begin(), merged.provenance.end(), provenance_same),
                            merged.provenance.end());

    // representative: first source with an image, else the first source
    const Provenance* rep = merged.provenance.empty() ? nullptr : &merged.provenance.front();
    for (const auto& p : merged.provenance) {
      if (p.image) {
        rep = &p;
        break;
      }
    }
    if (rep) {
      merged.image = rep->image;
      merged.text_description = rep->text_description;
    }
    if (merged.image) merged.flags.erase("text_only");
    if (!merged.preconditions.empty()) merged.flags.erase("no_objects");
    if (!merged.effects.empty()) merged.flags.erase("no_transcript");
    out.push_back(std::move(merged));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json frame_to_json(const std::optional<corpus::FrameRef>& f) {
  if (!f) return nullptr;
  return {{"video_id", f->video_id},
          {"segment_index", f->segment_index},
          {"path", f->path},
          {"frame_index", f->frame_index},
          {"timestamp", f->timestamp}};
}

std::optional<corpus::FrameRef> frame_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  corpus::FrameRef f;
  f.video_id = j.at("video_id").get<std::string>();
  f.segment_index = j.at("segment_index").get<int>();
  f.path = j.at("path").get<std::string>();
  f.frame_index = j.at("frame_index").get<long>();
  f.timestamp = j.at("timestamp").get<double>();
  return f;
}

json object_to_json(const corpus::ObjectAnnotation& o) {
  json boxes = json::array();
  for (const auto& b : o.boxes) boxes.push_back({b.t, b.x1, b.y1, b.x2, b.y2});
  return {{"label", o.label}, {"boxes", boxes}};
}

corpus::ObjectAnnotation object_from_json(const json& j) {
  corpus::ObjectAnnotation o;
  o.label = j.at("label").get<std::string>();
  for (const auto& b : j.value("boxes", json::array())) {
    o.boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                       b.at(3).get<double>(), b.at(4).get<double>()});
  }
  return o;
}

void grounded_to_json(const GroundedText& g, json& into) {
  into["text_description"] = g.text;
  json bindings = json::object();
  for (const auto& [tag, o] : g.bindings) bindings[tag] = object_to_json(o);
  into["bindings"] = bindings;
  json image_only = json::array();
  for (const auto& o : g.image_only) image_only.push_back(object_to_json(o));
  into["image_only"] = image_only;
}

GroundedText grounded_from_json(const json& j) {
  GroundedText g;
  g.text = j.at("text_description").get<std::string>();
  const json bindings = j.value("bindings", json::object());
  for (const auto& [tag, o] : bindings.items()) g.bindings[tag] = object_from_json(o);
  for (const auto& o : j.value("image_only", json::array())) g.image_only.push_back(object_from_json(o));
  return g;
}

InferenceSet set_from_json(const json& j) {
  InferenceSet s;
  for (const auto& v : j) s.add(v.get<std::string>());
  return s;
}

}  // namespace

json instance_to_json(const CommonsenseInstance& inst) {
  json j;
  j["instance_id"] = inst.instance_id;
  j["image"] = frame_to_json(inst.image);
  grounded_to_json(inst.text_description, j);
  j["action_object"] = {{"verb", inst.action_object.verb}, {"ingredient", inst.action_object.ingredient}};
  j["goals"] = inst.goals.values();
  j["preconditions"] = inst.preconditions.values();
  j["effects"] = inst.effects.values();
  j["before_events"] = inst.before_events.values();
  j["after_events"] = inst.after_events.values();
  json prov = json::array();
  for (const auto& p : inst.provenance) {
    json jp;
    jp["video_id"] = p.video_id;
    jp["recipe_id"] = p.recipe_id;
    jp["triplet"] = triplets::triplet_to_json(p.triplet);
    jp["image"] = frame_to_json(p.image);
    grounded_to_json(p.text_description, jp);
    prov.push_back(jp);
  }
  j["provenance"] = prov;
  j["flags"] = inst.flags;
  return j;
}

CommonsenseInstance instance_from_json(const json& j) {
  try {
    CommonsenseInstance inst;
    inst.instance_id = j.at("instance_id").get<std::string>();
    inst.image = frame_from_json(j.at("image"));
    inst.text_description = grounded_from_json(j);
    inst.action_object = {j.at("action_object").at("verb").get<std::string>(),
                          j.at("action_object").at("ingredient").get<std::string>()};
    inst.goals = set_from_json(j.at("goals"));
    inst.preconditions = set_from_json(j.at("preconditions"));
    inst.effects = set_from_json(j.at("effects"));
    inst.before_events = set_from_json(j.at("before_events"));
    inst.after_events = set_from_json(j.at("after_events"));
    for (const auto& jp : j.at("provenance")) {
      Provenance p;
      p.video_id = jp.at("video_id").get<std::string>();
      p.recipe_id = jp.at("recipe_id").get<std::string>();
      p.triplet = triplets::triplet_from_json(jp.at("triplet"));
      p.image = frame_from_json(jp.at("image"));
      p.text_description = grounded_from_json(jp);
      inst.provenance.push_back(std::move(p));
    }
    for (const auto& f : j.value("flags", json::array())) inst.flags.insert(f.get<std::string>());
    return inst;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedAnnotation, std::string("bad instance record: ") + e.what());
  }
}

std::vector<CommonsenseInstance> read_dataset(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open dataset " + jsonl.string());
  std::vector<CommonsenseInstance> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(instance_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedAnnotation,
                  jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& jsonl, const std::vector<CommonsenseInstance>& instances) {
  std::ofstream out(jsonl, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + jsonl.string());
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Statistics

const std::vector<std::string>& stats_row_labels() {
  static const std::vector<std::string> labels = {
      "Videos",         "Images",          "Textual Descriptions", "Recipe Types",
      "Unique Objects", "Unique Actions",  "High-level Goals",     "Pre-conditions",
      "Effects",        "Before Events",   "After Events",
  };
  return labels;
}

std::vector<std::pair<std::string, long>> StatsReport::rows() const {
  const auto& l = stats_row_labels();
  return {{l[0], videos},         {l[1], images},          {l[2], textual_descriptions},
          {l[3], recipe_types},   {l[4], unique_objects},  {l[5], unique_actions},
          {l[6], goals},          {l[7], preconditions},   {l[8], effects},
          {l[9], before_events},  {l[10], after_events}};
}

StatsReport reference_statistics() {
  StatsReport s;
  s.videos = 1601;
  s.images = 8522;
  s.textual_descriptions = 8522;
  s.recipe_types = 89;
  s.unique_objects = 176;
  s.unique_actions = 93;
  s.goals = 10341;
  s.preconditions = 17209;
  s.effects = 6428;
  s.before_events = 12665;
  s.after_events = 12665;
  s.triplets = 12665;
  return s;
}

StatsReport compute_statistics(const std::vector<CommonsenseInstance>& dataset) {
  StatsReport s;
  std::set<std::string> videos, recipes, objects, actions;
  std::set<std::pair<std::string, int>> frames, descriptions;
  for (const auto& inst : dataset) {
    ++s.instances;
    objects.insert(inst.action_object.ingredient);
    actions.insert(inst.action_object.verb);
    s.goals += static_cast<long>(inst.goals.size());
    s.preconditions += static_cast<long>(inst.preconditions.size());
    s.effects += static_cast<long>(inst.effects.size());
    s.before_events += static_cast<long>(inst.before_events.size());
    s.after_events += static_cast<long>(inst.after_events.size());
    for (const auto& p : inst.provenance) {
      ++s.triplets;
      videos.insert(p.video_id);
      recipes.insert(p.recipe_id);
      descriptions.emplace(p.video_id, p.triplet.current.segment_index);
      if (p.image) frames.emplace(p.video_id, p.triplet.current.segment_index);
    }
  }
  s.videos = static_cast<long>(videos.size());
  s.images = static_cast<long>(frames.size());
  s.textual_descriptions = static_cast<long>(descriptions.size());
  s.recipe_types = static_cast<long>(recipes.size());
  s.unique_objects = static_cast<long>(objects.size());
  s.unique_actions = static_cast<long>(actions.size());
  if (s.images != s.triplets) {
    s.notes.push_back("images counts distinct frames (" + std::to_string(s.images) + ") while " +
                      std::to_string(s.triplets) + " source triplets were assembled");
  }
  return s;
}

json stats_to_json(const StatsReport& stats) {
  json rows = json::array();
  for (const auto& [label, value] : stats.rows()) rows.push_back({{"label", label}, {"value", value}});
  return {{"rows", rows},
          {"triplets", stats.triplets},
          {"instances", stats.instances},
          {"notes", stats.notes}};
}

std::string stats_to_text(const StatsReport& stats) {
  std::ostringstream out;
  size_t width = 0;
  for (const auto& l : stats_row_labels()) width = std::max(width, l.size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "Annotated Input Type" << "#Samples\n";
  for (const auto& [label, value] : stats.rows()) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << label << value << "\n";
  }
  for (const auto& n : stats.notes) out << "note: " << n << "\n";
  return out.str();
}

}  // namespace actionsense::assembly
