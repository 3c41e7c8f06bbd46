#include "actionsense/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "actionsense/error.hpp"
#include "actionsense/text.hpp"

namespace actionsense::extraction {

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

bool is_nominal(const std::string& pos) { return pos == "NOUN" || pos == "PROPN"; }

}  // namespace

void ParseResult::validate() const {
  const int n = static_cast<int>(tokens.size());
  std::vector<int> head(static_cast<size_t>(n), -2);
  int roots = 0;
  for (const auto& a : arcs) {
    if (a.dependent < 0 || a.dependent >= n || a.head < -1 || a.head >= n || a.head == a.dependent) {
      throw Error(ErrorCode::kProviderError, "parse arc out of range");
    }
    if (head[static_cast<size_t>(a.dependent)] != -2) {
      throw Error(ErrorCode::kProviderError, "token " + std::to_string(a.dependent) + " has two heads");
    }
    head[static_cast<size_t>(a.dependent)] = a.head;
    if (a.head == -1) ++roots;
  }
  if (n == 0) return;
  if (roots != 1) throw Error(ErrorCode::kProviderError, "parse must have exactly one root");
  for (int i = 0; i < n; ++i) {
    if (head[static_cast<size_t>(i)] == -2) {
      throw Error(ErrorCode::kProviderError, "token " + std::to_string(i) + " has no head");
    }
    int steps = 0;
    for (int cur = i; cur != -1; cur = head[static_cast<size_t>(cur)]) {
      if (++steps > n) throw Error(ErrorCode::kProviderError, "parse arcs contain a cycle");
    }
  }
}

json parse_to_json(const ParseResult& parse) {
  json tokens = json::array();
  for (const auto& t : parse.tokens) {
    tokens.push_back({{"text", t.text}, {"lemma", t.lemma}, {"pos", t.pos}});
  }
  json arcs = json::array();
  for (const auto& a : parse.arcs) arcs.push_back({a.head, a.dependent, a.relation});
  return {{"tokens", tokens}, {"arcs", arcs}};
}

ParseResult parse_from_json(const json& j) {
  ParseResult out;
  try {
    for (const auto& t : j.at("tokens")) {
      out.tokens.push_back({t.at("text").get<std::string>(), t.at("lemma").get<std::string>(),
                            t.at("pos").get<std::string>()});
    }
    for (const auto& a : j.at("arcs")) {
      out.arcs.push_back({a.at(0).get<int>(), a.at(1).get<int>(), a.at(2).get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("malformed parse: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<TableCorefProvider> TableCorefProvider::from_file(const std::filesystem::path& path) {
  json doc = read_json(path);
  std::map<std::string, std::string> table;
  for (const auto& [k, v] : doc.items()) table.emplace(k, v.get<std::string>());
  return std::make_unique<TableCorefProvider>(std::move(table));
}

std::vector<std::string> TableCorefProvider::resolve(const std::vector<std::string>& texts) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = table_.find(t);
    out.push_back(it == table_.end() ? t : it->second);
  }
  return out;
}

std::unique_ptr<CannedParseProvider> CannedParseProvider::from_file(const std::filesystem::path& path) {
  json doc = read_json(path);
  std::map<std::string, ParseResult> table;
  for (const auto& [k, v] : doc.items()) table.emplace(k, parse_from_json(v));
  return std::make_unique<CannedParseProvider>(std::move(table));
}

ParseResult CannedParseProvider::parse(const std::string& sentence) {
  auto it = table_.find(sentence);
  if (it == table_.end()) {
    throw Error(ErrorCode::kProviderError, "no canned parse for '" + sentence + "'");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Lexicon parser

LexiconParseProvider::LexiconParseProvider(const json& lexicon) {
  if (!lexicon.is_object()) throw Error(ErrorCode::kConfigError, "lexicon must be an object");
  for (const auto& [pos, forms] : lexicon.items()) {
    auto& table = by_pos_[pos];
    if (forms.is_array()) {
      for (const auto& f : forms) {
        std::string form = text::to_lower(f.get<std::string>());
        std::string lemma = pos == "NOUN" ? text::lemmatize_noun(form) : form;
        table[form] = {lemma};
      }
    } else if (forms.is_object()) {
      for (const auto& [form, lemma] : forms.items()) {
        table[text::to_lower(form)] = {text::to_lower(lemma.get<std::string>())};
      }
    } else {
      throw Error(ErrorCode::kConfigError, "lexicon entry for " + pos + " must be array or object");
    }
  }
}

std::unique_ptr<LexiconParseProvider> LexiconParseProvider::from_file(const std::filesystem::path& path) {
  return std::make_unique<LexiconParseProvider>(read_json(path));
}

namespace {

std::vector<std::string> split_words_and_punct(const std::string& sentence) {
  std::vector<std::string> out;
  for (const auto& raw : text::split_whitespace(sentence)) {
    size_t b = 0;
    size_t e = raw.size();
    std::vector<std::string> trailing;
    while (b < e && std::ispunct(static_cast<unsigned char>(raw[b])) && raw[b] != '[') {
      out.emplace_back(1, raw[b]);
      ++b;
    }
    while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1])) && raw[e - 1] != ']') {
      trailing.emplace_back(1, raw[e - 1]);
      --e;
    }
    if (e > b) out.push_back(raw.substr(b, e - b));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

}  // namespace

ParseResult LexiconParseProvider::parse(const std::string& sentence) {
  ParseResult result;
  auto words = split_words_and_punct(sentence);
  const int n = static_cast<int>(words.size());
  if (n == 0) return result;

  auto lookup = [&](const std::string& pos, const std::string& form) -> const Entry* {
    auto pit = by_pos_.find(pos);
    if (pit == by_pos_.end()) return nullptr;
    auto it = pit->second.find(form);
    return it == pit->second.end() ? nullptr : &it->second;
  };

  static const std::vector<std::string> kClosedClasses = {"DET", "ADP", "PRON", "CCONJ",
                                                          "PART", "NUM", "ADV", "ADJ"};
  for (int i = 0; i < n; ++i) {
    const std::string& w = words[static_cast<size_t>(i)];
    std::string form = text::to_lower(w);
    Token tok{w, form, "X"};
    if (w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]))) {
      tok.pos = "PUNCT";
      result.tokens.push_back(tok);
      continue;
    }
    const Entry* verb = lookup("VERB", form);
    const Entry* noun = lookup("NOUN", form);
    if (verb && noun) {
      // verb reading at clause starts, noun reading elsewhere
      bool clause_start = i == 0;
      if (i > 0) {
        const std::string& prev = result.tokens.back().pos;
        clause_start = prev == "CCONJ" || prev == "PUNCT" || prev == "ADV" || prev == "PART";
      }
      if (clause_start) {
        tok.pos = "VERB";
        tok.lemma = verb->lemma;
      } else {
        tok.pos = "NOUN";
        tok.lemma = noun->lemma;
      }
    } else {
      bool found = false;
      for (const auto& pos : kClosedClasses) {
        if (const Entry* e = lookup(pos, form)) {
          tok.pos = pos;
          tok.lemma = e->lemma;
          found = true;
          break;
        }
      }
      if (!found && verb) {
        tok.pos = "VERB";
        tok.lemma = verb->lemma;
      } else if (!found && noun) {
        tok.pos = "NOUN";
        tok.lemma = noun->lemma;
      } else if (!found && lookup("PROPN", form)) {
        tok.pos = "PROPN";
        tok.lemma = lookup("PROPN", form)->lemma;
      }
    }
    result.tokens.push_back(tok);
  }

  auto pos_at = [&](int i) -> const std::string& { return result.tokens[static_cast<size_t>(i)].pos; };
  auto nominal = [&](int i) { return is_nominal(pos_at(i)); };

  int root = -1;
  for (int i = 0; i < n && root < 0; ++i) {
    if (pos_at(i) == "VERB") root = i;
  }
  for (int i = 0; i < n && root < 0; ++i) {
    if (nominal(i)) root = i;
  }
  if (root < 0) root = 0;

  std::vector<int> head(static_cast<size_t>(n), -2);
  std::vector<std::string> rel(static_cast<size_t>(n));
  head[static_cast<size_t>(root)] = -1;
  rel[static_cast<size_t>(root)] = "root";

  auto preceding_verb = [&](int i) {
    for (int k = i - 1; k >= 0; --k) {
      if (pos_at(k) == "VERB") return k;
    }
    return -1;
  };
  auto set = [&](int dep, int h, const std::string& r) {
    if (dep == root) return;
    if (h == dep || h < 0) h = root;
    head[static_cast<size_t>(dep)] = h;
    rel[static_cast<size_t>(dep)] = r;
  };

  // noun runs: last noun is the head, earlier ones are compounds
  std::vector<int> run_head(static_cast<size_t>(n), -1);
  for (int i = 0; i < n;) {
    if (!nominal(i)) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && nominal(j + 1)) ++j;
    for (int k = i; k <= j; ++k) run_head[static_cast<size_t>(k)] = j;
    i = j + 1;
  }

  // head of the noun run that a modifier at i leads into, or -1
  auto next_run_head = [&](int i) {
    for (int k = i + 1; k < n; ++k) {
      const std::string& p = pos_at(k);
      if (is_nominal(p)) return run_head[static_cast<size_t>(k)];
      if (p != "DET" && p != "ADJ" && p != "NUM") return -1;
    }
    return -1;
  };

  for (int i = 0; i < n; ++i) {
    if (i == root) continue;
    const std::string& p = pos_at(i);
    if (is_nominal(p) && run_head[static_cast<size_t>(i)] != i) {
      set(i, run_head[static_cast<size_t>(i)], "compound");
    } else if (is_nominal(p) || p == "PRON") {
      // start of this noun phrase, skipping modifiers
      int start = i;
      if (is_nominal(p)) {
        while (start > 0 && run_head[static_cast<size_t>(start - 1)] == i) --start;
      }
      while (start > 0 && (pos_at(start - 1) == "DET" || pos_at(start - 1) == "ADJ" ||
                           pos_at(start - 1) == "NUM")) {
        --start;
      }
      int verb = preceding_verb(start);
      int adp = -1;
      for (int k = start - 1; k > verb; --k) {
        if (pos_at(k) == "ADP") {
          adp = k;
          break;
        }
      }
      if (adp >= 0 && result.tokens[static_cast<size_t>(adp)].lemma == "of" && adp > 0 &&
          is_nominal(pos_at(adp - 1))) {
        set(i, run_head[static_cast<size_t>(adp - 1)], "nmod");
      } else if (verb >= 0) {
        set(i, verb, adp >= 0 ? "obl" : "obj");
      } else {
        int next_verb = -1;
        for (int k = i + 1; k < n; ++k) {
          if (pos_at(k) == "VERB") {
            next_verb = k;
            break;
          }
        }
        set(i, next_verb >= 0 ? next_verb : root, next_verb >= 0 ? "nsubj" : "dep");
      }
    } else if (p == "DET" || p == "ADJ" || p == "NUM") {
      int h = next_run_head(i);
      std::string r = p == "DET" ? "det" : (p == "ADJ" ? "amod" : "nummod");
      if (h >= 0) {
        set(i, h, r);
      } else {
        int v = preceding_verb(i);
        set(i, v >= 0 ? v : root, p == "ADJ" ? "xcomp" : "dep");
      }
    } else if (p == "ADP") {
      int h = next_run_head(i);
      if (h < 0 && i + 1 < n && pos_at(i + 1) == "PRON") h = i + 1;
      if (h >= 0) {
        set(i, h, "case");
      } else {
        int v = preceding_verb(i);
        set(i, v >= 0 ? v : root, "dep");
      }
    } else if (p == "VERB") {
      set(i, root, pos_at(root) == "VERB" ? "conj" : "dep");
    } else {
      std::string r = p == "PUNCT" ? "punct" : p == "CCONJ" ? "cc" : p == "ADV" ? "advmod"
                                              : p == "PART" ? "mark" : "dep";
      int v = preceding_verb(i);
      if (p == "CCONJ" || p == "PART") {
        // coordinators and infinitive markers attach to the next verb
        for (int k = i + 1; k < n; ++k) {
          if (pos_at(k) == "VERB") {
            v = k;
            break;
          }
        }
      }
      set(i, v >= 0 ? v : root, r);
    }
  }

  for (int i = 0; i < n; ++i) {
    result.arcs.push_back({head[static_cast<size_t>(i)], i, rel[static_cast<size_t>(i)]});
  }
  result.validate();
  return result;
}

// ---------------------------------------------------------------------------
// Remote and cached providers

std::vector<std::string> HttpCorefProvider::resolve(const std::vector<std::string>& texts) {
  json response = client_.post({{"task", "coref"}, {"inputs", texts}});
  try {
    auto outputs = response.at("outputs").get<std::vector<std::string>>();
    if (outputs.size() != texts.size()) {
      throw Error(ErrorCode::kProviderError, "coref output length mismatch");
    }
    return outputs;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("bad coref response: ") + e.what());
  }
}

ParseResult HttpParseProvider::parse(const std::string& sentence) {
  json response = client_.post({{"task", "parse"}, {"inputs", json::array({sentence})}});
  try {
    const json& outputs = response.at("outputs");
    if (!outputs.is_array() || outputs.size() != 1) {
      throw Error(ErrorCode::kProviderError, "parse output length mismatch");
    }
    ParseResult r = parse_from_json(outputs.at(0));
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError, std::string("bad parse response: ") + e.what());
  }
}

CachingCorefProvider::CachingCorefProvider(std::shared_ptr<CorefProvider> inner,
                                           provider::ResponseCache cache, provider::RetryPolicy retry)
    : inner_(std::move(inner)), cache_(std::move(cache)), retry_(retry) {}

std::vector<std::string> CachingCorefProvider::resolve(const std::vector<std::string>& texts) {
  const std::string key = json(texts).dump();
  if (auto hit = cache_.get("coref", key)) return hit->get<std::vector<std::string>>();
  auto out = provider::with_retries(retry_, [&] { return inner_->resolve(texts); });
  if (out.size() != texts.size()) throw Error(ErrorCode::kProviderError, "coref output length mismatch");
  cache_.put("coref", key, out);
  return out;
}

CachingParseProvider::CachingParseProvider(std::shared_ptr<ParseProvider> inner,
                                           provider::ResponseCache cache, provider::RetryPolicy retry)
    : inner_(std::move(inner)), cache_(std::move(cache)), retry_(retry) {}

ParseResult CachingParseProvider::parse(const std::string& sentence) {
  if (auto hit = cache_.get("parse", sentence)) return parse_from_json(*hit);
  ParseResult r = provider::with_retries(retry_, [&] { return inner_->parse(sentence); });
  cache_.put("parse", sentence, parse_to_json(r));
  return r;
}

// ---------------------------------------------------------------------------
// Operations

ResolvedVideo resolve_coreferences(const corpus::VideoRecord& video, CorefProvider& provider) {
  ResolvedVideo out;
  out.video_id = video.video_id;
  for (const auto& s : video.segments) out.original.push_back(s.sentence);
  try {
    out.resolved = provider.resolve(out.original);
    if (out.resolved.size() != out.original.size()) {
      throw Error(ErrorCode::kProviderError, "coref output length mismatch");
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kProviderError) throw;
    out.resolved = out.original;
    out.failed = true;
    out.error = "video " + video.video_id + ": " + e.what();
  }
  return out;
}

std::vector<VerbIngredientPair> pairs_from_parse(const ParseResult& parse, const std::string& video_id,
                                                 int segment_index, const ExtractionOptions& options) {
  const auto& toks = parse.tokens;
  auto noun_lemma = [&](int idx) {
    std::vector<std::pair<int, std::string>> parts;
    for (const auto& a : parse.arcs) {
      if (a.head == idx && a.relation == "compound") {
        parts.emplace_back(a.dependent, text::to_lower(toks[static_cast<size_t>(a.dependent)].lemma));
      }
    }
    parts.emplace_back(idx, text::to_lower(toks[static_cast<size_t>(idx)].lemma));
    std::sort(parts.begin(), parts.end());
    std::vector<std::string> words;
    for (auto& [i, w] : parts) {
      if (!w.empty()) words.push_back(w);
    }
    return text::join(words, " ");
  };

  // (verb token, noun token)
  std::vector<std::pair<int, int>> links;
  for (const auto& a : parse.arcs) {
    if (a.head < 0) continue;
    const Token& h = toks[static_cast<size_t>(a.head)];
    const Token& d = toks[static_cast<size_t>(a.dependent)];
    if (h.pos == "VERB" && is_nominal(d.pos) && options.relations.count(a.relation)) {
      links.emplace_back(a.head, a.dependent);
    }
  }
  if (options.propagate_conj) {
    // follow chains of conjoined nouns
    for (size_t i = 0; i < links.size(); ++i) {
      auto [verb, noun] = links[i];
      for (const auto& a : parse.arcs) {
        if (a.head == noun && a.relation == "conj" && is_nominal(toks[static_cast<size_t>(a.dependent)].pos)) {
          std::pair<int, int> link{verb, a.dependent};
          if (std::find(links.begin(), links.end(), link) == links.end()) links.push_back(link);
        }
      }
    }
  }
  std::sort(links.begin(), links.end());

  std::vector<VerbIngredientPair> out;
  for (auto [v, nidx] : links) {
    VerbIngredientPair p;
    p.verb = text::to_lower(toks[static_cast<size_t>(v)].lemma);
    p.ingredient = noun_lemma(nidx);
    p.video_id = video_id;
    p.segment_index = segment_index;
    p.verb_token = v;
    if (p.verb.empty() || p.ingredient.empty()) continue;
    bool dup = std::any_of(out.begin(), out.end(), [&](const VerbIngredientPair& q) {
      return q.verb == p.verb && q.ingredient == p.ingredient;
    });
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

std::vector<VerbIngredientPair> extract_verb_ingredient_pairs(const std::string& resolved_sentence,
                                                              ParseProvider& provider,
                                                              const std::string& video_id,
                                                              int segment_index,
                                                              const ExtractionOptions& options) {
  if (text::trim(resolved_sentence).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty sentence for " + video_id + " segment " +
                                                 std::to_string(segment_index));
  }
  ParseResult parse;
  try {
    parse = provider.parse(resolved_sentence);
    parse.validate();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kProviderError) throw;
    throw Error(ErrorCode::kProviderError, "video " + video_id + " segment " +
                                               std::to_string(segment_index) + ": " + e.what());
  }
  return pairs_from_parse(parse, video_id, segment_index, options);
}

LemmaCounts count_lemma_frequencies(const std::vector<VerbIngredientPair>& pairs) {
  LemmaCounts counts;
  for (const auto& p : pairs) {
    ++counts.verb_counts[p.verb];
    ++counts.noun_counts[p.ingredient];
  }
  return counts;
}

std::vector<VerbIngredientPair> filter_pairs_by_frequency(const std::vector<VerbIngredientPair>& pairs,
                                                          const LemmaCounts& counts, int min_count) {
  auto count_of = [](const std::map<std::string, int>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
  };
  std::vector<VerbIngredientPair> out;
  for (const auto& p : pairs) {
    if (count_of(counts.verb_counts, p.verb) >= min_count &&
        count_of(counts.noun_counts, p.ingredient) >= min_count) {
      out.push_back(p);
    }
  }
  return out;
}

json pair_to_json(const VerbIngredientPair& p) {
  return {{"verb", p.verb},
          {"ingredient", p.ingredient},
          {"video_id", p.video_id},
          {"segment_index", p.segment_index}};
}

}  // namespace actionsense::extraction
