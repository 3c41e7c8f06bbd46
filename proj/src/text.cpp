#include "actionsense/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <unordered_map>

#include "actionsense/error.hpp"

namespace actionsense::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::string lowered = to_lower(s);
  std::string cleaned;
  cleaned.reserve(lowered.size());
  for (size_t i = 0; i < lowered.size(); ++i) {
    char c = lowered[i];
    if (c == '[') {
      // keep "[object12]" style tags whole
      size_t close = lowered.find(']', i);
      if (close != std::string::npos && lowered.compare(i + 1, 6, "object") == 0) {
        bool digits = true;
        for (size_t k = i + 7; k < close; ++k) {
          if (!std::isdigit(static_cast<unsigned char>(lowered[k]))) digits = false;
        }
        if (digits) {
          cleaned.push_back(' ');
          cleaned.append(lowered, i, close - i + 1);
          cleaned.push_back(' ');
          i = close;
          continue;
        }
      }
    }
    if (c == '\'') continue;
    if (std::isalnum(static_cast<unsigned char>(c)) || (c & 0x80)) {
      cleaned.push_back(c);
    } else {
      cleaned.push_back(' ');
    }
  }
  return split_whitespace(cleaned);
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel_char(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

const std::unordered_map<std::string, std::string>& irregular_plurals() {
  static const std::unordered_map<std::string, std::string> table = {
      {"leaves", "leaf"},     {"knives", "knife"},   {"halves", "half"},
      {"loaves", "loaf"},     {"shelves", "shelf"},  {"children", "child"},
      {"teeth", "tooth"},     {"feet", "foot"},      {"geese", "goose"},
      {"mice", "mouse"},      {"people", "person"},  {"men", "man"},
      {"women", "woman"},     {"cloves", "clove"},   {"olives", "olive"},
      {"chives", "chive"},    {"slices", "slice"},   {"pieces", "piece"},
      {"sauces", "sauce"},    {"spices", "spice"},   {"juices", "juice"},
      {"cheeses", "cheese"},  {"noodles", "noodle"}, {"vegetables", "vegetable"},
      {"apples", "apple"},    {"pickles", "pickle"}, {"bubbles", "bubble"},
      {"edges", "edge"},      {"sides", "side"},     {"plates", "plate"},
  };
  return table;
}

}  // namespace

std::string lemmatize_noun(std::string_view word) {
  std::string w = to_lower(word);
  if (auto it = irregular_plurals().find(w); it != irregular_plurals().end()) return it->second;
  if (w.size() <= 3) return w;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "oes")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "sses") ||
      ends_with(w, "xes") || ends_with(w, "zes")) {
    return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (ends_with(w, "s")) return w.substr(0, w.size() - 1);
  return w;
}

std::string gerund(std::string_view verb) {
  std::string v = to_lower(verb);
  static const std::unordered_map<std::string, std::string> irregular = {
      {"be", "being"}, {"see", "seeing"}, {"die", "dying"}, {"lie", "lying"},
      {"tie", "tying"}, {"open", "opening"}, {"listen", "listening"},
      {"season", "seasoning"}, {"soften", "softening"}, {"sweeten", "sweetening"},
      {"flatten", "flattening"}, {"drizzle", "drizzling"}, {"sprinkle", "sprinkling"},
      {"layer", "layering"}, {"simmer", "simmering"}, {"scatter", "scattering"},
      {"water", "watering"}, {"butter", "buttering"}, {"batter", "battering"},
      {"gather", "gathering"}, {"cover", "covering"}, {"deliver", "delivering"},
  };
  if (auto it = irregular.find(v); it != irregular.end()) return it->second;
  if (v.empty()) return v;
  if (ends_with(v, "ie")) return v.substr(0, v.size() - 2) + "ying";
  if (ends_with(v, "ee") || ends_with(v, "ye") || ends_with(v, "oe")) return v + "ing";
  if (v.size() > 2 && v.back() == 'e') return v.substr(0, v.size() - 1) + "ing";
  // consonant-vowel-consonant ending in a one-vowel-group word doubles
  if (v.size() >= 3) {
    char c3 = v[v.size() - 1];
    char c2 = v[v.size() - 2];
    char c1 = v[v.size() - 3];
    int vowel_groups = 0;
    bool prev_vowel = false;
    for (char c : v) {
      bool vw = is_vowel_char(c);
      if (vw && !prev_vowel) ++vowel_groups;
      prev_vowel = vw;
    }
    if (vowel_groups == 1 && !is_vowel_char(c1) && is_vowel_char(c2) && !is_vowel_char(c3) &&
        c3 != 'w' && c3 != 'x' && c3 != 'y') {
      return v + c3 + "ing";
    }
  }
  return v + "ing";
}

std::string normalize_phrase(std::string_view s) {
  auto tokens = tokenize(s);
  if (tokens.empty()) return {};
  tokens.back() = lemmatize_noun(tokens.back());
  return join(tokens, " ");
}

// ---------------------------------------------------------------------------
// Porter stemmer

namespace {

class PorterStemmer {
 public:
  explicit PorterStemmer(std::string word) : b_(std::move(word)) {}

  std::string run() {
    if (b_.size() <= 2) return b_;
    k_ = static_cast<int>(b_.size()) - 1;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, static_cast<size_t>(k_) + 1);
  }

 private:
  bool cons(int i) const {
    switch (b_[static_cast<size_t>(i)]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // number of VC sequences between 0 and j_
  int m() const {
    int n = 0;
    int i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool doublec(int j) const {
    if (j < 1) return false;
    if (b_[static_cast<size_t>(j)] != b_[static_cast<size_t>(j) - 1]) return false;
    return cons(j);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    char ch = b_[static_cast<size_t>(i)];
    return !(ch == 'w' || ch == 'x' || ch == 'y');
  }

  bool ends(std::string_view s) {
    int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (b_.compare(static_cast<size_t>(k_ - len + 1), static_cast<size_t>(len), s) != 0) return false;
    j_ = k_ - len;
    return true;
  }

  void setto(std::string_view s) {
    b_.replace(static_cast<size_t>(j_) + 1, static_cast<size_t>(k_ - j_), s);
    k_ = j_ + static_cast<int>(s.size());
    b_.resize(static_cast<size_t>(k_) + 1);
  }

  void r(std::string_view s) {
    if (m() > 0) setto(s);
  }

  void step1ab() {
    if (b_[static_cast<size_t>(k_)] == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        setto("i");
      } else if (b_[static_cast<size_t>(k_) - 1] != 's') {
        --k_;
      }
    }
    b_.resize(static_cast<size_t>(k_) + 1);
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      b_.resize(static_cast<size_t>(k_) + 1);
      if (ends("at")) {
        setto("ate");
      } else if (ends("bl")) {
        setto("ble");
      } else if (ends("iz")) {
        setto("ize");
      } else if (doublec(k_)) {
        char ch = b_[static_cast<size_t>(k_)];
        if (ch != 'l' && ch != 's' && ch != 'z') --k_;
      } else {
        j_ = k_;
        if (m() == 1 && cvc(k_)) {
          j_ = k_;
          setto_append('e');
        }
      }
    }
    b_.resize(static_cast<size_t>(k_) + 1);
  }

  void setto_append(char c) {
    b_.resize(static_cast<size_t>(k_) + 1);
    b_.push_back(c);
    ++k_;
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[static_cast<size_t>(k_)] = 'i';
  }

  void step2() {
    if (k_ < 1) return;
    switch (b_[static_cast<size_t>(k_) - 1]) {
      case 'a':
        if (ends("ational")) { r("ate"); break; }
        if (ends("tional")) { r("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { r("ence"); break; }
        if (ends("anci")) { r("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { r("ize"); break; }
        break;
      case 'l':
        if (ends("bli")) { r("ble"); break; }
        if (ends("alli")) { r("al"); break; }
        if (ends("entli")) { r("ent"); break; }
        if (ends("eli")) { r("e"); break; }
        if (ends("ousli")) { r("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { r("ize"); break; }
        if (ends("ation")) { r("ate"); break; }
        if (ends("ator")) { r("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { r("al"); break; }
        if (ends("iveness")) { r("ive"); break; }
        if (ends("fulness")) { r("ful"); break; }
        if (ends("ousness")) { r("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { r("al"); break; }
        if (ends("iviti")) { r("ive"); break; }
        if (ends("biliti")) { r("ble"); break; }
        break;
      case 'g':
        if (ends("logi")) { r("log"); break; }
        break;
      default:
        break;
    }
  }

  void step3() {
    switch (b_[static_cast<size_t>(k_)]) {
      case 'e':
        if (ends("icate")) { r("ic"); break; }
        if (ends("ative")) { r(""); break; }
        if (ends("alize")) { r("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { r("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { r("ic"); break; }
        if (ends("ful")) { r(""); break; }
        break;
      case 's':
        if (ends("ness")) { r(""); break; }
        break;
      default:
        break;
    }
  }

  void step4() {
    if (k_ < 1) return;
    switch (b_[static_cast<size_t>(k_) - 1]) {
      case 'a':
        if (ends("al")) break;
        return;
      case 'c':
        if (ends("ance")) break;
        if (ends("ence")) break;
        return;
      case 'e':
        if (ends("er")) break;
        return;
      case 'i':
        if (ends("ic")) break;
        return;
      case 'l':
        if (ends("able")) break;
        if (ends("ible")) break;
        return;
      case 'n':
        if (ends("ant")) break;
        if (ends("ement")) break;
        if (ends("ment")) break;
        if (ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 &&
            (b_[static_cast<size_t>(j_)] == 's' || b_[static_cast<size_t>(j_)] == 't')) {
          break;
        }
        if (ends("ou")) break;
        return;
      case 's':
        if (ends("ism")) break;
        return;
      case 't':
        if (ends("ate")) break;
        if (ends("iti")) break;
        return;
      case 'u':
        if (ends("ous")) break;
        return;
      case 'v':
        if (ends("ive")) break;
        return;
      case 'z':
        if (ends("ize")) break;
        return;
      default:
        return;
    }
    if (m() > 1) {
      k_ = j_;
      b_.resize(static_cast<size_t>(k_) + 1);
    }
  }

  void step5() {
    j_ = k_;
    if (b_[static_cast<size_t>(k_)] == 'e') {
      int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[static_cast<size_t>(k_)] == 'l' && doublec(k_) && m() > 1) --k_;
    b_.resize(static_cast<size_t>(k_) + 1);
  }

  std::string b_;
  int k_ = 0;
  int j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w = to_lower(word);
  for (char c : w) {
    if (c < 'a' || c > 'z') return w;
  }
  return PorterStemmer(std::move(w)).run();
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "sha256 digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex.append(buf, 2);
  }
  return hex;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace actionsense::text
