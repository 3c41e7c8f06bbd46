#include <doctest.h>

#include "actionsense/text.hpp"

using namespace actionsense::text;

TEST_CASE("tokenize lowercases, strips punctuation and keeps object tags") {
  CHECK(tokenize("Fry the Bacon!") == std::vector<std::string>{"fry", "the", "bacon"});
  CHECK(tokenize("put [Object3] on [Object12].") == std::vector<std::string>{"put", "[object3]", "on", "[object12]"});
  CHECK(tokenize("don't") == std::vector<std::string>{"dont"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("noun lemmatization") {
  CHECK(lemmatize_noun("tomatoes") == "tomato");
  CHECK(lemmatize_noun("potatoes") == "potato");
  CHECK(lemmatize_noun("onions") == "onion");
  CHECK(lemmatize_noun("cubes") == "cube");
  CHECK(lemmatize_noun("bacon") == "bacon");
  CHECK(lemmatize_noun("glass") == "glass");
}

TEST_CASE("gerunds") {
  CHECK(gerund("cook") == "cooking");
  CHECK(gerund("cut") == "cutting");
  CHECK(gerund("bake") == "baking");
  CHECK(gerund("fry") == "frying");
  CHECK(gerund("crack") == "cracking");
}

TEST_CASE("normalize_phrase merges plural and case variants") {
  CHECK(normalize_phrase("Chopping Boards.") == normalize_phrase("chopping board"));
  CHECK(normalize_phrase("knife") != normalize_phrase("fork"));
}

TEST_CASE("porter stemmer reference vocabulary") {
  const std::vector<std::pair<const char*, const char*>> cases = {
      {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},           {"cats", "cat"},
      {"feed", "feed"},       {"agreed", "agre"},     {"plastered", "plaster"}, {"motoring", "motor"},
      {"sing", "sing"},       {"conflated", "conflat"}, {"troubled", "troubl"}, {"sized", "size"},
      {"hopping", "hop"},     {"tanned", "tan"},      {"falling", "fall"},      {"hissing", "hiss"},
      {"fizzed", "fizz"},     {"failing", "fail"},    {"filing", "file"},       {"happy", "happi"},
      {"sky", "sky"},         {"relational", "relat"}, {"conditional", "condit"}, {"rational", "ration"},
      {"generalization", "gener"}, {"hopeful", "hope"}, {"goodness", "good"},  {"electrical", "electr"},
      {"triplicate", "triplic"}, {"sensibiliti", "sensibl"}, {"adjustment", "adjust"}, {"roll", "roll"},
  };
  for (const auto& [in, out] : cases) {
    CAPTURE(in);
    CHECK(porter_stem(in) == out);
  }
}

TEST_CASE("hashes") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("split, join, trim") {
  CHECK(split_whitespace(" a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
  CHECK(join({"a", "b"}, "+") == "a+b");
  CHECK(trim("  x ") == "x");
  CHECK(to_lower("AbC") == "abc");
}
