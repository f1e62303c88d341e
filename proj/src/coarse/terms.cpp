#include "scenmine/coarse/terms.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "scenmine/errors.hpp"

namespace scenmine::coarse {

Lexicons Lexicons::defaults() {
  Lexicons lx;
  lx.colors = {"red",   "orange", "yellow", "green", "blue",   "purple", "pink",
               "brown", "black",  "white",  "gray",  "grey",   "silver", "gold"};
  lx.entities = {"vehicle",    "vehicles",   "car",         "cars",        "truck",
                 "trucks",     "bus",        "buses",       "school bus",  "van",
                 "pedestrian", "pedestrians", "person",     "people",      "bicycle",
                 "bicycles",   "bicyclist",  "cyclist",     "motorcycle",  "motorcyclist",
                 "trailer",    "stroller",   "wheelchair",  "dog",         "animal",
                 "stop sign",  "sign",       "cone",        "construction cone", "barrel",
                 "bollard",    "box truck",  "articulated bus"};
  lx.relations = {"in front of", "ahead of", "ahead",     "behind",     "left",
                  "right",       "to the left of", "to the right of", "next to",
                  "beside",      "near",     "crossing",  "across",     "toward",
                  "towards",     "away from", "approaching", "following", "passing",
                  "oncoming",    "adjacent", "between",   "opposite",   "parallel",
                  "turning"};
  return lx;
}

std::vector<std::string> read_lexicon_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lexicon " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    std::string term = line.substr(b, e - b + 1);
    std::transform(term.begin(), term.end(), term.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    terms.push_back(std::move(term));
  }
  return terms;
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
  Lexicons lx;
  lx.colors = read_lexicon_file(dir / "colors.txt");
  lx.entities = read_lexicon_file(dir / "entities.txt");
  lx.relations = read_lexicon_file(dir / "relations.txt");
  return lx;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'') {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::vector<std::string> extract_query_terms(std::string_view query, const Lexicons& lexicons) {
  struct Entry {
    std::vector<std::string> words;
    std::string term;
  };
  std::vector<Entry> entries;
  for (const auto* list : {&lexicons.colors, &lexicons.entities, &lexicons.relations}) {
    for (const auto& t : *list) {
      auto words = tokenize_words(t);
      if (!words.empty()) entries.push_back({std::move(words), t});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.words.size() > b.words.size();
  });

  const auto words = tokenize_words(query);
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t i = 0;
  while (i < words.size()) {
    const Entry* hit = nullptr;
    for (const auto& e : entries) {
      if (i + e.words.size() <= words.size() &&
          std::equal(e.words.begin(), e.words.end(), words.begin() + static_cast<long>(i))) {
        hit = &e;
        break;
      }
    }
    if (hit == nullptr) {
      ++i;
      continue;
    }
    if (seen.insert(hit->term).second) out.push_back(hit->term);
    i += hit->words.size();
  }
  return out;
}

std::string embedding_text(std::string_view query, const Lexicons& lexicons,
                           QueryEmbeddingMode mode) {
  if (mode == QueryEmbeddingMode::Terms) {
    const auto terms = extract_query_terms(query, lexicons);
    if (!terms.empty()) {
      std::string joined;
      for (const auto& t : terms) joined += (joined.empty() ? "" : " ") + t;
      return joined;
    }
  }
  return std::string(query);
}

}  // namespace scenmine::coarse
