#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scenmine::coarse {

// Color, entity and spatial-relation vocabularies. Terms may span several
// words ("in front of").
struct Lexicons {
  std::vector<std::string> colors;
  std::vector<std::string> entities;
  std::vector<std::string> relations;

  static Lexicons defaults();
  // Reads colors.txt, entities.txt and relations.txt from `dir`; one term
  // per line, '#' starts a comment.
  static Lexicons load(const std::filesystem::path& dir);
};

std::vector<std::string> read_lexicon_file(const std::filesystem::path& path);

// Lower-cased words of `text`, split on anything that is not a letter, digit
// or apostrophe.
std::vector<std::string> tokenize_words(std::string_view text);

// Lexicon terms found in the query, longest match first at each position,
// in order of appearance, without duplicates.
std::vector<std::string> extract_query_terms(std::string_view query, const Lexicons& lexicons);

enum class QueryEmbeddingMode { Terms, Raw };

// Text handed to the text encoder: the joined terms, or the raw query when
// no term matched or the mode is Raw.
std::string embedding_text(std::string_view query, const Lexicons& lexicons,
                           QueryEmbeddingMode mode);

}  // namespace scenmine::coarse
