#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace scenmine::synth {

inline constexpr std::size_t kDefaultExemplars = 10;

struct Exemplar {
  std::string query;
  std::string program;
  double similarity = 0.0;

  bool operator==(const Exemplar&) const = default;
};

struct PromptBundle {
  std::string catalog_doc;
  std::vector<std::string> categories;
  std::string query;
  // Descending similarity.
  std::vector<Exemplar> exemplars;
  std::string instruction;
  std::string output_requirements;

  bool operator==(const PromptBundle&) const = default;
};

// One failed attempt as fed back to the model.
struct Attempt {
  std::string program_source;
  std::string error;

  bool operator==(const Attempt&) const = default;
};

std::string default_instruction();
std::string default_output_requirements();

// Sorts exemplars by descending similarity (stable) and keeps the first
// `max_exemplars`. Throws InvalidInput for an empty query.
PromptBundle assemble_prompt(const std::string& query, std::vector<Exemplar> exemplars,
                             const std::string& catalog_doc,
                             const std::vector<std::string>& categories,
                             std::size_t max_exemplars = kDefaultExemplars);

// Base prompt. Sections are separated by fixed sentinel lines.
std::string render(const PromptBundle& bundle);

// Base prompt followed by every prior attempt and its error, then a request to
// fix the last one. With no attempts this equals render(bundle).
std::string render_with_attempts(const PromptBundle& bundle, const std::vector<Attempt>& attempts);

}  // namespace scenmine::synth
