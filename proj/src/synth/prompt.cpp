#include "scenmine/synth/prompt.hpp"

#include <algorithm>

#include "scenmine/errors.hpp"

namespace scenmine::synth {

namespace {

void section(std::string& out, const char* title) {
  out += "=== ";
  out += title;
  out += " ===\n";
}

void subsection(std::string& out, const char* title) {
  out += "--- ";
  out += title;
  out += " ---\n";
}

void block(std::string& out, const std::string& text) {
  out += text;
  if (text.empty() || text.back() != '\n') out += '\n';
}

}  // namespace

std::string default_instruction() {
  return "Write one scenario program that selects exactly the (track, timestamp) pairs the "
         "query describes. Compose only the atomic functions listed above. Use the exemplars "
         "as guidance for style and for how similar queries were expressed.";
}

std::string default_output_requirements() {
  return "Reply with a single fenced code block containing the program and nothing else. The "
         "program must contain exactly one output(...) call wrapping the final expression. Use "
         "only category names from the list above.";
}

PromptBundle assemble_prompt(const std::string& query, std::vector<Exemplar> exemplars,
                             const std::string& catalog_doc,
                             const std::vector<std::string>& categories,
                             std::size_t max_exemplars) {
  if (query.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw InvalidInput("query text is empty");
  }
  std::stable_sort(exemplars.begin(), exemplars.end(),
                   [](const Exemplar& a, const Exemplar& b) { return a.similarity > b.similarity; });
  if (exemplars.size() > max_exemplars) exemplars.resize(max_exemplars);
  return {catalog_doc, categories, query, std::move(exemplars), default_instruction(),
          default_output_requirements()};
}

std::string render(const PromptBundle& b) {
  std::string out;
  section(out, "INPUTS");
  subsection(out, "ATOMIC FUNCTIONS");
  block(out, b.catalog_doc);
  subsection(out, "CATEGORIES");
  for (const auto& c : b.categories) out += c + '\n';
  subsection(out, "EXEMPLARS");
  if (b.exemplars.empty()) {
    out += "(no exemplars available: answer zero-shot from the function list)\n";
  }
  for (std::size_t i = 0; i < b.exemplars.size(); ++i) {
    out += "# exemplar " + std::to_string(i + 1) + "\n";
    out += "query: " + b.exemplars[i].query + '\n';
    out += "```\n";
    block(out, b.exemplars[i].program);
    out += "```\n";
  }
  subsection(out, "QUERY");
  block(out, b.query);
  section(out, "INSTRUCTION");
  block(out, b.instruction);
  section(out, "OUTPUT REQUIREMENTS");
  block(out, b.output_requirements);
  return out;
}

std::string render_with_attempts(const PromptBundle& bundle,
                                 const std::vector<Attempt>& attempts) {
  std::string out = render(bundle);
  if (attempts.empty()) return out;
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    out += "=== ATTEMPT " + std::to_string(i + 1) + " ===\n";
    out += "```\n";
    block(out, attempts[i].program_source);
    out += "```\n";
    subsection(out, "ERROR");
    block(out, attempts[i].error);
  }
  section(out, "REPAIR");
  out += "The program in attempt " + std::to_string(attempts.size()) +
         " failed with the error shown. Correct the fault and reply with the full fixed "
         "program, following the output requirements.\n";
  return out;
}

}  // namespace scenmine::synth
