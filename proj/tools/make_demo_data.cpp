// Writes the planted-scenario demo dataset: logs, embedding stores,
// knowledge-base candidates, ground truth, scripted replies and a config.

#include <CLI11.hpp>
#include <iostream>

#include "scenmine/demo/planted.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the planted-scenario demo dataset"};
  std::string out;
  scenmine::demo::PlantedOptions opts;
  app.add_option("-o,--out", out, "Output directory")->required();
  app.add_option("--seed", opts.seed, "Random seed");
  app.add_option("--logs", opts.logs, "Number of logs")->check(CLI::PositiveNumber);
  app.add_option("--positives", opts.positive_logs, "Logs carrying the event")
      ->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);
  if (opts.positive_logs > opts.logs) {
    std::cerr << "--positives cannot exceed --logs\n";
    return 2;
  }
  const auto data = scenmine::demo::make_planted_dataset(opts);
  scenmine::demo::write_planted_dataset(data, out);
  std::cout << "wrote " << data.logs.size() << " logs to " << out << "\n"
            << "query: " << data.query << "\n";
  return 0;
}
