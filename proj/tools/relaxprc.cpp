// Batch front-end: runs one computation described by a config file and
// writes CSV/SVG artifacts. Errors go to stderr as JSON lines.
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "relax/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relaxprc - phase response curves of planar relaxation oscillators"};
  std::string config_path;
  std::string command;
  std::string out_dir;
  unsigned threads = 0;
  app.add_option("--config", config_path, "path to the run configuration")->required();
  app.add_option("--command", command,
                 "one of: geometry, prc-singular, prc-numeric, prc-infinitesimal, sweep, "
                 "isochrones, plot")
      ->required();
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  app.add_option("--threads", threads, "worker threads for sample grids (0 = auto)");
  CLI11_PARSE(app, argc, argv);

  try {
    const relax::RunConfig cfg = relax::load_config(config_path);
    relax::run(cfg, command, {out_dir, threads});
    return 0;
  } catch (const relax::Error& e) {
    nlohmann::ordered_json rec;
    rec["error"] = e.code();
    rec["message"] = e.what();
    rec["command"] = command;
    std::cerr << rec.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::ordered_json rec;
    rec["error"] = "internal";
    rec["message"] = e.what();
    std::cerr << rec.dump() << "\n";
    return 2;
  }
}
