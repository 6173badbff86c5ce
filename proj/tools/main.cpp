#include <iostream>
#include <vector>

#include "commands.hpp"

using namespace phaseshift;
using namespace phaseshift::cli;

int main(int argc, char** argv) {
  CLI::App app{"Phase-shift detection in oscillatory signals"};
  app.set_config("--config", "", "TOML or INI file of options; flags on the command line take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  add_global_options(app, g);

  const std::vector<Command> commands{add_simulate_oscillator(app, g), add_simulate_rossler(app, g),
                                      add_detect(app, g), add_calibrate(app, g), add_evaluate(app, g)};
  // A manifest names only its own command's keys, so it alone selects the command on replay.
  for (const auto& c : commands) c.app->configurable();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    for (const auto& c : commands)
      if (c.app->parsed()) c.run();
    return kOk;
  } catch (const IoError& e) {
    std::cerr << "phaseshift: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "phaseshift: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "phaseshift: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "phaseshift: " << e.what() << "\n";
    return kOther;
  }
}
