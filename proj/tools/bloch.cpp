#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bloch/config.hpp"
#include "bloch/errors.hpp"
#include "bloch/run.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bloch::io_error("cannot read config '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int dispatch(const std::string& kind, const std::string& path,
             const std::vector<std::string>& overrides) {
  try {
    bloch::Config cfg = bloch::Config::parse(slurp(path));
    for (const auto& spec : overrides) cfg.set_override(spec);
    bloch::run_pipeline(kind, cfg);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << bloch::error_json(e);
    return bloch::exit_code_for(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch band structure, geometry, and transport pipelines"};
  app.set_version_flag("--version", std::string(bloch::kVersion));
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
  };
  const SubSpec specs[] = {
      {"bands", "Bloch bands of a periodic potential on a quasimomentum grid"},
      {"berry", "Berry curvature, Chern number, and Zak phases of a 2-d band window"},
      {"butterfly", "Magnetic spectrum intervals over rational flux (Hofstadter scan)"},
      {"dynamics", "Wave packet propagation against the semiclassical flow"},
      {"pump", "Adiabatic pump polarization: spectral transport and propagated charge"},
      {"run", "Pipeline named by the [run] section of the config"},
  };

  struct SubState {
    std::string config;
    std::vector<std::string> overrides;
  };
  std::vector<SubState> states(std::size(specs));
  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < std::size(specs); ++i) {
    CLI::App* sub = app.add_subcommand(specs[i].name, specs[i].help);
    sub->add_option("config", states[i].config, "INI-style config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--set", states[i].overrides,
                    "Override a config entry as section.key=value (repeatable)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return dispatch(specs[i].name, states[i].config, states[i].overrides);
  return 1;
}
