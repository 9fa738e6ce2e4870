#pragma once

#include <string>

#include "bloch/config.hpp"

namespace bloch {

inline constexpr const char* kVersion = "0.1.0";

// Executes one pipeline (bands, berry, butterfly, dynamics, pump) against
// the config and writes the artifacts it names. kind "run" reads the real
// kind from [run]. Throws the module error taxonomy; every config entry
// must be consumed or the run fails.
void run_pipeline(const std::string& kind, Config& cfg);

// {"error":{"type":...,"message":...,...}} for the taxonomy in errors.hpp;
// exit codes 2 (config), 3 (numerical), 4 (io), matching type.
std::string error_json(const std::exception& e);
int exit_code_for(const std::exception& e);

}  // namespace bloch
