#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bigrasp/object.hpp"

namespace bigrasp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Object specifier: a fixture name ("sphere", "box", "cylinder") or a mesh
// path, optionally followed by "@<diameter>" in meters. Fixtures without a
// suffix use `default_diameter`; meshes without one keep their size. The
// returned id is canonical ("box@0.5"), so records can be resolved again.
ObjectModel resolve_object(const std::string& spec, double default_diameter, double density);

// argv without the program name. Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bigrasp::cli
