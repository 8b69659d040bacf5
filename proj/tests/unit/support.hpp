#pragma once

#include <filesystem>
#include <random>
#include <string>

namespace bigrasp::test {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("bigrasp-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace bigrasp::test

#include <json.hpp>

namespace bigrasp::test {

// Two-link hand whose penetration anchors are points (radius 0): one at the
// root origin and one at the end of a 0.5 m arm along +z. Load with
// allow_any_dof.
inline nlohmann::json point_hand() {
  using nlohmann::json;
  auto anchor = [](double x, double y, double z) {
    return json{{"position", {x, y, z}}, {"normal", {0, 0, 1}}};
  };
  json links = json::array();
  links.push_back({{"name", "base"},
                   {"primitives", {{{"type", "sphere"}, {"center", {0, 0, 0}}, {"radius", 0.005}}}},
                   {"penetration_anchors", {{{"position", {0, 0, 0}}, {"radius", 0.0}}}},
                   {"contact_anchors", {anchor(0, 0, 0), anchor(0.01, 0, 0), anchor(0, 0.01, 0), anchor(-0.01, 0, 0)}}});
  links.push_back({{"name", "arm"},
                   {"primitives", {{{"type", "capsule"}, {"a", {0, 0, 0}}, {"b", {0, 0, 0.5}}, {"radius", 0.005}}}},
                   {"penetration_anchors", {{{"position", {0, 0, 0.5}}, {"radius", 0.0}}}}});
  json joints = json::array();
  joints.push_back({{"name", "swing"},
                    {"type", "revolute"},
                    {"parent", "base"},
                    {"child", "arm"},
                    {"origin", {{"xyz", {0, 0, 0}}, {"rpy", {0, 0, 0}}}},
                    {"axis", {1, 0, 0}},
                    {"lower", -1.0},
                    {"upper", 1.0}});
  return json{{"schema", "bigrasp-hand/1"},
              {"name", "point_hand"},
              {"root", "base"},
              {"surface_samples", 20},
              {"sample_seed", 1},
              {"palm", {{"link", "base"}, {"center", {0, 0, 0}}, {"normal", {0, 0, 1}}}},
              {"links", links},
              {"joints", joints}};
}

}  // namespace bigrasp::test
