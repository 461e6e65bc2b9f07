#pragma once

// JSON and CSV formats: skeleton, scenes, fit results, benchmark truth and
// reports, configuration overrides, and the users table.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fts/benchgen.hpp"
#include "fts/clothmodel.hpp"
#include "fts/fitting.hpp"

namespace fts {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "fts/1";

json to_json(const Skeleton& sk);
json to_json(const ShapeParams& shape);
json to_json(const PoseParams& pose);
json to_json(const CameraPose& camera);
json to_json(const TermEnergies& e);
json to_json(const FitResult& r);
json to_json(const MultiFitResult& r);
json to_json(const FitConfig& c);
json to_json(const BenchGenConfig& c);

// Throws Parse on missing or mistyped fields.
ShapeParams shape_from_json(const json& j);
PoseParams pose_from_json(const json& j);

// ---------------------------------------------------------------------------
// Scenes: {"image": {"w", "h"}, "joints": [[u, v, conf] x 14], "mask": path,
// "camera": {"translation": [x, y, z], "focal": f}} with the camera optional.

struct Scene {
  Observation obs;
  std::optional<CameraPose> camera;
};

json scene_json(const Observation& obs, const std::string& mask_path, const std::optional<CameraPose>& camera);
// Mask paths resolve relative to the scene file.
Scene load_scene(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Config overrides: {"fit": {...FitConfig keys}, "clothmodel": {...}}.
// Unknown keys are a Parse error.

struct ClothConfig {
  std::optional<double> bandwidth;
  double threshold = 0.0;
  std::optional<std::vector<std::string>> vocabulary;

  CategoryVocabulary vocab() const;
};

struct RunConfig {
  FitConfig fit;
  ClothConfig cloth;
};

void apply_fit_overrides(FitConfig& config, const json& j);
void apply_cloth_overrides(ClothConfig& config, const json& j);
RunConfig load_run_config(const std::filesystem::path& path);
json to_json(const ClothConfig& c);

// ---------------------------------------------------------------------------
// Benchmark tree.

json truth_json(const std::vector<BenchSubject>& subjects, const BenchGenConfig& config, double noise);
// Writes subject_<i>/view_<j>/{scene.json, mask.pgm} and truth.json.
void write_benchmark(const std::filesystem::path& dir, const std::vector<BenchSubject>& subjects,
                     const BenchGenConfig& config, double noise);
// Reloads subjects, truth and observations from a written tree.
std::vector<BenchSubject> load_benchmark(const std::filesystem::path& dir);

struct OrderingCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};
std::vector<OrderingCheck> ordering_checks(const BenchReport& report);

json report_json(const BenchReport& report, const FitConfig& config, const std::vector<OrderingCheck>& checks);
std::string report_csv(const BenchReport& report);

// ---------------------------------------------------------------------------
// Users: CSV `user_id,group,beta2,post_id,categories`, one row per post.

std::vector<UserRecord> parse_users_csv(const std::string& text, const CategoryVocabulary& vocab);
std::vector<UserRecord> load_users_csv(const std::filesystem::path& path, const CategoryVocabulary& vocab);
std::string users_csv(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab);

// Fills missing beta2 from {"user_id": beta2 | fit result object}.
void fill_shapes(std::vector<UserRecord>& users, const json& shapes);

// ---------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file in the same directory.
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);

}  // namespace fts
