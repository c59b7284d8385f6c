#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "veriml/scenario.hpp"

namespace veriml {

/// Content-addressed store for trained fixtures. Entries live in memory for
/// the life of the process and, when a directory is configured, on disk as
/// "<hex key>.bin" files carrying a SHA-256 of their payload. Corrupt or
/// truncated files are rebuilt.
class FixtureCache {
 public:
  explicit FixtureCache(std::optional<std::filesystem::path> dir);

  /// Process-wide cache. Directory: $VERIML_CACHE_DIR, else
  /// $HOME/.cache/veriml, else ./.veriml-cache. VERIML_CACHE_DIR="" disables
  /// the disk layer.
  static FixtureCache& global();
  static std::optional<std::filesystem::path> default_dir();

  Bytes get_or_build(const Digest& key, const std::function<Bytes()>& build);

  const std::optional<std::filesystem::path>& dir() const { return dir_; }
  std::size_t memory_hits() const;
  std::size_t disk_hits() const;
  std::size_t builds() const;
  void clear_memory();

 private:
  std::optional<Bytes> load_file(const Digest& key) const;
  void store_file(const Digest& key, const Bytes& payload) const;

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<Digest, std::shared_ptr<const Bytes>> memory_;
  std::size_t memory_hits_ = 0;
  std::size_t disk_hits_ = 0;
  std::size_t builds_ = 0;
};

/// Key for a fixture: SHA-256 over a kind tag, the library version and the
/// canonical JSON of its recipe.
Digest fixture_key(std::string_view kind, const nlohmann::json& recipe);

/// Trains the classifier a recipe describes. With input_features > 0 only the
/// leading features are visible to training and the remaining first-layer
/// weights are zero.
MlpModel train_recipe(const ModelRecipe& recipe);
MlpModel cached_model(const ModelRecipe& recipe, FixtureCache& cache);

struct StegFixture {
  StegModel steg;
  RevealClassifier reveal;
};
StegFixture cached_steg(const ModelRecipe& object_recipe, const StegSpec& spec, FixtureCache& cache);

MacKey derive_mac_key(std::uint64_t seed);

/// Everything a scenario run needs besides the per-trial seeds.
struct ScenarioFixtures {
  std::shared_ptr<const Supplier> supplier;
  std::optional<MlpModel> cheap;
  std::optional<StegProbeKit> kit;
  Dataset holdout;                    // labelled, for accuracy and covers
  std::optional<MlpModel> reference;  // retrained from the seed publication
  nlohmann::json summary = nlohmann::json::object();
};

ScenarioFixtures build_fixtures(const ScenarioConfig& cfg, FixtureCache& cache);

}  // namespace veriml
