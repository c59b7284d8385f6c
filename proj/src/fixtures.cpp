#include "veriml/fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <system_error>
#include <thread>

#include "veriml/errors.hpp"
#include "veriml/serialize.hpp"

namespace veriml {

namespace fs = std::filesystem;

namespace {

constexpr char kCacheMagic[4] = {'V', 'C', 'H', 'E'};

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

FixtureCache::FixtureCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {}

std::optional<fs::path> FixtureCache::default_dir() {
  if (const char* env = std::getenv("VERIML_CACHE_DIR")) {
    if (*env == '\0') return std::nullopt;
    return fs::path(env);
  }
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "veriml";
  return fs::path(".veriml-cache");
}

FixtureCache& FixtureCache::global() {
  static FixtureCache cache(default_dir());
  return cache;
}

std::size_t FixtureCache::memory_hits() const {
  std::lock_guard lock(mu_);
  return memory_hits_;
}
std::size_t FixtureCache::disk_hits() const {
  std::lock_guard lock(mu_);
  return disk_hits_;
}
std::size_t FixtureCache::builds() const {
  std::lock_guard lock(mu_);
  return builds_;
}
void FixtureCache::clear_memory() {
  std::lock_guard lock(mu_);
  memory_.clear();
}

std::optional<Bytes> FixtureCache::load_file(const Digest& key) const {
  if (!dir_) return std::nullopt;
  std::ifstream in(*dir_ / (to_hex(key) + ".bin"), std::ios::binary);
  if (!in) return std::nullopt;
  const Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() < 4 + 32 || !std::equal(kCacheMagic, kCacheMagic + 4, raw.begin())) return std::nullopt;
  Bytes payload(raw.begin() + 36, raw.end());
  const Digest check = sha256(payload);
  if (!std::equal(check.begin(), check.end(), raw.begin() + 4)) return std::nullopt;
  return payload;
}

void FixtureCache::store_file(const Digest& key, const Bytes& payload) const {
  if (!dir_) return;
  std::error_code ec;
  fs::create_directories(*dir_, ec);
  if (ec) return;  // the disk layer is best effort
  const fs::path final_path = *dir_ / (to_hex(key) + ".bin");
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  const fs::path tmp = *dir_ / (to_hex(key) + ".tmp." + std::to_string(tid));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;
    const Digest check = sha256(payload);
    out.write(kCacheMagic, 4);
    out.write(reinterpret_cast<const char*>(check.data()), 32);
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      return;
    }
  }
  fs::rename(tmp, final_path, ec);
  if (ec) fs::remove(tmp, ec);
}

Bytes FixtureCache::get_or_build(const Digest& key, const std::function<Bytes()>& build) {
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      ++memory_hits_;
      return *it->second;
    }
  }
  if (auto disk = load_file(key)) {
    std::lock_guard lock(mu_);
    ++disk_hits_;
    memory_.emplace(key, std::make_shared<const Bytes>(*disk));
    return *disk;
  }
  Bytes built = build();
  store_file(key, built);
  std::lock_guard lock(mu_);
  ++builds_;
  memory_.emplace(key, std::make_shared<const Bytes>(built));
  return built;
}

Digest fixture_key(std::string_view kind, const nlohmann::json& recipe) {
  const std::string text = std::string(kind) + "\n" + kVersion + "\n" + recipe.dump();
  return sha256(as_bytes(text));
}

namespace {

nlohmann::json recipe_key_json(const ModelRecipe& r) {
  nlohmann::json j = config_to_json([&] {
    ScenarioConfig c;
    c.supplier.model = r;
    return c;
  }())["supplier"]["model"];
  j["data"].erase("seed");
  return j;
}

Dataset recipe_data(const ModelRecipe& r) {
  BlobRecipe b = r.data;
  b.seed = r.train.seeds.data_seed;
  return make_blobs(b);
}

}  // namespace

MlpModel train_recipe(const ModelRecipe& recipe) {
  Dataset data = recipe_data(recipe);
  MlpModel model = init_mlp(recipe.architecture(), recipe.train.seeds.weight_seed);
  const std::size_t dim = recipe.data.dim;
  if (recipe.input_features > 0 && recipe.input_features < dim) {
    for (auto& x : data.inputs)
      for (std::size_t d = recipe.input_features; d < dim; ++d) x.values[d] = 0.0;
    auto& first = model.layers.front();
    for (std::size_t row = 0; row < first.out; ++row)
      for (std::size_t d = recipe.input_features; d < dim; ++d) first.weights[row * first.in + d] = 0.0;
  }
  if (recipe.harden_epsilon > 0.0) return train_hardened(std::move(model), data, recipe.train, recipe.harden_epsilon);
  return train_sgd(std::move(model), data, recipe.train);
}

MlpModel cached_model(const ModelRecipe& recipe, FixtureCache& cache) {
  const auto key = fixture_key("model", recipe_key_json(recipe));
  return deserialize_model(cache.get_or_build(key, [&] { return serialize_model(train_recipe(recipe)); }));
}

StegFixture cached_steg(const ModelRecipe& object_recipe, const StegSpec& spec, FixtureCache& cache) {
  nlohmann::json k = {{"object", recipe_key_json(object_recipe)},
                      {"secret_dim", spec.secret_dim},
                      {"beta", spec.beta},
                      {"train", config_to_json([&] {
                         ScenarioConfig c;
                         c.supplier.steg = spec;
                         return c;
                       }())["supplier"]["steg"]["train"]}};
  const auto bytes = cache.get_or_build(fixture_key("steg", k), [&] {
    const auto art = train_steg_joint(recipe_data(object_recipe), spec.secret_dim, spec.beta, spec.train);
    return serialize_steg(art.steg, art.reveal);
  });
  auto [steg, reveal] = deserialize_steg(bytes);
  return {std::move(steg), std::move(reveal)};
}

MacKey derive_mac_key(std::uint64_t seed) {
  MacKey key{};
  RngStream rng(derive_seed(seed, 0x4B45));
  for (std::size_t i = 0; i < key.size(); i += 8) {
    const std::uint64_t v = rng.next();
    for (std::size_t b = 0; b < 8; ++b) key[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  return key;
}

ScenarioFixtures build_fixtures(const ScenarioConfig& cfg, FixtureCache& cache) {
  ScenarioFixtures fx;
  const auto& sm = cfg.supplier.model;
  auto supplier = std::make_shared<Supplier>();
  supplier->model = cached_model(sm, cache);
  supplier->latency = cfg.supplier.latency;
  if (cfg.supplier.mac) supplier->mac_key = derive_mac_key(cfg.supplier.mac_key_seed);

  BlobRecipe data = sm.data;
  data.seed = sm.train.seeds.data_seed;
  fx.holdout = make_blobs_holdout(data, cfg.verifier.holdout_per_class, derive_seed(data.seed, 0x401D));
  fx.summary["supplier_model_digest"] = to_hex(sha256(serialize_model(supplier->model)));
  fx.summary["supplier_accuracy"] = accuracy(supplier->model, fx.holdout);

  if (cfg.provider.cheap) {
    fx.cheap = cached_model(*cfg.provider.cheap, cache);
    fx.summary["cheap_model_digest"] = to_hex(sha256(serialize_model(*fx.cheap)));
    fx.summary["cheap_accuracy"] = accuracy(*fx.cheap, fx.holdout);
  }

  switch (cfg.scenario) {
    case ScenarioKind::StegProbe: {
      auto st = cached_steg(sm, cfg.supplier.steg, cache);
      supplier->reveal = st.reveal;
      ModelRecipe proxy = sm;
      proxy.hidden = {8};
      proxy.train.seeds.weight_seed = derive_seed(sm.train.seeds.weight_seed, 0x9A0);
      proxy.train.seeds.shuffle_seed = derive_seed(sm.train.seeds.shuffle_seed, 0x9A0);
      StegProbeKit kit{st.steg, st.reveal, cached_model(proxy, cache), 0.0, 0.0};
      const Dataset calib =
          make_blobs_holdout(data, cfg.verifier.holdout_per_class, derive_seed(data.seed, 0xCA1B));
      std::tie(kit.p_honest, kit.clean_honest) =
          estimate_honest_rates(kit.steg, kit.reveal, calib, derive_seed(data.seed, 0x5EC));
      const auto m = evaluate_steg(kit.steg, kit.reveal, calib, derive_seed(data.seed, 0x5ED));
      fx.summary["steg_model_digest"] = to_hex(sha256(serialize_steg(kit.steg, kit.reveal)));
      fx.summary["p_honest"] = kit.p_honest;
      fx.summary["clean_honest"] = kit.clean_honest;
      fx.summary["steg_container_detection"] = m.container_detection;
      fx.summary["steg_cover_false_detection"] = m.cover_false_detection;
      fx.summary["steg_mean_distortion"] = m.mean_distortion;
      fx.summary["proxy_accuracy"] = accuracy(kit.proxy, fx.holdout);
      fx.kit = std::move(kit);
      break;
    }
    case ScenarioKind::DeterministicBench: {
      supplier->seed_publication = SeedPublication{sm.architecture(), sm.train, data};
      fx.reference = retrain_from_publication(*supplier->seed_publication);
      fx.summary["reference_model_digest"] = to_hex(sha256(serialize_model(*fx.reference)));
      break;
    }
    default:
      break;
  }
  supplier->validate();
  fx.supplier = std::move(supplier);
  return fx;
}

}  // namespace veriml
