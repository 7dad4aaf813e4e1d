#include "nbv/nbv.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbv/config.hpp"
#include "nbv/episode.hpp"
#include "nbv/error.hpp"
#include "nbv/io.hpp"
#include "nbv/scene.hpp"
#include "nbv/voxel_field.hpp"

struct nbv_config {
  nbv::EpisodeConfig config;
};

struct nbv_scene {
  std::shared_ptr<const nbv::OccupancyScene> scene;
};

namespace {

#ifndef NBV_VERSION_STRING
#define NBV_VERSION_STRING "0.0.0"
#endif

thread_local std::string g_last_error;

nbv_status fail(nbv_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs f, translating exceptions into status codes.
template <typename F>
nbv_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const nbv::ConfigError& e) {
    return fail(NBV_ERR_CONFIG, e.what());
  } catch (const nbv::CacheFormatError& e) {
    return fail(NBV_ERR_CACHE_FORMAT, e.what());
  } catch (const nbv::IoError& e) {
    return fail(NBV_ERR_IO, e.what());
  } catch (const nbv::SceneError& e) {
    return fail(NBV_ERR_SCENE, e.what());
  } catch (const nbv::DegenerateSeed& e) {
    return fail(NBV_ERR_DEGENERATE_SEED, e.what());
  } catch (const nbv::InvalidInput& e) {
    return fail(NBV_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(NBV_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NBV_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(NBV_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(NBV_ERR_RUNTIME, "unknown error");
  }
}

nbv_status require(const void* p, const char* what) {
  if (p) return NBV_OK;
  return fail(NBV_ERR_INVALID_ARGUMENT, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const std::string& dir, const nbv::EpisodeConfig& config,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& policies) {
  nlohmann::ordered_json j;
  j["tool"] = "nbv";
  j["version"] = NBV_VERSION_STRING;
  j["config_hash"] = hex64(nbv::config_hash(config));
  j["scene_seeds"] = seeds;
  j["policies"] = policies;
  j["out_dir"] = dir;
  j["config"] = nlohmann::ordered_json::parse(nbv::config_to_json(config));
  nbv::write_file_atomic((std::filesystem::path(dir) / "manifest.json").string(),
                         j.dump(2) + "\n");
}

void fill_stats(const nbv::CacheStats& s, nbv_cache_stats* out) {
  if (!out) return;
  out->entries = s.entries;
  out->bytes = s.bytes;
  out->lookups = s.lookups;
  out->hits = s.hits;
  out->hit_rate = s.hit_rate();
}

// Swaps in the persisted masks when the file exists.
void adopt_cache_file(nbv::EpisodeSetup& setup, const std::string& path) {
  if (!std::filesystem::exists(path)) return;
  const auto& cache = *setup.cache;
  auto loaded = nbv::MaskCache::load(
      path, cache.params(), cache.grid(),
      std::vector<std::uint8_t>(cache.occupancy().occupied.begin(),
                                cache.occupancy().occupied.end()));
  setup.cache = std::shared_ptr<nbv::MaskCache>(std::move(loaded));
}

}  // namespace

extern "C" {

const char* nbv_version(void) { return NBV_VERSION_STRING; }

const char* nbv_status_name(nbv_status status) {
  switch (status) {
    case NBV_OK: return "ok";
    case NBV_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case NBV_ERR_CONFIG: return "config";
    case NBV_ERR_IO: return "io";
    case NBV_ERR_CACHE_FORMAT: return "cache_format";
    case NBV_ERR_SCENE: return "scene";
    case NBV_ERR_DEGENERATE_SEED: return "degenerate_seed";
    case NBV_ERR_RUNTIME: return "runtime";
    case NBV_ERR_PARTIAL: return "partial";
  }
  return "unknown";
}

const char* nbv_last_error(void) { return g_last_error.c_str(); }

void nbv_string_free(char* s) { std::free(s); }

nbv_status nbv_config_default(const char* regime, nbv_config** out) {
  if (auto s = require(regime, "regime")) return s;
  if (auto s = require(out, "out")) return s;
  return guarded([&] {
    auto c = std::make_unique<nbv_config>();
    c->config = nbv::EpisodeConfig::defaults(nbv::regime_from_string(regime));
    *out = c.release();
    return NBV_OK;
  });
}

nbv_status nbv_config_parse(const char* json, nbv_config** out) {
  if (auto s = require(json, "json")) return s;
  if (auto s = require(out, "out")) return s;
  return guarded([&] {
    auto c = std::make_unique<nbv_config>();
    c->config = nbv::config_from_json(json);
    *out = c.release();
    return NBV_OK;
  });
}

nbv_status nbv_config_load(const char* path, nbv_config** out) {
  if (auto s = require(path, "path")) return s;
  if (auto s = require(out, "out")) return s;
  return guarded([&] {
    if (!std::filesystem::is_regular_file(path)) {
      throw nbv::IoError(std::string("config file not found: ") + path);
    }
    auto c = std::make_unique<nbv_config>();
    c->config = nbv::config_from_json(nbv::read_file(path));
    *out = c.release();
    return NBV_OK;
  });
}

nbv_status nbv_config_set(nbv_config* config, const char* key, double value) {
  if (auto s = require(config, "config")) return s;
  if (auto s = require(key, "key")) return s;
  return guarded([&] {
    nbv::EpisodeConfig c = config->config;
    const std::string k = key;
    auto as_int = [&](auto& field) {
      if (value != std::floor(value) || value < 0) {
        throw nbv::ConfigError(k + " must be a non-negative integer");
      }
      field = static_cast<std::remove_reference_t<decltype(field)>>(value);
    };
    if (k == "w_g") c.w_g = value;
    else if (k == "w_s") c.w_s = value;
    else if (k == "gamma") c.gamma = value;
    else if (k == "eta") c.eta = value;
    else if (k == "lambda") c.lambda = c.coefficients.lambda = value;
    else if (k == "tau") c.tau = value;
    else if (k == "r_pre") as_int(c.r_pre);
    else if (k == "budget") as_int(c.budget);
    else if (k == "initial_views") as_int(c.initial_views);
    else if (k == "rng_seed") as_int(c.rng_seed);
    else if (k == "complexity") as_int(c.complexity);
    else throw nbv::ConfigError("unknown config key '" + k + "'");
    c.validate();
    config->config = c;
    return NBV_OK;
  });
}

nbv_status nbv_config_to_json(const nbv_config* config, char** out) {
  if (auto s = require(config, "config")) return s;
  if (auto s = require(out, "out")) return s;
  return guarded([&] {
    *out = dup_string(nbv::config_to_json(config->config));
    return NBV_OK;
  });
}

uint64_t nbv_config_hash(const nbv_config* config) {
  return config ? nbv::config_hash(config->config) : 0;
}

void nbv_config_free(nbv_config* config) { delete config; }

nbv_status nbv_scene_build(const nbv_config* config, uint64_t scene_seed, nbv_scene** out) {
  if (auto s = require(config, "config")) return s;
  if (auto s = require(out, "out")) return s;
  return guarded([&] {
    auto sc = std::make_unique<nbv_scene>();
    sc->scene = std::make_shared<const nbv::OccupancyScene>(
        nbv::build_episode_scene(config->config, scene_seed));
    *out = sc.release();
    return NBV_OK;
  });
}

nbv_status nbv_scene_info_get(const nbv_scene* scene, nbv_scene_info* out) {
  if (auto s = require(scene, "scene")) return s;
  if (auto s = require(out, "out")) return s;
  return guarded([&] {
    const auto& sc = *scene->scene;
    for (int a = 0; a < 3; ++a) out->dims[a] = sc.grid().dims()[a];
    out->voxel_size = sc.grid().voxel_size();
    out->occupied = sc.grid().size() - sc.free_count();
    out->surface = sc.surface_count();
    out->solids = sc.solids().size();
    out->hash = sc.hash();
    return NBV_OK;
  });
}

nbv_status nbv_scene_write(const nbv_scene* scene, const char* path) {
  if (auto s = require(scene, "scene")) return s;
  if (auto s = require(path, "path")) return s;
  return guarded([&] {
    const auto& sc = *scene->scene;
    std::vector<double> values(sc.occupied().begin(), sc.occupied().end());
    nbv::write_field_snapshot(std::string(path), sc.grid(), values);
    return NBV_OK;
  });
}

void nbv_scene_free(nbv_scene* scene) { delete scene; }

nbv_status nbv_run(const nbv_config* config, uint64_t scene_seed, const char* policy,
                   const char* out_dir, const char* cache_path, unsigned threads) {
  if (auto s = require(config, "config")) return s;
  if (auto s = require(policy, "policy")) return s;
  if (auto s = require(out_dir, "out_dir")) return s;
  return guarded([&] {
    const nbv::EpisodeConfig& c = config->config;
    const nbv::Policy p = nbv::policy_from_string(policy);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_manifest(out_dir, c, {scene_seed}, {policy});

    auto scene = std::make_shared<const nbv::OccupancyScene>(
        nbv::build_episode_scene(c, scene_seed));
    nbv::EpisodeSetup setup = nbv::prepare_episode(c, scene, scene_seed);
    if (cache_path) adopt_cache_file(setup, cache_path);
    setup.cache->reset_counters();
    const bool plans = p == nbv::Policy::kDual || p == nbv::Policy::kGeoOnly ||
                       p == nbv::Policy::kSemOnly;
    if (plans && threads > 1) setup.cache->prewarm(setup.seeds, threads);

    const nbv::EpisodeResult r = nbv::run_policy(setup, p);
    nbv::write_file_atomic((dir / "metrics.csv").string(), nbv::metrics_to_csv(r.metrics));
    nbv::write_file_atomic((dir / "summary.json").string(),
                           nbv::summary_to_json(r, c, scene_seed));
    nbv::write_file_atomic((dir / "trace.jsonl").string(), nbv::trace_to_jsonl(r.trace));
    if (cache_path && plans) setup.cache->save(cache_path);
    if (r.truncated) return fail(NBV_ERR_RUNTIME, "episode truncated: " + r.diagnostic);
    return NBV_OK;
  });
}

nbv_status nbv_compare(const nbv_config* config, const uint64_t* seeds, size_t seed_count,
                       const char* const* policies, size_t policy_count, unsigned threads,
                       const char* out_dir) {
  if (auto s = require(config, "config")) return s;
  if (auto s = require(out_dir, "out_dir")) return s;
  if (seed_count > 0) {
    if (auto s = require(seeds, "seeds")) return s;
  }
  if (policy_count > 0) {
    if (auto s = require(policies, "policies")) return s;
  }
  return guarded([&] {
    if (seed_count == 0) throw nbv::InvalidInput("compare needs at least one seed");
    if (policy_count < 2) throw nbv::InvalidInput("compare needs at least two policies");
    std::vector<nbv::Policy> ps;
    std::vector<std::string> names;
    for (size_t i = 0; i < policy_count; ++i) {
      if (!policies[i]) throw nbv::InvalidInput("policy name must not be null");
      ps.push_back(nbv::policy_from_string(policies[i]));
      names.emplace_back(policies[i]);
    }
    const std::vector<std::uint64_t> ss(seeds, seeds + seed_count);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_manifest(out_dir, config->config, ss, names);
    const auto r = nbv::compare(config->config, ss, ps, threads);
    nbv::write_file_atomic((dir / "compare.csv").string(), nbv::compare_to_csv(r));
    nbv::write_file_atomic((dir / "compare.json").string(), nbv::compare_to_json(r));
    if (!r.failures.empty()) {
      return fail(NBV_ERR_PARTIAL, std::to_string(r.failures.size()) +
                                       " episode(s) failed; first: " + r.failures.front());
    }
    return NBV_OK;
  });
}

nbv_status nbv_cache_prewarm(const nbv_config* config, uint64_t scene_seed, const char* path,
                             unsigned threads, nbv_cache_stats* stats) {
  if (auto s = require(config, "config")) return s;
  if (auto s = require(path, "path")) return s;
  return guarded([&] {
    auto scene = std::make_shared<const nbv::OccupancyScene>(
        nbv::build_episode_scene(config->config, scene_seed));
    nbv::EpisodeSetup setup = nbv::prepare_episode(config->config, scene, scene_seed);
    adopt_cache_file(setup, path);
    setup.cache->prewarm(setup.seeds, threads);
    setup.cache->save(path);
    fill_stats(setup.cache->stats(), stats);
    return NBV_OK;
  });
}

nbv_status nbv_cache_stats_read(const char* path, nbv_cache_stats* stats) {
  if (auto s = require(path, "path")) return s;
  if (auto s = require(stats, "stats")) return s;
  return guarded([&] {
    if (!std::filesystem::exists(path)) {
      fill_stats(nbv::CacheStats{}, stats);
      return NBV_OK;
    }
    fill_stats(nbv::MaskCache::read_stats(path), stats);
    return NBV_OK;
  });
}

nbv_status nbv_cache_clear(const char* path) {
  if (auto s = require(path, "path")) return s;
  return guarded([&] {
    std::filesystem::remove(path);
    return NBV_OK;
  });
}

}  // extern "C"
