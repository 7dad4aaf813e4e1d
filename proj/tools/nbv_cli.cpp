// nbv: command-line front end over the C API.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbv/nbv.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

int report(nbv_status status, const std::string& stage) {
  nlohmann::ordered_json j;
  j["error"] = {{"status", nbv_status_name(status)},
                {"stage", stage},
                {"message", nbv_last_error()}};
  std::cerr << j.dump() << "\n";
  return status == NBV_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

int usage_error(const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"status", "usage"}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return kExitUsage;
}

// Loads the config file; a missing or unreadable file is a usage error.
int load_config(const std::string& path, nbv_config** out) {
  const nbv_status s = nbv_config_load(path.c_str(), out);
  if (s == NBV_OK) return kExitOk;
  if (s == NBV_ERR_IO) return usage_error(nbv_last_error());
  return report(s, "config");
}

struct ConfigGuard {
  nbv_config* c = nullptr;
  ~ConfigGuard() { nbv_config_free(c); }
};

std::string stats_json(const nbv_cache_stats& s) {
  nlohmann::ordered_json j;
  j["entries"] = s.entries;
  j["bytes"] = s.bytes;
  j["lookups"] = s.lookups;
  j["hits"] = s.hits;
  j["hit_rate"] = s.hit_rate;
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted next-best-view planning with dual uncertainty fields"};
  app.set_version_flag("--version", std::string(nbv_version()));
  app.require_subcommand(1);

  const std::vector<std::string> policy_names{"dual", "geo-only", "sem-only", "random",
                                              "uniform"};
  std::string config_path;
  std::uint64_t scene_seed = 0;
  std::string out;
  unsigned threads = 1;
  std::string cache_path;
  std::string policy = "dual";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> policies;

  auto* scene_cmd = app.add_subcommand("scene", "Build a scene and write its occupancy snapshot");
  scene_cmd->add_option("--config", config_path, "Episode config (JSON)")->required();
  scene_cmd->add_option("--scene-seed", scene_seed, "Scene seed");
  scene_cmd->add_option("--out", out, "Output snapshot path")->required();

  auto* run_cmd = app.add_subcommand("run", "Run one episode");
  run_cmd->add_option("--config", config_path, "Episode config (JSON)")->required();
  run_cmd->add_option("--policy", policy, "Policy")
      ->check(CLI::IsMember(policy_names));
  run_cmd->add_option("--scene-seed", scene_seed, "Scene seed");
  run_cmd->add_option("--out", out, "Output directory")->required();
  run_cmd->add_option("--threads", threads, "Worker threads for mask building")
      ->check(CLI::Range(1u, 256u));
  run_cmd->add_option("--cache", cache_path, "Mask cache file");

  auto* cmp_cmd = app.add_subcommand("compare", "Compare policies across scene seeds");
  cmp_cmd->add_option("--config", config_path, "Episode config (JSON)")->required();
  cmp_cmd->add_option("--seeds", seeds, "Scene seeds")->required()->delimiter(',');
  cmp_cmd->add_option("--policies", policies, "Policies (at least two)")
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember(policy_names));
  cmp_cmd->add_option("--out", out, "Output directory")->required();
  cmp_cmd->add_option("--threads", threads, "Parallel episodes")->check(CLI::Range(1u, 256u));

  auto* cache_cmd = app.add_subcommand("cache", "Manage the persisted mask cache");
  cache_cmd->require_subcommand(1);
  auto* prewarm_cmd = cache_cmd->add_subcommand("prewarm", "Build and save every mask");
  prewarm_cmd->add_option("--config", config_path, "Episode config (JSON)")->required();
  prewarm_cmd->add_option("--scene-seed", scene_seed, "Scene seed");
  prewarm_cmd->add_option("--cache", cache_path, "Mask cache file")->required();
  prewarm_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 256u));
  auto* stats_cmd = cache_cmd->add_subcommand("stats", "Report entries, memory and hit rate");
  stats_cmd->add_option("--cache", cache_path, "Mask cache file")->required();
  auto* clear_cmd = cache_cmd->add_subcommand("clear", "Delete the cache file");
  clear_cmd->add_option("--cache", cache_path, "Mask cache file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  ConfigGuard cfg;
  if (!config_path.empty()) {
    if (int rc = load_config(config_path, &cfg.c)) return rc;
  }

  if (*scene_cmd) {
    nbv_scene* scene = nullptr;
    nbv_status s = nbv_scene_build(cfg.c, scene_seed, &scene);
    if (s != NBV_OK) return report(s, "scene");
    nbv_scene_info info{};
    s = nbv_scene_info_get(scene, &info);
    if (s == NBV_OK) s = nbv_scene_write(scene, out.c_str());
    nbv_scene_free(scene);
    if (s != NBV_OK) return report(s, "scene");
    nlohmann::ordered_json j;
    j["dims"] = {info.dims[0], info.dims[1], info.dims[2]};
    j["voxel_size"] = info.voxel_size;
    j["occupied"] = info.occupied;
    j["surface"] = info.surface;
    j["solids"] = info.solids;
    j["hash"] = info.hash;
    std::cout << j.dump() << "\n";
    return kExitOk;
  }
  if (*run_cmd) {
    const nbv_status s = nbv_run(cfg.c, scene_seed, policy.c_str(), out.c_str(),
                                 cache_path.empty() ? nullptr : cache_path.c_str(), threads);
    return s == NBV_OK ? kExitOk : report(s, "run");
  }
  if (*cmp_cmd) {
    if (policies.size() < 2) return usage_error("compare needs at least two policies");
    std::vector<const char*> names;
    for (const auto& p : policies) names.push_back(p.c_str());
    const nbv_status s = nbv_compare(cfg.c, seeds.data(), seeds.size(), names.data(),
                                     names.size(), threads, out.c_str());
    return s == NBV_OK ? kExitOk : report(s, "compare");
  }
  if (*prewarm_cmd) {
    nbv_cache_stats st{};
    const nbv_status s =
        nbv_cache_prewarm(cfg.c, scene_seed, cache_path.c_str(), threads, &st);
    if (s != NBV_OK) return report(s, "cache prewarm");
    std::cout << stats_json(st) << "\n";
    return kExitOk;
  }
  if (*stats_cmd) {
    nbv_cache_stats st{};
    const nbv_status s = nbv_cache_stats_read(cache_path.c_str(), &st);
    if (s != NBV_OK) return report(s, "cache stats");
    std::cout << stats_json(st) << "\n";
    return kExitOk;
  }
  if (*clear_cmd) {
    const nbv_status s = nbv_cache_clear(cache_path.c_str());
    return s == NBV_OK ? kExitOk : report(s, "cache clear");
  }
  return usage_error("no command given");
}
