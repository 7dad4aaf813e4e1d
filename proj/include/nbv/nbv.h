/* C interface to the next-best-view planning library. Every function that
 * can fail returns an nbv_status; on failure nbv_last_error() describes the
 * problem for the calling thread. Handles are opaque and owned by the caller
 * until passed to the matching *_free function. */
#ifndef NBV_NBV_H
#define NBV_NBV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(NBV_BUILDING_LIBRARY)
#define NBV_API __declspec(dllexport)
#else
#define NBV_API __declspec(dllimport)
#endif
#else
#define NBV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nbv_status {
  NBV_OK = 0,
  NBV_ERR_INVALID_ARGUMENT = 1,
  NBV_ERR_CONFIG = 2,
  NBV_ERR_IO = 3,
  NBV_ERR_CACHE_FORMAT = 4,
  NBV_ERR_SCENE = 5,
  NBV_ERR_DEGENERATE_SEED = 6,
  NBV_ERR_RUNTIME = 7,
  /* Some episodes failed; the remaining results were written. */
  NBV_ERR_PARTIAL = 8
} nbv_status;

typedef struct nbv_config nbv_config;
typedef struct nbv_scene nbv_scene;

typedef struct nbv_scene_info {
  int dims[3];
  double voxel_size;
  uint64_t occupied;
  uint64_t surface;
  uint64_t solids;
  uint64_t hash;
} nbv_scene_info;

typedef struct nbv_cache_stats {
  uint64_t entries;
  uint64_t bytes;
  uint64_t lookups;
  uint64_t hits;
  double hit_rate;
} nbv_cache_stats;

NBV_API const char* nbv_version(void);
NBV_API const char* nbv_status_name(nbv_status status);
/* Message of the last failed call on this thread; "" if none. */
NBV_API const char* nbv_last_error(void);
NBV_API void nbv_string_free(char* s);

/* regime: "object" or "scene". */
NBV_API nbv_status nbv_config_default(const char* regime, nbv_config** out);
NBV_API nbv_status nbv_config_parse(const char* json, nbv_config** out);
/* NBV_ERR_IO when the file cannot be read, NBV_ERR_CONFIG when it is invalid. */
NBV_API nbv_status nbv_config_load(const char* path, nbv_config** out);
/* Sets one top-level numeric field ("w_g", "w_s", "gamma", "eta", "lambda",
 * "tau", "r_pre", "budget", "initial_views", "rng_seed", "complexity") and
 * revalidates. */
NBV_API nbv_status nbv_config_set(nbv_config* config, const char* key, double value);
/* Canonical JSON; free with nbv_string_free. */
NBV_API nbv_status nbv_config_to_json(const nbv_config* config, char** out);
NBV_API uint64_t nbv_config_hash(const nbv_config* config);
NBV_API void nbv_config_free(nbv_config* config);

NBV_API nbv_status nbv_scene_build(const nbv_config* config, uint64_t scene_seed,
                                   nbv_scene** out);
NBV_API nbv_status nbv_scene_info_get(const nbv_scene* scene, nbv_scene_info* out);
/* Occupancy as a flat float snapshot (origin, voxel size, dims, values). */
NBV_API nbv_status nbv_scene_write(const nbv_scene* scene, const char* path);
NBV_API void nbv_scene_free(nbv_scene* scene);

/* One episode. Writes manifest.json first, then metrics.csv, summary.json and
 * trace.jsonl into out_dir. cache_path may be NULL; otherwise an existing
 * cache file is loaded (a corrupt or mismatched one is an error) and the
 * cache is saved back after the run. */
NBV_API nbv_status nbv_run(const nbv_config* config, uint64_t scene_seed,
                           const char* policy, const char* out_dir,
                           const char* cache_path, unsigned threads);

/* Every policy on every seed; writes manifest.json, compare.csv and
 * compare.json. NBV_ERR_PARTIAL when some episodes failed. */
NBV_API nbv_status nbv_compare(const nbv_config* config, const uint64_t* seeds,
                               size_t seed_count, const char* const* policies,
                               size_t policy_count, unsigned threads,
                               const char* out_dir);

/* Builds every (seed, bin) mask for the scene's candidate seeds and saves
 * them. stats may be NULL. */
NBV_API nbv_status nbv_cache_prewarm(const nbv_config* config, uint64_t scene_seed,
                                     const char* path, unsigned threads,
                                     nbv_cache_stats* stats);
/* A missing file reports empty stats. */
NBV_API nbv_status nbv_cache_stats_read(const char* path, nbv_cache_stats* stats);
/* Removing a missing file is not an error. */
NBV_API nbv_status nbv_cache_clear(const char* path);

#ifdef __cplusplus
}
#endif

#endif /* NBV_NBV_H */
