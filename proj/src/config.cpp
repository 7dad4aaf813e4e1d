#include "nbv/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "nbv/error.hpp"
#include "nbv/rng.hpp"

namespace nbv {

using Json = nlohmann::ordered_json;

namespace {

std::string_view to_string(VisibilitySource s) {
  return s == VisibilitySource::kGroundTruth ? "ground_truth" : "agent";
}
std::string_view to_string(UnknownSpace u) {
  return u == UnknownSpace::kFree ? "free" : "opaque";
}
std::string_view to_string(SemanticQuery q) {
  return q == SemanticQuery::kOnce ? "once" : "per_view";
}

// Walks one JSON object, rejecting keys nobody asked for.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
    }
  }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  void number(const std::string& key, double& out, bool nullable = false) {
    const Json* v = get(key);
    if (!v) return;
    if (nullable && v->is_null()) {
      out = 0.0;
      return;
    }
    if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
    out = v->get<double>();
  }
  template <typename Int>
  void integer(const std::string& key, Int& out) {
    const Json* v = get(key);
    if (!v) return;
    if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    if (v->is_number_unsigned()) {
      out = static_cast<Int>(v->get<std::uint64_t>());
    } else {
      const auto x = v->get<std::int64_t>();
      if constexpr (std::is_unsigned_v<Int>) {
        if (x < 0) throw ConfigError(where(key) + ": must be non-negative");
      }
      out = static_cast<Int>(x);
    }
  }
  std::string string(const std::string& key, const std::string& fallback) {
    const Json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
    return v->get<std::string>();
  }
  template <std::size_t N>
  void numbers(const std::string& key, std::array<double, N>& out) {
    const Json* v = get(key);
    if (!v) return;
    if (!v->is_array() || v->size() != N) {
      throw ConfigError(where(key) + ": expected " + std::to_string(N) + " numbers");
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(where(key) + ": expected numbers");
      out[i] = (*v)[i].get<double>();
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E, typename F>
E enum_from(const std::string& where, const std::string& value, F&& candidates) {
  for (const auto& [name, e] : candidates) {
    if (value == name) return e;
  }
  throw ConfigError(where + ": unknown value '" + value + "'");
}

}  // namespace

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::kDual: return "dual";
    case Policy::kGeoOnly: return "geo-only";
    case Policy::kSemOnly: return "sem-only";
    case Policy::kRandom: return "random";
    case Policy::kUniform: return "uniform";
  }
  return "dual";
}

Policy policy_from_string(std::string_view name) {
  for (Policy p : {Policy::kDual, Policy::kGeoOnly, Policy::kSemOnly, Policy::kRandom,
                   Policy::kUniform}) {
    if (to_string(p) == name) return p;
  }
  throw InvalidInput("unknown policy '" + std::string(name) + "'");
}

EpisodeConfig EpisodeConfig::defaults(Regime regime) {
  EpisodeConfig c;
  c.regime = regime;
  if (regime == Regime::kScene) {
    c.initial_views = 15;
    c.budget = 40;
    c.gamma = 0.005;
    c.complexity = 6;
    c.dims = {64, 64, 32};
    c.voxel_size = 0.1;
    c.ranges = {0.0};
    c.seed_stride = 4;
    c.seed_clearance = 2;
  }
  return c;
}

void EpisodeConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (initial_views < 1) fail("initial_views must be at least 1");
  if (initial_views >= budget) fail("initial_views must be below budget");
  if (!(eta > 0.0 && eta < 1.0)) fail("eta must lie in (0, 1)");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) fail("fov_deg must lie in (0, 180)");
  if (!(min_depth > 0.0 && min_depth < max_depth) || !std::isfinite(max_depth)) {
    fail("need 0 < min_depth < max_depth");
  }
  for (double w : {gamma, lambda, w_g, w_s}) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("gamma, lambda, w_g, w_s must be >= 0");
  }
  if (regime == Regime::kObject && (complexity < 1 || complexity > 7)) {
    fail("object complexity must lie in [1, 7]");
  }
  if (regime == Regime::kScene && (complexity < 0 || complexity > 12)) {
    fail("scene complexity must lie in [0, 12]");
  }
  for (int d : dims) {
    if (d < 8 || d > kMaxSceneDim) fail("scene dims must lie in [8, 256]");
  }
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) fail("voxel_size must be > 0");
  if (image_width < 4 || image_height < 3 || image_width > 4096 || image_height > 4096) {
    fail("image size must be between 4x3 and 4096x4096");
  }
  if (yaw_bins < 1 || pitch_bins < 1 || yaw_bins > 360 || pitch_bins > 180) {
    fail("bin counts out of range");
  }
  if (!(pitch_min_deg < pitch_max_deg) || pitch_min_deg < -90.0 || pitch_max_deg > 90.0) {
    fail("pitch range must lie within [-90, 90]");
  }
  if (r_pre < 1 || r_pre > (1u << 20)) fail("r_pre must lie in [1, 2^20]");
  if (!(tau >= 0.0)) fail("tau must be >= 0 (0 selects the default)");
  if (ranges.empty()) fail("ranges must not be empty");
  for (double r : ranges) {
    if (!std::isfinite(r)) fail("ranges must be finite");
  }
  if (seed_stride < 1 || seed_clearance < 0) fail("bad seed lattice");
  try {
    coefficients.validate();
  } catch (const InvalidInput& e) {
    fail(e.what());
  }
}

EpisodeConfig config_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    Fields root(j, "config");
    if (const Json* v = root.get("schema_version")) {
      if (!v->is_number_integer() || v->get<std::int64_t>() != kConfigSchemaVersion) {
        throw ConfigError("config.schema_version: unsupported version");
      }
    }
    const std::string regime = root.string("regime", "object");
    EpisodeConfig c = EpisodeConfig::defaults(enum_from<Regime>(
        "config.regime", regime,
        std::initializer_list<std::pair<const char*, Regime>>{
            {"object", Regime::kObject}, {"scene", Regime::kScene}}));

    root.integer("initial_views", c.initial_views);
    root.integer("budget", c.budget);
    root.number("eta", c.eta);
    root.number("fov_deg", c.fov_deg);
    root.number("max_depth", c.max_depth);
    root.number("min_depth", c.min_depth);
    root.number("gamma", c.gamma);
    root.number("lambda", c.lambda);
    root.number("w_g", c.w_g);
    root.number("w_s", c.w_s);
    root.integer("rng_seed", c.rng_seed);
    root.number("coverage_tolerance", c.coverage_tolerance, true);

    if (const Json* s = root.get("scene")) {
      Fields f(*s, "config.scene");
      f.integer("complexity", c.complexity);
      f.number("voxel_size", c.voxel_size);
      if (const Json* d = f.get("dims")) {
        if (!d->is_array() || d->size() != 3) throw ConfigError("config.scene.dims: expected 3 integers");
        for (int i = 0; i < 3; ++i) {
          if (!(*d)[i].is_number_integer()) throw ConfigError("config.scene.dims: expected integers");
          c.dims[i] = (*d)[i].get<int>();
        }
      }
      f.done();
    }
    if (const Json* s = root.get("camera")) {
      Fields f(*s, "config.camera");
      f.integer("width", c.image_width);
      f.integer("height", c.image_height);
      f.done();
    }
    if (const Json* s = root.get("visibility")) {
      Fields f(*s, "config.visibility");
      f.integer("yaw_bins", c.yaw_bins);
      f.integer("pitch_bins", c.pitch_bins);
      f.number("pitch_min_deg", c.pitch_min_deg);
      f.number("pitch_max_deg", c.pitch_max_deg);
      f.integer("r_pre", c.r_pre);
      c.visibility = enum_from<VisibilitySource>(
          "config.visibility.source", f.string("source", std::string(to_string(c.visibility))),
          std::initializer_list<std::pair<const char*, VisibilitySource>>{
              {"ground_truth", VisibilitySource::kGroundTruth},
              {"agent", VisibilitySource::kAgent}});
      c.unknown = enum_from<UnknownSpace>(
          "config.visibility.unknown", f.string("unknown", std::string(to_string(c.unknown))),
          std::initializer_list<std::pair<const char*, UnknownSpace>>{
              {"free", UnknownSpace::kFree}, {"opaque", UnknownSpace::kOpaque}});
      f.done();
    }
    if (const Json* s = root.get("planner")) {
      Fields f(*s, "config.planner");
      f.number("tau", c.tau, true);
      f.integer("seed_stride", c.seed_stride);
      f.integer("seed_clearance", c.seed_clearance);
      f.number("nms_radius", c.nms_radius, true);
      f.number("nms_angle_deg", c.nms_angle_deg, true);
      if (const Json* r = f.get("ranges")) {
        if (!r->is_array()) throw ConfigError("config.planner.ranges: expected an array");
        c.ranges.clear();
        for (const auto& x : *r) {
          if (!x.is_number()) throw ConfigError("config.planner.ranges: expected numbers");
          c.ranges.push_back(x.get<double>());
        }
      }
      f.done();
    }
    if (const Json* s = root.get("semantic")) {
      Fields f(*s, "config.semantic");
      c.semantic_query = enum_from<SemanticQuery>(
          "config.semantic.query", f.string("query", std::string(to_string(c.semantic_query))),
          std::initializer_list<std::pair<const char*, SemanticQuery>>{
              {"once", SemanticQuery::kOnce}, {"per_view", SemanticQuery::kPerView}});
      f.numbers("alpha", c.coefficients.alpha);
      f.numbers("beta", c.coefficients.beta);
      f.numbers("size", c.coefficients.size);
      f.done();
    }
    root.done();
    c.coefficients.lambda = c.lambda;
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const EpisodeConfig& c) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["regime"] = to_string(c.regime);
  j["initial_views"] = c.initial_views;
  j["budget"] = c.budget;
  j["eta"] = c.eta;
  j["fov_deg"] = c.fov_deg;
  j["max_depth"] = c.max_depth;
  j["min_depth"] = c.min_depth;
  j["gamma"] = c.gamma;
  j["lambda"] = c.lambda;
  j["w_g"] = c.w_g;
  j["w_s"] = c.w_s;
  j["rng_seed"] = c.rng_seed;
  j["coverage_tolerance"] = c.coverage_tolerance;
  j["scene"] = {{"complexity", c.complexity},
                {"dims", c.dims},
                {"voxel_size", c.voxel_size}};
  j["camera"] = {{"width", c.image_width}, {"height", c.image_height}};
  j["visibility"] = {{"yaw_bins", c.yaw_bins},
                     {"pitch_bins", c.pitch_bins},
                     {"pitch_min_deg", c.pitch_min_deg},
                     {"pitch_max_deg", c.pitch_max_deg},
                     {"r_pre", c.r_pre},
                     {"source", to_string(c.visibility)},
                     {"unknown", to_string(c.unknown)}};
  j["planner"] = {{"tau", c.tau},
                  {"ranges", c.ranges},
                  {"seed_stride", c.seed_stride},
                  {"seed_clearance", c.seed_clearance},
                  {"nms_radius", c.nms_radius},
                  {"nms_angle_deg", c.nms_angle_deg}};
  j["semantic"] = {{"query", to_string(c.semantic_query)},
                   {"alpha", c.coefficients.alpha},
                   {"beta", c.coefficients.beta},
                   {"size", c.coefficients.size}};
  return j.dump(2);
}

std::uint64_t config_hash(const EpisodeConfig& config) {
  return hash_label(config_to_json(config));
}

}  // namespace nbv
