#include "nbv/semantic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "nbv/error.hpp"

namespace nbv {

namespace {

constexpr std::array<std::string_view, 4> kHorizontalNames{
    "left", "center-left", "center-right", "right"};
constexpr std::array<std::string_view, 3> kVerticalNames{"top", "middle",
                                                         "bottom"};
constexpr std::array<std::string_view, 5> kCategoryNames{
    "OCCLUSION", "GEOMETRIC", "LIGHTING", "BOUNDARY", "TEXTURE"};
constexpr std::array<std::string_view, 3> kPriorityNames{"HIGH", "MEDIUM",
                                                         "LOW"};
constexpr std::array<std::string_view, 3> kSizeNames{"small", "medium",
                                                     "large"};

enum class Field { kRegion, kType, kPriority, kSize, kReason };
constexpr std::array<std::string_view, 5> kFieldKeys{"REGION", "TYPE",
                                                     "PRIORITY", "SIZE",
                                                     "REASON"};

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (lower(a[i]) != lower(b[i])) return false;
  }
  return true;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

std::string_view trim(std::string_view s, std::string_view extra = {}) {
  auto strip = [&](char c) {
    return is_space(c) || extra.find(c) != std::string_view::npos;
  };
  while (!s.empty() && strip(s.front())) s.remove_prefix(1);
  while (!s.empty() && strip(s.back())) s.remove_suffix(1);
  return s;
}

template <std::size_t N>
std::optional<int> lookup(std::string_view text,
                          const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (iequals(text, names[i])) return static_cast<int>(i);
  }
  return std::nullopt;
}

struct Token {
  Field field;
  std::size_t key_begin;
  std::size_t value_begin;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i > 0 && is_word_char(text[i - 1])) continue;
    for (std::size_t k = 0; k < kFieldKeys.size(); ++k) {
      const std::string_view key = kFieldKeys[k];
      if (text.size() - i < key.size()) continue;
      if (!iequals(text.substr(i, key.size()), key)) continue;
      std::size_t j = i + key.size();
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
      if (j < text.size() && text[j] == ':') {
        tokens.push_back({static_cast<Field>(k), i, j + 1});
        i = j;
        break;
      }
    }
  }
  return tokens;
}

struct Block {
  std::array<std::optional<std::string_view>, 5> values;
  bool duplicate = false;
};

std::optional<SemanticRegion> to_region(const Block& b) {
  if (b.duplicate) return std::nullopt;
  for (int f = 0; f < 4; ++f) {
    if (!b.values[f]) return std::nullopt;
  }
  constexpr std::string_view kDecor = "\"'`*[](){}<>.,/|;";
  SemanticRegion r;
  const auto cell = parse_cell(trim(*b.values[0], kDecor));
  const auto cat = lookup(trim(*b.values[1], kDecor), kCategoryNames);
  const auto prio = lookup(trim(*b.values[2], kDecor), kPriorityNames);
  const auto size = lookup(trim(*b.values[3], kDecor), kSizeNames);
  if (!cell || !cat || !prio || !size) return std::nullopt;
  r.cell = *cell;
  r.category = static_cast<Category>(*cat);
  r.priority = static_cast<Priority>(*prio);
  r.size = static_cast<RegionSize>(*size);
  if (b.values[4]) r.reason = std::string(trim(*b.values[4], "*`"));
  return r;
}

}  // namespace

std::string_view to_string(Horizontal h) {
  return kHorizontalNames[static_cast<int>(h)];
}
std::string_view to_string(Vertical v) {
  return kVerticalNames[static_cast<int>(v)];
}
std::string_view to_string(Category c) {
  return kCategoryNames[static_cast<int>(c)];
}
std::string_view to_string(Priority p) {
  return kPriorityNames[static_cast<int>(p)];
}
std::string_view to_string(RegionSize s) {
  return kSizeNames[static_cast<int>(s)];
}

std::string to_string(const GridCell& cell) {
  std::string out(to_string(cell.horizontal));
  out += '-';
  out += to_string(cell.vertical);
  return out;
}

std::optional<GridCell> parse_cell(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == '-' || c == '_' || is_space(c)) {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += lower(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;

  auto horizontal = [](const std::vector<std::string>& p, std::size_t b,
                       std::size_t e) -> std::optional<Horizontal> {
    std::string joined;
    for (std::size_t i = b; i < e; ++i) {
      if (!joined.empty()) joined += '-';
      joined += p[i];
    }
    const auto h = lookup(joined, kHorizontalNames);
    if (!h) return std::nullopt;
    return static_cast<Horizontal>(*h);
  };

  // Horizontal first ("center-left-middle"), or vertical first ("top-left").
  if (const auto v = lookup(parts.back(), kVerticalNames)) {
    if (const auto h = horizontal(parts, 0, parts.size() - 1)) {
      return GridCell{*h, static_cast<Vertical>(*v)};
    }
  }
  if (const auto v = lookup(parts.front(), kVerticalNames)) {
    if (const auto h = horizontal(parts, 1, parts.size())) {
      return GridCell{*h, static_cast<Vertical>(*v)};
    }
  }
  return std::nullopt;
}

ParseResult parse_regions(std::string_view report) {
  ParseResult result;
  const std::vector<Token> tokens = tokenize(report);
  if (tokens.empty()) {
    if (!trim(report).empty()) result.diagnostics = 1;
    return result;
  }

  std::optional<Block> block;
  bool orphan = false;
  auto flush = [&]() {
    if (!block) return;
    if (auto r = to_region(*block)) {
      result.regions.push_back(std::move(*r));
    } else {
      ++result.diagnostics;
    }
    block.reset();
  };

  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const Token& tok = tokens[t];
    const std::size_t end =
        t + 1 < tokens.size() ? tokens[t + 1].key_begin : report.size();
    std::string_view value = report.substr(tok.value_begin, end - tok.value_begin);
    if (const auto nl = value.find('\n'); nl != std::string_view::npos) {
      value = value.substr(0, nl);
    }
    value = trim(value, "/|;");

    if (tok.field == Field::kRegion) {
      flush();
      block.emplace();
    } else if (!block) {
      orphan = true;
      continue;
    }
    auto& slot = block->values[static_cast<int>(tok.field)];
    if (slot) block->duplicate = true;
    slot = value;
  }
  flush();
  if (orphan) ++result.diagnostics;
  return result;
}

std::string format_region(const SemanticRegion& region) {
  std::string out = "REGION: ";
  out += to_string(region.cell);
  out += " / TYPE: ";
  out += to_string(region.category);
  out += " / PRIORITY: ";
  out += to_string(region.priority);
  out += " / SIZE: ";
  out += to_string(region.size);
  out += " / REASON: ";
  out += region.reason;
  return out;
}

std::string format_report(std::span<const SemanticRegion> regions) {
  std::string out;
  for (const auto& r : regions) {
    out += format_region(r);
    out += '\n';
  }
  return out;
}

void CoefficientTable::validate() const {
  auto non_negative = [](const auto& arr) {
    return std::all_of(arr.begin(), arr.end(),
                       [](double v) { return v >= 0.0 && std::isfinite(v); });
  };
  if (!non_negative(alpha) || !non_negative(beta) || !non_negative(size) ||
      !(lambda >= 0.0)) {
    throw InvalidInput("coefficient table: entries must be non-negative");
  }
  if (!(beta[0] >= beta[1] && beta[1] >= beta[2])) {
    throw InvalidInput("coefficient table: need beta HIGH >= MEDIUM >= LOW");
  }
}

ImageD region_to_mask(const SemanticRegion& region, int width, int height,
                      const CoefficientTable& table, const MaskShape& shape) {
  if (width < 4 || height < 3) {
    throw InvalidInput("region_to_mask: image must be at least 4x3");
  }
  const double cw = width / 4.0;
  const double ch = height / 3.0;
  const double cx = (static_cast<int>(region.cell.horizontal) + 0.5) * cw;
  const double cy = (static_cast<int>(region.cell.vertical) + 0.5) * ch;
  const double s = table.size_of(region.size);
  const double hx = 0.5 * cw * s + shape.dilation_fraction * cw;
  const double hy = 0.5 * ch * s + shape.dilation_fraction * ch;
  const double sigma = shape.taper_fraction * std::hypot(cw, ch);
  const double cutoff = shape.cutoff_sigmas * sigma;

  ImageD mask(width, height, 0.0);
  for (int y = 0; y < height; ++y) {
    const double dy = std::max(std::abs(y + 0.5 - cy) - hy, 0.0);
    for (int x = 0; x < width; ++x) {
      const double dx = std::max(std::abs(x + 0.5 - cx) - hx, 0.0);
      const double d = std::hypot(dx, dy);
      if (d == 0.0) {
        mask.at(x, y) = 1.0;
      } else if (d <= cutoff) {
        mask.at(x, y) = std::exp(-d * d / (2.0 * sigma * sigma));
      }
    }
  }
  return mask;
}

ImageD accumulate_region_weights(std::span<const SemanticRegion> regions,
                                 const CoefficientTable& table, int width,
                                 int height, const MaskShape& shape) {
  table.validate();
  ImageD acc(width, height, 0.0);
  for (const auto& r : regions) {
    const ImageD m = region_to_mask(r, width, height, table, shape);
    const double w =
        table.alpha_of(r.category) * table.beta_of(r.priority) * table.size_of(r.size);
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += w * m.data[i];
  }
  return acc;
}

void normalize_min_max(std::span<double> values) {
  if (values.empty()) return;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range > 0.0) {
    for (double& v : values) v = (v - lo) / range;
  } else {
    const double fill = lo > 0.0 ? 1.0 : 0.0;
    for (double& v : values) v = fill;
  }
}

ImageD aggregate_weight_map(std::span<const SemanticRegion> regions,
                            const CoefficientTable& table, int width,
                            int height, const MaskShape& shape) {
  ImageD w = accumulate_region_weights(regions, table, width, height, shape);
  if (regions.empty()) return w;
  normalize_min_max(w.data);
  return w;
}

ImageD modulate(const ImageD& sigma, const ImageD& weights, double lambda) {
  if (!sigma.same_shape(weights)) {
    throw InvalidInput("modulate: sigma and weight map differ in size");
  }
  if (!(lambda >= 0.0)) throw InvalidInput("modulate: lambda must be >= 0");
  ImageD out(sigma.width, sigma.height);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma.data[i] >= 0.0)) {
      throw InvalidInput("modulate: sigma must be non-negative");
    }
    out.data[i] = sigma.data[i] * (1.0 + lambda * weights.data[i]);
  }
  normalize_min_max(out.data);
  return out;
}

void lift_to_3d(const ImageD& values, const ImageD& depth, const Pose& pose,
                const CameraIntrinsics& intrinsics, const VoxelGrid& grid,
                std::span<double> volume) {
  if (!values.same_shape(depth) ||
      !values.same_shape(intrinsics.width, intrinsics.height)) {
    throw InvalidInput("lift_to_3d: image dimension mismatch");
  }
  if (volume.size() != grid.size()) {
    throw InvalidInput("lift_to_3d: volume does not match grid");
  }
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double u = values.at(x, y);
      const double d = depth.at(x, y);
      if (!(u > 0.0) || !std::isfinite(d) || !(d > 0.0)) continue;
      const auto v =
          grid.locate(back_project({x + 0.5, y + 0.5}, d, intrinsics, pose));
      if (!v) continue;
      volume[*v] = std::max(volume[*v], u);
    }
  }
}

}  // namespace nbv
