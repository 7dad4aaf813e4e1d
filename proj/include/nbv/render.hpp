#pragma once

#include <string>

#include "nbv/geometry.hpp"
#include "nbv/image.hpp"
#include "nbv/scene.hpp"

namespace nbv {

struct DepthRender {
  // Camera-frame z in meters; +infinity where the ray misses.
  ImageD depth;
  // Raw confidence >= 0; exactly 0 on misses.
  ImageD confidence;
  // |cos| of the angle between the ray and the hit face normal; 0 on misses.
  ImageD incidence;
};

struct RenderOptions {
  double max_depth = 5.0;
  double min_depth = 0.05;
  // Relative depth jump to a 4-neighbor that counts as a discontinuity.
  double edge_threshold = 0.1;
  double edge_penalty = 0.5;
};

// One ray per pixel center against the voxel occupancy. Confidence is
// |cos incidence| * exp(-depth / max_depth), reduced by the edge penalty next
// to depth discontinuities and misses. Hits beyond max_depth count as misses.
// Throws SceneError when the camera sits inside an occupied voxel.
DepthRender render_depth(const Pose& pose, const CameraIntrinsics& intrinsics,
                         const OccupancyScene& scene, const RenderOptions& options = {});

// Mock of the language model's region report for one rendered view, in the
// REGION / TYPE / PRIORITY / SIZE / REASON grammar. Cells with depth
// discontinuities become OCCLUSION, grazing surfaces GEOMETRIC, cells cut by
// the image border BOUNDARY; TEXTURE/LOW filler pads the report to at least
// five blocks. At most eight blocks.
std::string synth_semantic_report(const DepthRender& render,
                                  const RenderOptions& options = {});

}  // namespace nbv
