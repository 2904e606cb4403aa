#pragma once

#include <Eigen/Core>

#include <stdexcept>

#include "manta/image.hpp"
#include "manta/rng.hpp"

namespace manta {

// Underwater image formation: I_out = I * T + B * (1 - T), T = exp(-beta * D).
struct AttenuationParams {
  double beta = 0.1;
  Eigen::Vector3d background{0.6, 0.8, 0.9};

  void validate() const {
    if (beta < 0) throw std::invalid_argument("AttenuationParams: beta must be >= 0");
    for (int k = 0; k < 3; ++k)
      if (background[k] < 0.0 || background[k] > 1.0)
        throw std::invalid_argument("AttenuationParams: background must be in [0,1]^3");
  }
};

// Per-pixel transmission exp(-beta * D). All ones at zero depth or beta = 0.
inline Channel transmission(const DepthMap& depth, double beta) {
  if (beta < 0) throw std::invalid_argument("transmission: beta must be >= 0");
  return (-beta * depth).exp();
}

// Convex per-pixel blend of the image and the background color, weighted by
// the transmission map. Output stays within [min(I, B_c), max(I, B_c)].
inline Image beer_lambert(const Image& im, const DepthMap& depth,
                          const AttenuationParams& params) {
  params.validate();
  if (im.height() != depth.rows() || im.width() != depth.cols())
    throw std::invalid_argument("beer_lambert: image and depth dimensions differ");
  const Channel t = transmission(depth, params.beta);
  Image out;
  for (int k = 0; k < 3; ++k)
    out.ch[k] = im.ch[k] * t + params.background[k] * (1.0 - t);
  return out;
}

// Uniform draw of an attenuation coefficient from [lo, hi).
inline double sample_beta(double lo, double hi, Rng& rng) {
  if (lo < 0 || lo > hi) throw std::invalid_argument("sample_beta: need 0 <= lo <= hi");
  return rng.uniform(lo, hi);
}

// Beer-Lambert applied to a crop region. The region is clipped to the image;
// a region with no overlap is an error.
inline Image augment_crop(const Image& im, const BBox& region, const DepthMap& depth,
                          const AttenuationParams& params) {
  if (im.height() != depth.rows() || im.width() != depth.cols())
    throw std::invalid_argument("augment_crop: image and depth dimensions differ");
  const IRect r = clip_rect(to_pixel_rect(region), im.height(), im.width());
  if (r.empty()) throw std::invalid_argument("augment_crop: region lies outside the image");
  Image sub = crop(im, r);
  const DepthMap sub_depth = crop_channel(depth, r);
  return beer_lambert(sub, sub_depth, params);
}

}  // namespace manta
