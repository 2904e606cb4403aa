#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "manta/bbox.hpp"

namespace manta {

// One image channel; (row, col) == (y, x). Double precision everywhere so the
// augmentation/loss identities hold to tight tolerances; quantization to
// 8/16-bit happens only at file export.
using Channel = Eigen::ArrayXXd;

// Per-pixel relative depth, unit-free, >= 0.
using DepthMap = Channel;

// RGB image with intensities nominally in [0, 1].
struct Image {
  std::array<Channel, 3> ch;

  Image() = default;
  Image(Eigen::Index height, Eigen::Index width) {
    for (auto& c : ch) c = Channel::Zero(height, width);
  }

  static Image constant(Eigen::Index height, Eigen::Index width, double r,
                        double g, double b) {
    Image im(height, width);
    im.ch[0].setConstant(r);
    im.ch[1].setConstant(g);
    im.ch[2].setConstant(b);
    return im;
  }

  Eigen::Index height() const { return ch[0].rows(); }
  Eigen::Index width() const { return ch[0].cols(); }
  bool empty() const { return height() == 0 || width() == 0; }

  double& at(int channel, Eigen::Index y, Eigen::Index x) { return ch[channel](y, x); }
  double at(int channel, Eigen::Index y, Eigen::Index x) const { return ch[channel](y, x); }
};

// Integer pixel rectangle used for cropping.
struct IRect {
  int x = 0, y = 0, w = 0, h = 0;
  bool empty() const { return w <= 0 || h <= 0; }
};

// Nearest-pixel rasterization of a real-valued box, before clipping.
inline IRect to_pixel_rect(const BBox& b) {
  IRect r;
  r.x = static_cast<int>(std::lround(b.x));
  r.y = static_cast<int>(std::lround(b.y));
  r.w = std::max(1, static_cast<int>(std::lround(b.w)));
  r.h = std::max(1, static_cast<int>(std::lround(b.h)));
  return r;
}

inline IRect clip_rect(const IRect& r, Eigen::Index height, Eigen::Index width) {
  const int x0 = std::max(r.x, 0);
  const int y0 = std::max(r.y, 0);
  const int x1 = std::min<int>(r.x + r.w, static_cast<int>(width));
  const int y1 = std::min<int>(r.y + r.h, static_cast<int>(height));
  return {x0, y0, x1 - x0, y1 - y0};
}

inline Image crop(const Image& im, const IRect& r) {
  const IRect c = clip_rect(r, im.height(), im.width());
  if (c.empty()) throw std::invalid_argument("crop: region does not intersect the image");
  Image out(c.h, c.w);
  for (int k = 0; k < 3; ++k) out.ch[k] = im.ch[k].block(c.y, c.x, c.h, c.w);
  return out;
}

inline Channel crop_channel(const Channel& chan, const IRect& r) {
  const IRect c = clip_rect(r, chan.rows(), chan.cols());
  if (c.empty()) throw std::invalid_argument("crop: region does not intersect the image");
  return chan.block(c.y, c.x, c.h, c.w);
}

// Bilinear resampling with half-pixel centers and edge clamping.
inline Channel resize_bilinear(const Channel& src, Eigen::Index out_h, Eigen::Index out_w) {
  if (src.rows() == 0 || src.cols() == 0)
    throw std::invalid_argument("resize_bilinear: empty source");
  Channel out(out_h, out_w);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(out_w);
  for (Eigen::Index oy = 0; oy < out_h; ++oy) {
    const double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    const Eigen::Index y0 = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::floor(fy)), 0, src.rows() - 1);
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, src.rows() - 1);
    const double wy = std::clamp(fy - static_cast<double>(y0), 0.0, 1.0);
    for (Eigen::Index ox = 0; ox < out_w; ++ox) {
      const double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      const Eigen::Index x0 = std::clamp<Eigen::Index>(
          static_cast<Eigen::Index>(std::floor(fx)), 0, src.cols() - 1);
      const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, src.cols() - 1);
      const double wx = std::clamp(fx - static_cast<double>(x0), 0.0, 1.0);
      const double top = src(y0, x0) * (1.0 - wx) + src(y0, x1) * wx;
      const double bot = src(y1, x0) * (1.0 - wx) + src(y1, x1) * wx;
      out(oy, ox) = top * (1.0 - wy) + bot * wy;
    }
  }
  return out;
}

inline Image resize_bilinear(const Image& src, Eigen::Index out_h, Eigen::Index out_w) {
  Image out;
  for (int k = 0; k < 3; ++k) out.ch[k] = resize_bilinear(src.ch[k], out_h, out_w);
  return out;
}

// Rec.601 luma.
inline Channel to_gray(const Image& im) {
  return 0.299 * im.ch[0] + 0.587 * im.ch[1] + 0.114 * im.ch[2];
}

// Pad by replicating the border, `width` pixels on every side.
inline Image pad_replicate(const Image& im, int width) {
  const Eigen::Index h = im.height(), w = im.width();
  Image out(h + 2 * width, w + 2 * width);
  for (int k = 0; k < 3; ++k)
    for (Eigen::Index y = 0; y < out.height(); ++y)
      for (Eigen::Index x = 0; x < out.width(); ++x)
        out.ch[k](y, x) = im.ch[k](std::clamp<Eigen::Index>(y - width, 0, h - 1),
                                   std::clamp<Eigen::Index>(x - width, 0, w - 1));
  return out;
}

}  // namespace manta
