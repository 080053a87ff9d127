#pragma once

#include <cstdint>

#include "rtsac/envsim/envsim.hpp"

namespace rtsac::testing {

// Reward evaluated pixel by pixel straight from the image bytes.
inline double brute_force_reward(const Image& img, const envsim::RedThreshold& th, double alpha, double dt) {
  double sum = 0.0;
  for (int i = 0; i < img.height; ++i) {
    for (int j = 0; j < img.width; ++j) {
      const std::uint8_t* p = img.pixel(i, j);
      const bool red = p[0] >= th.r_min && p[1] <= th.g_max && p[2] <= th.b_max;
      sum += red ? 1.0 : 0.0;
    }
  }
  return alpha * dt * sum / (static_cast<double>(img.height) * img.width);
}

inline Image solid(int h, int w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image img(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      auto* p = img.pixel(i, j);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
  return img;
}

}  // namespace rtsac::testing
