#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "rtsac/core/error.hpp"
#include "rtsac/envsim/envsim.hpp"

namespace rtsac::envsim {

Camera make_camera(const EnvConfig& config) {
  return Camera{config.focal_scale * config.image_height, config.image_height, config.image_width};
}

Vec3 clamp_box(const Vec3& p) noexcept {
  Vec3 out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = std::clamp(p[i], 0.0, kBoxMax[i]);
  return out;
}

// The camera looks straight down. Image columns follow the long (y) axis of
// the box, image rows follow x.
Image render(const ArmState& arm, const TargetSpec& target, const Camera& camera) {
  Image image(camera.height, camera.width);
  for (std::size_t i = 0; i < image.rgb.size(); i += 3) {
    image.rgb[i] = kBackground[0];
    image.rgb[i + 1] = kBackground[1];
    image.rgb[i + 2] = kBackground[2];
  }

  const Vec3& c = arm.camera_position;
  const double depth = c[2] - target.position[2];
  if (depth <= 0.0) return image;

  const double dx = target.position[0] - c[0];
  const double dy = target.position[1] - c[1];
  const double distance = std::sqrt(dx * dx + dy * dy + depth * depth);
  const double u = 0.5 * camera.width + camera.focal_px * dy / depth;
  const double v = 0.5 * camera.height + camera.focal_px * dx / depth;
  const double r = camera.focal_px * target.radius_cm / distance;
  const double r2 = r * r;

  const int row_lo = std::max(0, static_cast<int>(std::floor(v - r - 0.5)));
  const int row_hi = std::min(camera.height - 1, static_cast<int>(std::ceil(v + r - 0.5)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(u - r - 0.5)));
  const int col_hi = std::min(camera.width - 1, static_cast<int>(std::ceil(u + r - 0.5)));
  for (int i = row_lo; i <= row_hi; ++i) {
    const double py = i + 0.5 - v;
    for (int j = col_lo; j <= col_hi; ++j) {
      const double px = j + 0.5 - u;
      if (px * px + py * py <= r2) {
        std::uint8_t* p = image.pixel(i, j);
        p[0] = target.color[0];
        p[1] = target.color[1];
        p[2] = target.color[2];
      }
    }
  }
  return image;
}

std::size_t Mask::count() const noexcept {
  std::size_t n = 0;
  for (auto b : bits) n += b;
  return n;
}

Mask compute_mask(const Image& image, int expected_h, int expected_w, const RedThreshold& threshold) {
  if (image.height != expected_h || image.width != expected_w ||
      image.rgb.size() != image.pixel_count() * 3) {
    throw Error(ErrorKind::Configuration,
                "image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                    ", expected " + std::to_string(expected_h) + "x" + std::to_string(expected_w));
  }
  Mask mask{image.height, image.width, std::vector<std::uint8_t>(image.pixel_count(), 0)};
  const std::uint8_t* p = image.rgb.data();
  for (std::size_t k = 0; k < mask.bits.size(); ++k, p += 3) {
    mask.bits[k] = (p[0] >= threshold.r_min && p[1] <= threshold.g_max && p[2] <= threshold.b_max);
  }
  return mask;
}

double compute_reward(const Mask& mask, const RewardParams& params) {
  if (mask.height != params.h || mask.width != params.w) {
    throw Error(ErrorKind::Configuration, "mask dimensions do not match reward parameters");
  }
  const double area = static_cast<double>(params.h) * params.w;
  return params.alpha * params.delta_t_ms * (static_cast<double>(mask.count()) / area);
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace rtsac::envsim
