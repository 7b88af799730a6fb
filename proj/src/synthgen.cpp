#include "wearcnn/synthgen.hpp"

#include "wearcnn/png_io.hpp"
#include "wearcnn/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace wearcnn {

WearProfile wear_profile(double radius_mm) {
  class_of_radius(radius_mm);  // validates membership in the sixteen-step set

  WearProfile p;
  p.radius_mm = radius_mm;
  p.burr_height_mm = kBurrMaxMm * (1.0 - std::exp(-radius_mm / kBurrSaturationMm));
  p.shear_fraction =
      kShearBaseFraction + kShearSlopePerMm * std::min(radius_mm, kShearPlateauMm);
  p.shear_mm = p.shear_fraction * kSheetThicknessMm;
  p.rollover_mm =
      (kRolloverBaseFraction + kRolloverSlopePerMm * radius_mm) * kSheetThicknessMm;
  p.rupture_mm = kSheetThicknessMm - p.rollover_mm - p.shear_mm;
  p.mark_intensity = std::max(0.0, 1.0 - radius_mm / kMarkVanishMm);
  return p;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// 1px-wide linear coverage ramp for a signed distance (positive = inside).
double edge01(double d) { return std::clamp(d + 0.5, 0.0, 1.0); }

}  // namespace

PunchMarks draw_punch_marks(const WearProfile& profile, Rng& rng, const RenderConfig& config) {
  (void)config;
  PunchMarks marks;
  const double m = profile.mark_intensity;
  marks.ring_depth = 55.0 * m;
  marks.spots.resize(80);
  for (auto& spot : marks.spots) {
    spot.rho = 0.92 * std::sqrt(rng.uniform01());
    spot.phi = rng.uniform(0.0, kTwoPi);
    spot.depth = 65.0 * m * rng.uniform(0.4, 1.0);
  }
  return marks;
}

Image render_workpiece(const WearProfile& profile, int view_deg, Rng& rng,
                       const RenderConfig& config) {
  const int size = config.image_size;
  if (size < 16) throw std::invalid_argument("render: image size must be >= 16");
  const double s = static_cast<double>(size);

  // --- per-sample draws, fixed order (determinism contract) ---
  const double gain = rng.normal(1.0, config.lighting_gain_sigma);
  double burr_amp[3], burr_phase[3];
  for (int k = 0; k < 3; ++k) {
    burr_amp[k] = rng.normal(0.0, config.burr_angular_sigma);
    burr_phase[k] = rng.uniform(0.0, kTwoPi);
  }
  const double brush_phase = rng.uniform(0.0, kTwoPi);
  const double streak_phase = rng.uniform(0.0, kTwoPi);
  const double cx = s * (0.5 + config.geometry_jitter * rng.normal());
  const double cy = s * (0.40 + config.geometry_jitter * rng.normal());
  const double radius = s * config.disc_radius_frac * (1.0 + config.geometry_jitter * rng.normal());
  const PunchMarks marks = draw_punch_marks(profile, rng, config);
  // Workpiece-to-workpiece process scatter on the wear features themselves.
  const double rim_jitter = 1.0 + 0.02 * rng.normal();
  const double rollover_jitter = 1.0 + 0.02 * rng.normal();
  const double shear_jitter = 1.0 + 0.015 * rng.normal();
  const double mark_jitter = std::max(0.0, 1.0 + 0.04 * rng.normal());

  const double radius_v = radius * config.disc_squash;
  const double band_h = s * config.band_height_frac;
  const double rim_px = std::max(
      0.0, s * config.burr_px_max_frac * (profile.burr_height_mm / kBurrMaxMm) * rim_jitter);
  const double view_rad = static_cast<double>(view_deg) * kTwoPi / 360.0;

  const double frac_roll =
      std::clamp(profile.rollover_mm / kSheetThicknessMm * rollover_jitter, 0.0, 0.45);
  const double frac_shear =
      std::clamp(profile.shear_mm / kSheetThicknessMm * shear_jitter, 0.0, 1.0 - frac_roll);

  // Stamp speckle spots into a darkening field over the top face.
  std::vector<float> spot_field(static_cast<std::size_t>(size) * size, 0.0f);
  const double spot_sigma = std::max(1.0, 0.012 * s);
  for (const auto& spot : marks.spots) {
    const double depth = spot.depth * mark_jitter;
    if (depth <= 0.0) continue;
    const double sx = cx + radius * spot.rho * std::cos(spot.phi + view_rad);
    const double sy = cy + radius_v * spot.rho * std::sin(spot.phi + view_rad);
    const int x0 = std::max(0, static_cast<int>(sx - 3 * spot_sigma));
    const int x1 = std::min(size - 1, static_cast<int>(sx + 3 * spot_sigma));
    const int y0 = std::max(0, static_cast<int>(sy - 3 * spot_sigma));
    const int y1 = std::min(size - 1, static_cast<int>(sy + 3 * spot_sigma));
    for (int py = y0; py <= y1; ++py) {
      for (int px = x0; px <= x1; ++px) {
        const double dx = px + 0.5 - sx, dy = py + 0.5 - sy;
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * spot_sigma * spot_sigma));
        spot_field[static_cast<std::size_t>(py) * size + px] += static_cast<float>(depth * g);
      }
    }
  }

  Image image(size, size);
  for (int py = 0; py < size; ++py) {
    for (int px = 0; px < size; ++px) {
      const double x = px + 0.5, y = py + 0.5;
      const double u = (x - cx) / radius;
      const double w = (y - cy) / radius_v;
      const double rho = std::sqrt(u * u + w * w);

      // Background bench surface.
      double lum = 34.0 + 10.0 * (y / s);
      double workpiece_cov = 0.0;

      // Cut-surface band hangs below the lower silhouette of the disc.
      const double cov_width = edge01((1.0 - std::abs(u)) * radius);
      if (cov_width > 0.0 && std::abs(u) < 1.0) {
        const double y_top = cy + radius_v * std::sqrt(std::max(0.0, 1.0 - u * u));
        const double t_band = (y - y_top) / band_h;
        const double cov_band = cov_width * edge01(y - y_top) * edge01(y_top + band_h - y);
        if (cov_band > 0.0) {
          // Zone blend weights with ~0.75px soft boundaries.
          const double tau = 0.75 / band_h;
          const double s1 = std::clamp((t_band - frac_roll) / tau + 0.5, 0.0, 1.0);
          const double s2 = std::clamp((t_band - frac_roll - frac_shear) / tau + 0.5, 0.0, 1.0);
          const double w_roll = 1.0 - s1;
          const double w_shear = s1 - s2;
          const double w_rupt = s2;
          const double roll_t = std::clamp(t_band / std::max(frac_roll, 1e-6), 0.0, 1.0);
          const double lum_roll = 140.0 - 52.0 * roll_t;
          const double lum_shear = 172.0 + 6.0 * std::sin(0.9 * x + streak_phase);
          const double lum_rupt = 64.0 + 13.0 * std::sin(1.7 * x + 2.3 * y + 3.0 * streak_phase) *
                                             std::sin(0.9 * y - 1.1 * x + brush_phase);
          const double lum_band = w_roll * lum_roll + w_shear * lum_shear + w_rupt * lum_rupt;
          lum = lum + cov_band * (lum_band - lum);
          workpiece_cov = std::max(workpiece_cov, cov_band);
        }

        // Burr rim: bright ridge under the band, width follows burr height
        // modulated over the angle.
        if (rim_px > 0.0) {
          const double theta = std::atan2(w, u) + view_rad;
          double pattern = 0.0;
          const int harmonics[3] = {2, 3, 5};
          for (int k = 0; k < 3; ++k) {
            pattern += burr_amp[k] * std::sin(harmonics[k] * theta + burr_phase[k]);
          }
          const double width = std::max(0.0, rim_px * (1.0 + pattern));
          const double y_burr = y_top + band_h;
          const double cov_burr = cov_width * edge01(y - y_burr) * edge01(y_burr + width - y);
          if (cov_burr > 0.0) {
            const double lum_burr = 208.0 + 10.0 * std::sin(3.0 * theta + burr_phase[0]);
            lum = lum + cov_burr * (lum_burr - lum);
            workpiece_cov = std::max(workpiece_cov, cov_burr);
          }
        }
      }

      // Top face of the disc, drawn over everything else.
      const double cov_face = edge01((1.0 - rho) * radius_v);
      if (cov_face > 0.0) {
        double lum_face = 150.0 - 22.0 * rho * rho + 6.0 * std::sin(40.0 * rho + brush_phase);
        const double ring_d = std::abs(rho - 0.62) / 0.045;
        lum_face -= marks.ring_depth * mark_jitter * std::exp(-ring_d * ring_d);
        lum_face -= spot_field[static_cast<std::size_t>(py) * size + px];
        lum = lum + cov_face * (lum_face - lum);
        workpiece_cov = std::max(workpiece_cov, cov_face);
      }

      // Cool metal tint against a warm bench.
      const double tint_r = 1.03 - 0.06 * workpiece_cov;
      const double tint_g = 1.00;
      const double tint_b = 0.97 + 0.07 * workpiece_cov;
      const double base = lum * gain;
      image.at(py, px, 0) = static_cast<std::uint8_t>(std::clamp(base * tint_r, 0.0, 255.0));
      image.at(py, px, 1) = static_cast<std::uint8_t>(std::clamp(base * tint_g, 0.0, 255.0));
      image.at(py, px, 2) = static_cast<std::uint8_t>(std::clamp(base * tint_b, 0.0, 255.0));
    }
  }

  // Sensor noise, one gray draw per pixel in scan order.
  const double noise_sigma = config.pixel_noise_sigma * 255.0;
  if (noise_sigma > 0.0) {
    for (int py = 0; py < size; ++py) {
      for (int px = 0; px < size; ++px) {
        const double n = rng.normal(0.0, noise_sigma);
        for (int c = 0; c < 3; ++c) {
          const double v = static_cast<double>(image.at(py, px, c)) + n;
          image.at(py, px, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
      }
    }
  }
  return image;
}

namespace {

std::string class_dir_name(int class_index) {
  std::ostringstream os;
  os << "class_" << std::setw(2) << std::setfill('0') << class_index;
  return os.str();
}

std::string image_file_name(int workpiece_id, int view_deg) {
  std::ostringstream os;
  os << "wp_" << std::setw(6) << std::setfill('0') << workpiece_id << "_v" << std::setw(3)
     << std::setfill('0') << view_deg << ".png";
  return os.str();
}

}  // namespace

void save_render_config(const RenderConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("render config: cannot write " + path.string());
  out << "image_size=" << config.image_size << '\n'
      << "per_class_workpieces=" << config.per_class_workpieces << '\n'
      << "views_per_workpiece=" << config.views_per_workpiece << '\n'
      << "lighting_gain_sigma=" << config.lighting_gain_sigma << '\n'
      << "burr_angular_sigma=" << config.burr_angular_sigma << '\n'
      << "pixel_noise_sigma=" << config.pixel_noise_sigma << '\n'
      << "disc_radius_frac=" << config.disc_radius_frac << '\n'
      << "disc_squash=" << config.disc_squash << '\n'
      << "band_height_frac=" << config.band_height_frac << '\n'
      << "burr_px_max_frac=" << config.burr_px_max_frac << '\n'
      << "geometry_jitter=" << config.geometry_jitter << '\n'
      << "master_seed=" << config.master_seed << '\n'
      << "source_crop=" << config.source_crop << '\n';
}

DatasetManifest generate_dataset(const RenderConfig& config,
                                 const std::filesystem::path& out_dir) {
  if (config.per_class_workpieces < 1) {
    throw std::invalid_argument("generate: per-class workpiece count must be >= 1");
  }
  if (config.views_per_workpiece < 1 || 360 % config.views_per_workpiece != 0) {
    throw std::invalid_argument("generate: views must divide 360 evenly");
  }

  std::filesystem::create_directories(out_dir / "images");

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.source_crop = config.source_crop;
  manifest.target_size = config.image_size;

  const int view_step = 360 / config.views_per_workpiece;
  for (int class_index = 0; class_index < kNumClasses; ++class_index) {
    const std::filesystem::path class_dir = out_dir / "images" / class_dir_name(class_index);
    std::filesystem::create_directories(class_dir);
    const WearProfile profile = wear_profile(radius_of_class(class_index));
    for (int k = 0; k < config.per_class_workpieces; ++k) {
      const int workpiece_id = class_index * config.per_class_workpieces + k;
      for (int v = 0; v < config.views_per_workpiece; ++v) {
        const int view_deg = v * view_step;
        Rng rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(workpiece_id),
                            static_cast<std::uint64_t>(view_deg)));
        const Image image = render_workpiece(profile, view_deg, rng, config);
        const std::string file = image_file_name(workpiece_id, view_deg);
        write_png(class_dir / file, image);

        SampleRecord record;
        record.workpiece_id = workpiece_id;
        record.view_deg = view_deg;
        record.class_index = class_index;
        record.radius_mm = radius_of_class(class_index);
        record.image_path = "images/" + class_dir_name(class_index) + "/" + file;
        manifest.records.push_back(std::move(record));
      }
    }
  }

  save_manifest(manifest, out_dir / "manifest.csv");
  save_render_config(config, out_dir / "render_config.cfg");
  return manifest;
}

}  // namespace wearcnn
