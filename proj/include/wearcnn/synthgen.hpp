#pragma once

#include "wearcnn/image.hpp"
#include "wearcnn/manifest.hpp"
#include "wearcnn/rng.hpp"

#include <cstdint>
#include <filesystem>

namespace wearcnn {

// Wear-to-appearance curve constants (surrogate model; the generator stands
// in for an unavailable photo corpus and is not a physical simulation).
inline constexpr double kSheetThicknessMm = 2.0;  // h_e + h_l + h_f sum to this
inline constexpr double kBurrMaxMm = 0.25;        // burr saturation height
inline constexpr double kBurrSaturationMm = 0.18; // burr growth scale r_sat
inline constexpr double kShearBaseFraction = 0.30;
inline constexpr double kShearSlopePerMm = 1.25;  // growth up to 0.20 mm, then plateau
inline constexpr double kShearPlateauMm = 0.20;
inline constexpr double kRolloverBaseFraction = 0.08;
inline constexpr double kRolloverSlopePerMm = 0.25;  // mild growth over the full range
inline constexpr double kMarkVanishMm = 0.55;        // punch marks gone from here up

/// Renderable appearance of one wear state: burr height saturates with wear,
/// the shear-zone share grows until 0.20 mm then plateaus, rollover grows
/// mildly, rupture takes the remainder, and punch-mark intensity fades to
/// zero at 0.55 mm.
struct WearProfile {
  double radius_mm = 0.0;
  double burr_height_mm = 0.0;   // h_b
  double rollover_mm = 0.0;      // h_e
  double shear_mm = 0.0;         // h_l
  double rupture_mm = 0.0;       // h_f = thickness - h_e - h_l
  double shear_fraction = 0.0;   // h_l / thickness
  double mark_intensity = 0.0;   // m in [0, 1]
};

WearProfile wear_profile(double radius_mm);

struct RenderConfig {
  int image_size = 128;
  int per_class_workpieces = 5;
  int views_per_workpiece = 4;  // 90 degrees apart; must divide 360 evenly

  // Noise amplitudes.
  double lighting_gain_sigma = 0.04;  // global multiplicative gain ~ N(1, sigma)
  double burr_angular_sigma = 0.18;   // relative rim-width modulation per harmonic
  double pixel_noise_sigma = 0.015;    // additive pixel noise as a fraction of 255

  // Scene geometry, as fractions of the image side.
  double disc_radius_frac = 0.34;   // horizontal radius of the oblique disc
  double disc_squash = 0.55;        // vertical/horizontal radius ratio
  double band_height_frac = 0.28;   // cut-surface band height (maps the sheet thickness)
  double burr_px_max_frac = 0.13;  // rim width at full burr saturation
  double geometry_jitter = 0.015;   // relative center/radius jitter per sample

  std::uint64_t master_seed = 0;

  int source_crop = 800;  // recorded in the manifest sidecar
};

/// Punch-impression parameters drawn for one sample. Every amplitude scales
/// with the profile's mark intensity, so a profile the punch no longer marks
/// (m = 0) yields zero speckle energy.
struct PunchMarks {
  double ring_depth = 0.0;  // darkening of the impression ring, luminance units
  struct Spot {
    double rho = 0.0;   // radial position, fraction of the disc radius
    double phi = 0.0;   // angular position, radians
    double depth = 0.0; // darkening amplitude, luminance units
  };
  std::vector<Spot> spots;
};

PunchMarks draw_punch_marks(const WearProfile& profile, Rng& rng, const RenderConfig& config);

/// One workpiece photograph: oblique disc with a bright burr rim (width
/// follows burr height, modulated by angular noise), a cut-surface band split
/// into rollover/shear/rupture texture zones sized by the profile, punch-mark
/// speckle, lighting gain, and pixel noise. Deterministic in (profile,
/// view_deg, rng state).
Image render_workpiece(const WearProfile& profile, int view_deg, Rng& rng,
                       const RenderConfig& config);

/// Writes per_class_workpieces x 16 classes x views images plus manifest.csv
/// and a render_config.cfg snapshot under out_dir. Per-sample RNG is seeded
/// by hash(master_seed, workpiece_id, view_deg), so regeneration with the
/// same config is byte-identical and order-independent.
DatasetManifest generate_dataset(const RenderConfig& config,
                                 const std::filesystem::path& out_dir);

/// Serializes the config as the human-readable key=value sidecar.
void save_render_config(const RenderConfig& config, const std::filesystem::path& path);

}  // namespace wearcnn
