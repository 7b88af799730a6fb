#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace wearcnn {

/// One labeled photograph: which workpiece, from which of the four 90°-apart
/// viewpoints, and the cutting-edge radius class it carries.
struct SampleRecord {
  int workpiece_id = 0;
  int view_deg = 0;  // one of 0, 90, 180, 270
  int class_index = 0;
  double radius_mm = 0.0;
  std::string image_path;  // relative to the manifest root
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<SampleRecord> records;
  int source_crop = 800;   // region-of-interest crop in the capture pipeline
  int target_size = 128;   // side length images are resized to for the net
};

inline constexpr const char* kManifestHeader =
    "workpiece_id,view_deg,class_index,radius_mm,image_path";

/// Reads `dir/manifest.csv` (or the CSV itself if `path` is a file) plus the
/// sidecar render config when present.
DatasetManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& csv_path);

/// Structural checks: class/radius bijection, views in {0,90,180,270}, no
/// duplicate (workpiece_id, view_deg). With `complete_corpus` every workpiece
/// must carry exactly four views.
void validate_manifest(const DatasetManifest& manifest, bool complete_corpus = false);

}  // namespace wearcnn
