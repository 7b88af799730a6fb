#include "wearcnn/manifest.hpp"

#include "wearcnn/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wearcnn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  return fields;
}

void read_sidecar_config(const std::filesystem::path& dir, DatasetManifest& manifest) {
  std::ifstream in(dir / "render_config.cfg");
  if (!in.good()) return;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "image_size") manifest.target_size = std::stoi(value);
    if (key == "source_crop") manifest.source_crop = std::stoi(value);
  }
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::filesystem::path csv = path;
  DatasetManifest manifest;
  if (std::filesystem::is_directory(path)) {
    csv = path / "manifest.csv";
    manifest.root = path;
  } else {
    manifest.root = path.parent_path();
  }
  std::ifstream in(csv);
  if (!in.good()) throw std::runtime_error("manifest: cannot open " + csv.string());

  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw std::runtime_error("manifest: " + csv.string() + " missing header '" +
                             kManifestHeader + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw std::runtime_error("manifest: line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected 5");
    }
    SampleRecord record;
    record.workpiece_id = std::stoi(fields[0]);
    record.view_deg = std::stoi(fields[1]);
    record.class_index = std::stoi(fields[2]);
    record.radius_mm = std::stod(fields[3]);
    record.image_path = fields[4];
    manifest.records.push_back(std::move(record));
  }
  read_sidecar_config(manifest.root, manifest);
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("manifest: cannot write " + csv_path.string());
  out << kManifestHeader << '\n';
  std::ostringstream row;
  for (const auto& record : manifest.records) {
    row.str("");
    row << record.workpiece_id << ',' << record.view_deg << ',' << record.class_index << ','
        << record.radius_mm << ',' << record.image_path;
    out << row.str() << '\n';
  }
  if (!out.good()) throw std::runtime_error("manifest: write failed for " + csv_path.string());
}

void validate_manifest(const DatasetManifest& manifest, bool complete_corpus) {
  std::set<std::pair<int, int>> seen;
  std::map<int, int> views_per_workpiece;
  for (const auto& record : manifest.records) {
    if (record.view_deg != 0 && record.view_deg != 90 && record.view_deg != 180 &&
        record.view_deg != 270) {
      throw std::runtime_error("manifest: workpiece " + std::to_string(record.workpiece_id) +
                               " has view " + std::to_string(record.view_deg));
    }
    if (record.class_index < 0 || record.class_index >= kNumClasses) {
      throw std::runtime_error("manifest: class index " + std::to_string(record.class_index) +
                               " out of range");
    }
    if (std::abs(record.radius_mm - radius_of_class(record.class_index)) > 1e-9) {
      throw std::runtime_error("manifest: workpiece " + std::to_string(record.workpiece_id) +
                               " radius " + std::to_string(record.radius_mm) +
                               " does not match class " + std::to_string(record.class_index));
    }
    if (!seen.emplace(record.workpiece_id, record.view_deg).second) {
      throw std::runtime_error("manifest: duplicate (workpiece " +
                               std::to_string(record.workpiece_id) + ", view " +
                               std::to_string(record.view_deg) + ")");
    }
    ++views_per_workpiece[record.workpiece_id];
  }
  if (complete_corpus) {
    for (const auto& [workpiece, views] : views_per_workpiece) {
      if (views != 4) {
        throw std::runtime_error("manifest: workpiece " + std::to_string(workpiece) + " has " +
                                 std::to_string(views) + " views, expected 4");
      }
    }
  }
}

}  // namespace wearcnn
