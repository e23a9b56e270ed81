#ifndef DPMOM_DATA_HPP
#define DPMOM_DATA_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpmom/core.hpp"
#include "dpmom/csvio.hpp"
#include "dpmom/error.hpp"
#include "dpmom/rng.hpp"
#include "dpmom/sha256.hpp"

namespace dpmom {

// Label 0 is the outlier sentinel in ground-truth vectors; real clusters are
// 1..K. The sentinel never enters ARI computations (masked rows are removed
// first).
inline constexpr std::uint32_t kOutlierSentinel = 0;

struct LabeledData {
  DataMatrix points;
  std::optional<Assignment> labels;             // 1..K, 0 = outlier sentinel
  std::vector<std::string> label_names;         // index c-1 names class c
};

// Features parsed as reals; an optional 1-based label column is read as
// ground truth. String labels are mapped to 1..K by first appearance;
// integer labels are taken as-is so that a 0 sentinel survives a round trip.
inline LabeledData load_csv(const std::string& path, bool has_header,
                            std::optional<std::size_t> label_column = {}) {
  const auto rows = read_csv_rows(path);
  check(!rows.empty(), ErrorCode::ParseError, "empty file: " + path);
  std::size_t first = 0;
  if (has_header) first = 1;
  check(rows.size() > first, ErrorCode::ParseError,
        "no data rows in file: " + path);

  const std::size_t width = rows[first].cells.size();
  if (label_column) {
    check(*label_column >= 1 && *label_column <= width, ErrorCode::ParseError,
          "label column out of range in " + path);
  }

  std::vector<std::vector<double>> features;
  std::vector<std::string> raw_labels;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    check(row.cells.size() == width, ErrorCode::ParseError,
          path + ": ragged row at line " + std::to_string(row.line_number));
    std::vector<double> feat;
    feat.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (label_column && c == *label_column - 1) {
        raw_labels.push_back(row.cells[c]);
        continue;
      }
      double v = 0.0;
      check(parse_double(row.cells[c], v), ErrorCode::ParseError,
            path + ": non-numeric feature cell at line " +
                std::to_string(row.line_number) + ", column " +
                std::to_string(c + 1));
      feat.push_back(v);
    }
    features.push_back(std::move(feat));
  }

  LabeledData out{DataMatrix::from_rows(features), std::nullopt, {}};
  if (label_column) {
    bool all_integer = true;
    std::vector<double> numeric(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      double v = 0.0;
      if (!parse_double(raw_labels[i], v) || v != std::floor(v) || v < 0.0) {
        all_integer = false;
        break;
      }
      numeric[i] = v;
    }
    Assignment labels(raw_labels.size(), 0);
    if (all_integer) {
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        labels[i] = static_cast<std::uint32_t>(numeric[i]);
      }
    } else {
      std::map<std::string, std::uint32_t> seen;
      for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        auto [it, inserted] = seen.emplace(
            raw_labels[i], static_cast<std::uint32_t>(seen.size() + 1));
        labels[i] = it->second;
        if (inserted) out.label_names.push_back(raw_labels[i]);
      }
    }
    out.labels = std::move(labels);
  }
  return out;
}

// 4 clusters, one per open quadrant of the plane: radius U(0,1), angle
// uniform on ((j-1)*pi/2 + pi/36, j*pi/2 - pi/36) for quadrant j.
inline LabeledData gen_quadrant(std::size_t points_per_quadrant, Rng& rng) {
  check_contract(points_per_quadrant >= 1, "gen_quadrant: need count >= 1");
  std::vector<std::vector<double>> pts;
  Assignment labels;
  pts.reserve(4 * points_per_quadrant);
  const double pad = std::numbers::pi / 36.0;
  for (std::uint32_t quadrant = 1; quadrant <= 4; ++quadrant) {
    const double lo = (quadrant - 1) * std::numbers::pi / 2.0 + pad;
    const double hi = quadrant * std::numbers::pi / 2.0 - pad;
    for (std::size_t i = 0; i < points_per_quadrant; ++i) {
      const double radius = rng.next_double();
      const double angle = lo + (hi - lo) * rng.next_double();
      pts.push_back({radius * std::cos(angle), radius * std::sin(angle)});
      labels.push_back(quadrant);
    }
  }
  return {DataMatrix::from_rows(pts), std::move(labels), {}};
}

// equal-weight spherical Gaussian blobs around the given means
inline LabeledData gen_gaussian_blobs(const std::vector<std::vector<double>>& means,
                                      double sigma, std::size_t points_per_blob,
                                      Rng& rng) {
  check_contract(!means.empty() && points_per_blob >= 1,
                 "gen_gaussian_blobs: need means and a positive count");
  std::vector<std::vector<double>> pts;
  Assignment labels;
  for (std::size_t b = 0; b < means.size(); ++b) {
    for (std::size_t i = 0; i < points_per_blob; ++i) {
      std::vector<double> x(means[b].size());
      for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] = means[b][d] + sigma * rng.normal();
      }
      pts.push_back(std::move(x));
      labels.push_back(static_cast<std::uint32_t>(b + 1));
    }
  }
  return {DataMatrix::from_rows(pts), std::move(labels), {}};
}

// Append `count` uniform points; appended rows carry the outlier sentinel.
// Default bounds are the per-dimension data range. Original rows are never
// modified.
inline LabeledData inject_outliers(
    const DataMatrix& data, const Assignment& labels, std::size_t count,
    std::optional<std::vector<std::pair<double, double>>> bounds, Rng& rng) {
  check_contract(labels.size() == data.rows(),
                 "inject_outliers: label length mismatch");
  std::vector<std::pair<double, double>> box;
  if (bounds) {
    check_contract(bounds->size() == data.cols(),
                   "inject_outliers: bounds dimension mismatch");
    box = *bounds;
    for (auto [lo, hi] : box) {
      check_contract(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
                     "inject_outliers: invalid bounds");
    }
  } else {
    box.assign(data.cols(), {0.0, 0.0});
    for (std::size_t d = 0; d < data.cols(); ++d) {
      double lo = data.row(0)[d], hi = data.row(0)[d];
      for (std::size_t i = 1; i < data.rows(); ++i) {
        lo = std::min(lo, data.row(i)[d]);
        hi = std::max(hi, data.row(i)[d]);
      }
      box[d] = {lo, hi};
    }
  }

  std::vector<double> values(data.values());
  Assignment out_labels(labels);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t d = 0; d < data.cols(); ++d) {
      values.push_back(box[d].first +
                       (box[d].second - box[d].first) * rng.next_double());
    }
    out_labels.push_back(kOutlierSentinel);
  }
  return {DataMatrix(data.rows() + count, data.cols(), std::move(values)),
          std::move(out_labels),
          {}};
}

// keep only rows whose ground truth is not the outlier sentinel
inline std::pair<Assignment, Assignment> mask_outliers(
    const Assignment& truth, const Assignment& predicted) {
  check_contract(truth.size() == predicted.size(),
                 "mask_outliers: length mismatch");
  Assignment t, p;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kOutlierSentinel) continue;
    t.push_back(truth[i]);
    p.push_back(predicted[i]);
  }
  return {std::move(t), std::move(p)};
}

// x1..xp[,label] with full round-trip precision; label 0 marks outlier rows
inline void save_csv(const LabeledData& data, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), ErrorCode::IoError, "cannot write file: " + path);
  if (data.labels) out << "# label 0 marks injected outlier rows\n";
  for (std::size_t d = 0; d < data.points.cols(); ++d) {
    if (d) out << ',';
    out << 'x' << (d + 1);
  }
  if (data.labels) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < data.points.rows(); ++i) {
    auto r = data.points.row(i);
    for (std::size_t d = 0; d < r.size(); ++d) {
      if (d) out << ',';
      out << format_double(r[d]);
    }
    if (data.labels) out << ',' << (*data.labels)[i];
    out << '\n';
  }
  check(out.good(), ErrorCode::IoError, "write failed: " + path);
}

struct DatasetEntry {
  std::string name;
  std::string path;  // relative to the manifest's directory
  std::string url;
  std::string sha256;  // empty = not pinned yet
  bool has_header = false;
  std::optional<std::size_t> label_column;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t k = 0;
};

struct Manifest {
  std::string directory;  // where relative paths resolve
  std::vector<DatasetEntry> entries;

  [[nodiscard]] const DatasetEntry* find(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  [[nodiscard]] std::string resolve(const DatasetEntry& e) const {
    std::filesystem::path p(e.path);
    if (p.is_absolute()) return p.string();
    return (std::filesystem::path(directory) / p).string();
  }
};

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorCode::IoError, "cannot open manifest: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                "manifest parse error in " + path + ": " + e.what());
  }
  check(doc.contains("datasets") && doc["datasets"].is_array(),
        ErrorCode::ParseError, "manifest needs a 'datasets' array: " + path);
  Manifest m;
  m.directory = std::filesystem::path(path).parent_path().string();
  for (const auto& j : doc["datasets"]) {
    DatasetEntry e;
    e.name = j.at("name").get<std::string>();
    e.path = j.value("path", std::string());
    e.url = j.value("url", std::string());
    if (j.contains("sha256") && j["sha256"].is_string()) {
      e.sha256 = j["sha256"].get<std::string>();
    }
    e.has_header = j.value("has_header", false);
    if (j.contains("label_column") && !j["label_column"].is_null()) {
      e.label_column = j["label_column"].get<std::size_t>();
    }
    e.n = j.value("n", 0u);
    e.p = j.value("p", 0u);
    e.k = j.value("k", 0u);
    m.entries.push_back(std::move(e));
  }
  return m;
}

struct VerifyReport {
  bool present = false;
  bool checksum_ok = false;    // true when pinned and matching
  bool checksum_pinned = false;
  bool shape_ok = false;
  std::string computed_sha256;
  std::size_t n = 0;
  std::size_t p = 0;
};

inline VerifyReport verify_dataset(const Manifest& manifest,
                                   const DatasetEntry& entry) {
  VerifyReport report;
  const std::string full = manifest.resolve(entry);
  if (!std::filesystem::exists(full)) return report;
  report.present = true;
  report.computed_sha256 = sha256_file(full);
  report.checksum_pinned = !entry.sha256.empty();
  report.checksum_ok =
      report.checksum_pinned && report.computed_sha256 == entry.sha256;
  const auto loaded = load_csv(full, entry.has_header, entry.label_column);
  report.n = loaded.points.rows();
  report.p = loaded.points.cols();
  report.shape_ok = (entry.n == 0 || report.n == entry.n) &&
                    (entry.p == 0 || report.p == entry.p);
  return report;
}

}  // namespace dpmom

#endif  // DPMOM_DATA_HPP
