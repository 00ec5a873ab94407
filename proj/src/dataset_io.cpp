#include "noisebound/dataset_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace noisebound {
namespace {

std::uint32_t get_u32_be(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  // header: label,f0,...
  if (line.rfind("label", 0) != 0) {
    throw DataError(path + ": missing 'label,...' header");
  }
  const size_t d = std::count(line.begin(), line.end(), ',');
  if (d == 0) throw DataError(path + ": header has no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t pos = 0;
        fields.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError(path + ": bad value at line " + std::to_string(lineno));
      }
    }
    if (fields.size() != d + 1) {
      throw DataError(path + ": expected " + std::to_string(d + 1) +
                      " fields at line " + std::to_string(lineno) + ", got " +
                      std::to_string(fields.size()));
    }
    const double raw_label = fields[0];
    if (raw_label < 0 || raw_label != std::floor(raw_label)) {
      throw DataError(path + ": label must be a non-negative integer at line " +
                      std::to_string(lineno));
    }
    labels.push_back(static_cast<int>(raw_label));
    fields.erase(fields.begin());
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  Dataset data;
  data.X.resize(rows.size(), d);
  data.labels.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < d; ++j) data.X(i, j) = rows[i][j];
    data.labels[i] = labels[i];
  }
  data.classes = std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
  data.validate();
  return data;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "label";
  for (int j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << "\n";
  char buf[64];
  for (int i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (int j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.X(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

Dataset load_dataset_idx(const std::string& images_path,
                         const std::string& labels_path) {
  std::ifstream im(images_path, std::ios::binary);
  if (!im) throw DataError("cannot open: " + images_path);
  if (get_u32_be(im) != 0x00000803u || !im) {
    throw DataError(images_path + ": bad IDX image magic");
  }
  const std::uint32_t count = get_u32_be(im);
  const std::uint32_t rows = get_u32_be(im);
  const std::uint32_t cols = get_u32_be(im);
  if (!im || count == 0 || rows == 0 || cols == 0) {
    throw DataError(images_path + ": bad IDX image header");
  }
  const std::uint64_t d = static_cast<std::uint64_t>(rows) * cols;
  std::vector<unsigned char> pixels(count * d);
  im.read(reinterpret_cast<char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
  if (!im) throw DataError(images_path + ": truncated image payload");

  std::ifstream lb(labels_path, std::ios::binary);
  if (!lb) throw DataError("cannot open: " + labels_path);
  if (get_u32_be(lb) != 0x00000801u || !lb) {
    throw DataError(labels_path + ": bad IDX label magic");
  }
  const std::uint32_t label_count = get_u32_be(lb);
  if (label_count != count) {
    throw DataError("IDX image/label count mismatch: " + std::to_string(count) +
                    " vs " + std::to_string(label_count));
  }
  std::vector<unsigned char> labels(label_count);
  lb.read(reinterpret_cast<char*>(labels.data()), label_count);
  if (!lb) throw DataError(labels_path + ": truncated label payload");

  Dataset data;
  data.X.resize(count, d);
  data.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      data.X(i, j) = static_cast<double>(pixels[i * d + j]);
    }
    data.labels[i] = labels[i];
  }
  data.classes =
      std::max(2, static_cast<int>(*std::max_element(labels.begin(),
                                                     labels.end())) + 1);
  data.validate();
  return data;
}

Dataset ingest_dataset(const std::string& path, DatasetFormat format,
                       const std::string& labels_path) {
  if (format == DatasetFormat::kCsv) return load_dataset_csv(path);
  if (labels_path.empty()) {
    throw ConfigError("IDX ingestion needs a labels file");
  }
  return load_dataset_idx(path, labels_path);
}

}  // namespace noisebound
