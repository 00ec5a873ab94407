#ifndef NOISEBOUND_DATASET_IO_HPP
#define NOISEBOUND_DATASET_IO_HPP

#include <string>

#include "noisebound/models.hpp"

namespace noisebound {

/// CSV with header "label,f0,...,f{d-1}", one point per row.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path);

/// IDX pair (big-endian): images with magic 0x00000803 and dims
/// (count, rows, cols) followed by unsigned bytes, labels with magic
/// 0x00000801. Images are flattened row-major; labels pair by index.
Dataset load_dataset_idx(const std::string& images_path,
                         const std::string& labels_path);

enum class DatasetFormat { kCsv, kIdx };

Dataset ingest_dataset(const std::string& path, DatasetFormat format,
                       const std::string& labels_path = "");

}  // namespace noisebound

#endif
