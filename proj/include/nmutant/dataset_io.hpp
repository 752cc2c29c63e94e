#pragma once

#include <string>

#include "nmutant/tensor.hpp"

namespace nmutant {

enum class DatasetFormat { kCsv, kIdxPair };

// CSV layout: optional header lines starting with '#' carrying key=value
// tokens (shape=HxWxC, classes=N, name=...), then one row per sample:
// label, then H*W*C pixel values in row-major (H, W, C) order. Pixels are
// bytes 0-255 (rescaled by 1/255) when any value exceeds 1, else reals in [0, 1].
// Without a shape token each row is read as a 1 x cols x 1 sample.
Dataset parse_csv(const std::string& text, const std::string& name = "csv");
Dataset load_csv(const std::string& path);
std::string format_csv(const Dataset& dataset);
void save_csv(const Dataset& dataset, const std::string& path);

// Big-endian IDX: images magic 0x00000803 (N, H, W) or 0x00000804
// (N, H, W, C), labels magic 0x00000801, unsigned bytes.
Dataset parse_idx_pair(const std::string& image_bytes, const std::string& label_bytes,
                       const std::string& name = "idx");
Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path);
void save_idx_pair(const Dataset& dataset, const std::string& images_path,
                   const std::string& labels_path);

/// For kIdxPair, `path` is "<images>,<labels>".
Dataset load_dataset(const std::string& path, DatasetFormat format);

/// Picks the format from the path: "idx:<images>,<labels>" or a CSV file.
Dataset load_dataset(const std::string& spec);

}  // namespace nmutant
