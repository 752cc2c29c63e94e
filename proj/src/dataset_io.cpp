#include "nmutant/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include "nmutant/error.hpp"
#include "nmutant/text.hpp"

namespace nmutant {

namespace {

Shape parse_shape_token(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 3) throw FormatError("shape must be HxWxC, got '" + std::string(text) + "'");
  return Shape{parse_count(parts[0]), parse_count(parts[1]), parse_count(parts[2])};
}

struct CsvHeader {
  std::optional<Shape> shape;
  std::optional<std::size_t> classes;
  std::optional<std::string> name;
};

void parse_header_line(std::string_view line, CsvHeader& header) {
  line.remove_prefix(1);
  for (auto token : split(line, ' ')) {
    token = trim(token);
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "shape") header.shape = parse_shape_token(value);
    else if (key == "classes") header.classes = parse_count(value);
    else if (key == "name") header.name = std::string(value);
  }
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& name) {
  CsvHeader header;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  double max_value = 0.0;

  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (rows.empty()) parse_header_line(line, header);
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() < 2) {
      throw FormatError("line " + std::to_string(line_no) + ": expected label and pixels");
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                        " columns, got " + std::to_string(fields.size()));
    }
    std::vector<double> pixels;
    pixels.reserve(fields.size() - 1);
    try {
      const double label = parse_real(fields[0]);
      if (label < 0 || std::floor(label) != label) {
        throw ValidationError("line " + std::to_string(line_no) + ": label must be a non-negative integer");
      }
      labels.push_back(static_cast<std::size_t>(label));
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const double v = parse_real(fields[i]);
        if (!std::isfinite(v) || v < 0) {
          throw ValidationError("line " + std::to_string(line_no) + ": pixel " + std::to_string(i - 1) +
                                " is negative or non-finite");
        }
        max_value = std::max(max_value, v);
        pixels.push_back(v);
      }
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(pixels));
  }

  const bool bytes = max_value > 1.0;
  if (bytes) {
    for (const auto& row : rows) {
      for (double v : row) {
        if (v > 255.0 || std::floor(v) != v) {
          throw ValidationError("byte-valued CSV contains non-byte pixel " + format_real(v));
        }
      }
    }
  }

  const std::size_t width = columns == 0 ? 0 : columns - 1;
  const Shape shape = header.shape.value_or(Shape{1, width, 1});
  if (!rows.empty() && shape.size() != width) {
    throw FormatError("header shape " + to_string(shape) + " does not match " +
                      std::to_string(width) + " pixel columns");
  }

  Dataset dataset;
  dataset.name = header.name.value_or(name);
  const std::size_t max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  dataset.num_classes = header.classes.value_or(labels.empty() ? 0 : max_label + 1);
  dataset.items.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] >= dataset.num_classes) {
      throw ValidationError("row " + std::to_string(i) + ": label " + std::to_string(labels[i]) +
                            " out of range for " + std::to_string(dataset.num_classes) + " classes");
    }
    auto& row = rows[i];
    if (bytes) {
      for (double& v : row) v /= 255.0;
    }
    dataset.items.push_back({Sample(shape, std::move(row)), Label{labels[i]}});
  }
  return dataset;
}

Dataset load_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string format_csv(const Dataset& dataset) {
  std::string out = "# name=" + (dataset.name.empty() ? std::string("dataset") : dataset.name) +
                    " shape=" + to_string(dataset.shape()) +
                    " classes=" + std::to_string(dataset.num_classes) + "\n";
  for (const auto& item : dataset.items) {
    out += std::to_string(item.true_label.index);
    for (double v : item.sample.values()) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& dataset, const std::string& path) { write_file(path, format_csv(dataset)); }

namespace {

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint32_t read_u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes_[offset_ + i]);
    offset_ += 4;
    return v;
  }

  unsigned char read_u8() {
    require(1);
    return static_cast<unsigned char>(bytes_[offset_++]);
  }

  std::size_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& message, std::size_t at) const {
    throw FormatError(what_ + ": " + message + " at byte offset " + std::to_string(at));
  }

 private:
  void require(std::size_t n) const {
    if (offset_ + n > bytes_.size()) fail("unexpected end of file", offset_);
  }

  const std::string& bytes_;
  std::string what_;
  std::size_t offset_ = 0;
};

void append_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

}  // namespace

Dataset parse_idx_pair(const std::string& image_bytes, const std::string& label_bytes,
                       const std::string& name) {
  ByteReader images(image_bytes, "IDX images");
  const std::uint32_t magic = images.read_u32();
  if (magic != 0x00000803 && magic != 0x00000804) images.fail("bad magic", 0);
  const std::size_t count = images.read_u32();
  Shape shape{images.read_u32(), images.read_u32(), 1};
  if (magic == 0x00000804) shape.channels = images.read_u32();

  ByteReader labels(label_bytes, "IDX labels");
  if (labels.read_u32() != 0x00000801) labels.fail("bad magic", 0);
  const std::size_t label_count = labels.read_u32();
  if (label_count != count) {
    labels.fail("label count " + std::to_string(label_count) + " != image count " + std::to_string(count), 4);
  }

  Dataset dataset;
  dataset.name = name;
  dataset.items.reserve(count);
  std::size_t max_label = 0;
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> values(shape.size());
    for (double& v : values) v = images.read_u8() / 255.0;
    const std::size_t label = labels.read_u8();
    max_label = std::max(max_label, label);
    dataset.items.push_back({Sample(shape, std::move(values)), Label{label}});
  }
  if (images.offset() != image_bytes.size()) images.fail("trailing bytes", images.offset());
  if (labels.offset() != label_bytes.size()) labels.fail("trailing bytes", labels.offset());
  dataset.num_classes = count == 0 ? 0 : max_label + 1;
  return dataset;
}

Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path) {
  return parse_idx_pair(read_file(images_path), read_file(labels_path), images_path);
}

void save_idx_pair(const Dataset& dataset, const std::string& images_path,
                   const std::string& labels_path) {
  const Shape shape = dataset.shape();
  std::string images;
  append_u32(images, shape.channels == 1 ? 0x00000803 : 0x00000804);
  append_u32(images, static_cast<std::uint32_t>(dataset.size()));
  append_u32(images, static_cast<std::uint32_t>(shape.height));
  append_u32(images, static_cast<std::uint32_t>(shape.width));
  if (shape.channels != 1) append_u32(images, static_cast<std::uint32_t>(shape.channels));
  std::string labels;
  append_u32(labels, 0x00000801);
  append_u32(labels, static_cast<std::uint32_t>(dataset.size()));
  for (const auto& item : dataset.items) {
    for (double v : item.sample.values()) images.push_back(static_cast<char>(std::lround(v * 255.0)));
    if (item.true_label.index > 255) throw ValidationError("IDX labels must fit in one byte");
    labels.push_back(static_cast<char>(item.true_label.index));
  }
  write_file(images_path, images);
  write_file(labels_path, labels);
}

Dataset load_dataset(const std::string& path, DatasetFormat format) {
  Dataset dataset;
  if (format == DatasetFormat::kIdxPair) {
    const auto comma = path.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("IDX datasets are given as '<images>,<labels>', got '" + path + "'");
    }
    dataset = load_idx_pair(path.substr(0, comma), path.substr(comma + 1));
  } else {
    dataset = load_csv(path);
  }
  dataset.validate();
  return dataset;
}

Dataset load_dataset(const std::string& spec) {
  if (spec.rfind("idx:", 0) == 0) return load_dataset(spec.substr(4), DatasetFormat::kIdxPair);
  return load_dataset(spec, DatasetFormat::kCsv);
}

}  // namespace nmutant
