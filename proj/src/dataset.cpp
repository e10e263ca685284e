#include "bdnet/dataset.hpp"

#include <cstring>
#include <fstream>

#include "bdnet/common.hpp"

namespace bdnet {

namespace {

constexpr char kMagic[4] = {'B', 'D', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Status::io, "read failed for " + path);
  return bytes;
}

struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  const std::string& path;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > bytes.size()) fail(Status::corrupt, path + ": truncated record");
  }

  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }

  std::uint16_t u16le() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                      static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }

  std::uint32_t u32le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }

  std::uint32_t u32be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | bytes[pos + i];
    pos += 4;
    return v;
  }

  float f32le() {
    const std::uint32_t bits = u32le();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  if (ds.images.size() != ds.labels.size())
    fail(Status::invalid_argument, "dataset image/label count mismatch");

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(ds.images.size()));
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const Tensor& t = ds.images[i];
    if (t.empty()) fail(Status::invalid_argument, "dataset record with empty tensor");
    out.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (std::uint32_t d : t.shape) put_u32(out, d);
    for (float v : t.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      put_u32(out, bits);
    }
    put_u32(out, ds.labels[i]);
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(Status::io, "cannot open " + path + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) fail(Status::io, "write failed for " + path);
}

Dataset load_dataset_bdds(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Status::format, path + ": bad magic, not a BDDS dataset");
  Cursor c{bytes, path, 4};
  const std::uint16_t version = c.u16le();
  if (version != kVersion)
    fail(Status::format, path + ": unsupported BDDS version " + std::to_string(version));
  const std::uint32_t count = c.u32le();

  Dataset ds;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint8_t rank = c.u8();
    if (rank == 0) fail(Status::corrupt, path + ": record with rank 0");
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) {
      d = c.u32le();
      if (d == 0) fail(Status::corrupt, path + ": record with zero dimension");
    }
    const std::size_t n = shape_numel(shape);
    std::vector<float> data(n);
    for (auto& v : data) v = c.f32le();
    ds.labels.push_back(c.u32le());
    ds.images.emplace_back(std::move(shape), std::move(data));
  }
  if (c.pos != bytes.size())
    fail(Status::corrupt, path + ": trailing bytes after declared record count");
  return ds;
}

Dataset load_dataset_idx(const std::string& images_path,
                         const std::string& labels_path) {
  const std::vector<std::uint8_t> img_bytes = read_file_bytes(images_path);
  const std::vector<std::uint8_t> lab_bytes = read_file_bytes(labels_path);

  Cursor ic{img_bytes, images_path, 0};
  if (ic.u32be() != 0x00000803u)
    fail(Status::format, images_path + ": bad IDX image magic (want 0x00000803)");
  const std::uint32_t n_images = ic.u32be();
  const std::uint32_t rows = ic.u32be();
  const std::uint32_t cols = ic.u32be();
  if (rows == 0 || cols == 0)
    fail(Status::format, images_path + ": zero image dimension");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (ic.pos + static_cast<std::size_t>(n_images) * pixels != img_bytes.size())
    fail(Status::corrupt, images_path + ": payload length disagrees with header");

  Cursor lc{lab_bytes, labels_path, 0};
  if (lc.u32be() != 0x00000801u)
    fail(Status::format, labels_path + ": bad IDX label magic (want 0x00000801)");
  const std::uint32_t n_labels = lc.u32be();
  if (lc.pos + n_labels != lab_bytes.size())
    fail(Status::corrupt, labels_path + ": payload length disagrees with header");
  if (n_images != n_labels)
    fail(Status::format, "IDX pair disagrees on count: " + std::to_string(n_images) +
                             " images vs " + std::to_string(n_labels) + " labels");

  Dataset ds;
  ds.images.reserve(n_images);
  ds.labels.reserve(n_images);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    std::vector<float> data(pixels);
    for (std::size_t p = 0; p < pixels; ++p)
      data[p] = static_cast<float>(img_bytes[ic.pos + i * pixels + p]) / 255.0f;
    ds.images.emplace_back(std::vector<std::uint32_t>{1, rows, cols}, std::move(data));
    ds.labels.push_back(lab_bytes[lc.pos + i]);
  }
  return ds;
}

Dataset load_dataset(const std::string& locator) {
  const std::size_t comma = locator.find(',');
  if (comma == std::string::npos) return load_dataset_bdds(locator);
  const std::string images = locator.substr(0, comma);
  const std::string labels = locator.substr(comma + 1);
  if (images.empty() || labels.empty() || labels.find(',') != std::string::npos)
    fail(Status::invalid_argument,
         "dataset locator must be 'file.bdds' or 'images.idx,labels.idx': " + locator);
  return load_dataset_idx(images, labels);
}

void check_labels_in_range(const Dataset& ds, std::uint32_t num_classes) {
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] >= num_classes)
      fail(Status::invalid_argument,
           "label " + std::to_string(ds.labels[i]) + " at record " + std::to_string(i) +
               " outside class range [0," + std::to_string(num_classes) + ")");
}

}  // namespace bdnet
