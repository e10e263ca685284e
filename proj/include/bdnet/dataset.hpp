#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdnet/tensor.hpp"

namespace bdnet {

// Labeled probe set. The two vectors always have equal length.
struct Dataset {
  std::vector<Tensor> images;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
};

// BDDS packed-tensor file, little-endian:
//
//   "BDDS"  magic
//   u16     version (currently 1)
//   u32     record count
//   per record: u8 rank, u32 dims..., f32 payload, u32 label
//
// Round-trips every float bit-exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset_bdds(const std::string& path);

// IDX ubyte pair (images magic 0x00000803, labels magic 0x00000801, both
// big-endian). Pixels are scaled to [0,1] and each image becomes a {1,H,W}
// tensor.
Dataset load_dataset_idx(const std::string& images_path,
                         const std::string& labels_path);

// Locator syntax: a single path is a BDDS file; "images.idx,labels.idx"
// (comma-separated pair) is an IDX pair.
Dataset load_dataset(const std::string& locator);

// Every label must be < num_classes.
void check_labels_in_range(const Dataset& ds, std::uint32_t num_classes);

}  // namespace bdnet
