#pragma once

// Checkpoint container, little-endian binary:
//
//   magic   8 bytes  "MDTA2GCK"
//   version u32      1
//   count   u32      number of metadata entries
//     key   u32 length + bytes
//     value u32 length + bytes
//   count   u32      number of tensors
//     name  u32 length + bytes
//     rows  u32, cols u32
//     data  rows*cols float64, row-major
//
// Metadata carries the model config ("mdt.*", "fusion.*") and anything the
// writer adds (training step, rng state, extractor checksum, ...).

#include "mdta2g/autograd.hpp"
#include "mdta2g/io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mdta2g {

class MdtModel;
class ParameterStore;

struct Checkpoint {
  KeyValues meta;
  std::vector<std::pair<std::string, Mat>> tensors;

  const Mat& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
  void add_store(const ParameterStore& store, const std::string& prefix = "");
  /// Loads every parameter of `store` from tensors named prefix + name.
  void load_store(ParameterStore& store, const std::string& prefix = "") const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Model weights plus config.
Checkpoint model_checkpoint(const MdtModel& model);
MdtModel model_from_checkpoint(const Checkpoint& ckpt);

/// FNV-1a 64 over the names, shapes and raw bytes of every tensor in `store`.
std::uint64_t store_checksum(const ParameterStore& store);

}  // namespace mdta2g
