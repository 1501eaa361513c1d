#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "refsem/common.hpp"

namespace refsem::io {

// Container used by checkpoints and operator files: a 4-byte magic, a format
// version, a JSON metadata header, then named f64 tensors stored little-endian
// with declared shapes and byte offsets.

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd data;
};

void write_archive(const std::string& path, std::string_view magic,
                   const std::string& meta_json,
                   const std::vector<NamedTensor>& tensors);

struct Archive {
  std::string meta_json;
  std::vector<NamedTensor> tensors;

  const Eigen::MatrixXd& tensor(std::string_view name) const;
};

// Raises CheckpointError on bad magic, version mismatch, or truncation.
Archive read_archive(const std::string& path, std::string_view magic);

}  // namespace refsem::io
