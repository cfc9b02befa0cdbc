#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vdlab {

// Versioned binary model container: magic "VDML", u32 version, u32 kind,
// u64 params length + JSON hyperparameters, u64 blob count, then per blob
// a u64 length and 64-bit floats. Little-endian throughout.
struct ModelContainer {
  std::uint32_t kind = 0;
  std::string params_json;
  std::vector<std::pair<std::string, std::vector<double>>> blobs;

  const std::vector<double>& blob(const std::string& name) const;
};

constexpr std::uint32_t kModelContainerVersion = 1;
constexpr std::uint32_t kModelKindForest = 1;
constexpr std::uint32_t kModelKindCnn = 2;
constexpr std::uint32_t kModelKindRnn = 3;

void write_model_container(const std::string& path, const ModelContainer& container);
ModelContainer read_model_container(const std::string& path);

// Peeks at the kind field without loading blobs.
std::uint32_t model_container_kind(const std::string& path);

}  // namespace vdlab
