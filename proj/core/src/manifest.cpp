#include "vdlab/manifest.hpp"

#include <filesystem>

#include <json.hpp>

#include "vdlab/util.hpp"
#include "vdlab/version.hpp"

namespace vdlab {

void write_run_manifest(const std::string& dir, const std::string& command,
                        const Config& resolved, const Config& overrides,
                        std::uint64_t seed, int jobs) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["schema_version"] = 1;
  j["tool"] = "vdlab";
  j["tool_version"] = kVersionString;
  j["command"] = command;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["config_hash"] = strfmt("%016llx", static_cast<unsigned long long>(resolved.hash()));
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : resolved.entries()) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::json ovr = nlohmann::json::object();
  for (const auto& [k, v] : overrides.entries()) ovr[k] = v;
  j["overrides"] = ovr;
  write_text_file(dir + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace vdlab
