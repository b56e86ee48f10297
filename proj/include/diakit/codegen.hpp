#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "diakit/checker.hpp"

namespace diakit {

inline constexpr int kManifestFormatVersion = 1;
inline constexpr const char* kManifestFileName = "framework.manifest.json";
inline constexpr const char* kGeneratedMarker = "// GENERATED BY diakit — DO NOT EDIT (regenerated)";

// Canonical description of the generated programming framework.
struct FrameworkManifest {
  nlohmann::json document;

  // Canonical serialization: sorted keys, two-space indent, LF, trailing newline.
  std::string serialize() const;
};

FrameworkManifest generate_manifest(const CheckedSpec& spec);

class GenerateError : public std::runtime_error {
 public:
  GenerateError(const std::string& message, std::filesystem::path path)
      : std::runtime_error(message), path_(std::move(path)) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Writes one stub per concrete device, context and controller. A file already
// present at a stub path is overwritten only if its first line is the
// generated marker; otherwise nothing is written and GenerateError names it.
std::vector<std::filesystem::path> generate_stubs(const FrameworkManifest& manifest,
                                                  const std::filesystem::path& outDir);

// Relative stub path for a component, e.g. "contexts/Proximity.stub.hpp".
std::filesystem::path stub_path(std::string_view section, std::string_view name);

// Writes the manifest file; returns its path.
std::filesystem::path write_manifest(const FrameworkManifest& manifest,
                                     const std::filesystem::path& outDir);

}  // namespace diakit
