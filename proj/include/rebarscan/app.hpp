#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rebarscan/eval.hpp"
#include "rebarscan/pipeline.hpp"
#include "rebarscan/privacy.hpp"
#include "rebarscan/report.hpp"
#include "rebarscan/segbackend.hpp"

namespace rebarscan {

inline constexpr std::size_t kPaletteSize = 12;
using Palette = std::array<Rgb, kPaletteSize>;

/// Fully saturated hues 30 degrees apart, starting at red.
Palette default_palette();

enum class BackendKind { Reference, External };

/// External OCR over preprocessed sign crops. An empty command disables it.
struct OcrConfig {
  std::string command;
  OcrMethod method = OcrMethod::Binarize;
};

struct AppConfig {
  PipelineConfig pipeline;
  PrivacyConfig privacy;
  ReferenceParams reference;
  BackendKind backend = BackendKind::Reference;
  SpoolConfig spool;
  OcrConfig ocr;
  Palette palette = default_palette();
  std::filesystem::path output_dir = "out";
  /// Worker threads over images; 0 means one per available core.
  unsigned jobs = 0;

  void validate() const;
};

inline constexpr const char* kSpoolEnvVar = "REBARSCAN_SPOOL";

Json config_json(const AppConfig& config);
/// Overrides the fields present in `json` on top of `base`. Unknown keys
/// and wrong types throw PreconditionError.
AppConfig config_from_json(const Json& json, AppConfig base = {});
AppConfig load_config(const std::filesystem::path& path);
/// Takes the spool path from REBARSCAN_SPOOL when it is set and non-empty.
void apply_environment(AppConfig& config);
/// FNV-1a 64 of the canonical dump of everything that can change results
/// (output directory, job count and spool location excluded), as 16 hex digits.
std::string config_hash(const AppConfig& config);

/// Runs `command '<image>'` through the shell and returns its stdout with
/// trailing whitespace removed. A nonzero exit status throws IoError.
std::string run_ocr_command(const std::string& command, const std::filesystem::path& image);

Json scene_spec_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const Json& json);
SceneSpec load_scene_spec(const std::filesystem::path& path);

std::unique_ptr<SegmentationBackend> make_backend(const AppConfig& config);

/// Regions tinted with palette[id mod 12] at 50% alpha, bbox outlined.
RasterImage render_overlay(const RasterImage& image, std::span<const Region> regions,
                           const Palette& palette);
/// Three equally sized images side by side.
RasterImage render_triptych(const RasterImage& left, const RasterImage& middle,
                            const RasterImage& right);

/// Output stems for a batch; repeated file stems get an index suffix.
std::vector<std::string> output_stems(std::span<const std::filesystem::path> images);

// Each command returns 0 iff every input produced its complete output set.

int cmd_detect(std::span<const std::filesystem::path> images, const AppConfig& config,
               std::ostream& log);
int cmd_anonymize(std::span<const std::filesystem::path> images, const AppConfig& config,
                  std::ostream& log);
/// `pairs` lists "<image> <truth-mask>" per line; relative paths resolve
/// against the list's directory. Throws PreconditionError on an empty list.
int cmd_eval(const std::filesystem::path& pairs, const AppConfig& config, std::ostream& log);
int cmd_synth(const std::filesystem::path& spec_file, std::uint64_t seed,
              const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace rebarscan
