#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rebarscan/app.hpp"

namespace fs = std::filesystem;
using namespace rebarscan;

namespace {

struct CommonOptions {
  std::string config_file;
  std::string backend;
  std::string spool;
  std::string out;
  std::optional<unsigned> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--backend", o.backend, "segmentation backend")
      ->check(CLI::IsMember({"reference", "external"}));
  cmd->add_option("--spool", o.spool, "spool directory for the external backend");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
}

// config file < environment < flags
AppConfig resolve(const CommonOptions& o) {
  AppConfig config = o.config_file.empty() ? AppConfig{} : load_config(o.config_file);
  apply_environment(config);
  if (o.backend == "reference") config.backend = BackendKind::Reference;
  if (o.backend == "external") config.backend = BackendKind::External;
  if (!o.spool.empty()) config.spool.root = o.spool;
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.jobs) config.jobs = *o.jobs;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rebar corrosion detection with signboard anonymization"};
  app.require_subcommand(1);

  CommonOptions detect_opts;
  std::vector<std::string> detect_images;
  CLI::App* detect = app.add_subcommand("detect", "detect corrosion regions and anonymize signs");
  add_common(detect, detect_opts);
  detect->add_option("images", detect_images, "input PNG images");

  CommonOptions anon_opts;
  std::vector<std::string> anon_images;
  CLI::App* anon = app.add_subcommand("anonymize", "blur signboards only");
  add_common(anon, anon_opts);
  anon->add_option("images", anon_images, "input PNG images");

  CommonOptions eval_opts;
  std::string pairs;
  CLI::App* eval = app.add_subcommand("eval", "detect and score against truth masks");
  add_common(eval, eval_opts);
  eval->add_option("--pairs", pairs, "file listing '<image> <truth>' per line")->required();

  std::string spec;
  std::uint64_t seed = 0;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "render a synthetic scene with ground truth");
  synth->add_option("--spec", spec, "scene spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--seed", seed, "random seed")->required();
  synth->add_option("--out", synth_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto paths = [](const std::vector<std::string>& in) {
      return std::vector<fs::path>(in.begin(), in.end());
    };
    if (detect->parsed()) return cmd_detect(paths(detect_images), resolve(detect_opts), std::cerr);
    if (anon->parsed()) return cmd_anonymize(paths(anon_images), resolve(anon_opts), std::cerr);
    if (eval->parsed()) return cmd_eval(pairs, resolve(eval_opts), std::cerr);
    if (synth->parsed()) return cmd_synth(spec, seed, synth_out, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
