#include "rebarscan/app.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rebarscan/png_io.hpp"

namespace rebarscan {

namespace fs = std::filesystem;

Palette default_palette() {
  Palette p{};
  for (std::size_t i = 0; i < kPaletteSize; ++i) {
    p[i] = hsv_to_rgb(HsvPixel{static_cast<std::uint8_t>(15 * i), 255, 255});
  }
  return p;
}

void AppConfig::validate() const {
  pipeline.validate();
  privacy.validate();
  if (!(reference.sigma_c > 0.0)) throw PreconditionError("config: sigma_c must be > 0");
  if (!(reference.unreachable_factor >= 0.0 && reference.unreachable_factor <= 1.0)) {
    throw PreconditionError("config: unreachable_factor must be in [0,1]");
  }
  if (backend == BackendKind::External) {
    if (spool.root.empty()) throw PreconditionError("config: external backend needs a spool path");
    if (spool.timeout.count() <= 0) throw PreconditionError("config: timeout must be > 0");
  }
  if (output_dir.empty()) throw PreconditionError("config: empty output directory");
}

// Config (de)serialization -------------------------------------------------------

namespace {

class ObjectReader {
 public:
  ObjectReader(const Json& json, std::string where) : json_(json), where_(std::move(where)) {
    if (!json_.is_object()) fail("expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return json_.contains(key);
  }
  const Json& at(const char* key) { return json_.at(key); }

  void read(const char* key, int& out) {
    if (!has(key)) return;
    const Json& v = json_.at(key);
    if (!v.is_number_integer()) fail(std::string(key) + ": expected an integer");
    out = v.get<int>();
  }
  void read(const char* key, long long& out) {
    if (!has(key)) return;
    const Json& v = json_.at(key);
    if (!v.is_number_integer()) fail(std::string(key) + ": expected an integer");
    out = v.get<long long>();
  }
  void read(const char* key, unsigned long& out) {
    if (!has(key)) return;
    const Json& v = json_.at(key);
    if (!v.is_number_unsigned()) fail(std::string(key) + ": expected a non-negative integer");
    out = v.get<std::size_t>();
  }
  void read(const char* key, unsigned long long& out) {
    unsigned long v = static_cast<unsigned long>(out);
    read(key, v);
    out = v;
  }
  void read(const char* key, unsigned& out) {
    unsigned long v = out;
    read(key, v);
    out = static_cast<unsigned>(v);
  }
  void read(const char* key, double& out) {
    if (!has(key)) return;
    const Json& v = json_.at(key);
    if (!v.is_number()) fail(std::string(key) + ": expected a number");
    out = v.get<double>();
  }
  void read(const char* key, bool& out) {
    if (!has(key)) return;
    const Json& v = json_.at(key);
    if (!v.is_boolean()) fail(std::string(key) + ": expected a boolean");
    out = v.get<bool>();
  }
  void read(const char* key, std::string& out) {
    if (!has(key)) return;
    const Json& v = json_.at(key);
    if (!v.is_string()) fail(std::string(key) + ": expected a string");
    out = v.get<std::string>();
  }

  std::string sub(const char* key) const { return where_ + "." + key; }

  [[noreturn]] void fail(const std::string& what) const {
    throw PreconditionError("config " + where_ + ": " + what);
  }

  void finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it) {
      if (!seen_.contains(it.key())) fail("unknown key \"" + it.key() + "\"");
    }
  }

 private:
  const Json& json_;
  std::string where_;
  std::set<std::string> seen_;
};

std::array<int, 2> read_pair(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw PreconditionError("config " + where + ": expected [min, max] integers");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

Json range_json(const HsvRange& r) {
  return Json{{"h", {r.h_min, r.h_max}}, {"s", {r.s_min, r.s_max}}, {"v", {r.v_min, r.v_max}}};
}

HsvRange read_range(const Json& json, const std::string& where, HsvRange r) {
  ObjectReader in(json, where);
  auto bounds = [&](const char* key, int& lo, int& hi) {
    if (!in.has(key)) return;
    const std::array<int, 2> v = read_pair(in.at(key), in.sub(key));
    lo = v[0];
    hi = v[1];
  };
  bounds("h", r.h_min, r.h_max);
  bounds("s", r.s_min, r.s_max);
  bounds("v", r.v_min, r.v_max);
  in.finish();
  return r;
}

Rgb read_rgb(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw PreconditionError("config " + where + ": expected [r, g, b]");
  std::array<std::uint8_t, 3> c{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number_integer() || v[i].get<int>() < 0 || v[i].get<int>() > 255) {
      throw PreconditionError("config " + where + ": channel outside [0,255]");
    }
    c[i] = static_cast<std::uint8_t>(v[i].get<int>());
  }
  return Rgb{c[0], c[1], c[2]};
}

Json pipeline_json(const PipelineConfig& p) {
  return Json{{"auto_grid_side", p.auto_grid_side},
              {"dense_grid_sides", p.dense_grid_sides},
              {"dense_medium_area", p.dense_medium_area},
              {"dense_large_area", p.dense_large_area},
              {"area_min", p.area_min},
              {"area_max", p.area_max},
              {"aspect_min", p.aspect_min},
              {"shape_filter_all_stages", p.shape_filter_all_stages},
              {"overlap_dedup_threshold", p.overlap_dedup_threshold},
              {"pattern",
               {{"eps", p.pattern.eps},
                {"min_pts", p.pattern.min_pts},
                {"angle_tol_deg", p.pattern.angle_tol_deg}}},
              {"tau",
               {{"mode", p.tau_mode == TauMode::Adaptive ? "adaptive" : "fixed"},
                {"fixed", p.tau_fixed}}},
              {"online_skip_radius_px", p.online_skip_radius_px},
              {"skip_covered_prompts", p.skip_covered_prompts}};
}

void read_pipeline(const Json& json, PipelineConfig& p) {
  ObjectReader in(json, "pipeline");
  in.read("auto_grid_side", p.auto_grid_side);
  if (in.has("dense_grid_sides")) {
    const Json& v = in.at("dense_grid_sides");
    if (!v.is_array() || v.size() != 3) in.fail("dense_grid_sides: expected three integers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number_integer()) in.fail("dense_grid_sides: expected three integers");
      p.dense_grid_sides[i] = v[i].get<int>();
    }
  }
  in.read("dense_medium_area", p.dense_medium_area);
  in.read("dense_large_area", p.dense_large_area);
  in.read("area_min", p.area_min);
  in.read("area_max", p.area_max);
  in.read("aspect_min", p.aspect_min);
  in.read("shape_filter_all_stages", p.shape_filter_all_stages);
  in.read("overlap_dedup_threshold", p.overlap_dedup_threshold);
  if (in.has("pattern")) {
    ObjectReader pat(in.at("pattern"), in.sub("pattern"));
    pat.read("eps", p.pattern.eps);
    pat.read("min_pts", p.pattern.min_pts);
    pat.read("angle_tol_deg", p.pattern.angle_tol_deg);
    pat.finish();
  }
  if (in.has("tau")) {
    ObjectReader tau(in.at("tau"), in.sub("tau"));
    std::string mode = p.tau_mode == TauMode::Adaptive ? "adaptive" : "fixed";
    tau.read("mode", mode);
    if (mode == "adaptive") p.tau_mode = TauMode::Adaptive;
    else if (mode == "fixed") p.tau_mode = TauMode::Fixed;
    else tau.fail("mode: expected \"adaptive\" or \"fixed\"");
    tau.read("fixed", p.tau_fixed);
    tau.finish();
  }
  in.read("online_skip_radius_px", p.online_skip_radius_px);
  in.read("skip_covered_prompts", p.skip_covered_prompts);
  in.finish();
}

Json privacy_config_json(const PrivacyConfig& p) {
  return Json{{"white_range", range_json(p.white_range)},
              {"min_sign_area", p.min_sign_area},
              {"min_rectangularity", p.min_rectangularity},
              {"kernel_half_width", p.kernel_half_width},
              {"sigma", p.sigma},
              {"k", p.k},
              {"cell_px", p.cell_px}};
}

void read_privacy(const Json& json, PrivacyConfig& p) {
  ObjectReader in(json, "privacy");
  if (in.has("white_range")) p.white_range = read_range(in.at("white_range"), in.sub("white_range"), p.white_range);
  in.read("min_sign_area", p.min_sign_area);
  in.read("min_rectangularity", p.min_rectangularity);
  const int old_k = p.kernel_half_width;
  in.read("kernel_half_width", p.kernel_half_width);
  const bool sigma_given = in.has("sigma");
  in.read("sigma", p.sigma);
  if (!sigma_given && p.kernel_half_width != old_k) p.sigma = default_blur_sigma(p.kernel_half_width);
  in.read("k", p.k);
  in.read("cell_px", p.cell_px);
  in.finish();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Json config_json(const AppConfig& config) {
  Json palette = Json::array();
  for (const Rgb& c : config.palette) palette.push_back({c.r, c.g, c.b});
  return Json{{"pipeline", pipeline_json(config.pipeline)},
              {"privacy", privacy_config_json(config.privacy)},
              {"backend",
               {{"kind", config.backend == BackendKind::Reference ? "reference" : "external"},
                {"sigma_c", config.reference.sigma_c},
                {"unreachable_factor", config.reference.unreachable_factor},
                {"spool", config.spool.root.string()},
                {"timeout_ms", config.spool.timeout.count()}}},
              {"ocr", {{"command", config.ocr.command}, {"method", to_string(config.ocr.method)}}},
              {"palette", std::move(palette)},
              {"output_dir", config.output_dir.string()},
              {"jobs", config.jobs}};
}

AppConfig config_from_json(const Json& json, AppConfig base) {
  ObjectReader in(json, "root");
  if (in.has("pipeline")) read_pipeline(in.at("pipeline"), base.pipeline);
  if (in.has("privacy")) read_privacy(in.at("privacy"), base.privacy);
  if (in.has("backend")) {
    ObjectReader b(in.at("backend"), "backend");
    std::string kind = base.backend == BackendKind::Reference ? "reference" : "external";
    b.read("kind", kind);
    if (kind == "reference") base.backend = BackendKind::Reference;
    else if (kind == "external") base.backend = BackendKind::External;
    else b.fail("kind: expected \"reference\" or \"external\"");
    b.read("sigma_c", base.reference.sigma_c);
    b.read("unreachable_factor", base.reference.unreachable_factor);
    std::string spool = base.spool.root.string();
    b.read("spool", spool);
    base.spool.root = spool;
    long long timeout = base.spool.timeout.count();
    b.read("timeout_ms", timeout);
    base.spool.timeout = std::chrono::milliseconds(timeout);
    b.finish();
  }
  if (in.has("ocr")) {
    ObjectReader o(in.at("ocr"), "ocr");
    o.read("command", base.ocr.command);
    std::string method(to_string(base.ocr.method));
    o.read("method", method);
    try {
      base.ocr.method = parse_ocr_method(method);
    } catch (const PreconditionError&) {
      o.fail("method: unknown preprocessing \"" + method + "\"");
    }
    o.finish();
  }
  if (in.has("palette")) {
    const Json& v = in.at("palette");
    if (!v.is_array() || v.size() != kPaletteSize) in.fail("palette: expected exactly 12 colours");
    for (std::size_t i = 0; i < kPaletteSize; ++i) base.palette[i] = read_rgb(v[i], "palette");
  }
  std::string out = base.output_dir.string();
  in.read("output_dir", out);
  base.output_dir = out;
  in.read("jobs", base.jobs);
  in.finish();
  return base;
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  Json json;
  try {
    json = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("config " + path.string() + ": " + e.what());
  }
  AppConfig config = config_from_json(json);
  return config;
}

void apply_environment(AppConfig& config) {
  if (const char* spool = std::getenv(kSpoolEnvVar); spool != nullptr && *spool != '\0') {
    config.spool.root = spool;
  }
}

std::string config_hash(const AppConfig& config) {
  Json canon = config_json(config);
  canon.erase("output_dir");
  canon.erase("jobs");
  canon["backend"].erase("spool");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(canon.dump()));
  return buf;
}

std::string run_ocr_command(const std::string& command, const fs::path& image) {
  std::string quoted = "'";
  for (char c : image.string()) {
    if (c == '\'') quoted += "'\\''";
    else quoted += c;
  }
  quoted += "'";
  const std::string line = command + " " + quoted;
  FILE* pipe = popen(line.c_str(), "r");
  if (pipe == nullptr) throw IoError("cannot start OCR command: " + command);
  std::string out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  if (status != 0) {
    throw IoError("OCR command failed (status " + std::to_string(status) + "): " + line);
  }
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

// Scene specs ----------------------------------------------------------------------

Json scene_spec_json(const SceneSpec& s) {
  Json j{{"width", s.width},
         {"height", s.height},
         {"stripe_count", s.stripe_count},
         {"spacing_px", s.spacing_px},
         {"angle_deg", s.angle_deg},
         {"stripe_width_px", s.stripe_width_px},
         {"segment_length_px", s.segment_length_px},
         {"segment_gap_px", s.segment_gap_px},
         {"margin_px", s.margin_px},
         {"rust_hsv", {s.rust_center.h, s.rust_center.s, s.rust_center.v}},
         {"background_gray", s.background_gray},
         {"noise_sigma", s.noise_sigma}};
  if (s.sign) {
    j["sign"] = {{"bbox", bbox_json(s.sign->bbox)}, {"glyph_seed", s.sign->glyph_seed}};
  } else {
    j["sign"] = nullptr;
  }
  return j;
}

SceneSpec scene_spec_from_json(const Json& json) {
  SceneSpec s;
  ObjectReader in(json, "scene");
  in.read("width", s.width);
  in.read("height", s.height);
  in.read("stripe_count", s.stripe_count);
  in.read("spacing_px", s.spacing_px);
  in.read("angle_deg", s.angle_deg);
  in.read("stripe_width_px", s.stripe_width_px);
  in.read("segment_length_px", s.segment_length_px);
  in.read("segment_gap_px", s.segment_gap_px);
  in.read("margin_px", s.margin_px);
  if (in.has("rust_hsv")) {
    const Json& v = in.at("rust_hsv");
    if (!v.is_array() || v.size() != 3) in.fail("rust_hsv: expected [h, s, v]");
    std::array<int, 3> c{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number_integer()) in.fail("rust_hsv: expected integers");
      c[i] = v[i].get<int>();
    }
    if (c[0] < 0 || c[0] > 179 || c[1] < 0 || c[1] > 255 || c[2] < 0 || c[2] > 255) {
      in.fail("rust_hsv: component out of range");
    }
    s.rust_center = HsvPixel{static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                             static_cast<std::uint8_t>(c[2])};
  }
  in.read("background_gray", s.background_gray);
  in.read("noise_sigma", s.noise_sigma);
  // synth echoes its seed into the scene file it writes; accept it back
  std::uint64_t seed = 0;
  in.read("seed", seed);
  if (in.has("sign") && !in.at("sign").is_null()) {
    ObjectReader sign(in.at("sign"), "scene.sign");
    SceneSign sg;
    if (!sign.has("bbox")) sign.fail("missing bbox");
    const Json& b = sign.at("bbox");
    if (!b.is_array() || b.size() != 4) sign.fail("bbox: expected [x_min, y_min, x_max, y_max]");
    for (const Json& v : b) {
      if (!v.is_number_integer()) sign.fail("bbox: expected integers");
    }
    sg.bbox = BBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
    sign.read("glyph_seed", sg.glyph_seed);
    sign.finish();
    s.sign = sg;
  }
  in.finish();
  return s;
}

SceneSpec load_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec " + path.string());
  try {
    return scene_spec_from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("scene spec " + path.string() + ": " + e.what());
  }
}

std::unique_ptr<SegmentationBackend> make_backend(const AppConfig& config) {
  if (config.backend == BackendKind::External) return std::make_unique<SpoolBackend>(config.spool);
  return std::make_unique<ReferenceBackend>(config.reference);
}

// Rendering ------------------------------------------------------------------------

RasterImage render_overlay(const RasterImage& image, std::span<const Region> regions,
                           const Palette& palette) {
  RasterImage out = image;
  auto blend = [](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>((static_cast<int>(a) + b + 1) / 2);
  };
  for (const Region& r : regions) {
    if (r.frame_width != image.width() || r.frame_height != image.height()) {
      throw PreconditionError("render_overlay: region belongs to a different frame");
    }
    const Rgb c = palette[static_cast<std::size_t>(r.id) % kPaletteSize];
    for (int y = r.bbox.y_min; y <= r.bbox.y_max; ++y) {
      for (int x = r.bbox.x_min; x <= r.bbox.x_max; ++x) {
        if (!r.covers(x, y)) continue;
        const Rgb s = image(x, y);
        out(x, y) = Rgb{blend(s.r, c.r), blend(s.g, c.g), blend(s.b, c.b)};
      }
    }
    for (int x = r.bbox.x_min; x <= r.bbox.x_max; ++x) {
      out(x, r.bbox.y_min) = c;
      out(x, r.bbox.y_max) = c;
    }
    for (int y = r.bbox.y_min; y <= r.bbox.y_max; ++y) {
      out(r.bbox.x_min, y) = c;
      out(r.bbox.x_max, y) = c;
    }
  }
  return out;
}

RasterImage render_triptych(const RasterImage& left, const RasterImage& middle,
                            const RasterImage& right) {
  if (!same_dims(left, middle) || !same_dims(left, right) || left.empty()) {
    throw PreconditionError("render_triptych: images must be non-empty and equally sized");
  }
  const int w = left.width();
  RasterImage out(3 * w, left.height());
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = left(x, y);
      out(w + x, y) = middle(x, y);
      out(2 * w + x, y) = right(x, y);
    }
  }
  return out;
}

std::vector<std::string> output_stems(std::span<const fs::path> images) {
  std::map<std::string, int> counts;
  for (const fs::path& p : images) ++counts[p.stem().string()];
  std::vector<std::string> stems;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::string stem = images[i].stem().string();
    if (stem.empty()) stem = "image";
    if (counts[images[i].stem().string()] > 1) stem += "_" + std::to_string(i);
    stems.push_back(std::move(stem));
  }
  return stems;
}

// Commands -------------------------------------------------------------------------

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

unsigned worker_count(const AppConfig& config, std::size_t items) {
  unsigned n = config.jobs != 0 ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(items, 1)));
}

// Runs fn(i) for i in [0, n) on a pool of workers.
template <typename Fn>
void for_each_index(std::size_t n, unsigned workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto loop = [&]() {
#ifdef _OPENMP
    if (workers > 1) omp_set_num_threads(1);
#endif
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  if (workers <= 1) {
    loop();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(loop);
}

struct ImageJob {
  fs::path image;
  std::optional<fs::path> truth;
  std::string stem;
};

// Writes <stem>.sign<i>.ocr.png for every sign and attaches the OCR text.
void recognize_signs(const RasterImage& image, std::vector<SignRegion>& signs,
                     const std::string& stem, const AppConfig& config) {
  if (config.ocr.command.empty()) return;
  for (std::size_t i = 0; i < signs.size(); ++i) {
    const fs::path crop = config.output_dir / (stem + ".sign" + std::to_string(i) + ".ocr.png");
    write_png_rgb(crop, ocr_preprocess(image, signs[i].region.bbox, config.ocr.method));
    signs[i].text = run_ocr_command(config.ocr.command, crop);
  }
}

struct ImageResult {
  bool ok = false;
  std::string error;
  DetectionReport report;
};

ImageResult process_image(const ImageJob& job, const AppConfig& config,
                          const SegmentationBackend& backend, const std::string& hash) {
  ImageResult result;
  try {
    const RasterImage image = read_png_rgb(job.image);
    std::optional<BinaryMask> truth;
    if (job.truth) {
      truth = read_png_mask(*job.truth);
      if (truth->width() != image.width() || truth->height() != image.height()) {
        throw PreconditionError("truth mask " + job.truth->string() + " is " +
                                std::to_string(truth->width()) + "x" +
                                std::to_string(truth->height()) + ", image is " +
                                std::to_string(image.width()) + "x" +
                                std::to_string(image.height()));
      }
    }
    PipelineResult run = run_pipeline(image, backend, config.pipeline, config.privacy);
    DetectionReport& report = run.report;
    report.image = job.image.filename().string();
    report.config_hash = hash;
    if (truth) report.metrics = score_report(report, *truth);
    recognize_signs(image, report.privacy.signs, job.stem, config);

    const fs::path& out = config.output_dir;
    const RasterImage overlay = render_overlay(image, report.regions, config.palette);
    write_png_rgb(out / (job.stem + ".overlay.png"), overlay);
    write_png_rgb(out / (job.stem + ".anon.png"), run.anonymized);
    write_png_rgb(out / (job.stem + ".combined.png"),
                  render_triptych(image, overlay, run.anonymized));
    for (const Region& r : report.regions) {
      write_png_mask(out / (job.stem + ".region" + std::to_string(r.id) + ".png"), r.full_mask());
    }
    write_text(out / (job.stem + ".report.json"),
               dump(report_json(report, config.privacy.cell_px)));
    result.report = std::move(report);
    result.ok = true;
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

std::vector<ImageResult> run_batch(const std::vector<ImageJob>& jobs, const AppConfig& config) {
  const std::unique_ptr<SegmentationBackend> backend = make_backend(config);
  const std::string hash = config_hash(config);
  std::vector<ImageResult> results(jobs.size());
  for_each_index(jobs.size(), worker_count(config, jobs.size()), [&](std::size_t i) {
    results[i] = process_image(jobs[i], config, *backend, hash);
  });
  return results;
}

// Batch-level k-anonymity over every sign found in the successful images.
void write_k_anonymity(const std::vector<ImageResult>& results, const AppConfig& config) {
  std::vector<Point2D> locations;
  std::size_t images = 0;
  for (const ImageResult& r : results) {
    if (!r.ok) continue;
    ++images;
    for (const SignRegion& s : r.report.privacy.signs) locations.push_back(s.region.centroid);
  }
  const KAnonymity cells =
      k_anonymize_locations(locations, config.privacy.cell_px, config.privacy.k);
  write_text(config.output_dir / "k_anonymity.json",
             dump(k_anonymity_json(cells, config.privacy.k, config.privacy.cell_px, images,
                                   locations.size())));
}

int report_failures(const std::vector<ImageJob>& jobs, const std::vector<ImageResult>& results,
                    std::ostream& log) {
  int failed = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i].ok) continue;
    ++failed;
    log << "error: " << jobs[i].image.string() << ": " << results[i].error << "\n";
  }
  if (failed > 0) log << failed << " of " << jobs.size() << " image(s) failed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int cmd_detect(std::span<const fs::path> images, const AppConfig& config, std::ostream& log) {
  config.validate();
  if (images.empty()) {
    log << "warning: no input images\n";
    return 0;
  }
  fs::create_directories(config.output_dir);
  const std::vector<std::string> stems = output_stems(images);
  std::vector<ImageJob> jobs;
  for (std::size_t i = 0; i < images.size(); ++i) jobs.push_back({images[i], std::nullopt, stems[i]});
  const std::vector<ImageResult> results = run_batch(jobs, config);
  write_k_anonymity(results, config);
  return report_failures(jobs, results, log);
}

int cmd_anonymize(std::span<const fs::path> images, const AppConfig& config, std::ostream& log) {
  config.validate();
  if (images.empty()) {
    log << "warning: no input images\n";
    return 0;
  }
  fs::create_directories(config.output_dir);
  const std::unique_ptr<SegmentationBackend> backend = make_backend(config);
  const std::vector<std::string> stems = output_stems(images);
  std::vector<std::string> errors(images.size());
  std::vector<PrivacyActions> actions(images.size());
  std::vector<char> ok(images.size(), 0);
  for_each_index(images.size(), worker_count(config, images.size()), [&](std::size_t i) {
    try {
      const RasterImage image = read_png_rgb(images[i]);
      PrivacyActions& a = actions[i];
      a.signs = detect_signboards(image, *backend, config.privacy);
      a.kernel_half_width = config.privacy.kernel_half_width;
      a.sigma = config.privacy.sigma;
      a.k = config.privacy.k;
      const RasterImage anon =
          anonymize(image, a.signs, config.privacy.kernel_half_width, config.privacy.sigma);
      for (SignRegion& s : a.signs) s.blurred = true;
      recognize_signs(image, a.signs, stems[i], config);
      std::vector<Point2D> locations;
      for (const SignRegion& s : a.signs) locations.push_back(s.region.centroid);
      a.cells = k_anonymize_locations(locations, config.privacy.cell_px, config.privacy.k);
      write_png_rgb(config.output_dir / (stems[i] + ".anon.png"), anon);
      write_text(config.output_dir / (stems[i] + ".privacy.json"),
                 dump(privacy_json(a, config.privacy.cell_px)));
      ok[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::vector<ImageJob> jobs;
  std::vector<ImageResult> results(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    jobs.push_back({images[i], std::nullopt, stems[i]});
    results[i].ok = ok[i] != 0;
    results[i].error = errors[i];
    results[i].report.privacy = std::move(actions[i]);
  }
  write_k_anonymity(results, config);
  return report_failures(jobs, results, log);
}

int cmd_eval(const fs::path& pairs, const AppConfig& config, std::ostream& log) {
  config.validate();
  std::ifstream in(pairs);
  if (!in) throw IoError("cannot open pair list " + pairs.string());
  const fs::path base = pairs.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  std::vector<fs::path> images;
  std::vector<fs::path> truths;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string image, truth, extra;
    if (!(fields >> image) || image.front() == '#') continue;
    if (!(fields >> truth) || (fields >> extra)) {
      throw PreconditionError(pairs.string() + ":" + std::to_string(line_no) +
                              ": expected \"<image> <truth>\"");
    }
    images.push_back(resolve(image));
    truths.push_back(resolve(truth));
  }
  if (images.empty()) throw PreconditionError("eval: no image/truth pairs in " + pairs.string());

  fs::create_directories(config.output_dir);
  const std::vector<std::string> stems = output_stems(images);
  std::vector<ImageJob> jobs;
  for (std::size_t i = 0; i < images.size(); ++i) jobs.push_back({images[i], truths[i], stems[i]});
  const std::vector<ImageResult> results = run_batch(jobs, config);
  write_k_anonymity(results, config);

  ConfusionCounts pixel, region;
  Json per_image = Json::array();
  std::size_t scored = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!results[i].ok) continue;
    const ReportMetrics& m = *results[i].report.metrics;
    pixel += m.pixel_counts;
    region += m.region_counts;
    ++scored;
    Json entry = metrics_json(m);
    entry["image"] = results[i].report.image;
    per_image.push_back(std::move(entry));
  }
  Json summary;
  summary["images"] = jobs.size();
  summary["scored"] = scored;
  summary["pixel"] = scores_json(scores_or_perfect(pixel), pixel);
  summary["region"] = scores_json(scores_or_perfect(region), region);
  summary["region"]["iou_threshold"] = kRegionMatchIou;
  summary["per_image"] = std::move(per_image);
  write_text(config.output_dir / "eval_metrics.json", dump(summary));
  return report_failures(jobs, results, log);
}

int cmd_synth(const fs::path& spec_file, std::uint64_t seed, const fs::path& out_dir,
              std::ostream& log) {
  const SceneSpec spec = load_scene_spec(spec_file);
  const Scene scene = generate_scene(spec, seed);
  fs::create_directories(out_dir);
  const std::string stem = "scene_" + std::to_string(seed);
  write_png_rgb(out_dir / (stem + ".png"), scene.image);
  write_png_mask(out_dir / (stem + ".truth.png"), scene.rust_truth);
  Json echo = scene_spec_json(spec);
  echo["seed"] = seed;
  write_text(out_dir / (stem + ".spec.json"), dump(echo));
  log << "wrote " << (out_dir / (stem + ".png")).string() << "\n";
  return 0;
}

}  // namespace rebarscan
