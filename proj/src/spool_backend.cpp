#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <json.hpp>

#include "rebarscan/png_io.hpp"
#include "rebarscan/segbackend.hpp"

namespace rebarscan {

namespace fs = std::filesystem;

namespace {

std::atomic<unsigned long> g_session_counter{0};

std::string session_token() {
  std::ostringstream os;
  os << "s" << ::getpid() << "-" << g_session_counter.fetch_add(1);
  return os.str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void remove_quietly(const fs::path& path) {
  std::error_code ec;
  fs::remove(path, ec);
}

class SpoolSession final : public SegmentationSession {
 public:
  SpoolSession(const RasterImage& image, const SpoolConfig& config)
      : SegmentationSession(image.width(), image.height()),
        config_(config),
        token_(session_token()) {
    fs::create_directories(config_.root / "req");
    fs::create_directories(config_.root / "resp");
    fs::create_directories(config_.root / "img");
    image_path_ = fs::absolute(config_.root / "img" / (token_ + ".png"));
    const fs::path tmp = config_.root / "img" / ("." + token_ + ".png.tmp");
    write_png_rgb(tmp, image);
    fs::rename(tmp, image_path_);
  }

  ~SpoolSession() override { remove_quietly(image_path_); }

 protected:
  ConfidenceMap run(const SegmentationRequest& request) override {
    const std::string wire_id = token_ + "-" + request.request_id;
    nlohmann::json body;
    body["request_id"] = wire_id;
    body["image_path"] = image_path_.string();
    body["prompts"] = nlohmann::json::array();
    for (const PointPrompt& p : request.prompts) {
      body["prompts"].push_back({{"x", p.x}, {"y", p.y}, {"label", prompt_label_wire(p.label)}});
    }

    const fs::path req_dir = config_.root / "req";
    const fs::path tmp = req_dir / ("." + wire_id + ".json.tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << body.dump();
      if (!out) throw BackendError(request.request_id, "cannot write spool request");
    }
    fs::rename(tmp, req_dir / (wire_id + ".json"));

    const fs::path resp_dir = config_.root / "resp";
    const fs::path done = resp_dir / (wire_id + ".done");
    const fs::path err = resp_dir / (wire_id + ".err");
    const fs::path png = resp_dir / (wire_id + ".png");
    const auto deadline = std::chrono::steady_clock::now() + config_.timeout;
    for (;;) {
      if (fs::exists(err)) {
        const std::string message = read_text(err);
        cleanup(req_dir / (wire_id + ".json"), png, done, err);
        throw BackendError(request.request_id, "external segmenter: " + message);
      }
      if (fs::exists(done)) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        cleanup(req_dir / (wire_id + ".json"), png, done, err);
        throw BackendError(request.request_id, "timed out waiting for " + done.string());
      }
      std::this_thread::sleep_for(config_.poll_interval);
    }

    ConfidenceMap conf;
    try {
      conf = read_png_confidence16(png);
    } catch (const IoError& e) {
      cleanup(req_dir / (wire_id + ".json"), png, done, err);
      throw BackendError(request.request_id, std::string("bad response: ") + e.what());
    }
    cleanup(req_dir / (wire_id + ".json"), png, done, err);
    return conf;
  }

 private:
  static void cleanup(const fs::path& req, const fs::path& png, const fs::path& done,
                      const fs::path& err) {
    remove_quietly(req);
    remove_quietly(png);
    remove_quietly(done);
    remove_quietly(err);
  }

  SpoolConfig config_;
  std::string token_;
  fs::path image_path_;
};

}  // namespace

SpoolBackend::SpoolBackend(SpoolConfig config) : config_(std::move(config)) {
  if (config_.root.empty()) throw PreconditionError("spool backend: empty spool path");
  if (config_.timeout.count() <= 0) throw PreconditionError("spool backend: timeout must be > 0");
}

std::unique_ptr<SegmentationSession> SpoolBackend::open(const RasterImage& image) const {
  if (image.empty()) throw PreconditionError("spool backend: empty image");
  return std::make_unique<SpoolSession>(image, config_);
}

}  // namespace rebarscan
