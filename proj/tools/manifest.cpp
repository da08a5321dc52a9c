#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include "sprinter/error.hpp"
#include "sprinter/simd/kernels.hpp"

namespace sprinter::cli {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  }
  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) throw Error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("sha256: final failed");
    std::string out;
    out.reserve(2 * len);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open for digest");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_text(const std::string& text) {
  Sha256 h;
  h.update(text.data(), text.size());
  return h.hex();
}

nlohmann::json make_manifest(const ManifestContext& context, const RunRecord& record) {
  using nlohmann::json;
  json doc;
  doc["format"] = "sprinter-run";
  doc["version"] = 1;
  doc["subcommand"] = context.subcommand;
  doc["options"] = context.options;
  doc["seed"] = context.seed;
  doc["threads"] = context.threads;
  doc["simd"] = simd::active().name;
  json inputs = json::array();
  for (const auto& path : record.inputs) inputs.push_back({{"path", path}, {"sha256", sha256_file(path)}});
  doc["inputs"] = inputs;
  json outputs = json::array();
  for (const auto& out : record.outputs) {
    json entry{{"path", out.path}, {"sha256", sha256_file(out.path)}};
    if (out.reproducible_sha256) entry["reproducible_sha256"] = *out.reproducible_sha256;
    outputs.push_back(entry);
  }
  doc["outputs"] = outputs;
  doc["timing"] = {{"wall_seconds", context.wall_seconds}, {"fit_seconds", record.fit_seconds}};
  doc["peak_heap_bytes"] = context.peak_heap_bytes;
  doc["results"] = record.results;
  doc["warnings"] = record.warnings;
  doc["exit_code"] = record.exit_code;
  return doc;
}

}  // namespace sprinter::cli
