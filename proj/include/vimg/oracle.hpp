// Certified ground truth: long ADPA-restart runs to a duality gap of 1e-12,
// optionally cached on disk as imgf64 plus a JSON sidecar.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "vimg/apps.hpp"
#include "vimg/composite_opt.hpp"
#include "vimg/io.hpp"

namespace vimg {

struct OracleOptions {
  std::size_t max_iters = 500000;
  double target_gap = 1e-12;
  double required_gap = 1e-8;
  std::size_t check_every = 10;
  std::string cache_dir;  // empty disables caching
};

struct OracleResult {
  ImageGrid u;
  double f_star = 0.0;  // primal objective at u
  double gap = 0.0;
  std::size_t iterations = 0;
  bool from_cache = false;
};

struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string oracle_params_string(const Regularizer& reg) {
  char buf[160];
  if (const auto* tv = std::get_if<TVParams>(&reg))
    std::snprintf(buf, sizeof buf, "tv lambda=%.17g variant=%s", tv->lambda, to_string(tv->variant));
  else {
    const auto& p = std::get<TSVParams>(reg);
    std::snprintf(buf, sizeof buf, "tsv lambda=%.17g beta=%.17g gamma=%.17g", p.lambda, p.beta, p.gamma);
  }
  return buf;
}

/// Hash of the image bytes, its shape and the parameters.
inline std::uint64_t oracle_key(const ImageGrid& f, const Regularizer& reg) {
  const std::uint64_t dims[3] = {f.width(), f.height(), static_cast<std::uint64_t>(f.boundary())};
  std::uint64_t h = fnv1a(dims, sizeof dims);
  h = fnv1a(f.data().data(), f.size() * sizeof(double), h);
  const std::string p = oracle_params_string(reg);
  return fnv1a(p.data(), p.size(), h);
}

namespace detail {

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::optional<OracleResult> load_cached(const std::filesystem::path& stem, const std::string& params,
                                               const OracleOptions& opt) {
  const auto img = std::filesystem::path(stem).replace_extension(".imf8");
  const auto meta = std::filesystem::path(stem).replace_extension(".json");
  if (!std::filesystem::exists(img) || !std::filesystem::exists(meta)) return std::nullopt;
  std::ifstream js(meta);
  const nlohmann::json j = nlohmann::json::parse(js, nullptr, false);
  if (j.is_discarded() || j.value("params", std::string()) != params) return std::nullopt;
  OracleResult r;
  r.gap = j.at("gap").get<double>();
  if (r.gap > opt.required_gap) return std::nullopt;
  r.f_star = j.at("f_star").get<double>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.u = load_imgf64(img.string()).channel_image(0);
  r.from_cache = true;
  return r;
}

}  // namespace detail

/// Runs ADPA-restart until gap ≤ target_gap or the budget is spent.
/// Throws OracleFailure when the final gap exceeds required_gap.
inline OracleResult oracle_ground_truth(const ImageGrid& f, const Regularizer& reg, const OracleOptions& opt = {}) {
  const std::string params = oracle_params_string(reg);
  std::filesystem::path stem;
  if (!opt.cache_dir.empty()) {
    stem = std::filesystem::path(opt.cache_dir) / detail::hex(oracle_key(f, reg));
    if (auto hit = detail::load_cached(stem, params, opt)) {
      if (hit->u.width() == f.width() && hit->u.height() == f.height()) return *hit;
    }
  }
  SolverOptions so;
  so.max_iters = opt.max_iters;
  so.tol = opt.target_gap;
  so.record = false;
  so.check_every = opt.check_every;
  DenoiseResult d = std::holds_alternative<TVParams>(reg)
                        ? tv_denoise(f, std::get<TVParams>(reg), CompositeSolver::AcceleratedRestart, so)
                        : tsv_denoise(f, std::get<TSVParams>(reg), CompositeSolver::AcceleratedRestart, so);
  OracleResult r;
  r.u = d.image();
  r.gap = *d.trace.back().gap;
  r.f_star = d.trace.back().objective;
  r.iterations = d.trace.iterations();
  if (!(r.gap <= opt.required_gap)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "oracle did not converge: gap %.3g after %zu iterations (%s)", r.gap,
                  r.iterations, params.c_str());
    throw OracleFailure(buf);
  }
  if (!stem.empty()) {
    std::filesystem::create_directories(stem.parent_path());
    save_imgf64(std::filesystem::path(stem).replace_extension(".imf8").string(), r.u);
    nlohmann::json j = {{"params", params},
                        {"width", f.width()},
                        {"height", f.height()},
                        {"f_star", r.f_star},
                        {"gap", r.gap},
                        {"iterations", r.iterations}};
    std::ofstream(std::filesystem::path(stem).replace_extension(".json")) << j.dump(2) << '\n';
  }
  return r;
}

}  // namespace vimg
