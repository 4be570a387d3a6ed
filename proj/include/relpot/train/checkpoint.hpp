#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include "relpot/core/dataset.hpp"
#include "relpot/model/model.hpp"

namespace relpot {

struct AdamState {
  std::int64_t step_count = 0;
  std::vector<Tensor> m, v;  // aligned with ParamStore::names()
};

struct Checkpoint {
  ModelConfig model_cfg;
  std::shared_ptr<ParamStore> params;
  NormStats stats;
  std::int64_t iteration = 0;
  std::string train_cfg_json;
  std::optional<AdamState> opt;

  Model model() const { return Model::from_params(model_cfg, params, stats); }
};

// Directory with manifest.json + params.f32 (+ adam.f32), parameters keyed by
// layer path in the manifest, raw little-endian float32 payload.
inline void save_checkpoint(const Checkpoint& ckpt,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json m;
  m["version"] = 1;
  m["model"] = ckpt.model_cfg.to_json();
  m["iteration"] = ckpt.iteration;
  m["stats"] = {{"mean", ckpt.stats.mean}, {"std", ckpt.stats.std}};
  m["train_config"] = ckpt.train_cfg_json;

  nlohmann::ordered_json plist = nlohmann::ordered_json::array();
  std::vector<float> blob;
  for (const auto& name : ckpt.params->names()) {
    const Tensor& t = ckpt.params->at(name).value();
    plist.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
    blob.insert(blob.end(), t.data(), t.data() + t.size());
  }
  m["params"] = plist;

  if (ckpt.opt) {
    m["adam_step"] = ckpt.opt->step_count;
    std::vector<float> opt_blob;
    for (const auto& list : {&ckpt.opt->m, &ckpt.opt->v})
      for (const auto& t : *list)
        opt_blob.insert(opt_blob.end(), t.data(), t.data() + t.size());
    detail::write_f32(dir / "adam.f32", opt_blob);
  }

  detail::write_f32(dir / "params.f32", blob);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint manifest in " + dir.string());
  out << m.dump(2) << "\n";
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing checkpoint manifest in " + dir.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint manifest: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  try {
    ckpt.model_cfg = ModelConfig::from_json(m.at("model"));
    ckpt.iteration = m.at("iteration");
    ckpt.stats.mean = m.at("stats").at("mean").get<std::vector<float>>();
    ckpt.stats.std = m.at("stats").at("std").get<std::vector<float>>();
    ckpt.train_cfg_json = m.value("train_config", std::string());

    std::size_t total = 0;
    for (const auto& p : m.at("params"))
      total += static_cast<std::size_t>(p.at("rows").get<int>()) *
               p.at("cols").get<int>();
    auto blob = detail::read_f32(dir / "params.f32", total);

    ckpt.params = std::make_shared<ParamStore>();
    std::size_t off = 0;
    std::vector<std::pair<int, int>> shapes;
    for (const auto& p : m.at("params")) {
      const int rows = p.at("rows"), cols = p.at("cols");
      Tensor t(rows, cols,
               std::vector<float>(blob.begin() + off,
                                  blob.begin() + off +
                                      static_cast<std::size_t>(rows) * cols));
      off += static_cast<std::size_t>(rows) * cols;
      ckpt.params->load(p.at("name"), std::move(t));
      shapes.emplace_back(rows, cols);
    }

    if (m.contains("adam_step")) {
      AdamState st;
      st.step_count = m.at("adam_step");
      auto opt_blob = detail::read_f32(dir / "adam.f32", 2 * total);
      off = 0;
      for (auto* list : {&st.m, &st.v})
        for (const auto& [rows, cols] : shapes) {
          list->emplace_back(
              rows, cols,
              std::vector<float>(opt_blob.begin() + off,
                                 opt_blob.begin() + off +
                                     static_cast<std::size_t>(rows) * cols));
          off += static_cast<std::size_t>(rows) * cols;
        }
      ckpt.opt = std::move(st);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint manifest: " + std::string(e.what()));
  }
  return ckpt;
}

}  // namespace relpot
