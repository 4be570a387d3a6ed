#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "relpot/core/trajectory.hpp"

namespace relpot {

namespace detail {

inline void write_f32(const std::filesystem::path& path,
                      const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());
  // Little-endian float32; this targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw IoError("short write: " + path.string());
}

inline std::vector<float> read_f32(const std::filesystem::path& path,
                                   std::size_t expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open: " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected * sizeof(float))
    throw IoError("array file " + path.string() + " has " +
                  std::to_string(bytes) + " bytes, manifest expects " +
                  std::to_string(expected * sizeof(float)));
  std::vector<float> data(expected);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("short read: " + path.string());
  return data;
}

inline const char* label_kind_name(RelationLabels::Kind k) {
  switch (k) {
    case RelationLabels::Kind::springs_adjacency: return "springs_adjacency";
    case RelationLabels::Kind::charges: return "charges";
    case RelationLabels::Kind::mixed_force_type: return "mixed_force_type";
  }
  throw ConfigError("unknown label kind");
}

inline RelationLabels::Kind label_kind_from(const std::string& s) {
  if (s == "springs_adjacency") return RelationLabels::Kind::springs_adjacency;
  if (s == "charges") return RelationLabels::Kind::charges;
  if (s == "mixed_force_type") return RelationLabels::Kind::mixed_force_type;
  throw IoError("unknown label kind in manifest: " + s);
}

}  // namespace detail

// Directory layout: manifest.json + states.f32 (+ labels.f32). Arrays are raw
// little-endian float32; the manifest pins every shape so loads can detect
// truncation. Writing the same dataset twice produces byte-identical files.
inline void save_dataset(const TrajectoryDataset& ds,
                         const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);

  const auto& t0 = ds.trajectories.front();
  nlohmann::ordered_json m;
  m["version"] = 1;
  m["N"] = t0.N;
  m["T"] = t0.T;
  m["D"] = t0.D;
  m["kind"] = ds.kind;
  m["seed"] = ds.seed;
  m["num_trajectories"] = ds.num();
  m["normalized"] = !t0.raw;
  m["dt_unit"] = ds.dt_unit;
  m["splits"] = {{"train", ds.splits.train},
                 {"val", ds.splits.val},
                 {"test", ds.splits.test}};
  m["stats"] = {{"mean", ds.stats.mean}, {"std", ds.stats.std}};
  if (!ds.labels.empty()) {
    m["labels_kind"] = detail::label_kind_name(ds.labels.front().kind);
    m["labels_len"] = ds.labels.front().values.size();
  }
  m["meta"] = ds.meta_json;

  std::vector<float> states;
  states.reserve(static_cast<std::size_t>(ds.num()) * t0.T * t0.N * t0.D);
  for (const auto& tr : ds.trajectories)
    states.insert(states.end(), tr.states.begin(), tr.states.end());
  detail::write_f32(dir / "states.f32", states);

  if (!ds.labels.empty()) {
    std::vector<float> labels;
    for (const auto& l : ds.labels) {
      if (l.values.size() != ds.labels.front().values.size() ||
          l.kind != ds.labels.front().kind)
        throw ShapeError("save_dataset: inconsistent labels");
      labels.insert(labels.end(), l.values.begin(), l.values.end());
    }
    detail::write_f32(dir / "labels.f32", labels);
  }

  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << m.dump(2) << "\n";
}

inline TrajectoryDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing manifest.json in " + dir.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt manifest in " + dir.string() + ": " + e.what());
  }

  TrajectoryDataset ds;
  try {
    const int N = m.at("N"), T = m.at("T"), D = m.at("D");
    const int num = m.at("num_trajectories");
    const bool normalized = m.at("normalized");
    ds.kind = m.at("kind");
    ds.seed = m.at("seed");
    ds.dt_unit = m.at("dt_unit");
    ds.splits.train = m.at("splits").at("train").get<std::vector<int>>();
    ds.splits.val = m.at("splits").at("val").get<std::vector<int>>();
    ds.splits.test = m.at("splits").at("test").get<std::vector<int>>();
    ds.stats.mean = m.at("stats").at("mean").get<std::vector<float>>();
    ds.stats.std = m.at("stats").at("std").get<std::vector<float>>();
    ds.meta_json = m.value("meta", std::string());

    const std::size_t per = static_cast<std::size_t>(T) * N * D;
    auto states = detail::read_f32(dir / "states.f32",
                                   per * static_cast<std::size_t>(num));
    ds.trajectories.reserve(num);
    for (int i = 0; i < num; ++i) {
      Trajectory tr(T, N, D, !normalized);
      std::copy(states.begin() + i * per, states.begin() + (i + 1) * per,
                tr.states.begin());
      ds.trajectories.push_back(std::move(tr));
    }

    if (m.contains("labels_kind")) {
      const auto kind = detail::label_kind_from(m.at("labels_kind"));
      const std::size_t len = m.at("labels_len");
      auto labels = detail::read_f32(dir / "labels.f32",
                                     len * static_cast<std::size_t>(num));
      for (int i = 0; i < num; ++i) {
        RelationLabels l;
        l.kind = kind;
        l.values.assign(labels.begin() + i * len,
                        labels.begin() + (i + 1) * len);
        ds.labels.push_back(std::move(l));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt manifest in " + dir.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

}  // namespace relpot
