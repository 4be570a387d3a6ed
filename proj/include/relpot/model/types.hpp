#pragma once

#include <json.hpp>

#include "relpot/core/trajectory.hpp"
#include "relpot/nn/layers.hpp"

namespace relpot {

// Hyperparameters shared by the encoder and the energy networks.
struct ModelConfig {
  int state_dim = 4;       // D
  int n_latent = 2;        // L potential codes per directed edge
  int latent_dim = 64;     // D_z
  int enc_hidden = 256;
  int energy_hidden = 64;
  bool augmented_views = false;      // encoder also sees rotated + instance-normalized input
  bool unconditional_branch = false; // masked-out edges fall back to an unconditioned stack

  void validate() const {
    if (state_dim != 4 && state_dim != 6)
      throw ConfigError("model: state_dim must be 4 or 6");
    if (n_latent < 1 || latent_dim < 1 || enc_hidden < 1 || energy_hidden < 1)
      throw ConfigError("model: sizes must be positive");
  }

  nlohmann::ordered_json to_json() const {
    return {{"state_dim", state_dim},
            {"n_latent", n_latent},
            {"latent_dim", latent_dim},
            {"enc_hidden", enc_hidden},
            {"energy_hidden", energy_hidden},
            {"augmented_views", augmented_views},
            {"unconditional_branch", unconditional_branch}};
  }
  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.state_dim = j.at("state_dim");
    c.n_latent = j.at("n_latent");
    c.latent_dim = j.at("latent_dim");
    c.enc_hidden = j.at("enc_hidden");
    c.energy_hidden = j.at("energy_hidden");
    c.augmented_views = j.value("augmented_views", false);
    c.unconditional_branch = j.value("unconditional_branch", false);
    return c;
  }
};

// L continuous codes per directed edge for one trajectory; rows (edge, l).
struct LatentSet {
  int n_latent = 0, dim = 0;
  EdgeIndex edges;
  Tensor z;  // [n_edges * n_latent, dim]

  void validate() const {
    if (z.rows() != edges.size() * n_latent || z.cols() != dim)
      throw ShapeError("LatentSet: shape mismatch");
    if (!z.all_finite()) throw NumericError("LatentSet: non-finite codes");
  }
};

// Binary selector over (edge, latent slot) potentials.
struct EdgeMask {
  int n_edges = 0, n_latent = 0;
  std::vector<float> m;  // [n_edges * n_latent], entries in {0, 1}

  static EdgeMask full(int n_edges, int n_latent) {
    return {n_edges, n_latent,
            std::vector<float>(static_cast<std::size_t>(n_edges) * n_latent, 1.f)};
  }
  static EdgeMask none(int n_edges, int n_latent) {
    return {n_edges, n_latent,
            std::vector<float>(static_cast<std::size_t>(n_edges) * n_latent, 0.f)};
  }
  // One-hot on a single (edge, slot) potential.
  static EdgeMask one_hot(int n_edges, int n_latent, int edge, int slot) {
    if (edge < 0 || edge >= n_edges || slot < 0 || slot >= n_latent)
      throw ShapeError("EdgeMask::one_hot: index out of range");
    EdgeMask mask = none(n_edges, n_latent);
    mask.m[static_cast<std::size_t>(edge) * n_latent + slot] = 1.f;
    return mask;
  }

  float& at(int edge, int slot) {
    return m[static_cast<std::size_t>(edge) * n_latent + slot];
  }
  float at(int edge, int slot) const {
    return m[static_cast<std::size_t>(edge) * n_latent + slot];
  }

  EdgeMask complement() const {
    EdgeMask out = *this;
    for (auto& v : out.m) v = 1.f - v;
    return out;
  }

  int active() const {
    int n = 0;
    for (float v : m) n += v != 0.f;
    return n;
  }

  void validate() const {
    if (m.size() != static_cast<std::size_t>(n_edges) * n_latent)
      throw ShapeError("EdgeMask: size mismatch");
    for (float v : m)
      if (v != 0.f && v != 1.f) throw ConfigError("EdgeMask: entries must be 0/1");
  }
};

// Scalar energies of one trajectory plus the per-node decomposition.
struct EnergyValue {
  float total = 0.f;
  float long_term = 0.f;
  float short_term = 0.f;
  std::vector<float> per_node;
};

}  // namespace relpot
