#pragma once

#include <memory>

#include "relpot/model/encoder.hpp"
#include "relpot/model/energy.hpp"

namespace relpot {

// Encoder + energy networks over one shared parameter store, plus the
// normalization statistics the model was trained with.
struct Model {
  ModelConfig cfg;
  std::shared_ptr<ParamStore> params;
  EncoderNet encoder;
  EnergyNets energy;
  NormStats stats;

  static Model create(const ModelConfig& cfg, std::uint64_t seed,
                      NormStats stats = {}) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.params = std::make_shared<ParamStore>();
    Rng rng(seed);
    m.encoder = EncoderNet::build(*m.params, cfg, rng);
    m.energy = EnergyNets::build(*m.params, cfg, rng);
    m.stats = std::move(stats);
    return m;
  }

  // Rebinds layer structs to a store preloaded from a checkpoint.
  static Model from_params(const ModelConfig& cfg,
                           std::shared_ptr<ParamStore> params,
                           NormStats stats) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.params = std::move(params);
    Rng rng(0);  // unused: every parameter already exists in the store
    m.encoder = EncoderNet::build(*m.params, cfg, rng);
    m.energy = EnergyNets::build(*m.params, cfg, rng);
    m.stats = std::move(stats);
    return m;
  }
};

}  // namespace relpot
