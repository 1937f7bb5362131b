#pragma once

#include <string>

#include "slidemil/abmil.hpp"

namespace slidemil {

// ABML checkpoint: magic "ABML", u16 version, u32 dim/m1/m2/k, the parameter
// tensors as row-major little-endian f64 (w1, b1, v, bv, w, w2, b2), then a
// u32-length UTF-8 section holding the training config as key=value lines.
void write_checkpoint(const AbmilParams& params, const TrainConfig& config,
                      const std::string& path);

struct Checkpoint {
    AbmilParams params;
    TrainConfig config;
};

Checkpoint read_checkpoint(const std::string& path);

}  // namespace slidemil
