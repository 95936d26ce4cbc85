#pragma once

#include <string>

#include "anostream/clstm.hpp"

namespace anostream {

struct Checkpoint {
    ClstmParams params;
    int trained_epoch = 0;
};

// Versioned JSON document: model config, tensors in the canonical order
// (see tensor_list), and the training epoch. Doubles round-trip bit-exactly.
void save_checkpoint(const std::string& path, const ClstmParams& params, int trained_epoch);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace anostream
