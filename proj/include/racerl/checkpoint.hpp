#pragma once

#include <cstdint>
#include <string>

#include "racerl/network.hpp"

namespace racerl {

enum class CheckpointRole : uint8_t {
  kPolicyGenome = 0,  // evolution policy weights
  kDdqnOnline = 1,
  kDdqnTarget = 2,
};

// Versioned binary weight container: magic, version, role, shape descriptor,
// then the genes as little-endian 64-bit floats in encode() order.
struct Checkpoint {
  CheckpointRole role = CheckpointRole::kPolicyGenome;
  Genome genome;
};

std::string serialize_checkpoint(const Checkpoint& cp);
Checkpoint parse_checkpoint(const std::string& data);  // FormatError / VersionError

void save_checkpoint(const Checkpoint& cp, const std::string& path);  // IoError
Checkpoint load_checkpoint(const std::string& path);

}  // namespace racerl
