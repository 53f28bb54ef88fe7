#include "racerl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "racerl/binio.hpp"

namespace racerl {

namespace {

constexpr uint32_t kMagic = 0x4B575052u;  // "RPWK"
constexpr uint32_t kVersion = 1;

void write_shape(BinWriter& w, const NetworkShape& shape) {
  w.u8(shape.grid_input ? 1 : 0);
  if (shape.grid_input) {
    w.u32(static_cast<uint32_t>(shape.input_dims.height));
    w.u32(static_cast<uint32_t>(shape.input_dims.width));
    w.u32(static_cast<uint32_t>(shape.input_dims.channels));
  } else {
    w.u32(static_cast<uint32_t>(shape.input_size));
  }
  w.u32(static_cast<uint32_t>(shape.layers.size()));
  for (const LayerSpec& layer : shape.layers) {
    w.u8(static_cast<uint8_t>(layer.kind));
    w.u8(static_cast<uint8_t>(layer.activation));
    switch (layer.kind) {
      case LayerKind::kDense:
        w.u32(static_cast<uint32_t>(layer.in));
        w.u32(static_cast<uint32_t>(layer.out));
        break;
      case LayerKind::kConv:
        w.u32(static_cast<uint32_t>(layer.in_channels));
        w.u32(static_cast<uint32_t>(layer.out_channels));
        w.u32(static_cast<uint32_t>(layer.kernel));
        w.u32(static_cast<uint32_t>(layer.stride));
        break;
      case LayerKind::kFlatten:
        break;
    }
  }
}

NetworkShape read_shape(BinReader& r) {
  NetworkShape shape;
  shape.grid_input = r.u8() != 0;
  if (shape.grid_input) {
    shape.input_dims.height = static_cast<int>(r.u32());
    shape.input_dims.width = static_cast<int>(r.u32());
    shape.input_dims.channels = static_cast<int>(r.u32());
  } else {
    shape.input_size = static_cast<int>(r.u32());
  }
  const uint32_t layer_count = r.u32();
  if (layer_count == 0 || layer_count > 1024) {
    throw FormatError("checkpoint: implausible layer count", r.offset());
  }
  for (uint32_t l = 0; l < layer_count; ++l) {
    const uint8_t kind = r.u8();
    const uint8_t act = r.u8();
    if (kind > 2 || act > 2) throw FormatError("checkpoint: bad layer tag", r.offset());
    LayerSpec spec;
    spec.kind = static_cast<LayerKind>(kind);
    spec.activation = static_cast<Activation>(act);
    switch (spec.kind) {
      case LayerKind::kDense:
        spec.in = static_cast<int>(r.u32());
        spec.out = static_cast<int>(r.u32());
        break;
      case LayerKind::kConv:
        spec.in_channels = static_cast<int>(r.u32());
        spec.out_channels = static_cast<int>(r.u32());
        spec.kernel = static_cast<int>(r.u32());
        spec.stride = static_cast<int>(r.u32());
        break;
      case LayerKind::kFlatten:
        break;
    }
    shape.layers.push_back(spec);
  }
  return shape;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  BinWriter w;
  w.u32(kMagic);
  w.u32(kVersion);
  w.u8(static_cast<uint8_t>(cp.role));
  write_shape(w, cp.genome.shape);
  w.u64(cp.genome.genes.size());
  for (double gene : cp.genome.genes) w.f64(gene);
  return w.data();
}

Checkpoint parse_checkpoint(const std::string& data) {
  BinReader r(data);
  if (r.u32() != kMagic) throw FormatError("checkpoint: bad magic", 0);
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw VersionError("checkpoint: unsupported version " + std::to_string(version), 4);
  }
  const uint8_t role = r.u8();
  if (role > 2) throw FormatError("checkpoint: unknown role", 8);

  Checkpoint cp;
  cp.role = static_cast<CheckpointRole>(role);
  cp.genome.shape = read_shape(r);
  try {
    cp.genome.shape.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: invalid shape: ") + e.what(), r.offset());
  }
  const uint64_t count = r.u64();
  if (count != cp.genome.shape.parameter_count()) {
    throw FormatError("checkpoint: gene count does not match shape", r.offset());
  }
  cp.genome.genes.resize(count);
  for (uint64_t i = 0; i < count; ++i) cp.genome.genes[i] = r.f64();
  r.expect_end();
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  const std::string data = serialize_checkpoint(cp);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace racerl
