// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "prunelab/core/errors.hpp"
#include "prunelab/core/network.hpp"
#include "prunelab/prune/mask.hpp"

namespace prunelab {

// ============================================================================
// Checkpoint format
// ============================================================================
//
// Binary, little-endian on disk regardless of host:
//
//   magic   "PRLB"                         4 bytes
//   version u32                            currently 1
//   rank    u32, dims i32[rank]            network input shape (no batch dim)
//   layers  u32 count, then per layer:
//             kind u8, in i32, out i32, kernel i32, has_bias u8
//   tensors u32 count, then per tensor:
//             name_len u32, name bytes
//             ndim u32, dims i64[ndim]
//             has_mask u8
//             values f64[numel]            row-major
//             [mask bitset, ceil(n/8) bytes, bit i of byte i/8 = kept]
//
// Tensors appear in layer order, weight before bias.  A reload followed by a
// save reproduces the original bytes exactly.

struct Checkpoint {
  Network net;
  MaskSet masks;
  bool has_masks = false;
};

class CheckpointCodec {
public:
  static constexpr std::uint32_t kVersion = 1;

  static std::vector<std::uint8_t> save(const Network &net,
                                        const MaskSet *masks = nullptr) {
    if (masks && masks->layer_slots() != net.layers.size())
      throw StateError("checkpoint: mask does not align with network layers");
    std::vector<std::uint8_t> out;
    out.push_back('P');
    out.push_back('R');
    out.push_back('L');
    out.push_back('B');
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(net.input_shape().size()));
    for (int d : net.input_shape())
      put_i32(out, d);
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto &l : net.layers) {
      out.push_back(static_cast<std::uint8_t>(l.spec.kind));
      put_i32(out, l.spec.in);
      put_i32(out, l.spec.out);
      put_i32(out, l.spec.kernel);
      out.push_back(l.spec.has_bias ? 1 : 0);
    }
    std::uint32_t tensor_count = 0;
    for (const auto &l : net.layers)
      tensor_count += (l.weight.numel() ? 1 : 0) + (l.bias.numel() ? 1 : 0);
    put_u32(out, tensor_count);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      const Layer &l = net.layers[li];
      if (l.weight.numel()) {
        const std::vector<std::uint8_t> *m = nullptr;
        if (masks && !masks->layer(static_cast<int>(li)).empty())
          m = &masks->layer(static_cast<int>(li));
        put_tensor(out, "layer" + std::to_string(li) + ".weight", l.weight, m);
      }
      if (l.bias.numel())
        put_tensor(out, "layer" + std::to_string(li) + ".bias", l.bias,
                   nullptr);
    }
    return out;
  }

  static Checkpoint load(const std::vector<std::uint8_t> &in) {
    Reader r{in, 0};
    if (in.size() < 4 || in[0] != 'P' || in[1] != 'R' || in[2] != 'L' ||
        in[3] != 'B')
      throw FormatError("checkpoint: bad magic at offset 0");
    r.off = 4;
    const std::uint32_t version = r.u32();
    if (version != kVersion)
      throw FormatError("checkpoint: unsupported format version " +
                        std::to_string(version) + " (expected " +
                        std::to_string(kVersion) + ")");
    const std::uint32_t rank = r.u32();
    if (rank != 1 && rank != 3)
      throw FormatError("checkpoint: bad input rank at offset " +
                        std::to_string(r.off - 4));
    std::vector<int> input_shape(rank);
    for (auto &d : input_shape)
      d = r.i32();

    Checkpoint ck;
    ck.net = Network(input_shape);
    const std::uint32_t layer_count = r.u32();
    for (std::uint32_t i = 0; i < layer_count; ++i) {
      LayerSpec s;
      const std::uint8_t kind = r.u8();
      if (kind > static_cast<std::uint8_t>(LayerKind::flatten))
        throw FormatError("checkpoint: unknown layer kind at offset " +
                          std::to_string(r.off - 1));
      s.kind = static_cast<LayerKind>(kind);
      s.in = r.i32();
      s.out = r.i32();
      s.kernel = r.i32();
      s.has_bias = r.u8() != 0;
      ck.net.layers.emplace_back(s,
                                 "layer" + std::to_string(i) + ":" +
                                     kind_name(s.kind));
    }
    ck.masks = MaskSet::all_kept(ck.net);

    const std::uint32_t tensor_count = r.u32();
    for (std::uint32_t t = 0; t < tensor_count; ++t) {
      const std::uint32_t name_len = r.u32();
      std::string name = r.str(name_len);
      const std::uint32_t ndim = r.u32();
      std::vector<int> dims(ndim);
      std::int64_t numel = 1;
      for (auto &d : dims) {
        const std::int64_t v = r.i64();
        if (v <= 0 || v > (1 << 30))
          throw FormatError("checkpoint: bad dimension in tensor '" + name +
                            "' at offset " + std::to_string(r.off - 8));
        d = static_cast<int>(v);
        numel *= v;
      }
      const bool has_mask = r.u8() != 0;
      Tensor *dst = resolve(ck.net, name);
      if (!dst)
        throw FormatError("checkpoint: unknown tensor name '" + name + "'");
      if (dst->shape != dims)
        throw FormatError("checkpoint: shape mismatch for tensor '" + name +
                          "'");
      for (std::int64_t i = 0; i < numel; ++i)
        dst->values[static_cast<std::size_t>(i)] = r.f64();
      if (has_mask) {
        ck.has_masks = true;
        const int layer_idx = layer_of(name);
        const std::size_t nbytes =
            (static_cast<std::size_t>(numel) + 7) / 8;
        for (std::size_t byte = 0; byte < nbytes; ++byte) {
          const std::uint8_t bv = r.u8();
          for (int bit = 0; bit < 8; ++bit) {
            const std::size_t idx = byte * 8 + static_cast<std::size_t>(bit);
            if (idx < static_cast<std::size_t>(numel) && !((bv >> bit) & 1))
              ck.masks.prune(layer_idx, static_cast<std::int64_t>(idx));
          }
        }
      }
    }
    if (r.off != in.size())
      throw FormatError("checkpoint: trailing bytes after offset " +
                        std::to_string(r.off));
    return ck;
  }

  static void save_file(const std::string &path, const Network &net,
                        const MaskSet *masks = nullptr) {
    const auto bytes = save(net, masks);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
      throw InputError("cannot open checkpoint file for writing: " + path);
    f.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f)
      throw InputError("short write to checkpoint file: " + path);
  }

  static Checkpoint load_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
      throw InputError("cannot open checkpoint file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return load(bytes);
  }

private:
  struct Reader {
    const std::vector<std::uint8_t> &buf;
    std::size_t off;

    void need(std::size_t n) const {
      if (off + n > buf.size())
        throw FormatError("checkpoint: truncated at offset " +
                          std::to_string(off) + " (need " + std::to_string(n) +
                          " more bytes)");
    }
    std::uint8_t u8() {
      need(1);
      return buf[off++];
    }
    std::uint32_t u32() {
      need(4);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(buf[off + i]) << (8 * i);
      off += 4;
      return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() {
      need(8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(buf[off + i]) << (8 * i);
      off += 8;
      return static_cast<std::int64_t>(v);
    }
    double f64() {
      const std::uint64_t bits = static_cast<std::uint64_t>(i64());
      double d;
      std::memcpy(&d, &bits, 8);
      return d;
    }
    std::string str(std::size_t n) {
      need(n);
      std::string s(reinterpret_cast<const char *>(&buf[off]), n);
      off += n;
      return s;
    }
  };

  static void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  static void put_i32(std::vector<std::uint8_t> &out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  static void put_u64(std::vector<std::uint8_t> &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  static void put_f64(std::vector<std::uint8_t> &out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
  }

  static void put_tensor(std::vector<std::uint8_t> &out,
                         const std::string &name, const Tensor &t,
                         const std::vector<std::uint8_t> *mask) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape)
      put_u64(out, static_cast<std::uint64_t>(d));
    out.push_back(mask ? 1 : 0);
    for (double v : t.values)
      put_f64(out, v);
    if (mask) {
      std::vector<std::uint8_t> bits((mask->size() + 7) / 8, 0);
      for (std::size_t i = 0; i < mask->size(); ++i)
        if ((*mask)[i])
          bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      out.insert(out.end(), bits.begin(), bits.end());
    }
  }

  static int layer_of(const std::string &tensor_name) {
    // Names are "layer<N>.weight" / "layer<N>.bias".
    return std::stoi(tensor_name.substr(5));
  }

  static Tensor *resolve(Network &net, const std::string &name) {
    const auto dot = name.find('.');
    if (name.rfind("layer", 0) != 0 || dot == std::string::npos)
      return nullptr;
    const int li = std::stoi(name.substr(5, dot - 5));
    if (li < 0 || li >= static_cast<int>(net.layers.size()))
      return nullptr;
    const std::string field = name.substr(dot + 1);
    if (field == "weight")
      return &net.layers[li].weight;
    if (field == "bias")
      return &net.layers[li].bias;
    return nullptr;
  }
};

} // namespace prunelab
