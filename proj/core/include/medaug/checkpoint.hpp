// Binary model container. Layout (integers little-endian, floats as raw
// IEEE-754 bits, so save/load round-trips bitwise):
//
//   magic "MAUG" | u32 version | u32 kind
//   u64 n_vocab   { u64 len, bytes }*
//   u64 n_hypers  { u64 len, bytes, f64 value }*
//   u64 n_tensors { u64 len, bytes, u64 ndim, u64 dims[], f64 data[] }*
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "medaug/tensor.hpp"

namespace medaug {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : std::uint32_t { generator = 1, classifier = 2 };

struct Checkpoint {
    CheckpointKind kind = CheckpointKind::classifier;
    std::vector<std::string> vocab_tokens;
    std::vector<std::pair<std::string, double>> hypers;   // insertion order kept
    std::vector<std::pair<std::string, Tensor>> tensors;  // insertion order kept

    void add_hyper(const std::string& name, double value);
    void add_tensor(const std::string& name, const Tensor& t);
    double hyper(const std::string& name) const;          // throws if absent
    const Tensor& tensor(const std::string& name) const;  // throws if absent
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace medaug
