#pragma once

// Named parameter sets, the SGD update and the checkpoint format.
//
// Paths are '/'-separated and start with the owning set: "alpha/..." for the
// semantic encoder, "beta/..." for the channel encoder, "chi_<k>/..." and
// "delta_<k>/..." for receiver k, "recognizer/..." for the classifier.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mrsc/tensor.hpp"

namespace mrsc {

enum class Init : std::uint8_t { kXavier, kZeros, kOnes, kNormal };

class ParamStore {
 public:
  // Returns the tensor at `path`, creating and initialising it on first use.
  // An existing tensor with different dims is a contract violation.
  Tensor& get_or_create(const std::string& path, const Shape& dims, Init init,
                        std::mt19937_64& rng);

  void insert(const std::string& path, Tensor t);
  bool contains(const std::string& path) const { return tensors_.count(path) != 0; }
  Tensor& at(const std::string& path);
  const Tensor& at(const std::string& path) const;

  // Copies every tensor under `from_prefix` to the same suffix under
  // `to_prefix` (values only; destination tensors are fresh leaves).
  void copy_prefix(const std::string& from_prefix, const std::string& to_prefix);
  // Removes every tensor under `prefix`; returns how many were dropped.
  std::size_t erase_prefix(const std::string& prefix);

  std::size_t size() const { return tensors_.size(); }
  std::size_t parameter_count(const std::string& prefix = "") const;
  const std::map<std::string, Tensor>& entries() const { return tensors_; }
  std::map<std::string, Tensor>& entries() { return tensors_; }

  void zero_grad();

 private:
  std::map<std::string, Tensor> tensors_;
};

// True when `path` lies under `prefix` ("alpha" matches "alpha/..." but not
// "alphabet/...").
bool path_has_prefix(const std::string& path, const std::string& prefix);

struct SgdOptions {
  double lr = 1e-4;
  // Global-norm clipping threshold; <= 0 disables clipping.
  double clip_norm = 0.0;
};

// p <- p - lr * grad(p) for every non-frozen path, then clears all grads.
// A non-frozen parameter without a gradient is a contract violation unless
// `allow_missing` is set (e.g. an unused output row never gets one).
void sgd_step(ParamStore& store, const SgdOptions& opts, const std::vector<std::string>& frozen,
              bool allow_missing = false);

// Binary checkpoint: "MRSC", u16 version, u32 count, then per entry
// u16 path length, path bytes, u8 rank, u32 dims[rank], f64 data; all
// little-endian.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_params(const ParamStore& store, std::ostream& out);
void save_params(const ParamStore& store, const std::filesystem::path& file);
ParamStore load_params(std::istream& in);
ParamStore load_params(const std::filesystem::path& file);

// Serialised bytes of the entries under `prefix` (used for freeze checks).
std::string serialize_prefix(const ParamStore& store, const std::string& prefix);

}  // namespace mrsc
