#include "mrsc/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mrsc/error.hpp"

namespace mrsc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

void fill_init(Tensor& t, Init init, std::mt19937_64& rng) {
  auto d = t.data();
  switch (init) {
    case Init::kZeros:
      std::fill(d.begin(), d.end(), 0.0);
      break;
    case Init::kOnes:
      std::fill(d.begin(), d.end(), 1.0);
      break;
    case Init::kXavier: {
      // fan_in = first axis, fan_out = product of the rest
      const auto& dims = t.dims();
      const double fan_in = dims.empty() ? 1.0 : static_cast<double>(dims[0]);
      const double fan_out = dims.size() < 2 ? 1.0 : static_cast<double>(t.size()) / fan_in;
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& v : d) v = u(rng);
      break;
    }
    case Init::kNormal: {
      std::normal_distribution<double> n(0.0, 1.0);
      for (auto& v : d) v = n(rng);
      break;
    }
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw CorruptionError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

void write_entry(std::ostream& out, const std::string& path, const Tensor& t) {
  if (path.size() > 0xFFFF) throw ContractViolation("checkpoint path too long: " + path);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(path.size()));
  out.write(path.data(), static_cast<std::streamsize>(path.size()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  const auto data = t.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

}  // namespace

bool path_has_prefix(const std::string& path, const std::string& prefix) {
  if (prefix.empty()) return true;
  if (path.compare(0, prefix.size(), prefix) != 0) return false;
  return path.size() == prefix.size() || path[prefix.size()] == '/' || prefix.back() == '/';
}

Tensor& ParamStore::get_or_create(const std::string& path, const Shape& dims, Init init,
                                  std::mt19937_64& rng) {
  auto it = tensors_.find(path);
  if (it != tensors_.end()) {
    require(it->second.dims() == dims, "parameter " + path + " exists with different dims");
    return it->second;
  }
  Tensor t = Tensor::zeros(dims, true);
  fill_init(t, init, rng);
  return tensors_.emplace(path, std::move(t)).first->second;
}

void ParamStore::insert(const std::string& path, Tensor t) {
  require(!tensors_.count(path), "duplicate parameter path " + path);
  tensors_.emplace(path, std::move(t));
}

Tensor& ParamStore::at(const std::string& path) {
  auto it = tensors_.find(path);
  require(it != tensors_.end(), "unknown parameter " + path);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& path) const {
  auto it = tensors_.find(path);
  require(it != tensors_.end(), "unknown parameter " + path);
  return it->second;
}

std::size_t ParamStore::erase_prefix(const std::string& prefix) {
  return std::erase_if(tensors_, [&](const auto& kv) { return path_has_prefix(kv.first, prefix); });
}

void ParamStore::copy_prefix(const std::string& from_prefix, const std::string& to_prefix) {
  std::vector<std::pair<std::string, Tensor>> copies;
  for (const auto& [path, t] : tensors_) {
    if (!path_has_prefix(path, from_prefix)) continue;
    const auto dst = to_prefix + path.substr(from_prefix.size());
    auto copy = t.detach();
    auto fresh = Tensor::from(copy.dims(), std::vector<double>(copy.data().begin(), copy.data().end()),
                              true);
    copies.emplace_back(dst, std::move(fresh));
  }
  for (auto& [path, t] : copies) {
    auto it = tensors_.find(path);
    if (it == tensors_.end()) {
      tensors_.emplace(path, std::move(t));
    } else {
      require(it->second.dims() == t.dims(), "copy_prefix: dims differ at " + path);
      std::copy(t.data().begin(), t.data().end(), it->second.data().begin());
    }
  }
}

std::size_t ParamStore::parameter_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [path, t] : tensors_)
    if (path_has_prefix(path, prefix)) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : tensors_) t.clear_grad();
}

void sgd_step(ParamStore& store, const SgdOptions& opts, const std::vector<std::string>& frozen,
              bool allow_missing) {
  require(opts.lr > 0.0, "sgd_step: learning rate must be positive");
  auto is_frozen = [&](const std::string& path) {
    for (const auto& f : frozen)
      if (path_has_prefix(path, f)) return true;
    return false;
  };

  double factor = 1.0;
  if (opts.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto& [path, t] : store.entries())
      if (!is_frozen(path) && t.has_grad())
        for (double g : t.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > opts.clip_norm) factor = opts.clip_norm / norm;
  }

  for (auto& [path, t] : store.entries()) {
    if (is_frozen(path)) continue;
    if (!t.has_grad()) {
      require(allow_missing, "sgd_step: no gradient for " + path);
      continue;
    }
    auto d = t.data();
    auto g = t.grad();
    const double step = opts.lr * factor;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= step * g[i];
  }
  store.zero_grad();
}

void save_params(const ParamStore& store, std::ostream& out) {
  out.write("MRSC", 4);
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [path, t] : store.entries()) write_entry(out, path, t);
  if (!out) throw std::runtime_error("checkpoint write failed");
}

void save_params(const ParamStore& store, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  save_params(store, out);
}

ParamStore load_params(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw CorruptionError("checkpoint truncated in header");
  if (std::memcmp(magic, "MRSC", 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  const auto version = get<std::uint16_t>(in, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in, "entry count");
  ParamStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = get<std::uint16_t>(in, "path length");
    std::string path(len, '\0');
    if (len && !in.read(path.data(), len)) throw CorruptionError("checkpoint truncated in path");
    const auto rank = get<std::uint8_t>(in, "rank");
    Shape dims(rank);
    for (auto& d : dims) d = get<std::uint32_t>(in, "dims");
    std::vector<double> data(numel(dims));
    if (!data.empty() &&
        !in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw CorruptionError("checkpoint truncated in data of " + path);
    if (store.contains(path)) throw CorruptionError("duplicate path in checkpoint: " + path);
    store.insert(path, Tensor::from(std::move(dims), std::move(data), true));
  }
  return store;
}

ParamStore load_params(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + file.string());
  return load_params(in);
}

std::string serialize_prefix(const ParamStore& store, const std::string& prefix) {
  std::ostringstream out;
  for (const auto& [path, t] : store.entries())
    if (path_has_prefix(path, prefix)) write_entry(out, path, t);
  return out.str();
}

}  // namespace mrsc
