#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "optw/error.hpp"
#include "optw/model.hpp"

namespace optw {

namespace {

constexpr char kMagic[8] = {'O', 'P', 'T', 'W', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) raise(ErrorCode::CheckpointError, "truncated checkpoint");
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
  const auto len = read_pod<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) raise(ErrorCode::CheckpointError, "truncated checkpoint string");
  return s;
}

template <typename S>
void write_mat(std::ofstream& out, const nn::Mat<S>& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(S) * m.size()));
}

template <typename S>
nn::Mat<S> read_mat(std::ifstream& in) {
  const auto rows = read_pod<std::uint32_t>(in);
  const auto cols = read_pod<std::uint32_t>(in);
  nn::Mat<S> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(S) * m.size()));
  if (!in) raise(ErrorCode::CheckpointError, "truncated checkpoint tensor");
  return m;
}

template <typename S>
constexpr std::uint8_t dtype_tag() {
  return sizeof(S) == 4 ? 0 : 1;
}

}  // namespace

template <typename S>
void save_checkpoint(const std::string& path, const PointerModel<S>& model,
                     const nn::AdamConfig& adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint8_t>(out, dtype_tag<S>());
  write_pod<std::int64_t>(out, model.params.step_count);
  write_pod<double>(out, adam.lr);
  write_pod<double>(out, adam.beta1);
  write_pod<double>(out, adam.beta2);
  write_pod<double>(out, adam.eps);
  write_pod<double>(out, adam.decay_factor);
  write_pod<std::int64_t>(out, adam.decay_every);
  write_pod<double>(out, adam.lr_floor);
  write_string(out, model_config_to_json(model.cfg));
  write_pod<std::uint64_t>(out, model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& e = model.params.entry_at(i);
    write_string(out, e.name);
    write_mat(out, e.value);
    write_mat(out, e.adam_m);
    write_mat(out, e.adam_v);
  }
  if (!out) raise(ErrorCode::IoError, "write failed for " + path);
}

template <typename S>
PointerModel<S> load_checkpoint(const std::string& path,
                                nn::AdamConfig* adam_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    raise(ErrorCode::CheckpointError, path + " is not a checkpoint file");
  }
  const auto dtype = read_pod<std::uint8_t>(in);
  if (dtype != dtype_tag<S>()) {
    raise(ErrorCode::CheckpointError,
          "checkpoint dtype mismatch (expected tag " +
              std::to_string(dtype_tag<S>()) + ", file has " +
              std::to_string(dtype) + ")");
  }
  const auto step_count = read_pod<std::int64_t>(in);
  nn::AdamConfig adam;
  adam.lr = read_pod<double>(in);
  adam.beta1 = read_pod<double>(in);
  adam.beta2 = read_pod<double>(in);
  adam.eps = read_pod<double>(in);
  adam.decay_factor = read_pod<double>(in);
  adam.decay_every = read_pod<std::int64_t>(in);
  adam.lr_floor = read_pod<double>(in);
  if (adam_out != nullptr) *adam_out = adam;

  PointerModel<S> model;
  model.cfg = model_config_from_json(read_string(in));
  model.params.step_count = step_count;
  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    nn::Mat<S> value = read_mat<S>(in);
    nn::Mat<S> m = read_mat<S>(in);
    nn::Mat<S> v = read_mat<S>(in);
    model.params.add(name, std::move(value));
    model.params.set_adam(name, std::move(m), std::move(v));
  }
  return model;
}

template void save_checkpoint<float>(const std::string&,
                                     const PointerModel<float>&,
                                     const nn::AdamConfig&);
template void save_checkpoint<double>(const std::string&,
                                      const PointerModel<double>&,
                                      const nn::AdamConfig&);
template PointerModel<float> load_checkpoint<float>(const std::string&,
                                                    nn::AdamConfig*);
template PointerModel<double> load_checkpoint<double>(const std::string&,
                                                      nn::AdamConfig*);

}  // namespace optw
