#include "specmatch/descnet.h"

#include <fstream>

namespace specmatch {

namespace {
constexpr uint32_t kCheckpointMagic = 0x534d4e31;  // "SMN1"

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
void read_pod(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
}
}  // namespace

void save_checkpoint(const std::string& path, const Mlp<double>& net, uint64_t config_hash) {
  write_file_atomic(path, [&](std::ostream& out) {
    write_pod(out, kCheckpointMagic);
    write_pod(out, uint32_t{1});
    write_pod(out, uint32_t(net.dim()));
    write_pod(out, uint32_t(net.layers()));
    write_pod(out, config_hash);
    for (int l = 0; l < net.layers(); ++l) {
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w =
          net.weights[size_t(l)];
      out.write(reinterpret_cast<const char*>(w.data()), std::streamsize(sizeof(double)) * w.size());
      out.write(reinterpret_cast<const char*>(net.biases[size_t(l)].data()),
                std::streamsize(sizeof(double)) * net.dim());
    }
  });
}

Mlp<double> load_checkpoint(const std::string& path, uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open checkpoint '" + path + "'");
  uint32_t magic = 0, version = 0, d = 0, layers = 0;
  uint64_t hash = 0;
  read_pod(in, magic);
  read_pod(in, version);
  read_pod(in, d);
  read_pod(in, layers);
  read_pod(in, hash);
  if (!in || magic != kCheckpointMagic) throw_data("'" + path + "' is not a network checkpoint");
  if (version != 1) throw_data("unsupported checkpoint version in '" + path + "'");
  Mlp<double> net;
  net.weights.resize(layers);
  net.biases.resize(layers);
  for (uint32_t l = 0; l < layers; ++l) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(d, d);
    in.read(reinterpret_cast<char*>(w.data()), std::streamsize(sizeof(double)) * w.size());
    net.weights[l] = w;
    net.biases[l].resize(d);
    in.read(reinterpret_cast<char*>(net.biases[l].data()), std::streamsize(sizeof(double)) * d);
  }
  if (!in) throw_data("checkpoint '" + path + "' is truncated");
  if (config_hash) *config_hash = hash;
  return net;
}

}  // namespace specmatch
