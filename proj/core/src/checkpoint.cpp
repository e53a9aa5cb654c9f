#include "horizon/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "horizon/errors.hpp"

namespace horizon {

namespace {

constexpr char kMagic[8] = {'H', 'Z', 'C', 'K', 'P', 'T', '0', '\n'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(const std::string& data, std::string origin)
      : data_(data), origin_(std::move(origin)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(byte()); }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(byte())) << (8 * i);
    }
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(byte())) << (8 * i);
    }
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic() {
    for (char expected : kMagic) {
      if (byte() != expected) {
        throw ValidationError(origin_ + ": not a checkpoint file");
      }
    }
  }

  void expect_end() {
    if (pos_ != data_.size()) {
      throw ValidationError(origin_ + ": trailing bytes after checkpoint data");
    }
  }

 private:
  char byte() {
    if (pos_ >= data_.size()) {
      throw ValidationError(origin_ + ": truncated checkpoint file");
    }
    return data_[pos_++];
  }

  const std::string& data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

void serialize_net(std::string& out, const Mlp& net) {
  out.push_back(net.output_relu() ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(net.dims().size()));
  for (int d : net.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Eigen::MatrixXd& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        put_f32(out, static_cast<float>(w(r, c)));
      }
    }
    const Eigen::RowVectorXd& b = net.biases[l];
    for (Eigen::Index c = 0; c < b.size(); ++c) {
      put_f32(out, static_cast<float>(b(c)));
    }
  }
}

Mlp deserialize_net(Reader& reader) {
  const bool output_relu = reader.u8() != 0;
  const std::uint32_t n_dims = reader.u32();
  if (n_dims < 2 || n_dims > 64) {
    throw ValidationError("checkpoint network has an invalid layer count");
  }
  std::vector<int> dims(n_dims);
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    const std::uint32_t d = reader.u32();
    if (d < 1 || d > (1u << 24)) {
      throw ValidationError("checkpoint network has an invalid layer width");
    }
    dims[i] = static_cast<int>(d);
  }
  Mlp net(dims, output_relu, /*seed=*/0);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Eigen::MatrixXd& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = static_cast<double>(reader.f32());
      }
    }
    Eigen::RowVectorXd& b = net.biases[l];
    for (Eigen::Index c = 0; c < b.size(); ++c) {
      b(c) = static_cast<double>(reader.f32());
    }
  }
  return net;
}

}  // namespace

MtpuModel Checkpoint::to_mtpu() const {
  if (mode != ModelMode::Mtpu) {
    throw ValidationError("checkpoint does not hold a multi-task model");
  }
  if (nets.size() != static_cast<std::size_t>(periods) + 1) {
    throw ValidationError("multi-task checkpoint has a bad network count");
  }
  MtpuModel model;
  model.trunk = nets.front();
  model.heads.assign(nets.begin() + 1, nets.end());
  return model;
}

Checkpoint Checkpoint::from_mtpu(const MtpuModel& model, std::uint64_t seed,
                                 double epsilon, std::uint32_t min_count) {
  Checkpoint ckpt;
  ckpt.mode = ModelMode::Mtpu;
  ckpt.seed = seed;
  ckpt.epsilon = epsilon;
  ckpt.periods = static_cast<std::uint32_t>(model.periods());
  ckpt.min_count = min_count;
  ckpt.nets.reserve(model.heads.size() + 1);
  ckpt.nets.push_back(model.trunk);
  ckpt.nets.insert(ckpt.nets.end(), model.heads.begin(), model.heads.end());
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  out.push_back(static_cast<char>(ckpt.mode));
  put_u64(out, ckpt.seed);
  put_f64(out, ckpt.epsilon);
  put_u32(out, ckpt.periods);
  put_u32(out, ckpt.min_count);
  put_u32(out, static_cast<std::uint32_t>(ckpt.nets.size()));
  for (const Mlp& net : ckpt.nets) serialize_net(out, net);

  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot write checkpoint: " + path.string());
  }
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file.flush()) {
    throw std::runtime_error("failed writing checkpoint: " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot open checkpoint: " + path.string());
  std::string data((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());

  Reader reader(data, path.string());
  reader.expect_magic();
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw ValidationError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
  }

  Checkpoint ckpt;
  const std::uint8_t mode = reader.u8();
  if (mode > 2) {
    throw ValidationError(path.string() + ": unknown model mode");
  }
  ckpt.mode = static_cast<ModelMode>(mode);
  ckpt.seed = reader.u64();
  ckpt.epsilon = reader.f64();
  ckpt.periods = reader.u32();
  ckpt.min_count = reader.u32();
  const std::uint32_t n_nets = reader.u32();

  const std::uint32_t expected =
      ckpt.mode == ModelMode::Single
          ? 1
          : (ckpt.mode == ModelMode::Mtpu ? ckpt.periods + 1 : ckpt.periods);
  if (n_nets != expected) {
    throw ValidationError(path.string() + ": network count does not match mode");
  }

  ckpt.nets.reserve(n_nets);
  for (std::uint32_t i = 0; i < n_nets; ++i) {
    ckpt.nets.push_back(deserialize_net(reader));
  }
  reader.expect_end();
  return ckpt;
}

}  // namespace horizon
