#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyopt/errors.hpp"
#include "polyopt/experiment.hpp"

namespace polyopt {

namespace {

constexpr char kMagic[8] = {'P', 'O', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}
std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}
Eigen::VectorXd get_vec(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  if (n > (1ull << 32)) throw IoError("checkpoint: implausible vector length");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}
std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 24)) throw IoError("checkpoint: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IoError("checkpoint: truncated file");
  return s;
}

}  // namespace

namespace detail {

void write_checkpoint_stream(std::ostream& out, const Checkpoint& checkpoint) {
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, checkpoint.version);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.dims.size()));
  for (Eigen::Index d : checkpoint.dims) put_u64(out, static_cast<std::uint64_t>(d));
  put_str(out, checkpoint.architecture);
  put_u64(out, checkpoint.master_seed);
  put_u64(out, checkpoint.step_index);
  put_u64(out, checkpoint.sample_passes);
  put_vec(out, checkpoint.values);
  put_vec(out, checkpoint.warm_start);
  put_u64(out, checkpoint.opt_step_count);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.extras.size()));
  for (const auto& [name, values] : checkpoint.extras) {
    put_str(out, name);
    put_vec(out, values);
  }
}

Checkpoint read_checkpoint_stream(std::istream& in) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: bad magic");
  }
  Checkpoint checkpoint;
  checkpoint.version = get_u32(in);
  if (checkpoint.version != 1) {
    throw IoError("checkpoint: unsupported version " + std::to_string(checkpoint.version));
  }
  const std::uint32_t players = get_u32(in);
  checkpoint.dims.resize(players);
  for (std::uint32_t i = 0; i < players; ++i) {
    checkpoint.dims[i] = static_cast<Eigen::Index>(get_u64(in));
  }
  checkpoint.architecture = get_str(in);
  checkpoint.master_seed = get_u64(in);
  checkpoint.step_index = get_u64(in);
  checkpoint.sample_passes = get_u64(in);
  checkpoint.values = get_vec(in);
  checkpoint.warm_start = get_vec(in);
  checkpoint.opt_step_count = get_u64(in);
  const std::uint32_t extras = get_u32(in);
  for (std::uint32_t i = 0; i < extras; ++i) {
    std::string name = get_str(in);
    Eigen::VectorXd values = get_vec(in);
    checkpoint.extras.emplace_back(std::move(name), std::move(values));
  }
  return checkpoint;
}

}  // namespace detail

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open '" + temp.string() + "' for writing");
    detail::write_checkpoint_stream(out, checkpoint);
    out.flush();
    if (!out) throw IoError("checkpoint: write failed for '" + temp.string() + "'");
  }
  // Atomic publish: the previous checkpoint stays valid until the rename.
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) throw IoError("checkpoint: rename failed: " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  return detail::read_checkpoint_stream(in);
}

std::string policy_set_to_string(const PolicySet& set) {
  std::ostringstream out;
  for (std::size_t i = 0; i < set.policies.size(); ++i) {
    const MlpPolicy& p = set.policies[i];
    if (i) out << ';';
    out << (p.head == PolicyHead::kCategoricalLogits ? "cat" : "gauss") << ':';
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      if (l) out << '-';
      out << p.layers[l];
    }
    out << ':' << (p.activation == Activation::kTanh ? "tanh" : "relu");
    if (p.head == PolicyHead::kGaussianMean) out << ':' << format_double(p.sigma);
  }
  return out.str();
}

PolicySet policy_set_from_string(const std::string& descriptor) {
  PolicySet set;
  std::stringstream stream(descriptor);
  std::string token;
  while (std::getline(stream, token, ';')) {
    std::stringstream fields(token);
    std::string head, layers, activation, sigma;
    std::getline(fields, head, ':');
    std::getline(fields, layers, ':');
    std::getline(fields, activation, ':');
    std::getline(fields, sigma, ':');

    MlpPolicy policy;
    if (head == "cat") {
      policy.head = PolicyHead::kCategoricalLogits;
    } else if (head == "gauss") {
      policy.head = PolicyHead::kGaussianMean;
    } else {
      throw IoError("policy descriptor: unknown head '" + head + "'");
    }
    std::stringstream sizes(layers);
    std::string size;
    while (std::getline(sizes, size, '-')) {
      policy.layers.push_back(static_cast<Eigen::Index>(std::stol(size)));
    }
    if (policy.layers.size() < 2) throw IoError("policy descriptor: bad layer list");
    if (activation == "tanh") {
      policy.activation = Activation::kTanh;
    } else if (activation == "relu") {
      policy.activation = Activation::kRelu;
    } else {
      throw IoError("policy descriptor: unknown activation '" + activation + "'");
    }
    if (!sigma.empty()) policy.sigma = std::stod(sigma);
    set.policies.push_back(std::move(policy));
  }
  if (set.policies.empty()) throw IoError("policy descriptor: empty");
  return set;
}

}  // namespace polyopt
