#include "mfgat/nn/serialize.hpp"

#include "mfgat/binary_io.hpp"

#include <map>
#include <set>

namespace mfgat::nn {

void write_tensor_records(std::ostream& out, std::span<const Tensor* const> tensors) {
  for (const Tensor* t : tensors) {
    io::write_string(out, t->name);
    io::write_le<std::uint32_t>(out, 2);
    io::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(t->rows()));
    io::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(t->cols()));
    for (Eigen::Index i = 0; i < t->size(); ++i) io::write_le<double>(out, t->data.data()[i]);
  }
}

void read_tensor_records(std::istream& in, std::span<Tensor* const> tensors, std::uint32_t count) {
  std::map<std::string, Tensor*> by_name;
  for (Tensor* t : tensors) by_name[t->name] = t;
  if (count != tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                      std::to_string(tensors.size()));
  }
  std::set<std::string> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = io::read_string(in);
    const auto rank = io::read_le<std::uint32_t>(in);
    if (rank != 2) throw FormatError("tensor '" + name + "' has unsupported rank " + std::to_string(rank));
    const auto rows = io::read_le<std::uint64_t>(in);
    const auto cols = io::read_le<std::uint64_t>(in);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("unexpected tensor '" + name + "' in checkpoint");
    if (!seen.insert(name).second) throw FormatError("duplicate tensor '" + name + "' in checkpoint");
    Tensor& t = *it->second;
    if (rows != static_cast<std::uint64_t>(t.rows()) || cols != static_cast<std::uint64_t>(t.cols())) {
      throw FormatError("tensor '" + name + "' shape differs from the model");
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data.data()[i] = io::read_le<double>(in);
    t.zero_grad();
  }
}

}  // namespace mfgat::nn
