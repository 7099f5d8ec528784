#include "mfgat/dataset_io.hpp"

#include "mfgat/binary_io.hpp"

#include <fstream>

namespace mfgat {

namespace {

constexpr char kDatasetMagic[9] = "MFGATDS";
constexpr std::uint32_t kDatasetVersion = 1;

void write_f32_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) io::write_le<float>(out, static_cast<float>(m.data()[i]));
}

Matrix read_f32_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(io::read_le<float>(in));
  return m;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const DatasetSplit& split, const DatasetHeader& header) {
  const Eigen::Index n = header.radars;
  const Eigen::Index len = header.window;
  if (split.norm_mean.rows() != n || split.norm_mean.cols() != len) {
    throw std::invalid_argument("save_dataset: header dimensions disagree with normalisation statistics");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  io::write_magic(out, kDatasetMagic);
  io::write_le<std::uint32_t>(out, kDatasetVersion);
  io::write_le<std::uint32_t>(out, header.radars);
  io::write_le<std::uint32_t>(out, header.window);
  io::write_le<double>(out, header.sample_rate_hz);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.labels.size()));
  for (const std::string& name : header.labels) io::write_string(out, name);
  io::write_string(out, header.config_hash);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    io::write_le<std::uint64_t>(out, part->size());
  }
  write_f32_matrix(out, split.norm_mean);
  write_f32_matrix(out, split.norm_std);

  const GraphSample* any = !split.train.empty() ? &split.train.front() : nullptr;
  const Adjacency adjacency = any != nullptr ? any->adjacency : Adjacency::fully_connected(static_cast<int>(n));
  for (std::uint8_t bit : adjacency.mask()) io::write_le<std::uint8_t>(out, bit);

  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const GraphSample& s : *part) {
      if (s.node_features.rows() != n || s.node_features.cols() != len) {
        throw std::invalid_argument("save_dataset: sample shape disagrees with header");
      }
      if (s.label < 0 || s.label >= static_cast<int>(header.labels.size())) {
        throw std::invalid_argument("save_dataset: label outside the label map");
      }
      write_f32_matrix(out, s.node_features);
      io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(s.label));
    }
  }
  if (!out) throw IoError("failed writing dataset '" + path.string() + "'");
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  io::expect_magic(in, kDatasetMagic, "dataset");
  LoadedDataset result;
  DatasetHeader& h = result.header;
  h.version = io::read_le<std::uint32_t>(in);
  if (h.version != kDatasetVersion) {
    throw FormatError("dataset version " + std::to_string(h.version) + " is not supported (expected " +
                      std::to_string(kDatasetVersion) + ")");
  }
  h.radars = io::read_le<std::uint32_t>(in);
  h.window = io::read_le<std::uint32_t>(in);
  if (h.radars == 0 || h.window == 0 || h.radars > 4096 || h.window > (1u << 20)) {
    throw FormatError("dataset header has implausible dimensions");
  }
  h.sample_rate_hz = io::read_le<double>(in);
  const auto classes = io::read_le<std::uint32_t>(in);
  if (classes == 0 || classes > 255) throw FormatError("dataset header has an invalid class count");
  for (std::uint32_t c = 0; c < classes; ++c) h.labels.push_back(io::read_string(in));
  h.config_hash = io::read_string(in);
  std::uint64_t counts[3];
  for (auto& c : counts) c = io::read_le<std::uint64_t>(in);

  const Eigen::Index n = h.radars;
  const Eigen::Index len = h.window;
  DatasetSplit& split = result.split;
  split.norm_mean = read_f32_matrix(in, n, len);
  split.norm_std = read_f32_matrix(in, n, len);
  Adjacency adjacency(static_cast<int>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) adjacency.set(i, j, io::read_le<std::uint8_t>(in) != 0);

  std::vector<GraphSample>* parts[] = {&split.train, &split.val, &split.test};
  for (int p = 0; p < 3; ++p) {
    parts[p]->reserve(static_cast<std::size_t>(counts[p]));
    for (std::uint64_t k = 0; k < counts[p]; ++k) {
      GraphSample s;
      s.node_features = read_f32_matrix(in, n, len);
      s.label = io::read_le<std::uint8_t>(in);
      if (s.label >= static_cast<int>(classes)) throw FormatError("sample label outside the label map");
      s.adjacency = adjacency;
      parts[p]->push_back(std::move(s));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after the last sample");
  return result;
}

}  // namespace mfgat
