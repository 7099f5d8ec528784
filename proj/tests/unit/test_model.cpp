#include <doctest.h>

#include "mfgat/errors.hpp"
#include "mfgat/model.hpp"
#include "mfgat/nn/dft.hpp"
#include "mfgat/nn/grad_check.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace mfgat;
using oracle::random_matrix;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.window = 20;
  d.lstm_hidden = 4;
  d.heads = 2;
  d.head_width = 3;
  d.embed = 4;
  return d;
}

constexpr ModelVariant kAll[] = {ModelVariant::SdfeOnly, ModelVariant::Stdfe, ModelVariant::MfGat};

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

Matrix permute_rows(const Matrix& m, const std::vector<int>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mfgat_model_test_" + name);
}

}  // namespace

TEST_CASE("variant names round-trip and unknown names are rejected") {
  for (ModelVariant v : kAll) CHECK(parse_variant(to_string(v)) == v);
  CHECK(to_string(ModelVariant::MfGat) == "mfgat");
  CHECK_THROWS_AS(parse_variant("gat"), std::invalid_argument);
}

TEST_CASE("build_variant: modules present per variant, deterministic per seed") {
  const ModelDims d = small_dims();
  const MfGatModel sdfe = build_variant(ModelVariant::SdfeOnly, d, 4);
  const MfGatModel stdfe = build_variant(ModelVariant::Stdfe, d, 4);
  const MfGatModel full = build_variant(ModelVariant::MfGat, d, 4);
  CHECK_FALSE(sdfe.transform.has_value());
  CHECK_FALSE(sdfe.fuse.has_value());
  CHECK(stdfe.transform.has_value());
  CHECK_FALSE(stdfe.fuse.has_value());
  CHECK(stdfe.distill->in == 2 * d.embed);
  CHECK(full.fuse.has_value());
  CHECK(full.distill->in == d.embed);

  MfGatModel a = build_variant(ModelVariant::MfGat, d, 4);
  MfGatModel b = build_variant(ModelVariant::MfGat, d, 4);
  MfGatModel c = build_variant(ModelVariant::MfGat, d, 5);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_difference = false;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    CHECK(pa[k]->name == pb[k]->name);
    CHECK(pa[k]->data == pb[k]->data);
    any_difference = any_difference || pa[k]->data != pc[k]->data;
  }
  CHECK(any_difference);
}

TEST_CASE("build_variant: the source-only model is a strict structural subset of both two-branch models") {
  for (const ModelDims& d : {small_dims(), ModelDims{}}) {
    const std::size_t sdfe = build_variant(ModelVariant::SdfeOnly, d, 1).parameter_count();
    const std::size_t stdfe = build_variant(ModelVariant::Stdfe, d, 1).parameter_count();
    const std::size_t full = build_variant(ModelVariant::MfGat, d, 1).parameter_count();
    CHECK(sdfe < stdfe);
    CHECK(sdfe < full);
    // Concatenation doubles the distillation GAT's input width while fusion adds
    // only two score maps: (2d*d + 2d) - (d*d + 2d + 2(d + 1)) = d*d - 2d - 2.
    const auto e = static_cast<std::size_t>(d.embed);
    CHECK(stdfe - full == e * e - 2 * e - 2);
  }
}

TEST_CASE("build_variant: published widths chain eight 16-wide heads into a 128-wide GAT input") {
  const MfGatModel m = build_variant(ModelVariant::MfGat, ModelDims{}, 1);
  CHECK(m.source.lstm.front().hidden == 128);
  CHECK(m.source.mhgat.in == 128);
  CHECK(m.source.mhgat.output_width() == 128);
  CHECK(m.source.gat.in == 128);
  CHECK(m.transform->gat.in == 128);
}

TEST_CASE("validate: non-positive dims and fewer than two classes are rejected") {
  ModelDims d = small_dims();
  d.heads = 0;
  CHECK_THROWS_AS(build_variant(ModelVariant::MfGat, d, 1), ShapeError);
  d = small_dims();
  d.classes = 1;
  CHECK_THROWS_AS(validate(d), ShapeError);
  d = small_dims();
  d.lstm_layers = 2;
  CHECK_NOTHROW(validate(d));
}

TEST_CASE("forward: probabilities are valid; zero classifier gives uniform output") {
  Rng rng(1);
  const ModelDims d = small_dims();
  const Adjacency adj = Adjacency::fully_connected(9);
  for (ModelVariant v : kAll) {
    MfGatModel m = build_variant(v, d, 2);
    const Matrix x = random_matrix(3 * 9, d.window, rng);
    const Matrix p = forward(x, m, adj);
    REQUIRE(p.rows() == 3);
    REQUIRE(p.cols() == 3);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((p.array() >= 0.0).all());
    CHECK((p.array() <= 1.0).all());
    m.classifier_w.data.setZero();
    m.classifier_b.data.setZero();
    CHECK((forward(x, m, adj).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("forward: rejects inputs that do not match the model") {
  MfGatModel m = build_variant(ModelVariant::MfGat, small_dims(), 1);
  const Adjacency adj = Adjacency::fully_connected(9);
  CHECK_THROWS_AS(forward(Matrix::Zero(9, 21), m, adj), ShapeError);
  CHECK_THROWS_AS(forward(Matrix::Zero(10, 20), m, adj), ShapeError);
  CHECK_THROWS_AS(forward(Matrix::Zero(9, 20), m, Adjacency::fully_connected(8)), ShapeError);
}

TEST_CASE("sdfe_forward: zeroed recurrence gives zero embeddings; one row per node") {
  Rng rng(3);
  MfGatModel m = build_variant(ModelVariant::SdfeOnly, small_dims(), 1);
  const Adjacency adj = Adjacency::fully_connected(9);
  Tape t;
  const Matrix x = random_matrix(9, 20, rng);
  CHECK(sdfe_forward(t, x, m, adj).rows() == 9);
  for (Tensor* p : m.source.lstm.front().tensors()) p->data.setZero();
  CHECK(sdfe_forward(t, x, m, adj).value() == Matrix::Zero(9, small_dims().embed));
}

TEST_CASE("branches are node-permutation equivariant; the readout is not") {
  Rng rng(4);
  MfGatModel m = build_variant(ModelVariant::MfGat, small_dims(), 6);
  Adjacency adj(9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) adj.set(i, j, i == j || (i + j) % 3 != 0);
  const std::vector<int> perm = random_permutation(9, rng);
  Adjacency padj(9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) padj.set(i, j, adj(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
  const Matrix x = random_matrix(9, 20, rng);
  const Matrix px = permute_rows(x, perm);
  Tape t;
  const Matrix hs = sdfe_forward(t, x, m, adj).value();
  const Matrix ht = tdfe_forward(t, x, m, adj).value();
  CHECK((sdfe_forward(t, px, m, padj).value() - permute_rows(hs, perm)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((tdfe_forward(t, px, m, padj).value() - permute_rows(ht, perm)).cwiseAbs().maxCoeff() < 1e-10);
  const Matrix fused = attention_fuse(t.constant(hs), t.constant(ht), *m.fuse).fused.value();
  const Matrix pfused =
      attention_fuse(t.constant(permute_rows(hs, perm)), t.constant(permute_rows(ht, perm)), *m.fuse).fused.value();
  CHECK((pfused - permute_rows(fused, perm)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((forward_logits(t, x, m, adj).value() - forward_logits(t, px, m, padj).value()).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("tdfe input: adding a constant changes only the DC bin of the spectrum") {
  Rng rng(5);
  const Matrix x = random_matrix(9, 200, rng);
  const Matrix shifted = (x.array() + 2.5).matrix();
  const Matrix a = nn::dft_magnitude(x);
  const Matrix b = nn::dft_magnitude(shifted);
  CHECK((a.rightCols(199) - b.rightCols(199)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.col(0) - b.col(0)).cwiseAbs().minCoeff() > 0.0);
  const Matrix dc = nn::dft_magnitude(Matrix::Constant(2, 200, 0.3));
  CHECK(std::abs(dc(0, 0) - 60.0) < 1e-9);
  CHECK(dc.rightCols(199).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("source-only model equals the full model's source branch with the same seed") {
  Rng rng(6);
  const ModelDims d = small_dims();
  MfGatModel sdfe = build_variant(ModelVariant::SdfeOnly, d, 8);
  MfGatModel full = build_variant(ModelVariant::MfGat, d, 8);
  const Adjacency adj = Adjacency::fully_connected(9);
  const Matrix x = random_matrix(18, d.window, rng);
  Tape t;
  const Var h_full = sdfe_forward(t, x, full, adj);
  CHECK(sdfe_forward(t, x, sdfe, adj).value() == h_full.value());
  const Var wired = nn::affine(readout(h_full, 9), t.parameter(sdfe.classifier_w), t.parameter(sdfe.classifier_b));
  CHECK(forward_logits(t, x, sdfe, adj).value() == wired.value());
}

TEST_CASE("readout concatenates node embeddings per graph") {
  Tape t;
  Matrix h(4, 2);
  h << 1, 2, 3, 4, 5, 6, 7, 8;
  const Matrix r = readout(t.constant(h), 2).value();
  Matrix expected(2, 4);
  expected << 1, 2, 3, 4, 5, 6, 7, 8;
  CHECK(r == expected);
  CHECK_THROWS_AS(readout(t.constant(h), 3), ShapeError);
}

TEST_CASE("variants without a transform recurrence or with stacked recurrences run") {
  Rng rng(7);
  ModelDims d = small_dims();
  d.transform_lstm = false;
  d.lstm_layers = 2;
  MfGatModel m = build_variant(ModelVariant::MfGat, d, 3);
  CHECK(m.transform->lstm.empty());
  CHECK(m.transform->mhgat.in == d.window);
  CHECK(m.source.lstm.size() == 2);
  const Matrix p = forward(random_matrix(9, d.window, rng), m, Adjacency::fully_connected(9));
  CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("full-model gradients agree with central differences up to the difference-quotient noise floor") {
  // Coordinates whose true gradient is below ~1e-9 cannot be resolved by a
  // 1e-5 central difference of an O(1) loss; the absolute slack covers them.
  Rng rng(8);
  ModelDims d = small_dims();
  d.nodes = 5;
  d.window = 12;
  for (ModelVariant v : kAll) {
    MfGatModel m = build_variant(v, d, 11);
    const Matrix x = random_matrix(5, d.window, rng);
    const Adjacency adj = Adjacency::fully_connected(5);
    const std::vector<int> label{1};
    const auto loss = [&](Tape& t) { return nn::cross_entropy(forward_logits(t, x, m, adj), label); };
    nn::ParameterList params = m.parameters();
    for (Tensor* p : params) p->zero_grad();
    {
      Tape t;
      t.backward(loss(t));
    }
    const auto value = [&] {
      Tape t;
      return loss(t).value()(0, 0);
    };
    for (Tensor* p : params) {
      const Matrix analytic = p->grad;
      const std::vector<double> numeric = oracle::numeric_gradient(value, p->data.data(), static_cast<std::size_t>(p->size()));
      for (Eigen::Index k = 0; k < p->size(); ++k) {
        const double a = analytic.data()[k];
        const double n = numeric[static_cast<std::size_t>(k)];
        CAPTURE(p->name);
        CHECK(std::abs(a - n) <= 1e-4 * std::max(std::abs(a), std::abs(n)) + 1e-10);
      }
    }
  }
}

TEST_CASE("checkpoint: round trip restores variant, dims, seed, hash and parameters") {
  Rng rng(9);
  const auto path = temp_path("roundtrip.bin");
  for (ModelVariant v : kAll) {
    MfGatModel m = build_variant(v, small_dims(), 21);
    for (Tensor* p : m.parameters()) p->data = random_matrix(p->rows(), p->cols(), rng);
    save_checkpoint(path, m, "abcdef0123456789");
    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.config_hash == "abcdef0123456789");
    CHECK(loaded.model.variant == v);
    CHECK(loaded.model.dims == m.dims);
    CHECK(loaded.model.seed == 21);
    const auto a = m.parameters();
    const auto b = loaded.model.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k]->data == b[k]->data);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: wrong magic, truncation and missing files fail loudly") {
  const auto path = temp_path("bad.bin");
  MfGatModel m = build_variant(ModelVariant::SdfeOnly, small_dims(), 1);
  save_checkpoint(path, m, "h");
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACKPT" << bytes.substr(8);
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  {
    std::string bumped = bytes;
    bumped[8] = 9;  // version
    std::ofstream out(path, std::ios::binary);
    out << bumped;
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
