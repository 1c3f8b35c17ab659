#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "spikelda/model_io.hpp"
#include "spikelda/rng.hpp"
#include "spikelda/simbench.hpp"

using namespace spikelda;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("spikelda_model_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

PCLDAModel fitted_model(const SelectionMode& sel, std::uint64_t seed) {
  SimModel model = gen_model1(30, 0.6);
  Rng rng(seed);
  LabeledDataset train = sample_dataset(model, 40, 60, rng);
  return fit_pclda(train, DPolicy::fixed(2), sel);
}

}  // namespace

TEST(ModelIo, RoundTripIsBitFaithful) {
  TempDir tmp;
  PCLDAModel m = fitted_model(SelectionMode::top_s(6), 1);
  const std::string path = tmp.file("m.json");
  save_model(m, path);
  PCLDAModel back = load_model(path);

  EXPECT_EQ(back.p(), m.p());
  EXPECT_EQ(back.whitener.model().d, m.whitener.model().d);
  EXPECT_EQ(back.selected, m.selected);
  EXPECT_EQ(back.class_labels, m.class_labels);
  EXPECT_EQ(back.class_counts, m.class_counts);
  // bit-exact doubles after the decimal round trip
  EXPECT_TRUE((back.zeta_hat.array() == m.zeta_hat.array()).all());
  EXPECT_TRUE((back.midpoint.array() == m.midpoint.array()).all());
  EXPECT_TRUE((back.whitener.model().u_hat.array() == m.whitener.model().u_hat.array()).all());
  EXPECT_TRUE(
      (back.whitener.model().lambda_hat.array() == m.whitener.model().lambda_hat.array()).all());
  EXPECT_EQ(back.whitener.model().sigma2_hat, m.whitener.model().sigma2_hat);
  EXPECT_EQ(back.prior_offset, m.prior_offset);
  EXPECT_EQ(back.score_offset, m.score_offset);
  EXPECT_TRUE((back.class_means[0].array() == m.class_means[0].array()).all());
  EXPECT_TRUE((back.class_means[1].array() == m.class_means[1].array()).all());

  // identical predictions on fresh points
  Rng rng(2);
  Matrix pts = rng.normal_matrix(500, 30);
  EXPECT_EQ(predict_pclda_batch(back, pts), predict_pclda_batch(m, pts));
}

TEST(ModelIo, ThresholdModeRecordsTn) {
  TempDir tmp;
  PCLDAModel m = fitted_model(SelectionMode::threshold(0.5, 0.3, true), 3);
  const std::string path = tmp.file("thr.json");
  save_model(m, path);

  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  EXPECT_EQ(j.at("selection_mode").at("kind"), "threshold");
  EXPECT_EQ(j.at("selection_mode").at("C").get<double>(), 0.5);
  EXPECT_TRUE(j.at("selection_mode").contains("t_n"));
  EXPECT_EQ(j.at("selection_mode").at("t_n").get<double>(), m.t_n);

  PCLDAModel back = load_model(path);
  EXPECT_EQ(back.t_n, m.t_n);
  EXPECT_EQ(back.selection.kind, SelectionMode::Kind::Threshold);
}

TEST(ModelIo, MalformedDocuments) {
  TempDir tmp;
  const std::string path = tmp.file("bad.json");
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_THROW(load_model(path), SchemaError);
  {
    std::ofstream out(path);
    out << R"({"format":"other","kind":"pclda-binary"})";
  }
  EXPECT_THROW(load_model(path), SchemaError);
  {
    // valid shell with an inconsistent U_hat block
    PCLDAModel m = fitted_model(SelectionMode::top_s(3), 4);
    nlohmann::json j = model_to_json(m);
    j["U_hat"]["rows"] = 7;
    std::ofstream out(path);
    out << j.dump();
  }
  EXPECT_THROW(load_model(path), SchemaError);
  EXPECT_THROW(load_model(tmp.file("missing.json")), Error);
}
