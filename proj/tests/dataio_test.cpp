#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "spikelda/dataio.hpp"
#include "spikelda/rng.hpp"

using namespace spikelda;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("spikelda_dataio_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST(LoadCsv, BasicShapeAndOrder) {
  TempDir tmp;
  const std::string f = tmp.file("toy.csv");
  write_file(f, "x1,label,x2\n1.5,pos,2.5\n-3,neg,4\n");
  LabeledDataset ds = load_csv(f);
  EXPECT_EQ(ds.n(), 2);
  EXPECT_EQ(ds.p(), 2);
  EXPECT_EQ(ds.feature_names[0], "x1");
  EXPECT_EQ(ds.feature_names[1], "x2");
  EXPECT_DOUBLE_EQ(ds.features(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(ds.features(0, 1), 2.5);
  EXPECT_DOUBLE_EQ(ds.features(1, 0), -3.0);
  EXPECT_EQ(ds.labels[0], "pos");
  EXPECT_EQ(ds.labels[1], "neg");
  // class ordering is lexicographic
  EXPECT_EQ(ds.class_names[0], "neg");
  EXPECT_EQ(ds.class_names[1], "pos");
  EXPECT_EQ(ds.label_ordinal[0], 1);
}

TEST(LoadCsv, NamedCellErrors) {
  TempDir tmp;
  const std::string f = tmp.file("bad.csv");
  write_file(f, "a,b,label\n1,2,x\n1,NA,y\n");
  try {
    load_csv(f);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }

  write_file(f, "a,b,label\n1,,x\n1,2,y\n");
  EXPECT_THROW(load_csv(f), ParseError);
  write_file(f, "a,b,label\n1,inf,x\n1,2,y\n");
  EXPECT_THROW(load_csv(f), ParseError);
  write_file(f, "a,b,label\n1,2\n1,2,y\n");
  EXPECT_THROW(load_csv(f), ParseError);
}

TEST(LoadCsv, SchemaErrors) {
  TempDir tmp;
  const std::string f = tmp.file("schema.csv");
  write_file(f, "a,a,label\n1,2,x\n3,4,y\n");
  EXPECT_THROW(load_csv(f), SchemaError);
  write_file(f, "a,b,c\n1,2,3\n4,5,6\n");
  EXPECT_THROW(load_csv(f), SchemaError);  // no "label" column
  EXPECT_NO_THROW(load_csv(f, "c"));
}

TEST(SaveLoadCsv, RoundTripBitExact) {
  TempDir tmp;
  Rng rng(99);
  Matrix x = rng.normal_matrix(17, 5);
  x(3, 2) = 1.0 / 3.0;
  x(4, 1) = 1e-17;
  x(5, 0) = -12345.678901234567;
  std::vector<std::string> labels;
  for (int i = 0; i < 17; ++i) labels.push_back(i % 3 == 0 ? "alpha" : "beta");
  LabeledDataset ds = LabeledDataset::create(x, labels);
  const std::string f = tmp.file("round.csv");
  save_csv(ds, f);
  LabeledDataset back = load_csv(f);
  ASSERT_EQ(back.n(), ds.n());
  ASSERT_EQ(back.p(), ds.p());
  for (Index i = 0; i < ds.n(); ++i) {
    EXPECT_EQ(back.labels[static_cast<std::size_t>(i)], ds.labels[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < ds.p(); ++j)
      EXPECT_EQ(back.features(i, j), ds.features(i, j)) << i << "," << j;
  }
  // column order stability: feature j keeps its header name
  for (Index j = 0; j < ds.p(); ++j)
    EXPECT_EQ(back.feature_names[static_cast<std::size_t>(j)], "f" + std::to_string(j + 1));
}

TEST(CreateDataset, Validation) {
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  EXPECT_NO_THROW(LabeledDataset::create(x, {"a", "b"}));
  EXPECT_THROW(LabeledDataset::create(x, {"a"}), ValidationError);
  x(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(LabeledDataset::create(x, {"a", "b"}), ValidationError);
  Matrix one(1, 2);
  one << 1, 2;
  EXPECT_THROW(LabeledDataset::create(one, {"a"}), ValidationError);
}

TEST(TrainTestSplit, StratifiedBalanced) {
  Matrix x(8, 1);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  std::vector<std::string> labels{"a", "a", "a", "a", "b", "b", "b", "b"};
  LabeledDataset ds = LabeledDataset::create(x, labels);
  auto [train, test] = train_test_split(ds, 0.5, 42, true);
  EXPECT_EQ(train.n(), 4);
  EXPECT_EQ(test.n(), 4);
  EXPECT_EQ(train.class_counts[0], 2);
  EXPECT_EQ(train.class_counts[1], 2);
  EXPECT_EQ(test.class_counts[0], 2);
  EXPECT_EQ(test.class_counts[1], 2);

  auto [train2, test2] = train_test_split(ds, 0.5, 42, true);
  EXPECT_EQ(train2.labels, train.labels);
  EXPECT_TRUE((train2.features - train.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST(TrainTestSplit, EmptyingAClassFails) {
  Matrix x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  std::vector<std::string> labels{"a", "a", "a", "a", "a", "b"};
  LabeledDataset ds = LabeledDataset::create(x, labels);
  // the singleton class lands on exactly one side, so the other side is
  // missing it for every seed
  EXPECT_THROW(train_test_split(ds, 0.5, 1, false), SplitError);
  EXPECT_THROW(train_test_split(ds, 1.5, 1, false), RangeError);
}

TEST(TrainTestSplit, StratifiedWithinOneSample) {
  Rng rng(3);
  Matrix x = rng.normal_matrix(20, 2);
  std::vector<std::string> labels;
  for (int i = 0; i < 7; ++i) labels.push_back("a");
  for (int i = 0; i < 13; ++i) labels.push_back("b");
  LabeledDataset ds = LabeledDataset::create(x, labels);
  auto [train, test] = train_test_split(ds, 0.3, 5, true);
  EXPECT_NEAR(test.class_counts[0], 0.3 * 7, 0.5 + 1e-9);
  EXPECT_NEAR(test.class_counts[1], 0.3 * 13, 0.5 + 1e-9);
}

TEST(LoadCsv, GeneExpressionShapedFile) {
  TempDir tmp;
  Rng rng(7);
  const int n = 38, p = 7128;
  Matrix x = rng.normal_matrix(n, p);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back(i < 27 ? "ALL" : "AML");
  LabeledDataset ds = LabeledDataset::create(x, labels);
  const std::string f = tmp.file("genes.csv");
  save_csv(ds, f);
  LabeledDataset back = load_csv(f);
  EXPECT_EQ(back.n(), n);
  EXPECT_EQ(back.p(), p);
  EXPECT_EQ(back.class_counts[0], 27);  // ALL < AML lexicographically
  EXPECT_EQ(back.class_counts[1], 11);
}
