#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aca/dataset.hpp"
#include "aca/synthetic.hpp"

namespace fs = std::filesystem;
using namespace aca;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aca_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& content) {
  const fs::path p = temp_file(name);
  std::ofstream out(p);
  out << content;
  return p;
}

void put_u32_be(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

fs::path write_idx_images(const std::string& name, std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                          std::uint32_t cols, const std::vector<unsigned char>& payload) {
  const fs::path p = temp_file(name);
  std::ofstream out(p, std::ios::binary);
  put_u32_be(out, magic);
  put_u32_be(out, count);
  put_u32_be(out, rows);
  put_u32_be(out, cols);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  return p;
}

fs::path write_idx_labels(const std::string& name, std::uint32_t magic, std::uint32_t count,
                          const std::vector<unsigned char>& payload) {
  const fs::path p = temp_file(name);
  std::ofstream out(p, std::ios::binary);
  put_u32_be(out, magic);
  put_u32_be(out, count);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  return p;
}

}  // namespace

TEST_CASE("load_csv_dataset basic decoding") {
  const auto p = write_text("basic.csv",
                            "a,b,cls\n"
                            "1.5,2,yes\n"
                            "0.5,3,no\n"
                            "2.5,4,yes\n");
  const Dataset ds = load_csv_dataset(p, "cls");
  REQUIRE(ds.size() == 3);
  REQUIRE(ds.d_in == 2);
  REQUIRE(ds.num_classes == 2);
  // first-appearance label encoding: yes -> 0, no -> 1
  REQUIRE(ds.examples[0].label == 0);
  REQUIRE(ds.examples[1].label == 1);
  REQUIRE(ds.examples[2].label == 0);
  REQUIRE(ds.examples[0].features == Vec{1.5, 2.0});
}

TEST_CASE("load_csv_dataset categorical features by first appearance") {
  const auto p = write_text("cat.csv",
                            "color,size,cls\n"
                            "red,1,no\n"
                            "blue,2,yes\n"
                            "red,3,no\n"
                            "green,4,yes\n");
  const Dataset ds = load_csv_dataset(p, "cls");
  REQUIRE(ds.examples[0].features[0] == 0.0);  // red
  REQUIRE(ds.examples[1].features[0] == 1.0);  // blue
  REQUIRE(ds.examples[2].features[0] == 0.0);
  REQUIRE(ds.examples[3].features[0] == 2.0);  // green
}

TEST_CASE("load_csv_dataset error paths") {
  const auto p = write_text("err.csv", "a,b,cls\n1,2,yes\n");
  REQUIRE_THROWS_AS(load_csv_dataset(p, "label"), schema_error);
  REQUIRE_THROWS_AS(load_csv_dataset(p, "cls", {"missing"}), schema_error);

  const auto ragged = write_text("ragged.csv", "a,b,cls\n1,2,yes\n3,4\n");
  try {
    load_csv_dataset(ragged, "cls");
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    REQUIRE(std::string(e.what()).find("row 2") != std::string::npos);
  }

  const auto empty_cell = write_text("empty_cell.csv", "a,b,cls\n1,,yes\n");
  REQUIRE_THROWS_AS(load_csv_dataset(empty_cell, "cls"), parse_error);

  const auto gap = write_text("gap.csv", "a,cls\n1,0\n2,2\n");
  REQUIRE_THROWS_AS(load_csv_dataset(gap, "cls"), schema_error);  // labels 0,2 are not contiguous
}

TEST_CASE("load_csv_dataset bank-style schema") {
  // 17 columns, label column named y, mixed numeric/categorical.
  std::string header = "age,job,marital,education,default,balance,housing,loan,contact,day,month,duration,campaign,pdays,previous,poutcome,y";
  std::string csv = header + "\n";
  const char* jobs[] = {"admin", "technician", "services"};
  const char* months[] = {"may", "jun"};
  for (int i = 0; i < 12; ++i) {
    csv += std::to_string(30 + i) + "," + jobs[i % 3] + ",married,secondary,no," + std::to_string(1000 + 17 * i) +
           ",yes,no,cellular," + std::to_string(1 + i) + "," + months[i % 2] + "," + std::to_string(100 + i) +
           ",1,-1,0,unknown," + (i % 3 == 0 ? "yes" : "no") + "\n";
  }
  const auto p = write_text("bank.csv", csv);
  const Dataset ds = load_csv_dataset(p, "y");
  REQUIRE(ds.d_in == 16);
  REQUIRE(ds.num_classes == 2);
  REQUIRE(ds.size() == 12);
}

TEST_CASE("CSV round-trip preserves features and labels") {
  BlobConfig cfg;
  cfg.n = 23;
  cfg.d_in = 5;
  cfg.num_classes = 3;
  const Dataset ds = make_blobs(cfg, 99);
  const auto p = temp_file("roundtrip.csv");
  write_csv_dataset(ds, p);
  const Dataset back = load_csv_dataset(p, "label");
  REQUIRE(back.size() == ds.size());
  REQUIRE(back.d_in == ds.d_in);
  REQUIRE(back.num_classes == ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    REQUIRE(back.examples[i].label == ds.examples[i].label);
    REQUIRE(back.examples[i].features == ds.examples[i].features);
  }
}

TEST_CASE("load_idx_images decodes images and labels") {
  const auto img = write_idx_images("ok-images", 2051, 2, 2, 2, {0, 50, 100, 255, 1, 2, 3, 4});
  const auto lab = write_idx_labels("ok-labels", 2049, 2, {7, 3});
  const Dataset ds = load_idx_images(img, lab);
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.d_in == 4);
  REQUIRE(ds.examples[0].features == Vec{0.0, 50.0, 100.0, 255.0});
  REQUIRE(ds.examples[1].features == Vec{1.0, 2.0, 3.0, 4.0});
  REQUIRE(ds.examples[0].label == 7);
  REQUIRE(ds.examples[1].label == 3);
}

TEST_CASE("load_idx_images format errors name the offending file") {
  const auto bad_magic = write_idx_images("bad-magic", 2049, 1, 2, 2, {1, 2, 3, 4});
  const auto lab = write_idx_labels("fmt-labels", 2049, 1, {0});
  try {
    load_idx_images(bad_magic, lab);
    FAIL("expected format_error");
  } catch (const format_error& e) {
    REQUIRE(std::string(e.what()).find("bad-magic") != std::string::npos);
  }

  const auto img = write_idx_images("fmt-images", 2051, 2, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  const auto short_labels = write_idx_labels("short-labels", 2049, 3, {0, 1, 2});
  REQUIRE_THROWS_AS(load_idx_images(img, short_labels), format_error);

  const auto truncated = write_idx_images("trunc-images", 2051, 2, 2, 2, {1, 2, 3});
  const auto lab2 = write_idx_labels("trunc-labels", 2049, 2, {0, 1});
  REQUIRE_THROWS_AS(load_idx_images(truncated, lab2), format_error);
}

TEST_CASE("normalize_features") {
  Dataset ds;
  ds.d_in = 2;
  ds.num_classes = 2;
  ds.examples = {{{0.0, 7.0}, 0}, {{127.5, 7.0}, 1}, {{255.0, 7.0}, 0}};
  ds.feature_range = compute_feature_range(ds.examples, 2);

  SECTION("divide_by_255 maps [0,255] into [0,1]") {
    const Dataset out = normalize_features(ds, Normalize::divide_by_255);
    REQUIRE(out.examples[0].features[0] == 0.0);
    REQUIRE(out.examples[1].features[0] == 0.5);
    REQUIRE(out.examples[2].features[0] == 1.0);
  }
  SECTION("minmax_01 maps constant columns to zero") {
    const Dataset out = normalize_features(ds, Normalize::minmax_01);
    REQUIRE(out.examples[0].features[1] == 0.0);
    REQUIRE(out.examples[1].features[1] == 0.0);
    REQUIRE(out.examples[2].features[0] == 1.0);
    REQUIRE(out.examples[0].features[0] == 0.0);
  }
  SECTION("none is the identity") {
    const Dataset out = normalize_features(ds, Normalize::none);
    for (std::size_t i = 0; i < ds.size(); ++i) REQUIRE(out.examples[i].features == ds.examples[i].features);
  }
}

TEST_CASE("split is a deterministic disjoint partition") {
  BlobConfig cfg;
  cfg.n = 10;
  cfg.d_in = 3;
  const Dataset ds = make_blobs(cfg, 5);

  const auto [left, right] = split(ds, 0.5, 42);
  REQUIRE(left.size() == 5);
  REQUIRE(right.size() == 5);

  const auto [left2, right2] = split(ds, 0.5, 42);
  for (std::size_t i = 0; i < left.size(); ++i) REQUIRE(left.examples[i].features == left2.examples[i].features);

  // Union of the parts equals the input multiset.
  auto key = [](const Example& e) { return e.features; };
  std::vector<Vec> all;
  for (const auto& e : ds.examples) all.push_back(key(e));
  std::vector<Vec> parts;
  for (const auto& e : left.examples) parts.push_back(key(e));
  for (const auto& e : right.examples) parts.push_back(key(e));
  std::sort(all.begin(), all.end());
  std::sort(parts.begin(), parts.end());
  REQUIRE(all == parts);

  REQUIRE_THROWS_AS(split(ds, 0.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(split(ds, 1.0, 1), std::invalid_argument);

  BlobConfig tiny;
  tiny.n = 2;
  tiny.d_in = 2;
  const Dataset two = make_blobs(tiny, 7);
  REQUIRE_THROWS_AS(split(two, 0.999, 1), std::invalid_argument);
}

TEST_CASE("subsample_balanced draws an exactly uniform class histogram") {
  BlobConfig cfg;
  cfg.n = 20;  // 10 per class
  cfg.d_in = 2;
  cfg.num_classes = 2;
  const Dataset ds = make_blobs(cfg, 11);

  const Dataset out = subsample_balanced(ds, 5, 3);
  REQUIRE(out.size() == 10);
  int counts[2] = {0, 0};
  for (const auto& e : out.examples) counts[e.label]++;
  REQUIRE(counts[0] == 5);
  REQUIRE(counts[1] == 5);

  try {
    subsample_balanced(ds, 11, 3);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    REQUIRE(std::string(e.what()).find("class") != std::string::npos);
  }
}

TEST_CASE("subsample_balanced at full MNIST shape") {
  // 10 classes with 5500 examples each; 5000 per class leaves 50000 total.
  Dataset ds;
  ds.d_in = 2;
  ds.num_classes = 10;
  ds.examples.reserve(55000);
  for (int c = 0; c < 10; ++c)
    for (int i = 0; i < 5500; ++i) ds.examples.push_back({{double(c), double(i)}, c});
  ds.feature_range = compute_feature_range(ds.examples, ds.d_in);

  const Dataset out = subsample_balanced(ds, 5000, 17);
  REQUIRE(out.size() == 50000);
  std::vector<int> counts(10, 0);
  for (const auto& e : out.examples) counts[static_cast<std::size_t>(e.label)]++;
  for (int c : counts) REQUIRE(c == 5000);
}
