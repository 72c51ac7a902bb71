#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dnnstab/io.hpp"

using namespace dnnstab;

namespace {

std::string data_file(const char* name) { return std::string(DNNSTAB_DATA_DIR) + "/" + name; }

Json minimal() {
  return Json::parse(R"({"K0": [1.0, 2.0], "K1": [[0, 0.1], [0.2, 0]], "K2": [[0.1, 0], [0, 0.1]], "L": [1, 0.5]})");
}

std::string schema_path(const Json& doc) {
  try {
    parse_system(doc);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST(SystemFile, BundledExampleOne) {
  const auto f = load_system(data_file("example1.json"));
  const auto ref = example1_system();
  EXPECT_EQ(f.system.k0, ref.k0);
  EXPECT_EQ(f.system.k1, ref.k1);
  EXPECT_EQ(f.system.k2, ref.k2);
  EXPECT_EQ(f.system.sector, ref.sector);
  ASSERT_TRUE(f.delay.has_value());
  EXPECT_DOUBLE_EQ(f.delay->h_max(), 1.0);
  EXPECT_DOUBLE_EQ(f.delay->mu_max(), 0.8);
  EXPECT_EQ(f.defaults.mu.value(), 0.8);
  EXPECT_EQ(f.defaults.k.value(), 1.25);
}

TEST(SystemFile, BundledExampleTwo) {
  const auto f = load_system(data_file("example2.json"));
  const auto ref = example2_system();
  EXPECT_EQ(f.system.k1, ref.k1);
  EXPECT_EQ(f.system.k2, ref.k2);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(f.system.activations[j].slope, ref.sector(j));
  ASSERT_TRUE(f.initial_state.has_value());
  EXPECT_EQ((*f.initial_state)(3), 1.0);
  EXPECT_DOUBLE_EQ(f.delay->h_max(), 3.3);
  EXPECT_DOUBLE_EQ(f.delay->mu_max(), 0.9);
  EXPECT_EQ(f.defaults.h_range->second, 6.0);
}

TEST(SystemFile, DefaultsAndInput) {
  auto doc = minimal();
  const auto plain = parse_system(doc);
  EXPECT_EQ(plain.system.activations[1].slope, 0.5);
  EXPECT_EQ(plain.system.equilibrium.size(), 0);
  EXPECT_FALSE(plain.delay.has_value());
  doc["input"] = {0.5, -0.5};
  const auto shifted = parse_system(doc);
  const Vec z = shifted.system.equilibrium;
  ASSERT_EQ(z.size(), 2);
  EXPECT_LE(shifted.system.rhs_unshifted(z, z).norm(), 1e-10);
}

TEST(SystemFile, SchemaErrorsNameTheField) {
  auto doc = minimal();
  doc.erase("K2");
  EXPECT_EQ(schema_path(doc), "K2");

  doc = minimal();
  doc["K1"][1] = {0.2};
  EXPECT_EQ(schema_path(doc), "K1[1]");

  doc = minimal();
  doc["K1"][0][1] = "x";
  EXPECT_EQ(schema_path(doc), "K1[0][1]");

  doc = minimal();
  doc["K0"][1] = -1.0;
  EXPECT_EQ(schema_path(doc), "K0[1]");

  doc = minimal();
  doc["activation"] = {{"kind", "relu"}};
  EXPECT_EQ(schema_path(doc), "activation.kind");

  doc = minimal();
  doc["activation"] = {{"slopes", {1.0, 0.9}}};
  EXPECT_EQ(schema_path(doc), "activation.slopes[1]");

  doc = minimal();
  doc["delay"] = {{"kind", "sinusoid"}, {"offset", 1.0}};
  EXPECT_EQ(schema_path(doc), "delay.amplitude");

  doc = minimal();
  doc["delay"] = {{"kind", "table"}, {"times", {0.0, 1.0}}, {"values", {0.5}}};
  EXPECT_EQ(schema_path(doc), "delay.values");

  doc = minimal();
  doc["defaults"] = {{"k_range", {1.0}}};
  EXPECT_EQ(schema_path(doc), "defaults.k_range");

  EXPECT_EQ(schema_path(Json::array()), "$");
}

TEST(SystemFile, MalformedAndMissingFiles) {
  EXPECT_THROW(load_system(data_file("does-not-exist.json")), InvalidArgument);
  try {
    load_system(data_file("malformed.json"));
    FAIL() << "accepted malformed JSON";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "$");
  }
}

TEST(Hashing, KnownFnvVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
  EXPECT_EQ(hex64(1), "0000000000000001");
}

TEST(Certificate, JsonRoundTripReverifies) {
  const auto sys = example1_system();
  const auto r = check_stability(sys, {1.0, 0.8}, 0.5, 0.5);
  ASSERT_TRUE(r.certified);
  const Json j = certificate_json(*r.certificate);
  EXPECT_EQ(j["margins"].size(), r.certificate->margins.size());
  EXPECT_EQ(j["min_margin"].get<double>(), r.certificate->min_margin());
  const auto back = certificate_from_json(Json::parse(j.dump()), 2);
  EXPECT_EQ(back.flat_witness, r.certificate->flat_witness);
  EXPECT_EQ(back.witness.S1, r.certificate->witness.S1);
  EXPECT_TRUE(verify_certificate(sys, back));
  Json bad = j;
  bad["flat_witness"].erase(0);
  EXPECT_THROW(certificate_from_json(bad, 2), SchemaError);
}

TEST(Trajectory, CsvAndSvg) {
  Vec v0(2);
  v0 << 1.0, -1.0;
  const auto tr = simulate(example1_system(), DelaySignal::sinusoid(0.5, 0.5, 1.6), InitialHistory::constant(v0), 1.0, 0.01);
  std::ostringstream csv;
  write_trajectory_csv(csv, tr);
  const std::string s = csv.str();
  EXPECT_EQ(s.rfind("t,r1,r2,h\n0,1,-1,0.5\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), tr.size() + 1);
  std::ostringstream svg;
  write_trajectory_svg(svg, tr, "trajectory");
  const std::string g = svg.str();
  EXPECT_EQ(g.rfind("<svg", 0), 0u);
  EXPECT_NE(g.find("</svg>"), std::string::npos);
  std::size_t lines = 0;
  for (auto at = g.find("<polyline"); at != std::string::npos; at = g.find("<polyline", at + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
}

TEST(Manifest, CarriesInputsAndVersions) {
  RunManifest m;
  m.command = "check";
  m.input_path = "x.json";
  m.input_hash = hex64(fnv1a("{}"));
  m.seed = 42;
  m.outputs = {"certificate.json"};
  m.exit_code = 2;
  const Json j = m.to_json();
  EXPECT_EQ(j["input"]["fnv1a64"], m.input_hash);
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["exit_code"], 2);
  EXPECT_EQ(j["versions"]["dnnstab"], kVersion);
  EXPECT_TRUE(j["versions"].contains("eigen"));
}
