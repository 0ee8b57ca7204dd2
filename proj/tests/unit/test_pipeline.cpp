#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "searchplan/io/png.hpp"
#include "searchplan/pipeline/run.hpp"
#include "searchplan/pipeline/service.hpp"
#include "searchplan/synthetic.hpp"

using namespace searchplan;
using namespace searchplan::pipeline;
using json = nlohmann::json;

namespace {

const GeoPoint kLkp{2.98, -30.59};

json pt(double x_nm, double y_nm) {
  const GeoPoint g = LocalFrame(kLkp).unproject({nm_to_m(x_nm), nm_to_m(y_nm)});
  return json::array({g.lon, g.lat});
}

json ll(double x_nm, double y_nm) {
  const json p = pt(x_nm, y_nm);
  return {{"lat", p[1]}, {"lon", p[0]}};
}

json rect(double x0, double y0, double x1, double y1) {
  return {{"type", "Polygon"}, {"coordinates", json::array({json::array({pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1), pt(x0, y0)})})}};
}

json collection(std::vector<json> geometries) {
  json fs = json::array();
  for (auto& g : geometries) fs.push_back({{"type", "Feature"}, {"properties", json::object()}, {"geometry", g}});
  return {{"type", "FeatureCollection"}, {"features", fs}};
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("searchplan_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const SyntheticGrid g{kLkp, 80, 20, parse_iso8601("2009-05-31T00:00:00Z"), 264, 6};
    std::ofstream(dir_ / "current.csv") << field_csv(uniform_field(FieldKind::kCurrent, g, {0.4, 0.1}));
    std::ofstream(dir_ / "wind.csv") << field_csv(uniform_field(FieldKind::kWind, g, {-6.0, 3.0}));
    unsetenv(kOutputRootEnv);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string field_csv(const VelocityField& f) {
    std::ostringstream out;
    write_velocity_field(out, f);
    return out.str();
  }

  json increments() const {
    json legs = json::array();
    for (int k = 0; k < 3; ++k) {
      const double y = -6 + 4 * k;
      legs.push_back({{"from", ll(-20, y)},
                      {"to", ll(20, y)},
                      {"start", "2009-06-02T1" + std::to_string(k) + ":00:00Z"},
                      {"end", "2009-06-02T1" + std::to_string(k) + ":30:00Z"},
                      {"speed_kts", 80},
                      {"altitude_ft", 500},
                      {"visibility", "good"}});
    }
    return json::array(
        {{{"kind", "surface"},
          {"label", "surface"},
          {"tables", {{"aircraft", std::string(SEARCHPLAN_DATA_DIR) + "/lateral_range.csv"}}},
          {"legs", legs}},
         {{"kind", "acoustic"},
          {"label", "acoustic"},
          {"tracklines", collection({{{"type", "LineString"}, {"coordinates", json::array({pt(-3, -30), pt(-3, 30)})}},
                                     {{"type", "LineString"}, {"coordinates", json::array({pt(3, -30), pt(3, 30)})}}})}},
         {{"kind", "sweep"}, {"label", "sweep_a"}, {"regions", collection({rect(-15, -15, 0, 15)})}},
         {{"kind", "sweep"}, {"label", "sweep_b"}, {"p_inside", 0.8}, {"regions", collection({rect(0, -10, 20, 10)})}}});
  }

  json config_doc(bool with_increments = true) const {
    json recovery = collection({rect(4, -2, 7, 1)});
    recovery["features"][0]["properties"] = {{"time", "2009-06-06T12:00:00Z"}, {"samples", 150}};
    return {{"seed", 11},
            {"particles", 600},
            {"workers", 1},
            {"disk", {{"center", {{"lat", kLkp.lat}, {"lon", kLkp.lon}}}, {"radius_nm", 40}}},
            {"crash_time", "2009-06-01T02:14:00Z"},
            {"environment", {{"wind", "wind.csv"}, {"current", "current.csv"}}},
            {"scenarios",
             json::array({{{"kind", "uniform_disk"}, {"label", "uniform"}, {"weight", 0.35}},
                          {{"kind", "circular_normal"}, {"label", "normal"}, {"weight", 0.35}},
                          {{"kind", "reverse_drift"}, {"label", "drift"}, {"weight", 0.30}, {"observations", recovery}}})},
            {"increments", with_increments ? increments() : json::array()},
            {"grid", {{"cell_size_nm", 4}}},
            {"output_dir", "out"}};
  }

  RunConfig config(bool with_increments = true) const { return parse_run_config(config_doc(with_increments), dir_); }

  fs::path dir_;
};

std::vector<std::string> digests(const json& manifest) {
  std::vector<std::string> out;
  for (const auto& s : manifest["stages"])
    if (s.contains("digest")) out.push_back(s["digest"]);
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_F(PipelineTest, ConfigErrors) {
  json doc = config_doc();
  doc.erase("scenarios");
  EXPECT_ANY_THROW(parse_run_config(doc, dir_));

  doc = config_doc();
  doc["scenarios"][0]["weight"] = 0.5;
  EXPECT_THROW(parse_run_config(doc, dir_), std::invalid_argument);

  doc = config_doc();
  doc["scenarios"][1]["kind"] = "gaussian";
  EXPECT_THROW(parse_run_config(doc, dir_), std::invalid_argument);

  doc = config_doc();
  doc["environment"]["wind"] = "missing.csv";
  EXPECT_THROW(parse_run_config(doc, dir_), std::invalid_argument);

  doc = config_doc();
  doc["prior_mode"] = "vibes";
  EXPECT_THROW(parse_run_config(doc, dir_), std::invalid_argument);

  const RunConfig c = config();
  EXPECT_THROW(prepare_increment({{"kind", "radar"}}, c), std::invalid_argument);
  EXPECT_THROW(prepare_increment({{"kind", "sweep"}}, c), std::invalid_argument);
  json late = increments()[0];
  late["legs"][0]["start"] = "2009-06-20T00:00:00Z";
  late["legs"][0]["end"] = "2009-06-20T01:00:00Z";
  EXPECT_THROW(prepare_increment(late, c), std::invalid_argument);
}

TEST_F(PipelineTest, OutputRootFromEnvironment) {
  RunConfig c = config(false);
  EXPECT_EQ(c.output_path(), dir_ / "out");
  setenv(kOutputRootEnv, "/tmp/elsewhere", 1);
  EXPECT_EQ(c.output_path(), fs::path("/tmp/elsewhere/out"));
  c.output_dir = "/abs/out";
  EXPECT_EQ(c.output_path(), fs::path("/abs/out"));
  unsetenv(kOutputRootEnv);
}

TEST_F(PipelineTest, PriorOnlyRun) {
  const RunResult r = run(config(false));
  ASSERT_TRUE(r.ok()) << r.manifest.dump();
  EXPECT_EQ(r.chain.entries.size(), 1u);
  EXPECT_EQ(r.manifest["stages"].size(), 2u);
  EXPECT_FALSE(r.manifest.contains("beacon_failure_probability"));
  EXPECT_EQ(r.chain.latest().size(), 600u);
  EXPECT_NEAR(r.chain.latest().total_weight(), 1.0, 1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "snapshots" / "00_prior.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "heatmaps" / "00_prior.png"));
}

TEST_F(PipelineTest, DeterministicAcrossRunsAndWorkers) {
  RunConfig c = config();
  const RunResult a = run(c);
  ASSERT_TRUE(a.ok()) << a.manifest.dump();
  EXPECT_EQ(a.chain.entries.size(), 5u);
  const RunResult b = run(c);
  c.workers = 3;
  const RunResult w = run(c);
  ASSERT_TRUE(w.ok());
  EXPECT_EQ(digests(a.manifest).size(), 6u);  // prior, four increments, beacons-failed variant
  EXPECT_EQ(digests(a.manifest), digests(b.manifest));
  EXPECT_EQ(digests(a.manifest), digests(w.manifest));
  for (std::size_t k = 1; k < a.chain.entries.size(); ++k)
    EXPECT_NEAR(a.chain.entries[k].particles.total_weight(), 1.0, 1e-9);
  const double pf = a.manifest["beacon_failure_probability"]["prior"];
  EXPECT_NEAR(pf, 0.16, 1e-12);
  EXPECT_GE(a.manifest["beacon_failure_probability"]["posterior"].get<double>(), pf);
  ASSERT_TRUE(a.joint.has_value());
  ASSERT_TRUE(a.beacons_failed.has_value());
}

TEST_F(PipelineTest, FailureNamesStage) {
  json doc = config_doc();
  // a certain sweep over the whole disk leaves no posterior mass
  doc["increments"][2] = {{"kind", "sweep"}, {"label", "everything"}, {"p_inside", 1.0}, {"regions", collection({rect(-60, -60, 60, 60)})}};
  const RunResult r = run(parse_run_config(doc, dir_));
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.manifest["status"], "failed");
  EXPECT_EQ(r.manifest["failed_stage"], "everything");
  EXPECT_EQ(r.chain.entries.size(), 3u);
  const json written = json::parse(read_file(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(written["failed_stage"], "everything");
}

TEST_F(PipelineTest, ServiceMatchesBatch) {
  const RunConfig c = config();
  const RunResult batch = run(c);
  ASSERT_TRUE(batch.ok());
  const auto batch_digests = digests(batch.manifest);

  PlanningService service(c);
  const int port = service.bind_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread server([&] { service.listen_after_bind(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(120, 0);

  auto created = cli.Post("/v1/sessions", "", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = json::parse(created->body)["id"];

  auto png = cli.Get("/v1/sessions/" + id + "/heatmap.png?step=0");
  ASSERT_TRUE(png);
  EXPECT_EQ(png->status, 200);
  EXPECT_EQ(png->body, read_file(dir_ / "out" / "heatmaps" / "00_prior.png"));
  const GrayImage img = io::decode_png(png->body);
  EXPECT_EQ(img.width, service.grid().nx());

  for (std::size_t k = 0; k < c.increments.size(); ++k) {
    auto r = cli.Post("/v1/sessions/" + id + "/increments", c.increments[k].dump(), "application/json");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(json::parse(r->body)["posterior"]["digest"], batch_digests[k + 1]);
  }
  auto snap = cli.Get("/v1/sessions/" + id + "/snapshot.csv");
  ASSERT_TRUE(snap);
  EXPECT_EQ(io::sha256_hex(snap->body), batch_digests[4]);
  EXPECT_EQ(snap->body, read_file(dir_ / "out" / "snapshots" / "04_sweep_b.csv"));

  auto csv = cli.Get("/v1/sessions/" + id + "/heatmap.csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->body, read_file(dir_ / "out" / "heatmaps" / "04_sweep_b.csv"));

  // what-if allocation leaves the chain alone and improves with budget
  double last = -1;
  for (double budget : {1.0, 2.0, 4.0, 8.0}) {
    auto a = cli.Post("/v1/sessions/" + id + "/allocation", json{{"budget", budget}}.dump(), "application/json");
    ASSERT_TRUE(a);
    ASSERT_EQ(a->status, 200) << a->body;
    const double p = json::parse(a->body)["probability"];
    EXPECT_GE(p, last);
    last = p;
  }
  EXPECT_EQ(json::parse(cli.Get("/v1/sessions/" + id)->body)["steps"], 5);

  auto undo = cli.Post("/v1/sessions/" + id + "/undo", json{{"step", 1}}.dump(), "application/json");
  ASSERT_TRUE(undo);
  EXPECT_EQ(undo->status, 200);
  EXPECT_EQ(json::parse(undo->body)["steps"], 2);
  EXPECT_EQ(io::sha256_hex(cli.Get("/v1/sessions/" + id + "/snapshot.csv")->body), batch_digests[1]);

  auto chain = cli.Get("/v1/sessions/" + id + "/chain");
  ASSERT_TRUE(chain);
  EXPECT_EQ(json::parse(chain->body)["chain"][1]["label"], "surface");

  auto malformed = cli.Post("/v1/sessions/" + id + "/increments", "{not json", "application/json");
  ASSERT_TRUE(malformed);
  EXPECT_EQ(malformed->status, 400);
  EXPECT_TRUE(json::parse(malformed->body).contains("details"));

  auto invalid = cli.Post("/v1/sessions/" + id + "/increments", R"({"kind":"sweep","regions":{"type":"FeatureCollection","features":[]}})",
                          "application/json");
  ASSERT_TRUE(invalid);
  EXPECT_EQ(invalid->status, 400);
  EXPECT_EQ(json::parse(cli.Get("/v1/sessions/" + id)->body)["steps"], 2);

  auto no_budget = cli.Post("/v1/sessions/" + id + "/allocation", "{}", "application/json");
  ASSERT_TRUE(no_budget);
  EXPECT_EQ(no_budget->status, 400);

  auto missing = cli.Get("/v1/sessions/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto missing_step = cli.Get("/v1/sessions/" + id + "/heatmap.png?step=9");
  ASSERT_TRUE(missing_step);
  EXPECT_EQ(missing_step->status, 404);

  service.stop();
  server.join();
}
