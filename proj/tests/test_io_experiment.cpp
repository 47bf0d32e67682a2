#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "lsmi/error.hpp"
#include "lsmi/experiment.hpp"
#include "lsmi/io.hpp"
#include "lsmi/synthgen.hpp"

using namespace lsmi;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lsmi_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

Dataset read_str(const std::string& s) {
  std::istringstream is(s);
  return io::read_dataset(is);
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 6.02214076e23, M_PI})
    CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(-0.0) == "0");
}

TEST_CASE("dataset JSONL round trip") {
  auto ds = synth::gen_logic({oracle::Gate::XOR_PLUS_NOT, 300, 0.1, 5});
  ds = synth::append_noise_modality(ds, 3, 1.0, 2);
  std::ostringstream os;
  io::write_dataset(os, ds);
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 301);
  const auto back = read_str(text);
  CHECK(back.dims == ds.dims);
  CHECK(back.num_classes == ds.num_classes);
  CHECK(back.provenance == ds.provenance);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].x == ds.samples[i].x);
    CHECK(back.samples[i].y == ds.samples[i].y);
    CHECK(back.samples[i].tag == ds.samples[i].tag);
  }
  std::ostringstream again;
  io::write_dataset(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("dataset reader rejects malformed input") {
  const std::string head =
      R"({"schema":1,"dims":[1,2],"K":2,"n":1,"provenance":{}})"
      "\n";
  CHECK_NOTHROW(read_str(head + R"({"id":0,"y":1,"x1":[0.5],"x2":[1,2]})"));
  CHECK(kind_of([&] {
          read_str(head + R"({"id":0,"y":1,"x1":[0.5],"x2":[1]})");
        }) == ErrorKind::invalid_input);
  CHECK(kind_of([&] {
          read_str(head + R"({"id":0,"y":1,"x1":[0.5],"x2":[1,2],"z":3})");
        }) == ErrorKind::invalid_input);
  CHECK(kind_of([&] {
          read_str(head + R"({"id":0,"y":2,"x1":[0.5],"x2":[1,2]})");
        }) == ErrorKind::invalid_input);
  CHECK(kind_of([&] {
          read_str(head + R"({"id":0,"y":1,"x1":[0.5],"x2":[1,2]})" "\n" +
                   R"({"id":1,"y":1,"x1":[0.5],"x2":[1,2]})");
        }) == ErrorKind::invalid_input);
  CHECK(kind_of([&] { read_str("not json\n"); }) == ErrorKind::invalid_input);
  CHECK(kind_of([&] { read_str(R"({"schema":2,"dims":[1],"K":2,"n":0})"); }) ==
        ErrorKind::invalid_input);
  CHECK(kind_of([&] { io::read_dataset(fs::path("/nonexistent/x.jsonl")); }) ==
        ErrorKind::io);
}

TEST_CASE("report CSV round trip and units") {
  std::vector<pipeline::SampleRecord> recs;
  for (int i = 0; i < 5; ++i) {
    info::PointwiseInfo p{0.1 * i, -0.3, 0.7, 1.1, 0.9, 0.2, 0.4};
    recs.push_back({i, i % 2, info::decompose(p), p});
  }
  for (auto units : {info::Units::nats, info::Units::bits}) {
    std::ostringstream os;
    io::write_report_csv(os, recs, units);
    CHECK(os.str().rfind(std::string(io::kReportHeader) + "\n", 0) == 0);
    std::istringstream is(os.str());
    const auto back = io::read_report_csv(is, units);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(back[i].id == recs[i].id);
      CHECK(back[i].profile.r == doctest::Approx(recs[i].profile.r));
      CHECK(back[i].profile.s == doctest::Approx(recs[i].profile.s));
      CHECK(back[i].info.h2_given_y == doctest::Approx(recs[i].info.h2_given_y));
    }
  }
  std::ostringstream nats, bits;
  io::write_report_csv(nats, recs, info::Units::nats);
  io::write_report_csv(bits, recs, info::Units::bits);
  std::istringstream as_bits(nats.str());
  const auto scaled = io::read_report_csv(as_bits, info::Units::bits);
  CHECK(scaled[3].profile.u2 ==
        doctest::Approx(recs[3].profile.u2 * std::log(2.0)));

  std::istringstream bad("id,y,r,u1,u2,s\n0,0,1,1,1,1\n");
  CHECK(kind_of([&] { io::read_report_csv(bad, info::Units::nats); }) ==
        ErrorKind::invalid_input);
}

TEST_CASE("summary and report files") {
  const auto ds = synth::gen_logic({oracle::Gate::AND, 200, 0.1, 1});
  experiment::OracleSpec spec;
  spec.gate = oracle::Gate::AND;
  const auto rep = experiment::run_oracle(spec, &ds, 0);
  const auto j = io::summary_json(rep, info::Units::bits);
  CHECK(j["schema"] == io::kSchema);
  CHECK(j["units"] == "bits");
  CHECK(j["n"] == 200);
  for (const char* k : {"r", "u1", "u2", "s"}) CHECK(j["average"].contains(k));
  CHECK(j["per_class"].size() == 2);
  CHECK(j.contains("provenance"));
  CHECK(j["average"]["r"].get<double>() ==
        doctest::Approx(rep.average.r / std::log(2.0)));

  const auto dir = scratch("report") / "nested";
  io::write_report(dir, rep, info::Units::nats);
  for (const char* f : {"report.csv", "summary.json", "timings.json"})
    CHECK(fs::is_regular_file(dir / f));
  const auto back = io::read_report_csv(dir / "report.csv", info::Units::nats);
  CHECK(back.size() == 200);
  CHECK(io::read_json(dir / "summary.json") ==
        io::summary_json(rep, info::Units::nats));
}

TEST_CASE("experiment documents are strict") {
  CHECK(error_text([] {
          experiment::parse_experiment(json{{"seed", 1}, {"sede", 2}});
        }).find("unknown key 'sede'") != std::string::npos);
  CHECK(error_text([] {
          experiment::parse_experiment(json::parse(
              R"({"gen":{"type":"logic","gate":"OR","noise":0.1}})"));
        }).find("gen.noise") != std::string::npos);
  CHECK(error_text([] {
          experiment::parse_experiment(json::parse(
              R"({"pipeline":{"density":{"components":4,"lr":0.1}}})"));
        }).find("pipeline.density.lr") != std::string::npos);

  const auto msg = error_text([] {
    experiment::parse_experiment(json::parse(
        R"({"gen":{"type":"preset","fractions":[0.5,0.5,0.5,0]}})"));
  });
  CHECK(msg.find("fractions") != std::string::npos);
  CHECK(kind_of([] {
          experiment::parse_experiment(json::parse(
              R"({"gen":{"type":"preset","fractions":[0.5,0.5,0.5,0]}})"));
        }) == ErrorKind::invalid_config);
  CHECK(kind_of([] {
          experiment::parse_experiment(json::parse(R"({"units":"hartleys"})"));
        }) == ErrorKind::invalid_config);
  CHECK(kind_of([] {
          experiment::parse_experiment(
              json::parse(R"({"oracle":{"gate":"OR","model":{}}})"));
        }) == ErrorKind::invalid_config);
  CHECK(kind_of([] {
          experiment::parse_experiment(
              json::parse(R"({"pipeline":{"train_fraction":1.5}})"));
        }) == ErrorKind::invalid_config);
  CHECK(kind_of([] {
          experiment::parse_experiment(json::parse(R"({"seed":"seven"})"));
        }) == ErrorKind::invalid_config);
}

TEST_CASE("seeds and overrides") {
  const auto doc = json::parse(R"({
    "seed": 3,
    "units": "nats",
    "gen": {"type": "logic", "gate": "XOR", "n": 50},
    "pipeline": {"seed": 9, "density": {"components": 4}}
  })");
  const auto c = experiment::parse_experiment(doc);
  CHECK(c.seed == 3);
  CHECK(std::get<synth::LogicConfig>(c.gen->base).seed == 3);
  CHECK(c.pipeline.seed == 9);
  CHECK(c.pipeline.density.components == 4);

  experiment::Overrides ov;
  ov.seed = 42;
  ov.units = info::Units::bits;
  ov.out = "elsewhere";
  const auto o = experiment::parse_experiment(doc, {}, ov);
  CHECK(o.seed == 42);
  CHECK(std::get<synth::LogicConfig>(o.gen->base).seed == 42);
  CHECK(o.pipeline.seed == 42);
  CHECK(o.pipeline.units == info::Units::bits);
  CHECK(o.out == fs::path("elsewhere"));

  const auto a = experiment::generate(*c.gen, 3);
  const auto b = experiment::generate(*c.gen, 3);
  CHECK(a.samples[17].x == b.samples[17].x);
}

TEST_CASE("per-modality density overrides use one-based keys") {
  const auto c = experiment::parse_pipeline(json::parse(
      R"({"density_per_modality":{"2":{"components":3}}})"));
  CHECK(c.density_per_modality.at(1).components == 3);
  CHECK(kind_of([] {
          experiment::parse_pipeline(
              json::parse(R"({"density_per_modality":{"0":{}}})"));
        }) == ErrorKind::invalid_config);
}

TEST_CASE("missing files are io errors") {
  CHECK(kind_of([] {
          experiment::parse_experiment(
              json{{"dataset", "/nonexistent/data.jsonl"}});
        }) == ErrorKind::io);
  experiment::Overrides ov;
  ov.a = "/nonexistent/a.csv";
  ov.b = "/nonexistent/b.csv";
  CHECK(kind_of([&] { experiment::parse_experiment(json::object(), {}, ov); }) ==
        ErrorKind::io);
  CHECK(kind_of([] { experiment::load_experiment("/nonexistent/cfg.json"); }) ==
        ErrorKind::io);

  const auto dir = scratch("badjson");
  io::write_text(dir / "cfg.json", "{ not json");
  CHECK(kind_of([&] { experiment::load_experiment(dir / "cfg.json"); }) ==
        ErrorKind::invalid_config);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto dir = scratch("relative");
  const auto ds = synth::gen_logic({oracle::Gate::OR, 20, 0.1, 1});
  io::write_dataset(dir / "d.jsonl", ds);
  io::write_text(dir / "cfg.json", R"({"dataset":"d.jsonl","out":"run"})");
  const auto c = experiment::load_experiment(dir / "cfg.json");
  CHECK(*c.dataset == dir / "d.jsonl");
  CHECK(c.out == dir / "run");
}

TEST_CASE("generated extras and corruption") {
  const auto spec = experiment::parse_gen(json::parse(R"({
    "type": "logic", "gate": "OR", "n": 400,
    "corrupt": {"p_flip": 1.0},
    "extra_modalities": [{"kind": "copy", "source": 2},
                         {"kind": "noise", "d": 3, "sigma": 0.5}]
  })"));
  const auto ds = experiment::generate(spec, 8);
  CHECK(ds.dims == std::vector<std::size_t>{1, 1, 1, 3});
  const auto clean = synth::gen_logic({oracle::Gate::OR, 400, 0.1, 8});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.samples[i].x[2] == ds.samples[i].x[1]);
    CHECK(ds.samples[i].y != clean.samples[i].y);
  }
}

TEST_CASE("oracle runs") {
  experiment::OracleSpec spec;
  spec.gate = oracle::Gate::XOR;
  const auto ev = experiment::run_oracle(spec, nullptr, 0);
  CHECK(ev.records.size() == 4);
  CHECK(ev.average.s == doctest::Approx(std::log(2.0)));
  CHECK(ev.average.r == doctest::Approx(0.0));

  experiment::OracleSpec one;
  one.model = gmm::MogModel({1.0}, {Eigen::VectorXd::Zero(2)},
                            {Eigen::MatrixXd::Identity(2, 2)}, 0.3);
  one.n = 500;
  const auto z = experiment::run_oracle(one, nullptr, 4);
  CHECK(z.records.size() == 500);
  for (const auto& r : z.records) {
    CHECK(r.profile.r == 0.0);
    CHECK(r.profile.s == 0.0);
  }
}

TEST_CASE("bench helpers") {
  std::vector<pipeline::BenchRow> rows{{2, "pointwise", 0.1},
                                       {2, "total", 0.5},
                                       {101, "total", 0.75}};
  CHECK(experiment::bench_ratio(rows) == doctest::Approx(1.5));
  CHECK(experiment::bench_csv(rows).rfind("K,stage,seconds\n2,pointwise,0.1\n",
                                          0) == 0);
  CHECK_THROWS_AS(experiment::bench_ratio({}), Error);
}
