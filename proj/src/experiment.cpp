#include "lsmi/experiment.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "lsmi/error.hpp"
#include "lsmi/io.hpp"

namespace lsmi::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Strict view of a JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    require(j.is_object(), ErrorKind::invalid_config,
            ctx_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    require(has(key), ErrorKind::invalid_config,
            field(key) + " is required");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const auto& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::invalid_config, field(key) + " has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  std::string field(const std::string& key) const {
    return ctx_.empty() ? key : ctx_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      require(used_.count(k) > 0, ErrorKind::invalid_config,
              "unknown key '" + field(k) + "'");
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> used_;
};

std::size_t get_count(Section& s, const std::string& key, std::size_t def) {
  if (!s.has(key)) return def;
  const auto v = s.get<std::int64_t>(key);
  require(v > 0, ErrorKind::invalid_config, s.field(key) + " must be positive");
  return static_cast<std::size_t>(v);
}

gmm::MogModel model_at(Section& s, const std::string& key) {
  try {
    return gmm::mog_from_json(s.at(key));
  } catch (const Error& e) {
    fail(ErrorKind::invalid_config, s.field(key) + ": " + e.what());
  }
}

density::TrainConfig parse_density(const json& doc, const std::string& ctx) {
  Section s(doc, ctx);
  density::TrainConfig c;
  c.components = get_count(s, "components", c.components);
  c.steps = get_count(s, "steps", c.steps);
  c.batch = get_count(s, "batch", c.batch);
  c.learning_rate = s.get<double>("learning_rate", c.learning_rate);
  c.seed = s.get<std::uint64_t>("seed", c.seed);
  if (s.has("init")) c.init = density::parse_init(s.get<std::string>("init"));
  s.finish();
  density::validate(c);
  return c;
}

disc::ClassifierConfig parse_classifier(const json& doc,
                                        const std::string& ctx) {
  Section s(doc, ctx);
  disc::ClassifierConfig c;
  if (s.has("hidden")) {
    const auto h = s.get<std::int64_t>("hidden");
    require(h >= 0, ErrorKind::invalid_config,
            s.field("hidden") + " must be non-negative");
    c.hidden = static_cast<std::size_t>(h);
  }
  c.steps = get_count(s, "steps", c.steps);
  c.batch = get_count(s, "batch", c.batch);
  c.learning_rate = s.get<double>("learning_rate", c.learning_rate);
  c.weight_decay = s.get<double>("weight_decay", c.weight_decay);
  c.seed = s.get<std::uint64_t>("seed", c.seed);
  s.finish();
  disc::validate(c);
  return c;
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

void require_file(const fs::path& p, const std::string& what) {
  require(fs::is_regular_file(p), ErrorKind::io,
          what + " not found: " + p.string());
}

std::uint64_t section_seed(const json& doc) {
  return doc.is_object() && doc.contains("seed") && doc["seed"].is_number()
             ? doc["seed"].get<std::uint64_t>()
             : 0;
}

}  // namespace

GenSpec parse_gen(const json& doc) {
  Section s(doc, "gen");
  GenSpec spec;
  const auto type = s.get<std::string>("type");
  if (type == "logic") {
    synth::LogicConfig c;
    c.gate = oracle::parse_gate(s.get<std::string>("gate"));
    c.n = get_count(s, "n", c.n);
    c.noise_sigma = s.get<double>("noise_sigma", c.noise_sigma);
    synth::validate(c);
    spec.base = c;
  } else if (type == "mog") {
    synth::MogConfig c{model_at(s, "model"), 20000, 0};
    c.n = get_count(s, "n", c.n);
    spec.base = c;
  } else if (type == "preset") {
    synth::PresetConfig c;
    if (s.has("fractions")) {
      const auto f = s.get<std::vector<double>>("fractions");
      require(f.size() == 4, ErrorKind::invalid_config,
              "gen.fractions must have 4 entries (R, U1, U2, S)");
      std::copy(f.begin(), f.end(), c.fractions.begin());
    }
    c.d = get_count(s, "d", c.d);
    c.noise_sigma = s.get<double>("noise_sigma", c.noise_sigma);
    c.distractor_sigma =
        s.get<double>("distractor_sigma", c.noise_sigma / 5.0);
    c.n = get_count(s, "n", c.n);
    try {
      synth::validate(c);
    } catch (const Error& e) {
      fail(ErrorKind::invalid_config, std::string("gen: ") + e.what());
    }
    spec.base = c;
  } else {
    fail(ErrorKind::invalid_config,
         "gen.type must be \"logic\", \"mog\" or \"preset\"");
  }
  s.has("seed");
  if (s.has("corrupt")) {
    Section c(s.at("corrupt"), "gen.corrupt");
    Corruption k{c.get<double>("p_flip")};
    require(k.p_flip >= 0.0 && k.p_flip <= 1.0, ErrorKind::invalid_config,
            "gen.corrupt.p_flip must lie in [0, 1]");
    c.finish();
    spec.corrupt = k;
  }
  if (s.has("extra_modalities")) {
    const auto& arr = s.at("extra_modalities");
    require(arr.is_array(), ErrorKind::invalid_config,
            "gen.extra_modalities must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section e(arr[i], "gen.extra_modalities[" + std::to_string(i) + "]");
      ExtraModality m;
      const auto kind = e.get<std::string>("kind");
      if (kind == "copy") {
        m.kind = ExtraModality::Kind::copy;
        m.source = get_count(e, "source", 1);
      } else if (kind == "noise") {
        m.kind = ExtraModality::Kind::noise;
        m.d = get_count(e, "d", 1);
        m.sigma = e.get<double>("sigma", 1.0);
        require(m.sigma > 0.0, ErrorKind::invalid_config,
                e.field("sigma") + " must be positive");
      } else {
        fail(ErrorKind::invalid_config,
             e.field("kind") + " must be \"copy\" or \"noise\"");
      }
      e.finish();
      spec.extra_modalities.push_back(m);
    }
  }
  s.finish();
  return spec;
}

pipeline::PipelineConfig parse_pipeline(const json& doc) {
  Section s(doc, "pipeline");
  pipeline::PipelineConfig c;
  if (s.has("posterior"))
    c.posterior =
        pipeline::parse_posterior_source(s.get<std::string>("posterior"));
  if (s.has("density")) c.density = parse_density(s.at("density"), "pipeline.density");
  if (s.has("density_per_modality")) {
    Section per(s.at("density_per_modality"), "pipeline.density_per_modality");
    for (const auto& [k, v] : s.at("density_per_modality").items()) {
      std::size_t m = 0;
      try {
        m = std::stoul(k);
      } catch (const std::exception&) {
        fail(ErrorKind::invalid_config,
             per.field(k) + ": keys are one-based modality numbers");
      }
      require(m >= 1, ErrorKind::invalid_config,
              per.field(k) + ": keys are one-based modality numbers");
      per.has(k);
      c.density_per_modality[m - 1] = parse_density(v, per.field(k));
    }
    per.finish();
  }
  if (s.has("discriminator"))
    c.discriminator =
        parse_classifier(s.at("discriminator"), "pipeline.discriminator");
  c.train_fraction = s.get<double>("train_fraction", c.train_fraction);
  if (s.has("model")) c.model = model_at(s, "model");
  s.has("seed");
  s.finish();
  pipeline::validate(c);
  return c;
}

OracleSpec parse_oracle(const json& doc) {
  Section s(doc, "oracle");
  OracleSpec spec;
  int given = 0;
  if (s.has("gate")) {
    try {
      spec.gate = oracle::parse_gate(s.get<std::string>("gate"));
    } catch (const Error& e) {
      fail(ErrorKind::invalid_config, std::string("oracle.gate: ") + e.what());
    }
    ++given;
  }
  if (s.has("joint")) {
    try {
      spec.joint = oracle::joint_from_json(s.at("joint"));
    } catch (const Error& e) {
      fail(ErrorKind::invalid_config, std::string("oracle.joint: ") + e.what());
    }
    ++given;
  }
  if (s.has("model")) {
    spec.model = model_at(s, "model");
    ++given;
  }
  require(given == 1, ErrorKind::invalid_config,
          "oracle needs exactly one of gate, joint or model");
  spec.n = get_count(s, "n", spec.n);
  s.has("seed");
  s.finish();
  return spec;
}

pipeline::BenchConfig parse_bench(const json& doc) {
  Section s(doc, "bench");
  pipeline::BenchConfig c;
  if (s.has("classes")) {
    c.class_counts = s.get<std::vector<int>>("classes");
    require(!c.class_counts.empty(), ErrorKind::invalid_config,
            "bench.classes must not be empty");
    for (int k : c.class_counts)
      require(k >= 2, ErrorKind::invalid_config,
              "bench.classes entries must be at least 2");
  }
  c.n = get_count(s, "n", c.n);
  c.d = get_count(s, "d", c.d);
  c.rho = s.get<double>("rho", c.rho);
  require(c.rho >= -1.0 && c.rho <= 1.0, ErrorKind::invalid_config,
          "bench.rho must lie in [-1, 1]");
  if (s.has("density"))
    c.pipeline.density = parse_density(s.at("density"), "bench.density");
  s.has("seed");
  s.finish();
  return c;
}

ExperimentConfig parse_experiment(const json& doc, const fs::path& base_dir,
                                  const Overrides& ov) {
  Section s(doc, "");
  ExperimentConfig c;
  c.source = doc;
  c.seed = s.get<std::uint64_t>("seed", 0);
  if (s.has("units")) c.units = info::parse_units(s.get<std::string>("units"));
  if (s.has("out")) c.out = resolve(s.get<std::string>("out"), base_dir);
  if (s.has("dataset"))
    c.dataset = resolve(s.get<std::string>("dataset"), base_dir);

  // Section seeds fall back to the global seed; --seed replaces all of them.
  auto seed_for = [&](const char* key) {
    if (ov.seed) return *ov.seed;
    const auto& sec = doc.contains(key) ? doc[key] : json();
    return sec.is_object() && sec.contains("seed") ? section_seed(sec)
                                                   : c.seed;
  };
  if (ov.seed) c.seed = *ov.seed;

  if (s.has("gen")) {
    c.gen = parse_gen(s.at("gen"));
    const auto seed = seed_for("gen");
    std::visit([&](auto& g) { g.seed = seed; }, c.gen->base);
  }
  if (s.has("pipeline")) c.pipeline = parse_pipeline(s.at("pipeline"));
  c.pipeline.seed = seed_for("pipeline");
  c.pipeline.units = c.units;
  if (s.has("oracle")) c.oracle = parse_oracle(s.at("oracle"));
  if (s.has("compare")) {
    Section k(s.at("compare"), "compare");
    c.compare = CompareSpec{resolve(k.get<std::string>("a"), base_dir),
                            resolve(k.get<std::string>("b"), base_dir)};
    k.finish();
  }
  if (s.has("bench")) {
    c.bench = parse_bench(s.at("bench"));
    c.bench->seed = seed_for("bench");
  }
  s.finish();

  if (ov.units) {
    c.units = *ov.units;
    c.pipeline.units = *ov.units;
  }
  if (ov.out) c.out = *ov.out;
  if (ov.dataset) c.dataset = *ov.dataset;
  if (ov.a || ov.b) {
    if (!c.compare) c.compare = CompareSpec{};
    if (ov.a) c.compare->a = *ov.a;
    if (ov.b) c.compare->b = *ov.b;
  }
  if (c.dataset) require_file(*c.dataset, "dataset");
  if (c.compare) {
    require_file(c.compare->a, "report");
    require_file(c.compare->b, "report");
  }
  return c;
}

ExperimentConfig load_experiment(const fs::path& path, const Overrides& ov) {
  const auto doc = io::read_json(path);
  return parse_experiment(doc, path.parent_path(), ov);
}

Dataset generate(const GenSpec& spec, std::uint64_t seed) {
  Dataset ds = std::visit(
      [&](auto cfg) -> Dataset {
        cfg.seed = seed;
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, synth::LogicConfig>)
          return synth::gen_logic(cfg);
        else if constexpr (std::is_same_v<T, synth::MogConfig>)
          return synth::gen_mog(cfg);
        else
          return synth::gen_preset(cfg);
      },
      spec.base);
  if (spec.corrupt) ds = synth::corrupt_labels(ds, spec.corrupt->p_flip, seed);
  for (std::size_t i = 0; i < spec.extra_modalities.size(); ++i) {
    const auto& m = spec.extra_modalities[i];
    if (m.kind == ExtraModality::Kind::copy) {
      require(m.source <= ds.modalities(), ErrorKind::invalid_config,
              "gen.extra_modalities copy source out of range");
      ds = synth::append_copy_modality(ds, m.source - 1);
    } else {
      ds = synth::append_noise_modality(ds, m.d, m.sigma, seed + i);
    }
  }
  return ds;
}

namespace {

pipeline::RunReport finish_report(std::vector<pipeline::SampleRecord> records,
                                  std::optional<info::InteractionProfile> avg,
                                  json provenance) {
  pipeline::RunReport report;
  std::vector<info::InteractionProfile> profiles;
  std::vector<int> labels;
  for (const auto& r : records) {
    profiles.push_back(r.profile);
    labels.push_back(r.y);
  }
  report.average = avg ? *avg : info::aggregate(profiles);
  report.per_class = info::aggregate_by_class(profiles, labels);
  report.records = std::move(records);
  report.provenance = std::move(provenance);
  return report;
}

}  // namespace

pipeline::RunReport run_oracle(const OracleSpec& spec, const Dataset* ds,
                               std::uint64_t seed) {
  if (spec.gate || spec.joint) {
    const auto joint =
        spec.joint ? *spec.joint : oracle::logic_gate_joint(*spec.gate);
    const auto exact = oracle::exact_lsmi(joint);
    json prov = {{"oracle", spec.gate ? "gate" : "joint"},
                 {"joint", oracle::to_json(joint)}};
    if (spec.gate) prov["gate"] = oracle::gate_name(*spec.gate);
    std::vector<pipeline::SampleRecord> records;
    if (!ds) {
      prov["records"] = "events";
      for (std::size_t i = 0; i < exact.events.size(); ++i) {
        const auto& e = exact.events[i];
        records.push_back({static_cast<std::int64_t>(i), static_cast<int>(e.event.y), e.profile,
                           e.info});
      }
      return finish_report(std::move(records), exact.average, prov);
    }
    prov["records"] = "samples";
    prov["dataset"] = ds->provenance;
    require(ds->modalities() == 2 && ds->dims[0] == 1 && ds->dims[1] == 1,
            ErrorKind::invalid_input,
            "event rounding needs two one-dimensional modalities");
    for (const auto& s : ds->samples) {
      auto ev = synth::round_to_event(s);
      ev.y = s.y;
      const auto info = oracle::pointwise_info(joint, ev);
      records.push_back({s.id, s.y, info::decompose(info), info});
    }
    return finish_report(std::move(records), std::nullopt, prov);
  }

  require(spec.model.has_value(), ErrorKind::invalid_config,
          "oracle needs a gate, joint or model");
  const auto& model = *spec.model;
  Dataset drawn;
  if (!ds) {
    drawn = synth::gen_mog({model, spec.n, seed});
    ds = &drawn;
  }
  const auto exact = gmm::analytic_lsmi(model, *ds);
  std::vector<pipeline::SampleRecord> records;
  for (std::size_t i = 0; i < ds->size(); ++i)
    records.push_back({ds->samples[i].id, ds->samples[i].y, exact.profiles[i],
                       exact.pointwise[i]});
  json prov = {{"oracle", "model"},
               {"model", gmm::to_json(model)},
               {"records", "samples"},
               {"dataset", ds->provenance}};
  return finish_report(std::move(records), std::nullopt, prov);
}

pipeline::ErrorSummary compare_csv(const fs::path& a, const fs::path& b,
                                   info::Units units) {
  const auto ra = io::read_report_csv(a, units);
  const auto rb = io::read_report_csv(b, units);
  return pipeline::compare_records(ra, rb);
}

std::string error_table(const pipeline::ErrorSummary& e, info::Units units) {
  const double f = info::units_factor(units);
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "n " << e.n << ", units " << info::units_name(units) << '\n';
  os << std::setw(6) << "" << std::setw(10) << "MAD" << std::setw(10)
     << "bias" << std::setw(10) << "max" << '\n';
  const std::pair<const char*, const pipeline::ComponentError*> rows[] = {
      {"R", &e.r}, {"U1", &e.u1}, {"U2", &e.u2}, {"S", &e.s}};
  for (const auto& [name, c] : rows)
    os << std::setw(6) << name << std::setw(10) << c->mad * f << std::setw(10)
       << c->bias * f << std::setw(10) << c->max_abs * f << '\n';
  return os.str();
}

std::string bench_csv(const std::vector<pipeline::BenchRow>& rows) {
  std::ostringstream os;
  os << "K,stage,seconds\n";
  for (const auto& r : rows)
    os << r.classes << ',' << r.stage << ',' << io::format_double(r.seconds)
       << '\n';
  return os.str();
}

double bench_ratio(const std::vector<pipeline::BenchRow>& rows) {
  int kmin = 0, kmax = 0;
  double tmin = 0.0, tmax = 0.0;
  bool first = true;
  for (const auto& r : rows) {
    if (r.stage != "total") continue;
    if (first || r.classes < kmin) {
      kmin = r.classes;
      tmin = r.seconds;
    }
    if (first || r.classes > kmax) {
      kmax = r.classes;
      tmax = r.seconds;
    }
    first = false;
  }
  require(!first && tmin > 0.0, ErrorKind::invalid_input,
          "benchmark has no total rows");
  return tmax / tmin;
}

}  // namespace lsmi::experiment
