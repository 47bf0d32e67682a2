#include "lsmi/lsmi.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "lsmi/error.hpp"
#include "lsmi/experiment.hpp"
#include "lsmi/io.hpp"

using namespace lsmi;

struct lsmi_config {
  experiment::ExperimentConfig cfg;
  std::string out, dataset, units, a, b;
};

struct lsmi_dataset {
  Dataset ds;
};

struct lsmi_report {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<pipeline::RunReport> reports;
};

namespace {

thread_local std::string last_error;

lsmi_status status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::io:
      return LSMI_ERR_IO;
    case ErrorKind::training_diverged:
      return LSMI_ERR_NUMERIC;
    default:
      return LSMI_ERR_CONFIG;
  }
}

template <class F>
lsmi_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return LSMI_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return LSMI_ERR_CONFIG;
  } catch (const std::exception& e) {
    last_error = e.what();
    return LSMI_ERR_NUMERIC;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorKind::invalid_input, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

info::Units units_or(const char* units, info::Units fallback) {
  return units ? info::parse_units(units) : fallback;
}

const pipeline::RunReport& pick(const lsmi_report* rep, std::size_t index) {
  need(rep, "report");
  if (index >= rep->reports.size())
    fail(ErrorKind::invalid_input, "report index out of range");
  return rep->reports[index];
}

experiment::Overrides convert(const lsmi_overrides* o) {
  experiment::Overrides ov;
  if (!o) return ov;
  if (o->has_seed) ov.seed = o->seed;
  if (o->units) ov.units = info::parse_units(o->units);
  if (o->out) ov.out = o->out;
  if (o->dataset) ov.dataset = o->dataset;
  if (o->a) ov.a = o->a;
  if (o->b) ov.b = o->b;
  return ov;
}

lsmi_config* wrap(experiment::ExperimentConfig cfg) {
  auto* c = new lsmi_config{std::move(cfg), {}, {}, {}, {}, {}};
  c->out = c->cfg.out.string();
  c->dataset = c->cfg.dataset ? c->cfg.dataset->string() : "";
  c->units = std::string(info::units_name(c->cfg.units));
  if (c->cfg.compare) {
    c->a = c->cfg.compare->a.string();
    c->b = c->cfg.compare->b.string();
  }
  return c;
}

}  // namespace

extern "C" {

const char* lsmi_version(void) { return "1.0.0"; }

const char* lsmi_last_error(void) { return last_error.c_str(); }

void lsmi_string_free(char* s) { std::free(s); }

lsmi_status lsmi_config_load(const char* path, const lsmi_overrides* overrides,
                             lsmi_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(experiment::load_experiment(path, convert(overrides)));
  });
}

lsmi_status lsmi_config_parse(const char* json_text, const char* base_dir,
                              const lsmi_overrides* overrides,
                              lsmi_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::invalid_config, e.what());
    }
    *out = wrap(experiment::parse_experiment(
        doc, base_dir ? base_dir : "", convert(overrides)));
  });
}

void lsmi_config_free(lsmi_config* cfg) { delete cfg; }

const char* lsmi_config_out(const lsmi_config* cfg) {
  return cfg ? cfg->out.c_str() : "";
}

const char* lsmi_config_dataset(const lsmi_config* cfg) {
  return cfg ? cfg->dataset.c_str() : "";
}

const char* lsmi_config_units(const lsmi_config* cfg) {
  return cfg ? cfg->units.c_str() : "nats";
}

const char* lsmi_config_compare_a(const lsmi_config* cfg) {
  return cfg ? cfg->a.c_str() : "";
}

const char* lsmi_config_compare_b(const lsmi_config* cfg) {
  return cfg ? cfg->b.c_str() : "";
}

lsmi_status lsmi_generate(const lsmi_config* cfg, lsmi_dataset** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    if (!cfg->cfg.gen)
      fail(ErrorKind::invalid_config, "config has no gen section");
    *out = new lsmi_dataset{experiment::generate(*cfg->cfg.gen, cfg->cfg.seed)};
  });
}

lsmi_status lsmi_dataset_read(const char* path, lsmi_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new lsmi_dataset{io::read_dataset(path)};
  });
}

lsmi_status lsmi_dataset_write(const lsmi_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    io::write_dataset(path, ds->ds);
  });
}

lsmi_status lsmi_dataset_corrupt(const lsmi_dataset* ds, double p_flip,
                                 uint64_t seed, lsmi_dataset** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = new lsmi_dataset{synth::corrupt_labels(ds->ds, p_flip, seed)};
  });
}

size_t lsmi_dataset_size(const lsmi_dataset* ds) {
  return ds ? ds->ds.size() : 0;
}

size_t lsmi_dataset_modalities(const lsmi_dataset* ds) {
  return ds ? ds->ds.modalities() : 0;
}

int lsmi_dataset_classes(const lsmi_dataset* ds) {
  return ds ? ds->ds.num_classes : 0;
}

void lsmi_dataset_free(lsmi_dataset* ds) { delete ds; }

lsmi_status lsmi_estimate(const lsmi_config* cfg, const lsmi_dataset* ds,
                          lsmi_report** out) {
  return guarded([&] {
    need(cfg, "config");
    need(ds, "dataset");
    need(out, "out");
    auto rep = std::make_unique<lsmi_report>();
    if (ds->ds.modalities() == 2) {
      rep->pairs.emplace_back(1, 2);
      rep->reports.push_back(pipeline::run_lsmi(ds->ds, cfg->cfg.pipeline));
    } else {
      for (auto& [pair, r] :
           pipeline::run_pairwise(ds->ds, cfg->cfg.pipeline)) {
        rep->pairs.emplace_back(pair.first + 1, pair.second + 1);
        rep->reports.push_back(std::move(r));
      }
    }
    *out = rep.release();
  });
}

lsmi_status lsmi_oracle(const lsmi_config* cfg, const lsmi_dataset* ds,
                        lsmi_report** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    if (!cfg->cfg.oracle)
      fail(ErrorKind::invalid_config, "config has no oracle section");
    auto rep = std::make_unique<lsmi_report>();
    rep->pairs.emplace_back(1, 2);
    rep->reports.push_back(experiment::run_oracle(
        *cfg->cfg.oracle, ds ? &ds->ds : nullptr, cfg->cfg.seed));
    *out = rep.release();
  });
}

void lsmi_report_free(lsmi_report* rep) { delete rep; }

size_t lsmi_report_count(const lsmi_report* rep) {
  return rep ? rep->reports.size() : 0;
}

lsmi_status lsmi_report_pair(const lsmi_report* rep, size_t index, size_t* a,
                             size_t* b) {
  return guarded([&] {
    pick(rep, index);
    need(a, "a");
    need(b, "b");
    *a = rep->pairs[index].first;
    *b = rep->pairs[index].second;
  });
}

lsmi_status lsmi_report_average(const lsmi_report* rep, size_t index,
                                const char* units, lsmi_profile* out) {
  return guarded([&] {
    const auto& r = pick(rep, index);
    need(out, "out");
    const auto p = info::convert_units(r.average, info::Units::nats,
                                       units_or(units, info::Units::nats));
    *out = {p.r, p.u1, p.u2, p.s};
  });
}

size_t lsmi_report_size(const lsmi_report* rep, size_t index) {
  if (!rep || index >= rep->reports.size()) return 0;
  return rep->reports[index].records.size();
}

lsmi_status lsmi_report_record(const lsmi_report* rep, size_t index,
                               size_t row, lsmi_record* out) {
  return guarded([&] {
    const auto& r = pick(rep, index);
    need(out, "out");
    if (row >= r.records.size())
      fail(ErrorKind::invalid_input, "record row out of range");
    const auto& x = r.records[row];
    *out = {x.id,         x.y,         x.profile.r,       x.profile.u1,
            x.profile.u2, x.profile.s, x.info.i1,         x.info.i2,
            x.info.i12,   x.info.h1,   x.info.h2,         x.info.h1_given_y,
            x.info.h2_given_y};
  });
}

lsmi_status lsmi_report_write(const lsmi_report* rep, size_t index,
                              const char* dir, const char* units) {
  return guarded([&] {
    const auto& r = pick(rep, index);
    need(dir, "dir");
    io::write_report(dir, r, units_or(units, info::Units::nats));
  });
}

lsmi_status lsmi_report_summary_json(const lsmi_report* rep, size_t index,
                                     const char* units, char** out) {
  return guarded([&] {
    const auto& r = pick(rep, index);
    need(out, "out");
    *out = dup(io::summary_json(r, units_or(units, info::Units::nats)).dump(2));
  });
}

lsmi_status lsmi_report_table(const lsmi_report* rep, size_t index,
                              const char* units, char** out) {
  return guarded([&] {
    const auto& r = pick(rep, index);
    need(out, "out");
    *out = dup(io::profile_table(r.average, units_or(units, info::Units::nats)));
  });
}

lsmi_status lsmi_compare_csv(const char* a, const char* b, const char* units,
                             char** summary_json, char** table) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    const auto u = units_or(units, info::Units::nats);
    const auto e = experiment::compare_csv(a, b, u);
    auto scaled = e;
    const double f = info::units_factor(u);
    for (auto* c : {&scaled.r, &scaled.u1, &scaled.u2, &scaled.s}) {
      c->mad *= f;
      c->bias *= f;
      c->max_abs *= f;
    }
    auto j = pipeline::to_json(scaled);
    j["units"] = info::units_name(u);
    if (summary_json) *summary_json = dup(j.dump(2));
    if (table) *table = dup(experiment::error_table(e, u));
  });
}

lsmi_status lsmi_bench(const lsmi_config* cfg, char** csv, double* ratio) {
  return guarded([&] {
    need(cfg, "config");
    auto bc = cfg->cfg.bench ? *cfg->cfg.bench : pipeline::BenchConfig{};
    if (!cfg->cfg.bench) bc.seed = cfg->cfg.seed;
    const auto rows = pipeline::benchmark(bc);
    if (csv) *csv = dup(experiment::bench_csv(rows));
    if (ratio) *ratio = experiment::bench_ratio(rows);
  });
}

}  // extern "C"
