#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lsmi/lsmi.h"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::string units;
  std::string dataset;
  std::string a, b;
};

struct ConfigDeleter {
  void operator()(lsmi_config* c) const { lsmi_config_free(c); }
};
struct DatasetDeleter {
  void operator()(lsmi_dataset* d) const { lsmi_dataset_free(d); }
};
struct ReportDeleter {
  void operator()(lsmi_report* r) const { lsmi_report_free(r); }
};
struct StringDeleter {
  void operator()(char* s) const { lsmi_string_free(s); }
};
using ConfigPtr = std::unique_ptr<lsmi_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<lsmi_dataset, DatasetDeleter>;
using ReportPtr = std::unique_ptr<lsmi_report, ReportDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

struct Failure {
  int code;
};

void check(lsmi_status st) {
  if (st == LSMI_OK) return;
  std::cerr << "lsmi: " << lsmi_last_error() << '\n';
  throw Failure{static_cast<int>(st)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "lsmi: " << msg << '\n';
  throw Failure{LSMI_ERR_CONFIG};
}

ConfigPtr load_config(const Common& c) {
  lsmi_overrides ov{};
  ov.has_seed = c.seed.has_value();
  ov.seed = c.seed.value_or(0);
  ov.units = c.units.empty() ? nullptr : c.units.c_str();
  ov.out = c.out.empty() ? nullptr : c.out.c_str();
  ov.dataset = c.dataset.empty() ? nullptr : c.dataset.c_str();
  ov.a = c.a.empty() ? nullptr : c.a.c_str();
  ov.b = c.b.empty() ? nullptr : c.b.c_str();
  lsmi_config* cfg = nullptr;
  if (c.config.empty())
    check(lsmi_config_parse("{}", nullptr, &ov, &cfg));
  else
    check(lsmi_config_load(c.config.c_str(), &ov, &cfg));
  return ConfigPtr(cfg);
}

fs::path out_dir(const lsmi_config* cfg) {
  const std::string out = lsmi_config_out(cfg);
  if (out.empty()) usage_error("no output directory (--out)");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "lsmi: cannot create " << out << '\n';
    throw Failure{LSMI_ERR_IO};
  }
  return out;
}

DatasetPtr load_dataset(const lsmi_config* cfg, bool required) {
  const std::string path = lsmi_config_dataset(cfg);
  if (path.empty()) {
    if (required) usage_error("no dataset (--dataset)");
    return nullptr;
  }
  lsmi_dataset* ds = nullptr;
  check(lsmi_dataset_read(path.c_str(), &ds));
  return DatasetPtr(ds);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "lsmi: cannot write " << path << '\n';
    throw Failure{LSMI_ERR_IO};
  }
}

void emit_reports(const lsmi_report* rep, const fs::path& dir,
                  const char* units) {
  const size_t count = lsmi_report_count(rep);
  for (size_t i = 0; i < count; ++i) {
    size_t a = 0, b = 0;
    check(lsmi_report_pair(rep, i, &a, &b));
    fs::path target = dir;
    if (count > 1) {
      target /= "pair_" + std::to_string(a) + "_" + std::to_string(b);
      std::cout << "modalities " << a << ", " << b << '\n';
    }
    check(lsmi_report_write(rep, i, target.c_str(), units));
    char* table = nullptr;
    check(lsmi_report_table(rep, i, units, &table));
    StringPtr hold(table);
    std::cout << table;
  }
}

int cmd_gen(const Common& c) {
  auto cfg = load_config(c);
  lsmi_dataset* raw = nullptr;
  check(lsmi_generate(cfg.get(), &raw));
  DatasetPtr ds(raw);
  fs::path target = lsmi_config_out(cfg.get());
  if (target.empty()) usage_error("no output path (--out)");
  if (target.extension() != ".jsonl") {
    target = out_dir(cfg.get()) / "dataset.jsonl";
  } else if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  check(lsmi_dataset_write(ds.get(), target.c_str()));
  std::cout << "wrote " << lsmi_dataset_size(ds.get()) << " samples to "
            << target.string() << '\n';
  return 0;
}

int cmd_estimate(const Common& c) {
  auto cfg = load_config(c);
  auto ds = load_dataset(cfg.get(), true);
  lsmi_report* raw = nullptr;
  check(lsmi_estimate(cfg.get(), ds.get(), &raw));
  ReportPtr rep(raw);
  emit_reports(rep.get(), out_dir(cfg.get()), lsmi_config_units(cfg.get()));
  return 0;
}

int cmd_oracle(const Common& c) {
  auto cfg = load_config(c);
  auto ds = load_dataset(cfg.get(), false);
  lsmi_report* raw = nullptr;
  check(lsmi_oracle(cfg.get(), ds.get(), &raw));
  ReportPtr rep(raw);
  emit_reports(rep.get(), out_dir(cfg.get()), lsmi_config_units(cfg.get()));
  return 0;
}

int cmd_compare(const Common& c) {
  if (c.config.empty() && (c.a.empty() || c.b.empty()))
    usage_error("compare needs --a and --b (or a config with a compare section)");
  auto cfg = load_config(c);
  const std::string units = lsmi_config_units(cfg.get());
  const std::string a = lsmi_config_compare_a(cfg.get());
  const std::string b = lsmi_config_compare_b(cfg.get());
  if (a.empty() || b.empty()) usage_error("compare needs --a and --b");
  char* summary = nullptr;
  char* table = nullptr;
  check(lsmi_compare_csv(a.c_str(), b.c_str(), units.c_str(), &summary,
                         &table));
  StringPtr hs(summary), ht(table);
  std::cout << table;
  if (std::string(lsmi_config_out(cfg.get())).empty()) return 0;
  write_file(out_dir(cfg.get()) / "compare.json", std::string(summary) + "\n");
  return 0;
}

int cmd_bench(const Common& c) {
  auto cfg = load_config(c);
  char* csv = nullptr;
  double ratio = 0.0;
  check(lsmi_bench(cfg.get(), &csv, &ratio));
  StringPtr hold(csv);
  std::cout << csv;
  std::printf("ratio %.3f\n", ratio);
  if (!std::string(lsmi_config_out(cfg.get())).empty())
    write_file(out_dir(cfg.get()) / "bench.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample-wise multimodal interaction estimation"};
  app.require_subcommand(1);
  Common c;
  uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "experiment JSON document");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", seed, "master seed (replaces every seed)");
    sub->add_option("--units", c.units, "nats or bits")
        ->check(CLI::IsMember({"nats", "bits"}));
  };
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen);
  auto* est = app.add_subcommand("estimate", "estimate interactions");
  add_common(est);
  est->add_option("--dataset", c.dataset, "JSONL dataset");
  auto* orc = app.add_subcommand("oracle", "exact interactions");
  add_common(orc);
  orc->add_option("--dataset", c.dataset, "JSONL dataset");
  auto* cmp = app.add_subcommand("compare", "compare two report CSVs");
  add_common(cmp);
  cmp->add_option("--a", c.a, "first report CSV");
  cmp->add_option("--b", c.b, "second report CSV");
  auto* bench = app.add_subcommand("bench", "time the pipeline across K");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return LSMI_ERR_CONFIG;
  }
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed") > 0) c.seed = seed;

  try {
    if (*gen) return cmd_gen(c);
    if (*est) return cmd_estimate(c);
    if (*orc) return cmd_oracle(c);
    if (*cmp) return cmd_compare(c);
    if (*bench) return cmd_bench(c);
  } catch (const Failure& f) {
    return f.code;
  }
  return LSMI_ERR_CONFIG;
}
