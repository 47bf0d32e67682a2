#pragma once

// File formats: JSONL datasets, per-sample report CSV, summary and timing
// JSON documents.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsmi/dataset.hpp"
#include "lsmi/info_core.hpp"
#include "lsmi/pipeline.hpp"

namespace lsmi::io {

inline constexpr int kSchema = 1;
inline constexpr const char* kReportHeader =
    "id,y,r,u1,u2,s,i1,i2,i12,h1,h2,h1y,h2y";

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// First line: {"schema":1,"dims":[..],"K":..,"n":..,"provenance":{..}}.
/// Then one {"id","y","x1","x2",..,"tag"} object per line.
void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

/// Values are converted from nats to `units`.
void write_report_csv(std::ostream& os,
                      const std::vector<pipeline::SampleRecord>& records,
                      info::Units units);
/// Values are converted from `units` back to nats.
std::vector<pipeline::SampleRecord> read_report_csv(std::istream& is,
                                                    info::Units units);
std::vector<pipeline::SampleRecord> read_report_csv(
    const std::filesystem::path& path, info::Units units);

nlohmann::json summary_json(const pipeline::RunReport& report,
                            info::Units units);
nlohmann::json timings_json(const pipeline::RunReport& report);

/// Writes report.csv, summary.json and timings.json into `dir`.
void write_report(const std::filesystem::path& dir,
                  const pipeline::RunReport& report, info::Units units);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Fixed-width R/U1/U2/S table.
std::string profile_table(const info::InteractionProfile& p,
                          info::Units units);

}  // namespace lsmi::io
