#include "lsmi/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lsmi/error.hpp"

namespace lsmi::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(),
          ErrorKind::invalid_input,
          "line " + std::to_string(line) + ": bad number '" + std::string(s) +
              "'");
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(),
          ErrorKind::invalid_input,
          "line " + std::to_string(line) + ": bad integer '" + std::string(s) +
              "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::invalid_input,
         "line " + std::to_string(lineno) + ": " + e.what());
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return in;
}

json profile_json(const info::InteractionProfile& p, info::Units units) {
  const auto q = info::convert_units(p, info::Units::nats, units);
  return {{"r", q.r}, {"u1", q.u1}, {"u2", q.u2}, {"s", q.s}};
}

}  // namespace

void write_dataset(std::ostream& os, const Dataset& ds) {
  ds.validate();
  json header = {{"schema", kSchema},
                 {"dims", ds.dims},
                 {"K", ds.num_classes},
                 {"n", ds.size()},
                 {"provenance", ds.provenance}};
  os << header.dump() << '\n';
  for (const auto& s : ds.samples) {
    json j = {{"id", s.id}, {"y", s.y}};
    for (std::size_t m = 0; m < s.x.size(); ++m)
      j["x" + std::to_string(m + 1)] = s.x[m];
    if (!s.tag.empty()) j["tag"] = s.tag;
    os << j.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input,
          "dataset is empty");
  const json header = parse_line(line, 1);
  require(header.is_object() && header.value("schema", 0) == kSchema,
          ErrorKind::invalid_input, "dataset header lacks schema 1");
  Dataset ds;
  try {
    ds.dims = header.at("dims").get<std::vector<std::size_t>>();
    ds.num_classes = header.at("K").get<int>();
    ds.provenance = header.value("provenance", json::object());
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("dataset header: ") + e.what());
  }
  require(!ds.dims.empty(), ErrorKind::invalid_input,
          "dataset header has no modalities");
  const std::size_t m_count = ds.dims.size();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse_line(line, lineno);
    const auto where = "line " + std::to_string(lineno) + ": ";
    require(j.is_object(), ErrorKind::invalid_input, where + "not an object");
    Sample s;
    try {
      s.id = j.at("id").get<std::int64_t>();
      s.y = j.at("y").get<int>();
      s.x.resize(m_count);
      for (std::size_t m = 0; m < m_count; ++m) {
        s.x[m] = j.at("x" + std::to_string(m + 1)).get<std::vector<double>>();
        require(s.x[m].size() == ds.dims[m], ErrorKind::invalid_input,
                where + "x" + std::to_string(m + 1) + " has " +
                    std::to_string(s.x[m].size()) + " values, header says " +
                    std::to_string(ds.dims[m]));
      }
      if (j.contains("tag")) s.tag = j.at("tag").get<std::string>();
    } catch (const json::exception& e) {
      fail(ErrorKind::invalid_input, where + e.what());
    }
    require(j.size() == 2 + m_count + (j.contains("tag") ? 1 : 0),
            ErrorKind::invalid_input, where + "unexpected keys");
    ds.samples.push_back(std::move(s));
  }
  if (header.contains("n"))
    require(header["n"].get<std::size_t>() == ds.size(),
            ErrorKind::invalid_input,
            "dataset header n does not match the number of rows");
  ds.validate();
  return ds;
}

void write_dataset(const fs::path& path, const Dataset& ds) {
  std::ostringstream os;
  write_dataset(os, ds);
  write_text(path, os.str());
}

Dataset read_dataset(const fs::path& path) {
  auto in = open_in(path);
  return read_dataset(in);
}

void write_report_csv(std::ostream& os,
                      const std::vector<pipeline::SampleRecord>& records,
                      info::Units units) {
  const double f = info::units_factor(units);
  os << kReportHeader << '\n';
  for (const auto& r : records) {
    const auto& p = r.profile;
    const auto& q = r.info;
    os << r.id << ',' << r.y;
    for (double v : {p.r, p.u1, p.u2, p.s, q.i1, q.i2, q.i12, q.h1, q.h2,
                     q.h1_given_y, q.h2_given_y})
      os << ',' << format_double(v * f);
    os << '\n';
  }
}

std::vector<pipeline::SampleRecord> read_report_csv(std::istream& is,
                                                    info::Units units) {
  const double f = 1.0 / info::units_factor(units);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line == kReportHeader,
          ErrorKind::invalid_input,
          std::string("report CSV header must be exactly ") + kReportHeader);
  std::vector<pipeline::SampleRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == 13, ErrorKind::invalid_input,
            "line " + std::to_string(lineno) + ": expected 13 columns");
    pipeline::SampleRecord r;
    r.id = parse_int(cells[0], lineno);
    r.y = static_cast<int>(parse_int(cells[1], lineno));
    double v[11];
    for (int k = 0; k < 11; ++k) v[k] = parse_double(cells[k + 2], lineno) * f;
    r.profile = {v[0], v[1], v[2], v[3]};
    r.info.i1 = v[4];
    r.info.i2 = v[5];
    r.info.i12 = v[6];
    r.info.h1 = v[7];
    r.info.h2 = v[8];
    r.info.h1_given_y = v[9];
    r.info.h2_given_y = v[10];
    out.push_back(r);
  }
  return out;
}

std::vector<pipeline::SampleRecord> read_report_csv(const fs::path& path,
                                                    info::Units units) {
  auto in = open_in(path);
  return read_report_csv(in, units);
}

json summary_json(const pipeline::RunReport& report, info::Units units) {
  json per_class = json::object();
  for (const auto& [k, p] : report.per_class)
    per_class[std::to_string(k)] = profile_json(p, units);
  return {{"schema", kSchema},
          {"units", info::units_name(units)},
          {"n", report.records.size()},
          {"average", profile_json(report.average, units)},
          {"per_class", per_class},
          {"provenance", report.provenance}};
}

json timings_json(const pipeline::RunReport& report) {
  json stages = json::array();
  for (const auto& t : report.timings)
    stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  return {{"schema", kSchema},
          {"stages", stages},
          {"total_seconds", report.total_seconds()}};
}

void write_report(const fs::path& dir, const pipeline::RunReport& report,
                  info::Units units) {
  std::ostringstream csv;
  write_report_csv(csv, report.records, units);
  const auto summary = summary_json(report, units).dump(2) + "\n";
  const auto timings = timings_json(report).dump(2) + "\n";
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::io, "cannot create " + dir.string());
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "summary.json", summary);
  write_text(dir / "timings.json", timings);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  out << text;
  out.close();
  require(!out.fail(), ErrorKind::io, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::invalid_config, path.string() + ": " + e.what());
  }
}

std::string profile_table(const info::InteractionProfile& p,
                          info::Units units) {
  const auto q = info::convert_units(p, info::Units::nats, units);
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "units " << info::units_name(units) << '\n';
  os << std::setw(10) << "R" << std::setw(10) << "U1" << std::setw(10) << "U2"
     << std::setw(10) << "S" << '\n';
  os << std::setw(10) << q.r << std::setw(10) << q.u1 << std::setw(10) << q.u2
     << std::setw(10) << q.s << '\n';
  return os.str();
}

}  // namespace lsmi::io
