#include "stratexact/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "stratexact/errors.hpp"

namespace stratexact {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kColumns[] = {"label",          "treated_responders", "treated_total",
                                    "control_responders", "control_total", "treated_missing",
                                    "control_missing"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record; fields may be double-quoted with "" escapes.
std::vector<std::string> split_csv(const std::string& line, int line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

int parse_int(const std::string& text, int line_no, const char* field) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ValidationError("line " + std::to_string(line_no) + ": field " + field +
                          ": expected an integer, got '" + text + "'");
  }
  return value;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

InputDocument parse_csv(std::istream& in) {
  InputDocument doc;
  std::string line;
  int line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line, line_no);
    if (columns == 0) {
      if (fields.size() != 5 && fields.size() != 7) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": header must list label,treated_responders,treated_total,"
                              "control_responders,control_total[,treated_missing,control_missing]");
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] != kColumns[i]) {
          throw ValidationError("line " + std::to_string(line_no) + ": expected column '" +
                                kColumns[i] + "', got '" + fields[i] + "'");
        }
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " fields, got " +
                            std::to_string(fields.size()));
    }
    InputStratum s;
    s.label = fields[0];
    s.treated_responders = parse_int(fields[1], line_no, kColumns[1]);
    s.treated_total = parse_int(fields[2], line_no, kColumns[2]);
    s.control_responders = parse_int(fields[3], line_no, kColumns[3]);
    s.control_total = parse_int(fields[4], line_no, kColumns[4]);
    if (columns == 7) {
      s.treated_missing = parse_int(fields[5], line_no, kColumns[5]);
      s.control_missing = parse_int(fields[6], line_no, kColumns[6]);
    }
    doc.strata.push_back(std::move(s));
  }
  return doc;
}

int json_int(const json& j, const char* field, int index, bool required) {
  const std::string where = "stratum " + std::to_string(index + 1) + ": field " + field;
  if (!j.contains(field)) {
    if (required) throw ValidationError(where + " is missing");
    return 0;
  }
  const auto& v = j.at(field);
  if (!v.is_number_integer()) throw ValidationError(where + " must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ValidationError(where + " is out of range");
  }
  return static_cast<int>(x);
}

InputDocument parse_json(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (trim(text).empty()) return {};
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  const json* list = &root;
  if (root.is_object()) {
    if (!root.contains("strata")) throw ValidationError("JSON input needs a 'strata' array");
    list = &root.at("strata");
  }
  if (!list->is_array()) throw ValidationError("'strata' must be an array");
  InputDocument doc;
  int index = 0;
  for (const auto& s : *list) {
    if (!s.is_object()) {
      throw ValidationError("stratum " + std::to_string(index + 1) + " must be an object");
    }
    InputStratum out;
    if (s.contains("label")) {
      if (!s.at("label").is_string()) {
        throw ValidationError("stratum " + std::to_string(index + 1) +
                              ": field label must be a string");
      }
      out.label = s.at("label").get<std::string>();
    }
    out.treated_responders = json_int(s, "treated_responders", index, true);
    out.treated_total = json_int(s, "treated_total", index, true);
    out.control_responders = json_int(s, "control_responders", index, true);
    out.control_total = json_int(s, "control_total", index, true);
    out.treated_missing = json_int(s, "treated_missing", index, false);
    out.control_missing = json_int(s, "control_missing", index, false);
    doc.strata.push_back(std::move(out));
    ++index;
  }
  return doc;
}

json number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return x;
}

json interval_json(const std::optional<Interval>& iv) {
  if (!iv) return nullptr;
  return json::array({number(iv->lo), number(iv->hi)});
}

ordered_json result_object(const ConfidenceResult& r, const ResultContext& ctx) {
  const bool randomized = r.statistic.has_value();
  ordered_json j;
  j["method"] = r.method;
  j["interval"] = interval_json(r.interval);
  j["level"] = r.level;
  j["n"] = r.n;
  if (randomized) {
    j["R"] = r.replicates > 0 ? r.replicates : ctx.replicates;
    j["seed"] = r.seed;
    j["statistic"] = to_string(*r.statistic);
  } else {
    j["R"] = nullptr;
    j["seed"] = ctx.seed;
    j["statistic"] = nullptr;
  }
  j["combiner"] = r.combiner ? json(to_string(*r.combiner)) : json(nullptr);
  j["tables_tested"] = r.tables_tested;
  if (ctx.include_timing) j["runtime_ms"] = r.runtime_ms;
  j["warnings"] = r.warnings;
  if (r.rr_interval) j["rr_interval"] = interval_json(r.rr_interval);
  return j;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field ") + key + ": " + e.what());
  }
}

json parse_config(const std::string& text) {
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON config: ") + e.what());
  }
}

std::vector<Method> config_methods(const json& j) {
  if (!j.contains("methods")) return kAllMethods;
  std::vector<Method> out;
  for (const auto& m : get_or<std::vector<std::string>>(j, "methods", {})) {
    if (m == "all") return kAllMethods;
    out.push_back(parse_method(m));
  }
  return out;
}

std::uint64_t config_seed(const json& j, std::uint64_t fallback) {
  if (!j.contains("seed")) return fallback;
  const auto& s = j.at("seed");
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer() && s.get<std::int64_t>() >= 0) return s.get<std::uint64_t>();
  throw ValidationError("config field seed must be a non-negative integer");
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

bool InputDocument::has_missing() const {
  for (const auto& s : strata) {
    if (s.treated_missing > 0 || s.control_missing > 0) return true;
  }
  return false;
}

void InputDocument::validate() const {
  if (strata.empty()) throw ValidationError("no strata");
  for (std::size_t i = 0; i < strata.size(); ++i) {
    const auto& s = strata[i];
    const std::string row =
        "stratum " + std::to_string(i + 1) + (s.label.empty() ? "" : " (" + s.label + ")");
    auto fail = [&](const char* field, const std::string& why) {
      throw ValidationError(row + ": " + field + " " + why);
    };
    if (s.treated_total <= 0) fail("treated_total", "must be positive");
    if (s.control_total <= 0) fail("control_total", "must be positive");
    if (s.treated_responders < 0) fail("treated_responders", "must be non-negative");
    if (s.control_responders < 0) fail("control_responders", "must be non-negative");
    if (s.treated_missing < 0) fail("treated_missing", "must be non-negative");
    if (s.control_missing < 0) fail("control_missing", "must be non-negative");
    if (s.treated_responders + s.treated_missing > s.treated_total) {
      fail("treated_responders", "plus treated_missing exceeds treated_total");
    }
    if (s.control_responders + s.control_missing > s.control_total) {
      fail("control_responders", "plus control_missing exceeds control_total");
    }
    if (s.treated_total + s.control_total > std::numeric_limits<std::uint16_t>::max()) {
      fail("treated_total", "plus control_total exceeds 65535 subjects");
    }
  }
}

std::vector<StratumWithMissing> InputDocument::to_strata() const {
  validate();
  std::vector<StratumWithMissing> out;
  for (const auto& s : strata) {
    out.push_back({{s.treated_responders, s.treated_total - s.treated_responders - s.treated_missing,
                    s.control_responders, s.control_total - s.control_responders - s.control_missing},
                   s.treated_missing,
                   s.control_missing});
  }
  return out;
}

OutcomeTable InputDocument::table() const {
  if (has_missing()) throw ValidationError("input has missing outcomes; use the missing-data path");
  std::vector<StratumOutcome> counts;
  for (const auto& s : to_strata()) counts.push_back(s.observed);
  return OutcomeTable(std::move(counts));
}

InputDocument InputDocument::from_table(const OutcomeTable& obs) {
  InputDocument doc;
  for (int k = 0; k < obs.strata(); ++k) {
    const auto& s = obs[k];
    doc.strata.push_back({"stratum" + std::to_string(k + 1), s.n11, s.treated(), s.n01, s.control()});
  }
  return doc;
}

InputDocument parse_input(std::istream& in, InputFormat format) {
  auto doc = format == InputFormat::Csv ? parse_csv(in) : parse_json(in);
  doc.validate();
  return doc;
}

InputDocument parse_input(const std::string& text, InputFormat format) {
  std::istringstream in(text);
  return parse_input(in, format);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

InputDocument parse_input_file(const std::string& path, std::optional<InputFormat> format) {
  if (!format) {
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    format = csv ? InputFormat::Csv : InputFormat::Json;
  }
  return parse_input(read_file(path), *format);
}

std::string serialize_input(const InputDocument& doc, InputFormat format) {
  const bool missing = doc.has_missing();
  if (format == InputFormat::Csv) {
    std::ostringstream os;
    os << "label,treated_responders,treated_total,control_responders,control_total";
    if (missing) os << ",treated_missing,control_missing";
    os << '\n';
    for (const auto& s : doc.strata) {
      os << csv_field(s.label) << ',' << s.treated_responders << ',' << s.treated_total << ','
         << s.control_responders << ',' << s.control_total;
      if (missing) os << ',' << s.treated_missing << ',' << s.control_missing;
      os << '\n';
    }
    return os.str();
  }
  ordered_json list = ordered_json::array();
  for (const auto& s : doc.strata) {
    ordered_json j;
    j["label"] = s.label;
    j["treated_responders"] = s.treated_responders;
    j["treated_total"] = s.treated_total;
    j["control_responders"] = s.control_responders;
    j["control_total"] = s.control_total;
    if (missing) {
      j["treated_missing"] = s.treated_missing;
      j["control_missing"] = s.control_missing;
    }
    list.push_back(j);
  }
  ordered_json root;
  root["strata"] = list;
  return root.dump(2) + "\n";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Wald, Method::WS, Method::ESI, Method::SPT, Method::CPT}) {
    if (name == to_string(m)) return m;
  }
  throw ValidationError("unknown method '" + name + "'");
}

StatisticKind parse_statistic(const std::string& name) {
  for (auto s : {StatisticKind::AbsDiff, StatisticKind::Studentized, StatisticKind::Sterne}) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("unknown statistic '" + name + "'");
}

Combiner parse_combiner(const std::string& name) {
  for (auto c : {Combiner::Fisher, Combiner::Tippett, Combiner::Pearson, Combiner::George,
                 Combiner::Stouffer}) {
    if (name == to_string(c)) return c;
  }
  throw ValidationError("unknown combiner '" + name + "'");
}

Target parse_target(const std::string& name) {
  if (name == "ate") return Target::ATE;
  if (name == "rr") return Target::RR;
  throw ValidationError("unknown target '" + name + "'");
}

std::string result_to_json(const ConfidenceResult& r, const ResultContext& ctx) {
  return result_object(r, ctx).dump(2) + "\n";
}

std::string results_to_json(const std::vector<ConfidenceResult>& rs, const ResultContext& ctx,
                            const std::vector<MethodFailure>& failures) {
  if (rs.size() == 1 && failures.empty()) return result_to_json(rs.front(), ctx);
  ordered_json list = ordered_json::array();
  for (const auto& r : rs) list.push_back(result_object(r, ctx));
  for (const auto& f : failures) {
    ordered_json j;
    j["method"] = f.method;
    j["status"] = "did not complete";
    j["reason"] = f.reason;
    list.push_back(j);
  }
  ordered_json root;
  root["results"] = list;
  return root.dump(2) + "\n";
}

std::string results_to_csv(const std::vector<ConfidenceResult>& rs, const ResultContext& ctx,
                           const std::vector<MethodFailure>& failures) {
  std::ostringstream os;
  os << "method,lo,hi,level,R,seed,statistic,combiner,tables_tested";
  if (ctx.include_timing) os << ",runtime_ms";
  os << ",warnings\n";
  for (const auto& r : rs) {
    const bool randomized = r.statistic.has_value();
    os << r.method << ',' << (r.interval ? fmt(r.interval->lo) : "") << ','
       << (r.interval ? fmt(r.interval->hi) : "") << ',' << fmt(r.level) << ',';
    if (randomized) os << (r.replicates > 0 ? r.replicates : ctx.replicates);
    os << ',' << (randomized ? r.seed : ctx.seed) << ','
       << (randomized ? to_string(*r.statistic) : "") << ','
       << (r.combiner ? to_string(*r.combiner) : "") << ',' << r.tables_tested;
    if (ctx.include_timing) os << ',' << fmt(r.runtime_ms);
    std::string joined;
    for (const auto& w : r.warnings) joined += (joined.empty() ? "" : "; ") + w;
    os << ',' << csv_field(joined) << '\n';
  }
  for (const auto& f : failures) {
    os << f.method << ",,,,,,,,";
    if (ctx.include_timing) os << ',';
    os << ',' << csv_field("did not complete: " + f.reason) << '\n';
  }
  return os.str();
}

Scenario parse_scenario(const std::string& text) {
  const json j = parse_config(text);
  Scenario s;
  if (j.contains("table")) {
    const int table = get_or<int>(j, "table", 1);
    const int row = get_or<int>(j, "row", 1);
    const auto list = table == 1 ? table1_scenarios()
                      : table == 2 ? table2_scenarios()
                                   : throw ValidationError("config field table must be 1 or 2");
    if (row < 1 || row > static_cast<int>(list.size())) {
      throw ValidationError("config field row must lie in 1.." + std::to_string(list.size()));
    }
    s = list[row - 1];
  } else {
    if (!j.contains("v") || !j.contains("m")) {
      throw ValidationError("scenario config needs 'v' and 'm', or 'table' and 'row'");
    }
    std::vector<StratumPotential> strata;
    for (const auto& row : get_or<std::vector<std::vector<int>>>(j, "v", {})) {
      if (row.size() != 4) throw ValidationError("each row of 'v' needs four counts");
      strata.push_back({row[0], row[1], row[2], row[3]});
    }
    s.v = PotentialTable(std::move(strata));
    s.m = get_or<std::vector<int>>(j, "m", {});
  }
  s.name = get_or<std::string>(j, "name", s.name.empty() ? "scenario" : s.name);
  s.reps = get_or<int>(j, "reps", s.reps);
  s.replicates = get_or<int>(j, "R", s.replicates);
  s.level = get_or<double>(j, "level", s.level);
  s.methods = config_methods(j);
  s.seed = config_seed(j, s.seed);
  if (j.contains("stat")) s.stat = parse_statistic(get_or<std::string>(j, "stat", ""));
  if (j.contains("combiner")) s.combiner = parse_combiner(get_or<std::string>(j, "combiner", ""));
  s.budget = get_or<std::int64_t>(j, "budget", s.budget);
  s.ws_cap = get_or<double>(j, "ws_cap", s.ws_cap);
  s.threads = get_or<int>(j, "threads", s.threads);
  s.validate();
  return s;
}

SweepConfig parse_sweep(const std::string& text) {
  const json j = parse_config(text);
  SweepConfig c;
  if (!j.contains("n") || !j.contains("taus")) {
    throw ValidationError("sweep config needs 'n' and 'taus'");
  }
  c.n_list = get_or<std::vector<int>>(j, "n", {});
  c.tau_pairs = get_or<std::vector<std::vector<double>>>(j, "taus", {});
  c.reps = get_or<int>(j, "reps", c.reps);
  c.replicates = get_or<int>(j, "R", c.replicates);
  c.level = get_or<double>(j, "level", c.level);
  c.methods = config_methods(j);
  c.seed = config_seed(j, c.seed);
  c.budget = get_or<std::int64_t>(j, "budget", c.budget);
  c.ws_cap = get_or<double>(j, "ws_cap", c.ws_cap);
  c.threads = get_or<int>(j, "threads", c.threads);
  return c;
}

std::string scenario_to_json(const Scenario& s, const ScenarioResult& r, bool include_records) {
  ordered_json root;
  root["name"] = r.name;
  ordered_json v = ordered_json::array();
  for (const auto& st : s.v.counts()) v.push_back({st.v11, st.v10, st.v01, st.v00});
  root["v"] = v;
  root["m"] = s.m;
  root["tau"] = r.tau;
  root["reps"] = s.reps;
  root["R"] = s.replicates;
  root["level"] = s.level;
  root["seed"] = s.seed;
  root["allocations"] = "redrawn per rep";
  ordered_json methods = ordered_json::array();
  for (const auto& m : r.summaries) {
    ordered_json j;
    j["method"] = to_string(m.method);
    j["attempted"] = m.attempted;
    j["completed"] = m.completed;
    if (m.completed > 0) {
      j["mean_width"] = m.mean_width;
      j["coverage"] = m.coverage;
      j["mean_runtime_ms"] = m.mean_runtime_ms;
    } else {
      j["status"] = "did not complete";
    }
    methods.push_back(j);
  }
  root["methods"] = methods;
  if (include_records) {
    ordered_json recs = ordered_json::array();
    for (const auto& rec : r.records) {
      ordered_json j;
      j["rep"] = rec.rep;
      j["method"] = to_string(rec.method);
      j["completed"] = rec.completed;
      j["interval"] = interval_json(rec.interval);
      j["covered"] = rec.covered;
      j["runtime_ms"] = rec.runtime_ms;
      if (!rec.note.empty()) j["note"] = rec.note;
      recs.push_back(j);
    }
    root["records"] = recs;
  }
  return root.dump(2) + "\n";
}

std::string scenario_to_csv(const ScenarioResult& r) {
  std::ostringstream os;
  os << "scenario,method,attempted,completed,mean_width,coverage,mean_runtime_ms\n";
  for (const auto& m : r.summaries) {
    os << csv_field(r.name) << ',' << to_string(m.method) << ',' << m.attempted << ','
       << m.completed << ',';
    if (m.completed > 0) {
      os << fmt(m.mean_width) << ',' << fmt(m.coverage) << ',' << fmt(m.mean_runtime_ms);
    } else {
      os << ",,";
    }
    os << '\n';
  }
  return os.str();
}

std::string sweep_to_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream os;
  os << "n,method,mean_width,taus\n";
  for (const auto& r : records) {
    std::string taus;
    for (double t : r.taus) taus += (taus.empty() ? "" : ";") + fmt(t);
    os << r.n << ',' << to_string(r.method) << ',';
    if (r.completed > 0) os << fmt(r.mean_width);
    os << ',' << taus << '\n';
  }
  return os.str();
}

std::string case_study_to_json(const CaseStudyReport& report, int replicates, std::uint64_t seed) {
  ordered_json root;
  ordered_json strata = ordered_json::array();
  for (const auto& s : report.table.counts()) strata.push_back({s.n11, s.n10, s.n01, s.n00});
  root["table"] = strata;
  root["tau_hat"] = report.tau_hat;
  root["R"] = replicates;
  root["seed"] = seed;
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json j;
    j["method"] = to_string(row.method);
    j["interval"] = interval_json(row.interval);
    j["width"] = row.interval ? json(row.interval->width()) : json(nullptr);
    j["published"] = interval_json(row.published);
    if (!row.note.empty()) j["note"] = row.note;
    rows.push_back(j);
  }
  ordered_json cmh;
  cmh["method"] = "cmh";
  cmh["interval"] = nullptr;
  cmh["published"] = interval_json(report.cmh_reference);
  cmh["note"] = "published reference only, not computed";
  rows.push_back(cmh);
  root["intervals"] = rows;
  return root.dump(2) + "\n";
}

std::string case_study_to_csv(const CaseStudyReport& report) {
  std::ostringstream os;
  os << "method,lo,hi,width,published_lo,published_hi\n";
  for (const auto& row : report.rows) {
    os << to_string(row.method) << ',';
    if (row.interval) {
      os << fmt(row.interval->lo) << ',' << fmt(row.interval->hi) << ','
         << fmt(row.interval->width());
    } else {
      os << ",,";
    }
    os << ',' << fmt(row.published.lo) << ',' << fmt(row.published.hi) << '\n';
  }
  os << "cmh,,,," << fmt(report.cmh_reference.lo) << ',' << fmt(report.cmh_reference.hi) << '\n';
  return os.str();
}

}  // namespace stratexact
