#include "seqscore/stream.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "seqscore/errors.hpp"
#include "seqscore/parallel.hpp"

namespace seqscore {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string crc_hex(std::string_view data) {
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data.data()),
                          static_cast<uInt>(data.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace

EventReader::EventReader(std::istream& in, ReaderOptions options)
    : in_(in), options_(std::move(options)), format_(options_.format) {}

void EventReader::read_header(const std::string& text) {
  delimiter_ = text.find('\t') != std::string::npos ? '\t' : ',';
  const auto names = split(text, delimiter_);
  columns_ = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string_view name = names[i];
    const int col = static_cast<int>(i);
    if (name == "timestamp") {
      timestamp_col_ = col;
    } else if (name == "variant" || name == "variant_id") {
      variant_col_ = col;
    } else if (name == "response") {
      response_col_ = col;
    } else if (!options_.covariate_prefix.empty() && name.starts_with(options_.covariate_prefix)) {
      covariate_cols_.push_back(col);
    }
  }
  if (timestamp_col_ < 0 || variant_col_ < 0 || response_col_ < 0) {
    // A header problem is never skippable.
    throw MalformedRecord(line_, "header must name timestamp, variant and response columns");
  }
  covariate_count_ = static_cast<int>(covariate_cols_.size());
  header_done_ = true;
}

EventRecord EventReader::parse_delimited(const std::string& text) const {
  const auto fields = split(text, delimiter_);
  if (fields.size() != columns_) {
    throw MalformedRecord(line_, "expected " + std::to_string(columns_) + " fields, got " +
                                     std::to_string(fields.size()));
  }
  EventRecord rec;
  rec.line = line_;
  rec.timestamp = std::string(fields[timestamp_col_]);
  rec.variant = std::string(fields[variant_col_]);
  if (rec.variant.empty()) throw MalformedRecord(line_, "empty variant id");
  const auto response = parse_number(fields[response_col_]);
  if (!response) throw MalformedRecord(line_, "response is not a number");
  rec.response = *response;
  for (int col : covariate_cols_) {
    const auto v = parse_number(fields[col]);
    if (!v || !std::isfinite(*v)) throw MalformedRecord(line_, "covariate is not a finite number");
    rec.covariates.push_back(*v);
  }
  return rec;
}

EventRecord EventReader::parse_json(const std::string& text) const {
  EventRecord rec;
  rec.line = line_;
  try {
    const json j = json::parse(text);
    const auto& ts = j.at("timestamp");
    rec.timestamp = ts.is_string() ? ts.get<std::string>() : ts.dump();
    const auto& variant = j.contains("variant") ? j.at("variant") : j.at("variant_id");
    rec.variant = variant.is_string() ? variant.get<std::string>() : variant.dump();
    rec.response = j.at("response").get<double>();
    if (j.contains("covariates")) rec.covariates = j.at("covariates").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw MalformedRecord(line_, std::string("bad JSON record: ") + e.what());
  }
  if (rec.variant.empty()) throw MalformedRecord(line_, "empty variant id");
  if (covariate_count_ && static_cast<int>(rec.covariates.size()) != *covariate_count_) {
    throw MalformedRecord(line_, "covariate count changed within the log");
  }
  return rec;
}

void EventReader::check_order(const EventRecord& record) {
  if (last_timestamp_) {
    const auto a = parse_number(*last_timestamp_);
    const auto b = parse_number(record.timestamp);
    const bool backwards = (a && b) ? (*b < *a) : (record.timestamp < *last_timestamp_);
    if (backwards) throw MalformedRecord(line_, "timestamp goes backwards");
  }
}

std::optional<EventRecord> EventReader::next() {
  if (peeked_) {
    std::optional<EventRecord> rec = std::move(peeked_);
    peeked_.reset();
    return rec;
  }
  return read_record();
}

const EventRecord* EventReader::peek() {
  if (!peeked_) peeked_ = read_record();
  return peeked_ ? &*peeked_ : nullptr;
}

std::optional<EventRecord> EventReader::read_record() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    const std::string_view body = trim(text);
    if (body.empty() || body.front() == '#') continue;

    if (format_ == InputFormat::auto_detect) {
      format_ = body.front() == '{' ? InputFormat::json_lines : InputFormat::delimited;
    }
    if (format_ == InputFormat::delimited && !header_done_) {
      read_header(std::string(body));
      continue;
    }

    try {
      EventRecord rec = format_ == InputFormat::json_lines ? parse_json(std::string(body))
                                                           : parse_delimited(std::string(body));
      check_order(rec);
      if (!covariate_count_) covariate_count_ = static_cast<int>(rec.covariates.size());
      last_timestamp_ = rec.timestamp;
      return rec;
    } catch (const MalformedRecord&) {
      if (options_.strict) throw;
      ++skipped_;
    }
  }
  return std::nullopt;
}

std::vector<EventRecord> read_events(std::istream& in, const ReaderOptions& options, std::size_t* skipped) {
  EventReader reader(in, options);
  std::vector<EventRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  if (skipped) *skipped = reader.skipped();
  return out;
}

std::string SessionConfig::canonical() const {
  nlohmann::ordered_json j;
  j["monitor"] = json::parse(monitor.canonical());
  j["control_variant"] = control_variant;
  j["treatment_variant"] = treatment_variant;
  return j.dump();
}

std::string SessionConfig::hash() const { return crc_hex(canonical()); }

Session::Session(SessionConfig config) : config_(std::move(config)), monitor_(config_.monitor) {
  if (config_.control_variant == config_.treatment_variant) {
    throw ConfigError("control and treatment variants must differ");
  }
  config_.monitor = monitor_.config();
}

std::optional<Checkpoint> Session::consume(const EventRecord& record) {
  ++records_seen_;
  Arm arm;
  if (record.variant == config_.treatment_variant) {
    arm = Arm::treatment;
  } else if (record.variant == config_.control_variant) {
    arm = Arm::control;
  } else {
    throw MalformedRecord(record.line, "unknown variant '" + record.variant + "'");
  }
  try {
    return monitor_.observe({record.response, arm, record.covariates});
  } catch (const MalformedRecord& e) {
    throw MalformedRecord(record.line, e.what());
  }
}

std::optional<Checkpoint> Session::finish() { return monitor_.flush(); }

std::string Session::snapshot_state() const {
  json payload;
  payload["records_seen"] = records_seen_;
  payload["monitor"] = json::parse(monitor_.save_state());
  const std::string body = payload.dump();
  return "seqscore-state " + std::to_string(kStateVersion) + " " + crc_hex(body) + " " + config_.hash() + "\n" +
         body;
}

Session Session::restore_state(SessionConfig config, std::string_view blob) {
  const auto newline = blob.find('\n');
  if (newline == std::string_view::npos) throw StateError("state blob has no header line");
  std::istringstream header{std::string(blob.substr(0, newline))};
  const std::string_view body = blob.substr(newline + 1);

  std::string magic, crc, config_hash;
  int version = 0;
  if (!(header >> magic >> version >> crc >> config_hash) || magic != "seqscore-state") {
    throw StateError("state blob header is malformed");
  }
  if (version != kStateVersion) {
    throw StateError("state version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kStateVersion) + ")");
  }
  if (crc_hex(body) != crc) throw StateError("state checksum mismatch");

  Session session(std::move(config));
  if (session.config_.hash() != config_hash) {
    throw StateError("state was written under a different configuration");
  }
  try {
    const json payload = json::parse(body);
    session.records_seen_ = payload.at("records_seen").get<std::int64_t>();
    session.monitor_ = SequentialMonitor::load_state(session.config_.monitor, payload.at("monitor").dump());
  } catch (const json::exception& e) {
    throw StateError(std::string("state payload is malformed: ") + e.what());
  }
  return session;
}

void write_state_file(const std::string& path, const std::string& blob) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StateError("cannot write state file " + tmp);
    out << blob;
    if (!out) throw StateError("failed writing state file " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_state_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot open state file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

IngestSummary ingest(EventReader& reader, Session& session, std::ostream& out, const IngestOptions& options) {
  IngestSummary summary;
  std::int64_t to_skip = options.skip_records;
  auto emit = [&](const Checkpoint& cp) {
    out << to_record(cp) << '\n';
    ++summary.checkpoints;
    if (options.snapshot_every > 0 && !options.state_file.empty() &&
        summary.checkpoints % static_cast<std::size_t>(options.snapshot_every) == 0) {
      write_state_file(options.state_file, session.snapshot_state());
    }
  };

  while (!session.finished()) {
    auto rec = reader.next();
    if (!rec) break;
    if (to_skip > 0) {
      --to_skip;
      continue;
    }
    try {
      if (auto cp = session.consume(*rec)) emit(*cp);
    } catch (const MalformedRecord&) {
      if (options.strict) throw;
      ++summary.skipped;
    }
  }
  if (options.flush_at_end) {
    if (auto cp = session.finish()) emit(*cp);
  }
  if (!options.state_file.empty()) write_state_file(options.state_file, session.snapshot_state());

  summary.skipped += reader.skipped();
  summary.decision = session.monitor().trace().decision;
  summary.p_value = session.monitor().trace().p_value();
  return summary;
}

PairwiseReport pairwise_compare(std::span<const EventRecord> events, const std::vector<std::string>& variants,
                                std::int64_t stop_n, const MonitorConfig& base, unsigned threads) {
  if (variants.size() < 2) throw ConfigError("pairwise comparison needs at least two variants");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    for (std::size_t j = i + 1; j < variants.size(); ++j) {
      if (variants[i] == variants[j]) throw ConfigError("duplicate variant '" + variants[i] + "'");
    }
  }
  if (stop_n < 1) throw ConfigError("stop_n must be >= 1");

  PairwiseReport report;
  report.alpha = base.alpha;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    for (std::size_t j = i + 1; j < variants.size(); ++j) {
      PairResult pr;
      pr.control = variants[i];
      pr.treatment = variants[j];
      pr.label = variants[i] + ":" + variants[j];
      report.pairs.push_back(std::move(pr));
    }
  }

  parallel_for(report.pairs.size(), threads, [&](std::size_t idx) {
    PairResult& pr = report.pairs[idx];
    SessionConfig sc;
    sc.monitor = base;
    sc.monitor.cap_n = stop_n;
    sc.monitor.stop_on_reject = false;
    sc.control_variant = pr.control;
    sc.treatment_variant = pr.treatment;
    Session session(sc);
    for (const auto& ev : events) {
      if (session.finished()) break;
      if (ev.variant == pr.control || ev.variant == pr.treatment) session.consume(ev);
    }
    const SequentialMonitor& mon = session.monitor();
    pr.n1 = mon.treatment_count();
    pr.n0 = mon.control_count();
    pr.deferred = std::min(pr.n1, pr.n0) < stop_n || mon.trace().empty();
    if (!pr.deferred) pr.p_value = mon.trace().p_value();
  });

  ComparisonBatch batch;
  batch.alpha = base.alpha;
  std::vector<std::size_t> pair_index;
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    if (report.pairs[i].deferred) continue;
    batch.p_values.push_back(*report.pairs[i].p_value);
    batch.labels.push_back(report.pairs[i].label);
    pair_index.push_back(i);
  }
  report.m = batch.p_values.size();
  if (report.m > 0) {
    report.rejections = bh_correlated(batch);
    for (std::size_t idx : report.rejections.indices) report.pairs[pair_index[idx]].rejected = true;
  }
  return report;
}

std::vector<EventRecord> aa_relabel(std::span<const EventRecord> events, std::uint64_t seed,
                                    const std::optional<std::string>& source_variant) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<EventRecord> out;
  out.reserve(events.size());
  for (const auto& ev : events) {
    if (source_variant && ev.variant != *source_variant) continue;
    EventRecord copy = ev;
    copy.variant = coin(rng) ? "B" : "A";
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<EventRecord> generate_event_log(const EventLogSpec& spec) {
  constexpr int kFeatures = 5;
  constexpr int kColumns = kFeatures;  // intercept + last four features
  if (spec.variants.empty()) throw ConfigError("event log needs at least one variant");
  if (!spec.effects.empty() && spec.effects.size() != spec.variants.size()) {
    throw ConfigError("one effect vector per variant is required");
  }
  const Vector theta0 = spec.theta0.size() == 0 ? Vector::Zero(kColumns) : spec.theta0;
  if (theta0.size() != kColumns) throw ConfigError("theta0 must have length 5");
  for (const auto& e : spec.effects) {
    if (e.size() != 0 && e.size() != kColumns) throw ConfigError("effects must have length 5");
  }

  const FamilySpec family{FamilyKind::bernoulli_logit, 1.0};
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, spec.variants.size() - 1);
  std::gamma_distribution<double> gamma(1.0, 1.0);

  std::vector<EventRecord> out;
  out.reserve(static_cast<std::size_t>(spec.events));
  for (std::int64_t i = 0; i < spec.events; ++i) {
    const std::size_t v = pick(rng);
    double draws[kFeatures];
    double total = 0.0;
    for (double& d : draws) total += (d = gamma(rng));
    Vector x(kColumns);
    x(0) = 1.0;
    for (int f = 1; f < kFeatures; ++f) x(f) = draws[f] / total;

    double eta = theta0.dot(x);
    if (!spec.effects.empty() && spec.effects[v].size() == kColumns) eta += spec.effects[v].dot(x);

    EventRecord rec;
    rec.timestamp = std::to_string(i);
    rec.variant = spec.variants[v];
    rec.response = sample_response(family, eta, rng);
    rec.covariates.assign(x.data() + 1, x.data() + kColumns);
    out.push_back(std::move(rec));
  }
  return out;
}

void write_event_log(std::ostream& out, std::span<const EventRecord> events) {
  const std::size_t p = events.empty() ? 0 : events.front().covariates.size();
  out << "timestamp,variant,response";
  for (std::size_t c = 1; c <= p; ++c) out << ",x" << c;
  out << '\n';
  for (const auto& ev : events) {
    out << ev.timestamp << ',' << ev.variant << ',' << format_double(ev.response);
    for (double c : ev.covariates) out << ',' << format_double(c);
    out << '\n';
  }
}

}  // namespace seqscore
