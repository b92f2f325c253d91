#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "config_file.hpp"
#include "seqscore/errors.hpp"
#include "seqscore/parallel.hpp"
#include "seqscore/simulation.hpp"
#include "seqscore/stream.hpp"

namespace seqscore::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

struct MonitorFlags {
  std::string family = "bernoulli_logit";
  double dispersion = 1.0;
  std::string method = "sst";
  double alpha = 0.05;
  double tau = 1.0;
  int batch = 200;
  std::int64_t cap_n = 10000;
  bool lenient = false;
  std::string covariate_prefix = "x";
  std::string control = "A";
  std::string treatment = "B";
  bool msprt_plugin_variance = false;
};

void add_monitor_flags(CLI::App* cmd, MonitorFlags& f, bool with_arms) {
  cmd->add_option("--family", f.family, "Response family (bernoulli_logit|normal_identity|poisson_log)")
      ->capture_default_str();
  cmd->add_option("--dispersion", f.dispersion, "Known dispersion a(phi) for normal responses")
      ->capture_default_str();
  cmd->add_option("--method", f.method, "Test statistic (sst|msprt)")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
  cmd->add_option("--tau", f.tau, "Prior standard deviation of the effect")->capture_default_str();
  cmd->add_option("--batch", f.batch, "Events between checkpoints (both arms)")->capture_default_str();
  cmd->add_option("--cap-n", f.cap_n, "Stop once both arms hold this many events")->capture_default_str();
  cmd->add_flag("--lenient,!--strict", f.lenient, "Skip malformed records instead of aborting (default: strict)");
  cmd->add_option("--covariate-prefix", f.covariate_prefix, "Header prefix of covariate columns")
      ->capture_default_str();
  cmd->add_flag("--msprt-plugin-variance", f.msprt_plugin_variance,
                "mSPRT on normal responses: plug-in arm variances instead of the dispersion");
  if (with_arms) {
    cmd->add_option("--control", f.control, "Variant id of the control arm")->capture_default_str();
    cmd->add_option("--treatment", f.treatment, "Variant id of the treatment arm")->capture_default_str();
  }
}

MonitorConfig monitor_config(const MonitorFlags& f, int p) {
  MonitorConfig mc;
  try {
    mc.family = make_family(parse_family_kind(f.family), f.dispersion);
    mc.method = parse_method(f.method);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  mc.p = p;
  mc.alpha = f.alpha;
  mc.tau = f.tau;
  mc.batch = f.batch;
  mc.cap_n = f.cap_n;
  mc.msprt_plugin_variance = f.msprt_plugin_variance;
  mc.validate();
  return mc;
}

ReaderOptions reader_options(const MonitorFlags& f) {
  ReaderOptions ro;
  ro.strict = !f.lenient;
  ro.covariate_prefix = f.covariate_prefix;
  return ro;
}

void print_decision(std::ostream& err, const IngestSummary& s, std::int64_t records) {
  err << "records " << records << ", checkpoints " << s.checkpoints << ", skipped " << s.skipped << '\n';
  if (s.decision) {
    err << "decision: reject the null at n1=" << s.decision->n1 << " n0=" << s.decision->n0
        << " (p=" << s.p_value << ")\n";
  } else {
    err << "decision: null not rejected (p=" << s.p_value << ")\n";
  }
}

struct StreamFlags {
  int snapshot_every = 0;
  std::string state_file;
  bool resume = false;
};

/// Shared body of `monitor` (live=true) and `replay`.
int run_stream(std::istream& in, const MonitorFlags& f, const StreamFlags& sf, bool live, std::ostream& out,
               std::ostream& err) {
  EventReader reader(in, reader_options(f));
  const EventRecord* first = reader.peek();
  const bool have_state = !sf.state_file.empty() && std::filesystem::exists(sf.state_file);
  if (!first && !have_state) return kExitOk;

  SessionConfig sc;
  sc.control_variant = f.control;
  sc.treatment_variant = f.treatment;
  std::optional<Session> session;
  if (have_state && (live || sf.resume)) {
    const std::string blob = read_state_file(sf.state_file);
    // The payload records the covariate dimension; use it when no event is available.
    const int p = first ? static_cast<int>(first->covariates.size())
                        : nlohmann::json::parse(blob.substr(blob.find('\n') + 1))["monitor"]["p"].get<int>();
    sc.monitor = monitor_config(f, p);
    session.emplace(Session::restore_state(sc, blob));
  } else {
    if (!first) return kExitOk;
    sc.monitor = monitor_config(f, static_cast<int>(first->covariates.size()));
    session.emplace(sc);
  }

  IngestOptions io;
  io.strict = !f.lenient;
  io.snapshot_every = sf.snapshot_every;
  io.state_file = sf.state_file;
  io.skip_records = (!live && sf.resume && have_state) ? session->records_seen() : 0;
  // A live stream with persisted state continues its open batch next time.
  io.flush_at_end = !(live && !sf.state_file.empty());
  const IngestSummary summary = ingest(reader, *session, out, io);
  print_decision(err, summary, session->records_seen());
  return kExitOk;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  return file;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find(',', start);
    const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(item);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("'" + item + "' is not a number");
    }
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<EventRecord> load_events(const std::string& path, const MonitorFlags& f) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_events(in, reader_options(f));
}

void write_report(const MetricsReport& report, const std::string& records, std::ostream& out) {
  out << to_table(report);
  if (records.empty()) {
    out << to_record(report) << '\n';
  } else {
    auto file = open_output(records);
    file << to_record(report) << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential score tests for randomized experiments", "seqscore"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "seqscore 0.3.0");

  // simulate / multiple
  std::string config_path, records_path;
  unsigned threads = 0;
  double sim_dispersion = 1.0;
  bool sim_plugin = false;
  auto add_sim_flags = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "YAML configuration file")->required();
    cmd->add_option("--records", records_path, "Write the line-delimited report to this file");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    cmd->add_option("--dispersion", sim_dispersion, "Known dispersion for normal responses");
    cmd->add_flag("--msprt-plugin-variance", sim_plugin, "mSPRT with plug-in arm variances");
  };
  auto* simulate = app.add_subcommand("simulate", "Estimate type I error / power by simulation");
  add_sim_flags(simulate);
  auto* multiple = app.add_subcommand("multiple", "Simulated multiple-comparison study (FDR / TPR)");
  add_sim_flags(multiple);

  // monitor / replay
  MonitorFlags mf;
  StreamFlags sf;
  std::string input_path;
  auto* monitor = app.add_subcommand("monitor", "Monitor an event stream read from stdin");
  auto* replay = app.add_subcommand("replay", "Replay an event log file");
  for (auto* cmd : {monitor, replay}) {
    add_monitor_flags(cmd, mf, true);
    cmd->add_option("--snapshot-every", sf.snapshot_every, "Persist state every k checkpoints");
    cmd->add_option("--state-file", sf.state_file, "Session state file");
  }
  replay->add_option("file", input_path, "Event log")->required();
  replay->add_flag("--resume", sf.resume, "Continue from --state-file, skipping records already consumed");

  // pairwise
  std::string variants_text;
  std::int64_t stop_n = 0;
  auto* pairwise = app.add_subcommand("pairwise", "All pairwise comparisons with FDR control");
  add_monitor_flags(pairwise, mf, false);
  pairwise->add_option("file", input_path, "Event log")->required();
  pairwise->add_option("--variants", variants_text, "Comma-separated variant ids")->required();
  pairwise->add_option("--stop-n", stop_n, "Per-arm sample size T")->required();
  pairwise->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // aa-check
  std::uint64_t seed = 1;
  int relabelings = 100;
  std::string source_variant;
  auto* aa = app.add_subcommand("aa-check", "Randomly relabel arms and count false rejections");
  add_monitor_flags(aa, mf, false);
  aa->add_option("file", input_path, "Event log")->required();
  aa->add_option("--seed", seed, "Relabeling seed")->capture_default_str();
  aa->add_option("--relabelings", relabelings, "Number of random relabelings")->capture_default_str();
  aa->add_option("--variant", source_variant, "Relabel only events of this variant");
  aa->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // generate-log
  EventLogSpec log_spec;
  std::string log_variants = "A,B", theta_text, out_path;
  std::vector<std::string> effect_texts;
  auto* gen = app.add_subcommand("generate-log", "Write a synthetic click log");
  gen->add_option("--events", log_spec.events, "Number of events")->capture_default_str();
  gen->add_option("--variants", log_variants, "Comma-separated variant ids")->capture_default_str();
  gen->add_option("--seed", log_spec.seed, "Generator seed")->capture_default_str();
  gen->add_option("--theta0", theta_text, "Baseline coefficients (5 values, comma-separated)");
  gen->add_option("--effect", effect_texts, "Per-variant effect VARIANT=b0,b1,b2,b3,b4 (repeatable)");
  gen->add_option("--out", out_path, "Output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      ExperimentConfig cfg = parse_experiment(read_text_file(config_path));
      cfg.threads = threads;
      cfg.family.dispersion = sim_dispersion;
      cfg.msprt_plugin_variance = sim_plugin;
      cfg.validate();
      write_report(estimate_operating_characteristics(cfg), records_path, out);
      return kExitOk;
    }
    if (multiple->parsed()) {
      MultipleStudyConfig study = parse_multiple_study(read_text_file(config_path));
      study.base.threads = threads;
      study.base.family.dispersion = sim_dispersion;
      study.base.msprt_plugin_variance = sim_plugin;
      study.validate();
      write_report(run_multiple_testing_study(study), records_path, out);
      return kExitOk;
    }
    if (monitor->parsed()) return run_stream(in, mf, sf, true, out, err);
    if (replay->parsed()) {
      std::ifstream file(input_path);
      if (!file) throw ConfigError("cannot open '" + input_path + "'");
      return run_stream(file, mf, sf, false, out, err);
    }
    if (pairwise->parsed()) {
      const auto events = load_events(input_path, mf);
      const int p = events.empty() ? 0 : static_cast<int>(events.front().covariates.size());
      const PairwiseReport report =
          pairwise_compare(events, split_list(variants_text), stop_n, monitor_config(mf, p), threads);
      for (const auto& pr : report.pairs) {
        ordered_json j;
        j["pair"] = pr.label;
        j["n1"] = pr.n1;
        j["n0"] = pr.n0;
        j["p_value"] = pr.p_value ? ordered_json(*pr.p_value) : ordered_json(nullptr);
        j["deferred"] = pr.deferred;
        j["rejected"] = pr.rejected;
        out << j.dump() << '\n';
      }
      ordered_json summary;
      summary["m"] = report.m;
      summary["rejections"] = report.rejections.size();
      summary["threshold"] = report.rejections.threshold;
      summary["rejected"] = report.rejections.labels;
      out << summary.dump() << '\n';
      err << report.rejections.size() << " of " << report.m << " comparisons rejected at alpha=" << report.alpha
          << " (" << report.pairs.size() - report.m << " deferred)\n";
      return kExitOk;
    }
    if (aa->parsed()) {
      if (relabelings < 1) throw ConfigError("relabelings must be >= 1");
      const auto events = load_events(input_path, mf);
      if (events.empty()) return kExitOk;
      SessionConfig sc;
      sc.monitor = monitor_config(mf, static_cast<int>(events.front().covariates.size()));
      const std::optional<std::string> source =
          source_variant.empty() ? std::nullopt : std::optional<std::string>(source_variant);
      std::vector<IngestSummary> results(static_cast<std::size_t>(relabelings));
      parallel_for(results.size(), threads, [&](std::size_t i) {
        auto rng = replication_rng(seed, i);
        const auto relabeled = aa_relabel(events, rng(), source);
        Session session(sc);
        for (const auto& ev : relabeled) {
          if (session.finished()) break;
          session.consume(ev);
        }
        session.finish();
        results[i].decision = session.monitor().trace().decision;
        results[i].p_value = session.monitor().trace().p_value();
      });
      int rejections = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        ordered_json j;
        j["relabeling"] = i;
        j["rejected"] = results[i].decision.has_value();
        j["p_value"] = results[i].p_value;
        out << j.dump() << '\n';
        rejections += results[i].decision ? 1 : 0;
      }
      ordered_json summary;
      summary["relabelings"] = relabelings;
      summary["rejections"] = rejections;
      out << summary.dump() << '\n';
      err << rejections << " of " << relabelings << " relabelings rejected at alpha=" << mf.alpha << '\n';
      return kExitOk;
    }
    if (gen->parsed()) {
      log_spec.variants = split_list(log_variants);
      if (log_spec.variants.empty()) throw ConfigError("at least one variant is required");
      if (!theta_text.empty()) log_spec.theta0 = parse_vector(theta_text);
      log_spec.effects.assign(log_spec.variants.size(), Vector());
      for (const auto& text : effect_texts) {
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("--effect expects VARIANT=b0,...,b4");
        const auto it = std::find(log_spec.variants.begin(), log_spec.variants.end(), text.substr(0, eq));
        if (it == log_spec.variants.end()) throw ConfigError("--effect names unknown variant '" + text.substr(0, eq) + "'");
        log_spec.effects[static_cast<std::size_t>(it - log_spec.variants.begin())] = parse_vector(text.substr(eq + 1));
      }
      const auto events = generate_event_log(log_spec);
      if (out_path.empty()) {
        write_event_log(out, events);
      } else {
        auto file = open_output(out_path);
        write_event_log(file, events);
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MalformedRecord& e) {
    err << "malformed input: " << e.what() << '\n';
    return kExitData;
  } catch (const StateError& e) {
    err << "state error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace seqscore::cli
