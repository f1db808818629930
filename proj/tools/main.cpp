#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stylegraph/stylegraph.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kUsageExit = 2;
constexpr int kInternalExit = 70;

struct Failure {
  sg_status status;
  std::string message;
};

int exit_code(sg_status status) {
  if (status == SG_ERR_INTERNAL || status == SG_ERR_INVALID_ARGUMENT) return kInternalExit;
  return 10 + static_cast<int>(status);
}

void check(sg_status status) {
  if (status != SG_OK) throw Failure{status, sg_last_error()};
}

// Owns a char* handed out by the library.
class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { sg_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** out() { return &p_; }
  T* get() const { return p_; }

 private:
  T* p_ = nullptr;
};

using Trajectories = Handle<sg_trajectories, sg_trajectories_free>;
using Analysis = Handle<sg_analysis, sg_analysis_free>;
using EpisodeHandle = Handle<sg_episode, sg_episode_free>;
using ModelHandle = Handle<sg_model, sg_model_free>;

std::string read_file(const std::string& path) {
  if (path.empty() || path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{SG_ERR_IO, "cannot open '" + path + "'"};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    std::cout.flush();
    return;
  }
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{SG_ERR_IO, "cannot write '" + path + "'"};
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw Failure{SG_ERR_IO, "write failed for '" + path + "'"};
}

// Flags shared by every subcommand. Unset ones leave the config document alone.
struct Overrides {
  std::string config_path;
  std::optional<double> mu, delta, sharp_tol, eps_ball, conservative_tol, series_noise, frame_rate;
  std::optional<int> degree;
  std::optional<std::size_t> fit_window, capacity;
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> layout, origin;
};

void add_common(CLI::App& app, Overrides& o, bool analysis_flags = true) {
  app.add_option("--config", o.config_path, "config JSON (default: $STYLEGRAPH_CONFIG)");
  app.add_option("--seed", o.seed, "seed");
  app.add_option("--jobs", o.jobs, "worker threads, 0 for all cores");
  if (!analysis_flags) return;
  app.add_option("--mu", o.mu, "proximity threshold in meters");
  app.add_option("--capacity", o.capacity, "adjacency capacity");
  app.add_option("--degree", o.degree, "polynomial degree");
  app.add_option("--delta", o.delta, "condition number bound");
  app.add_option("--origin", o.origin, "time origin of the fits: start or center");
  app.add_option("--fit-window", o.fit_window, "frames per sliding fit, 0 for one fit");
  app.add_option("--eps-ball", o.eps_ball, "weaving epsilon ball in frames");
  app.add_option("--sharp-tol", o.sharp_tol, "weaving sharpness threshold");
  app.add_option("--conservative-tol", o.conservative_tol, "conservative threshold on sle_max");
  app.add_option("--series-noise", o.series_noise, "uniform noise added to centrality series");
  app.add_option("--frame-rate", o.frame_rate, "frames per second of the input");
  app.add_option("--layout", o.layout, "feature layout: coefficients or extended");
}

json load_config(const Overrides& o) {
  std::string path = o.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("STYLEGRAPH_CONFIG")) path = env;
  }
  const std::string text = path.empty() ? std::string() : read_file(path);
  Text normalized;
  check(sg_config_normalize(text.c_str(), normalized.out()));
  json c = json::parse(normalized.str());
  auto& a = c["analysis"];
  if (o.mu) a["mu"] = *o.mu;
  if (o.capacity) a["capacity"] = *o.capacity;
  if (o.degree) a["degree"] = *o.degree;
  if (o.delta) a["delta"] = *o.delta;
  if (o.origin) a["time_origin"] = *o.origin;
  if (o.fit_window) a["fit_window"] = *o.fit_window;
  if (o.eps_ball) a["eps_ball"] = *o.eps_ball;
  if (o.sharp_tol) a["sharp_tol"] = *o.sharp_tol;
  if (o.conservative_tol) a["conservative_tol"] = *o.conservative_tol;
  if (o.series_noise) a["series_noise"] = *o.series_noise;
  if (o.jobs) a["jobs"] = *o.jobs;
  if (o.seed) {
    c["seed"] = *o.seed;
    a["seed"] = *o.seed;
    c["train"]["seed"] = *o.seed;
  }
  if (o.frame_rate) c["frame_rate"] = *o.frame_rate;
  if (o.layout) c["feature_layout"] = *o.layout;
  Text checked;
  check(sg_config_normalize(c.dump().c_str(), checked.out()));
  return json::parse(checked.str());
}

void load_trajectories(const std::string& input, const json& config, Trajectories& ts) {
  const double rate = config["frame_rate"].get<double>();
  if (input.empty() || input == "-") {
    check(sg_trajectories_parse_csv(read_file(input).c_str(), rate, ts.out()));
  } else {
    check(sg_trajectories_read_csv(input.c_str(), rate, ts.out()));
  }
}

constexpr const char* kCurveStyles[] = {"overspeeding", "overtaking", "sudden_lane_change"};

void write_curves(const sg_analysis* a, const std::string& agent, const fs::path& stem) {
  for (const char* style : kCurveStyles) {
    Text csv;
    check(sg_analysis_curve_csv(a, agent.c_str(), style, csv.out()));
    write_output(stem.string() + "." + style + ".csv", csv.str());
  }
}

struct AnalyzeArgs {
  std::string input, agent, out, curves;
};

void run_analyze(const AnalyzeArgs& args, const Overrides& o) {
  const json config = load_config(o);
  Trajectories ts;
  load_trajectories(args.input, config, ts);
  Analysis a;
  check(sg_analysis_create(ts.get(), config.dump().c_str(), a.out()));
  Text report;
  check(sg_analysis_report_json(a.get(), args.agent.empty() ? nullptr : args.agent.c_str(), report.out()));
  write_output(args.out, report.str());

  std::vector<std::string> agents;
  if (!args.agent.empty()) {
    agents.push_back(args.agent);
  } else if (!args.curves.empty()) {
    for (const auto& r : json::parse(report.str())) agents.push_back(r["agent_id"].get<std::string>());
  }
  if (!args.curves.empty()) {
    fs::create_directories(args.curves);
    for (const auto& id : agents) write_curves(a.get(), id, fs::path(args.curves) / id);
  } else if (!args.agent.empty() && !args.out.empty() && args.out != "-") {
    const fs::path out(args.out);
    write_curves(a.get(), args.agent, out.parent_path() / out.stem());
  }
}

struct ClassifyArgs {
  std::string input, model, out;
};

void run_classify(const ClassifyArgs& args, const Overrides& o) {
  const json config = load_config(o);
  ModelHandle model;
  check(sg_model_from_json(read_file(args.model).c_str(), model.out()));
  Trajectories ts;
  load_trajectories(args.input, config, ts);
  Analysis a;
  check(sg_analysis_create(ts.get(), config.dump().c_str(), a.out()));
  Text result;
  check(sg_analysis_classify_json(a.get(), model.get(), result.out()));
  write_output(args.out, result.str());
}

struct TrainArgs {
  std::string data, save_data, model = "perceptron", out;
  std::size_t synthetic = 0;
  long long horizon = 300;
  std::optional<std::size_t> epochs, hidden;
  std::optional<double> lr;
  double test_fraction = 1.0 / 3.0;
};

void run_train(const TrainArgs& args, const Overrides& o) {
  json config = load_config(o);
  auto& t = config["train"];
  t["model"] = args.model;
  if (args.epochs) t["epochs"] = *args.epochs;
  if (args.hidden) t["hidden"] = *args.hidden;
  if (args.lr) t["learning_rate"] = *args.lr;

  std::string samples;
  if (args.synthetic > 0) {
    Text csv;
    check(sg_dataset_synthetic_csv(args.synthetic, config["seed"].get<std::uint64_t>(), args.horizon,
                                   config.dump().c_str(), csv.out()));
    samples = csv.str();
    if (!args.save_data.empty()) write_output(args.save_data, samples);
  } else {
    samples = read_file(args.data);
  }

  std::string train = samples;
  std::string test;
  if (args.test_fraction > 0.0) {
    Text tr, te;
    check(sg_dataset_split_csv(samples.c_str(), args.test_fraction, config["seed"].get<std::uint64_t>(), tr.out(),
                               te.out()));
    train = tr.str();
    test = te.str();
  }

  ModelHandle model;
  check(sg_model_train(train.c_str(), config.dump().c_str(), model.out()));
  Text doc;
  check(sg_model_to_json(model.get(), doc.out()));
  if (!args.out.empty()) write_output(args.out, doc.str());

  json summary;
  summary["model"] = args.model;
  summary["final_loss"] = json::parse(doc.str())["final_loss"];
  double acc = 0.0;
  check(sg_model_accuracy(model.get(), train.c_str(), &acc));
  summary["train_accuracy"] = acc;
  if (!test.empty()) {
    check(sg_model_accuracy(model.get(), test.c_str(), &acc));
    summary["test_accuracy"] = acc;
  }
  std::cout << summary.dump(2) << '\n';
}

struct EvaluateArgs {
  std::string input, annotations, agent, styles, out;
};

void run_evaluate(const EvaluateArgs& args, const Overrides& o) {
  const json config = load_config(o);
  Trajectories ts;
  load_trajectories(args.input, config, ts);
  Text result;
  check(sg_evaluate_json(ts.get(), read_file(args.annotations).c_str(), args.agent.c_str(),
                         args.styles.empty() ? nullptr : args.styles.c_str(), config.dump().c_str(), result.out()));
  write_output(args.out, result.str());
}

struct SimulateArgs {
  std::string preset, params, out, truth;
  long long horizon = 300;
  bool print_params = false;
};

void run_simulate(const SimulateArgs& args, const Overrides& o) {
  const json config = load_config(o);
  if (args.print_params) {
    Text p;
    check(sg_preset_params_json(args.preset.c_str(), p.out()));
    write_output(args.out, p.str());
    return;
  }
  EpisodeHandle ep;
  if (!args.params.empty()) {
    json p = json::parse(read_file(args.params), nullptr, false);
    if (p.is_discarded()) throw Failure{SG_ERR_PARSE, "generator params are not valid JSON"};
    if (o.seed) p["seed"] = *o.seed;
    check(sg_simulate_params(p.dump().c_str(), args.horizon, ep.out()));
  } else {
    check(sg_simulate_preset(args.preset.c_str(), config["seed"].get<std::uint64_t>(), args.horizon, ep.out()));
  }
  Trajectories ts;
  check(sg_episode_trajectories(ep.get(), ts.out()));
  Text csv;
  check(sg_trajectories_to_csv(ts.get(), csv.out()));
  write_output(args.out, csv.str());
  if (!args.truth.empty()) {
    Text truth;
    check(sg_episode_truth_csv(ep.get(), truth.out()));
    write_output(args.truth, truth.str());
  }
}

struct CalibrateArgs {
  std::string label, params, out;
  double threshold = 0.0;
  std::size_t max_iters = 30, seeds = 5;
  long long horizon = 300;
};

void run_calibrate(const CalibrateArgs& args, const Overrides& o) {
  const json config = load_config(o);
  const std::string start = args.params.empty() ? std::string() : read_file(args.params);
  Text result;
  const sg_status status = sg_calibrate_json(args.label.c_str(), args.threshold,
                                             start.empty() ? nullptr : start.c_str(), args.max_iters, args.horizon,
                                             args.seeds, config.dump().c_str(), result.out());
  if (status == SG_ERR_CALIBRATION) {
    const std::string message = sg_last_error();
    write_output(args.out, result.str());
    throw Failure{status, message};
  }
  check(status);
  write_output(args.out, result.str());
}

struct ConditionArgs {
  int degree = 2;
  std::size_t t_min = 3, t_max = 20;
  std::optional<double> delta;
  std::string origin = "start", out;
};

void run_condition_study(const ConditionArgs& args, const Overrides& o) {
  const json config = load_config(o);
  const double delta = args.delta ? *args.delta : config["analysis"]["delta"].get<double>();
  Text doc;
  check(sg_condition_study_json(args.degree, args.t_min, args.t_max, delta, args.origin.c_str(), doc.out()));
  std::ostringstream csv;
  csv.precision(17);
  csv << "T,kappa_unregularized,kappa_regularized,alpha\n";
  for (const auto& row : json::parse(doc.str())) {
    csv << row["T"].get<std::size_t>() << ',' << row["kappa"].get<double>() << ','
        << row["kappa_alpha"].get<double>() << ',' << row["alpha"].get<double>() << '\n';
  }
  write_output(args.out, csv.str());
}

void report_error(const std::string& code, int status, const std::string& message) {
  json err;
  err["error"] = {{"code", code}, {"status", status}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driving-style analysis of vehicle trajectories"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sg_version()));
  Overrides common;

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "style report for every agent or one agent");
  an->add_option("-i,--input", analyze.input, "trajectory CSV, '-' for stdin")->default_str("-");
  an->add_option("--agent", analyze.agent, "report only this agent");
  an->add_option("-o,--out", analyze.out, "report JSON path (stdout by default)");
  an->add_option("--curves", analyze.curves, "directory for per-agent SLE/SIE CSVs");
  add_common(*an, common);

  ClassifyArgs classify;
  auto* cl = app.add_subcommand("classify", "label every agent with a trained model");
  cl->add_option("-i,--input", classify.input, "trajectory CSV, '-' for stdin")->default_str("-");
  cl->add_option("-m,--model", classify.model, "model JSON")->required();
  cl->add_option("-o,--out", classify.out, "predictions JSON path");
  add_common(*cl, common);

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "train a classifier on labeled features");
  auto* data = tr->add_option("--data", train.data, "labeled samples CSV");
  auto* synth = tr->add_option("--synthetic", train.synthetic, "generate N labeled synthetic episodes");
  data->excludes(synth);
  tr->add_option("--save-data", train.save_data, "write the generated samples CSV");
  tr->add_option("--horizon", train.horizon, "frames per synthetic episode");
  tr->add_option("--model", train.model, "perceptron or logistic");
  tr->add_option("--epochs", train.epochs, "gradient descent epochs");
  tr->add_option("--hidden", train.hidden, "hidden layer width");
  tr->add_option("--lr", train.lr, "learning rate");
  tr->add_option("--test-fraction", train.test_fraction, "held-out fraction")->check(CLI::Range(0.0, 0.99));
  tr->add_option("-o,--out", train.out, "model JSON path");
  add_common(*tr, common);

  EvaluateArgs evaluate;
  auto* ev = app.add_subcommand("evaluate", "time-deviation error against annotations");
  ev->add_option("-i,--input", evaluate.input, "trajectory CSV, '-' for stdin")->default_str("-");
  ev->add_option("-a,--annotations", evaluate.annotations, "annotation CSV")->required();
  ev->add_option("--agent", evaluate.agent, "agent to evaluate")->required();
  ev->add_option("--styles", evaluate.styles, "comma-separated styles (default: all annotated)");
  ev->add_option("-o,--out", evaluate.out, "result JSON path");
  add_common(*ev, common);

  SimulateArgs simulate;
  auto* si = app.add_subcommand("simulate", "synthetic highway episode as trajectory CSV");
  auto* preset = si->add_option("--preset", simulate.preset, "aggressive, conservative, or a style name");
  auto* params = si->add_option("--params", simulate.params, "generator params JSON");
  preset->excludes(params);
  si->add_option("--horizon", simulate.horizon, "frames to simulate");
  si->add_option("--truth", simulate.truth, "write ground-truth maneuvers CSV");
  si->add_flag("--print-params", simulate.print_params, "print the preset's generator params and exit")
      ->needs(preset);
  si->add_option("-o,--out", simulate.out, "trajectory CSV path");
  add_common(*si, common);

  CalibrateArgs calibrate;
  auto* ca = app.add_subcommand("calibrate", "tune generator params until a label's SLE band is reached");
  ca->add_option("--label", calibrate.label, "aggressive or conservative")->required();
  ca->add_option("--threshold", calibrate.threshold, "SLE threshold")->required();
  ca->add_option("--params", calibrate.params, "starting generator params JSON");
  ca->add_option("--max-iters", calibrate.max_iters, "search iterations");
  ca->add_option("--horizon", calibrate.horizon, "frames per episode");
  ca->add_option("--seeds", calibrate.seeds, "episodes per measurement");
  ca->add_option("-o,--out", calibrate.out, "result JSON path");
  add_common(*ca, common);

  ConditionArgs condition;
  auto* cs = app.add_subcommand("condition-study", "condition numbers of the fit against window length");
  cs->add_option("-d,--d", condition.degree, "polynomial degree");
  cs->add_option("--t-min", condition.t_min, "shortest window");
  cs->add_option("--t-max", condition.t_max, "longest window");
  cs->add_option("--delta", condition.delta, "condition number bound");
  cs->add_option("--origin", condition.origin, "time origin: start or center");
  cs->add_option("-o,--out", condition.out, "CSV path");
  add_common(*cs, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("usage", kUsageExit, e.what());
    return kUsageExit;
  }

  try {
    if (an->parsed()) run_analyze(analyze, common);
    if (cl->parsed()) run_classify(classify, common);
    if (tr->parsed()) {
      if (train.data.empty() && train.synthetic == 0) {
        report_error("usage", kUsageExit, "train needs --data or --synthetic");
        return kUsageExit;
      }
      run_train(train, common);
    }
    if (ev->parsed()) run_evaluate(evaluate, common);
    if (si->parsed()) {
      if (simulate.preset.empty() && simulate.params.empty()) {
        report_error("usage", kUsageExit, "simulate needs --preset or --params");
        return kUsageExit;
      }
      run_simulate(simulate, common);
    }
    if (ca->parsed()) run_calibrate(calibrate, common);
    if (cs->parsed()) run_condition_study(condition, common);
  } catch (const Failure& f) {
    report_error(sg_status_name(f.status), exit_code(f.status), f.message);
    return exit_code(f.status);
  } catch (const std::exception& e) {
    report_error("internal", kInternalExit, e.what());
    return kInternalExit;
  }
  return 0;
}
