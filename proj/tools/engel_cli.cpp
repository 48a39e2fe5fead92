// Command-line surface for the Engel-group sub-Finsler extremal library:
// classify covectors, trace and validate extremals, emit polar-curve data.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "engel/io.hpp"

namespace {

using engel::io::json;

struct CommonOpts {
  std::string region_path;
  std::string phi_str;
  std::string phi_grid_path;
  bool normalize = false;
  double T = 10.0;
  int n = 1001;
  std::string selector = "midpoint";
  std::string schedule_path;
  std::string out_path;
  std::string format = "csv";
  std::string in_path;
};

engel::Covector parse_phi(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw engel::ParseError("--phi: cannot parse '" + cell + "' as a number");
    }
  }
  if (vals.size() != 4)
    throw engel::ParseError("--phi expects four comma-separated values phi1,phi2,phi3,phi4");
  return {vals[0], vals[1], vals[2], vals[3]};
}

std::vector<engel::Covector> parse_phi_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw engel::ParseError("cannot open phi grid file: " + path);
  std::vector<engel::Covector> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_phi(line));
  }
  if (out.empty()) throw engel::ParseError("phi grid file is empty: " + path);
  return out;
}

engel::SelectorPolicy make_selector(const std::string& name) {
  engel::SelectorPolicy sel;
  if (name == "midpoint")
    sel.mode = engel::SelectorPolicy::Mode::Midpoint;
  else if (name == "min")
    sel.mode = engel::SelectorPolicy::Mode::MinAngle;
  else if (name == "max")
    sel.mode = engel::SelectorPolicy::Mode::MaxAngle;
  else
    throw engel::ParseError("--selector must be midpoint, min, or max");
  return sel;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw engel::ParseError("cannot open output file: " + out_path);
  out << text << "\n";
}

int run_classify(const CommonOpts& o) {
  const engel::ControlRegion U = engel::io::region_from_file(o.region_path);
  std::vector<engel::Covector> phis;
  if (!o.phi_grid_path.empty())
    phis = parse_phi_grid(o.phi_grid_path);
  else
    phis.push_back(parse_phi(o.phi_str));

  std::vector<std::future<json>> futs;
  futs.reserve(phis.size());
  for (const auto& phi : phis)
    futs.push_back(std::async(std::launch::async, [&U, phi, &o] {
      return engel::io::classification_to_json(
          engel::classify(phi, U, {o.normalize}));
    }));
  json out = json::array();
  for (auto& f : futs) out.push_back(f.get());
  emit(o.out_path, phis.size() == 1 ? out[0].dump(2) : out.dump(2));
  return 0;
}

struct TraceResult {
  engel::Trajectory tr;
  engel::ValidationReport rep;
};

TraceResult run_one_trace(const engel::Covector& phi, const engel::ControlRegion& U,
                          const CommonOpts& o, const engel::FamilySchedule& sched) {
  engel::TraceOptions topt;
  topt.selector = make_selector(o.selector);
  topt.schedule = sched;
  topt.normalize = o.normalize;
  TraceResult res{engel::trace(phi, U, o.T, o.n, topt), {}};
  res.rep = engel::validate(res.tr, res.tr.phi, U);
  return res;
}

void write_trace_output(const TraceResult& res, const std::string& out_path,
                        const std::string& format) {
  if (format == "json") {
    std::ofstream out(out_path);
    if (!out) throw engel::ParseError("cannot open output file: " + out_path);
    out << engel::io::trajectory_to_json(res.tr, res.rep).dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw engel::ParseError("cannot open output file: " + out_path);
  engel::io::write_trajectory_csv(out, res.tr);
  // Validation sidecar next to the CSV.
  json side;
  side["class"] = engel::io::classification_to_json(res.tr.cls);
  side["validation"] = engel::io::report_to_json(res.rep);
  std::ofstream sout(out_path + ".validation.json");
  sout << side.dump(2) << "\n";
}

int run_trace(const CommonOpts& o) {
  const engel::ControlRegion U = engel::io::region_from_file(o.region_path);
  engel::FamilySchedule sched;
  if (!o.schedule_path.empty()) sched = engel::io::schedule_from_file(o.schedule_path);
  const std::string out_path = o.out_path.empty() ? "trajectory.csv" : o.out_path;

  if (!o.phi_grid_path.empty()) {
    const auto phis = parse_phi_grid(o.phi_grid_path);
    std::vector<std::future<TraceResult>> futs;
    futs.reserve(phis.size());
    for (const auto& phi : phis)
      futs.push_back(std::async(std::launch::async, [&, phi] {
        return run_one_trace(phi, U, o, sched);
      }));
    const std::filesystem::path base(out_path);
    const std::string stem = (base.parent_path() / base.stem()).string();
    const std::string ext = base.extension().string().empty()
                                ? (o.format == "json" ? ".json" : ".csv")
                                : base.extension().string();
    json summary = json::array();
    bool all_pass = true;
    for (std::size_t i = 0; i < futs.size(); ++i) {
      TraceResult res = futs[i].get();
      const std::string path = stem + "_" + std::to_string(i) + ext;
      write_trace_output(res, path, o.format);
      summary.push_back({{"index", i},
                         {"phi", {phis[i].p1, phis[i].p2, phis[i].p3, phis[i].p4}},
                         {"out", path},
                         {"pass", res.rep.pass()}});
      all_pass = all_pass && res.rep.pass();
    }
    std::cout << summary.dump(2) << "\n";
    return all_pass ? 0 : 5;
  }

  TraceResult res = run_one_trace(parse_phi(o.phi_str), U, o, sched);
  write_trace_output(res, out_path, o.format);
  return res.rep.pass() ? 0 : 5;
}

int run_validate(const CommonOpts& o) {
  const engel::ControlRegion U = engel::io::region_from_file(o.region_path);
  const engel::Covector phi = parse_phi(o.phi_str);
  std::ifstream in(o.in_path);
  if (!in) throw engel::ParseError("cannot open trajectory file: " + o.in_path);
  engel::Trajectory tr;
  tr.samples = engel::io::read_trajectory_csv(in);
  tr.cls = engel::classify(phi, U, {o.normalize});
  tr.phi = tr.cls.phi;
  const engel::ValidationReport rep = engel::validate(tr, tr.phi, U);
  emit(o.out_path, engel::io::report_to_json(rep).dump(2));
  return rep.pass() ? 0 : 5;
}

int run_polar(const CommonOpts& o) {
  const engel::ControlRegion U = engel::io::region_from_file(o.region_path);
  const engel::PolarCurve P = U.polar();
  const int n = std::max(o.n, 8);
  if (o.format == "csv") {
    std::ostringstream out;
    out << "theta,r,r_minus,r_plus";
    for (int i = 0; i < n; ++i) {
      const double th = engel::num::two_pi * i / n;
      const auto e = P.eval(th);
      out << "\n"
          << engel::io::fmt17(th) << ',' << engel::io::fmt17(e.r) << ','
          << engel::io::fmt17(e.dminus) << ',' << engel::io::fmt17(e.dplus);
    }
    emit(o.out_path, out.str());
    return 0;
  }
  json j;
  j["region"] = engel::io::region_to_json(U);
  j["area"] = P.area();
  j["corners"] = P.corners();
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    const double th = engel::num::two_pi * i / n;
    const auto e = P.eval(th);
    rows.push_back({{"theta", th}, {"r", e.r}, {"r_minus", e.dminus}, {"r_plus", e.dplus}});
  }
  j["samples"] = rows;
  emit(o.out_path, j.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremals of left-invariant sub-Finsler metrics on the Engel group"};
  app.require_subcommand(1);
  CommonOpts o;

  auto add_common = [&](CLI::App* cmd, bool needs_phi) {
    cmd->add_option("--region", o.region_path, "control region JSON file")->required();
    if (needs_phi) {
      cmd->add_option("--phi", o.phi_str, "phi1,phi2,phi3,phi4");
      cmd->add_option("--phi-grid", o.phi_grid_path, "file with one phi per line");
    }
    cmd->add_flag("--normalize", o.normalize, "rescale phi so (phi1,phi2) lies on the polar boundary");
    cmd->add_option("--out", o.out_path, "output path ('-' = stdout)");
    cmd->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* c_classify = app.add_subcommand("classify", "classify a covector");
  add_common(c_classify, true);

  CLI::App* c_trace = app.add_subcommand("trace", "trace and validate an extremal");
  add_common(c_trace, true);
  c_trace->add_option("--T", o.T, "time horizon (nonzero; negative traces backward)");
  c_trace->add_option("--n", o.n, "sample count (>= 2)");
  c_trace->add_option("--selector", o.selector, "midpoint|min|max corner control selector");
  c_trace->add_option("--schedule", o.schedule_path, "family schedule JSON file");

  CLI::App* c_validate = app.add_subcommand("validate", "validate a trajectory CSV");
  add_common(c_validate, true);
  c_validate->add_option("--in", o.in_path, "trajectory CSV produced by trace")->required();

  CLI::App* c_polar = app.add_subcommand("polar", "emit polar-curve data");
  add_common(c_polar, false);
  c_polar->add_option("--n", o.n, "number of theta samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(c_classify)) {
      if (o.phi_str.empty() && o.phi_grid_path.empty())
        throw engel::ParseError("--phi or --phi-grid is required");
      return run_classify(o);
    }
    if (app.got_subcommand(c_trace)) {
      if (o.phi_str.empty() && o.phi_grid_path.empty())
        throw engel::ParseError("--phi or --phi-grid is required");
      return run_trace(o);
    }
    if (app.got_subcommand(c_validate)) {
      if (o.phi_str.empty()) throw engel::ParseError("--phi is required");
      return run_validate(o);
    }
    if (app.got_subcommand(c_polar)) return run_polar(o);
  } catch (const engel::CovectorNotOnPolar& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const engel::ZeroCovector& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const engel::AbnormalWithNonzeroH& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const engel::DivergentIntegral& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const engel::ScheduleInvalid& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const engel::DegenerateDenominator& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const engel::OutsideBranch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const engel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
