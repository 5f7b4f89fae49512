#include "harness.hpp"

#include "hamiltonians.hpp"
#include "rate.hpp"
#include "semigroup.hpp"
#include "tataru.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sndiff {

namespace fs = std::filesystem;
using nlohmann::json;

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = kSchemaVersion;
    j["experiment"] = cfg.experiment;
    j["model"] = json::parse(model_to_json(cfg.model));
    j["sim"] = json::parse(cfg.sim.to_json());
    j["params"] = cfg.params;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out_dir;
    return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.contains("schema") && j["schema"] != kSchemaVersion)
        throw std::invalid_argument("config schema mismatch: expected " +
                                    std::string(kSchemaVersion));
    ExperimentConfig cfg;
    cfg.experiment = j.at("experiment").get<std::string>();
    cfg.model = model_from_json(j.at("model").dump());
    if (j.contains("sim")) cfg.sim = SimConfig::from_json(j["sim"].dump());
    if (j.contains("params")) cfg.params = j["params"];
    cfg.seed = j.value("seed", 0ULL);
    cfg.out_dir = j.value("out", std::string("out"));
    return cfg;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    // the output location is not part of the experiment's identity: the same
    // run written to two directories must hash (and reproduce) identically
    json j = json::parse(config_to_json(cfg));
    j.erase("out");
    const std::string s = j.dump(2);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

SlopeFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    SlopeFit fit;
    fit.points = static_cast<int>(xs.size());
    if (fit.points < 2) return fit;
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - fit.intercept - fit.slope * xs[i];
        sse += r * r;
    }
    if (fit.points > 2) fit.stderr_slope = std::sqrt(sse / (fit.points - 2) / sxx);
    return fit;
}

namespace {

Vec vec_from_json(const json& j) {
    Vec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[static_cast<long>(i)] = j[i].get<double>();
    return v;
}

Vec param_vec(const json& params, const std::string& key, int size) {
    if (!params.contains(key)) return Vec::Zero(size);
    Vec v = vec_from_json(params[key]);
    if (v.size() != size) throw std::invalid_argument("parameter '" + key + "' has wrong length");
    return v;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

TestFunctional functional_from_json(const json& j, int size) {
    const std::string kind = j.value("kind", std::string("linear-clip"));
    if (kind == "linear-clip")
        return TestFunctional::linear_clip(param_vec(j, "p", size), j.value("clip", 1.0));
    if (kind == "quad-clip")
        return TestFunctional::quad_clip(param_vec(j, "center", size), j.value("c", 1.0),
                                         j.value("clip", 1.0));
    if (kind == "radial-bump")
        return TestFunctional::radial_bump(param_vec(j, "center", size), j.value("amp", 1.0),
                                           j.value("width", 1.0));
    throw std::invalid_argument("unknown functional kind: " + kind);
}

struct OutputWriter {
    fs::path root;
    std::string stamp;   // provenance lines embedded in every file

    OutputWriter(const ExperimentConfig& cfg) : root(cfg.out_dir) {
        fs::create_directories(root / "tables");
        fs::create_directories(root / "paths");
        std::ostringstream os;
        os << std::hex << config_hash(cfg);
        stamp = "# schema=" + std::string(kSchemaVersion) + "\n# config_hash=" + os.str() +
                "\n# rng=" + std::string(kRngId) + "\n";
    }

    void csv(const std::string& rel, const std::string& header,
             const std::vector<std::string>& rows) const {
        std::ofstream f(root / rel);
        f << stamp << header << "\n";
        for (const auto& r : rows) f << r << "\n";
    }

    void summary(const ExperimentConfig& cfg, json result) const {
        json j;
        j["schema"] = kSchemaVersion;
        j["rng"] = kRngId;
        std::ostringstream os;
        os << std::hex << config_hash(cfg);
        j["config_hash"] = os.str();
        json recorded = json::parse(config_to_json(cfg));
        recorded.erase("out");   // location-independent, like the hash
        j["config"] = std::move(recorded);
        j["result"] = std::move(result);
        std::ofstream f(root / "summary.json");
        f << j.dump(2) << "\n";
    }
};

std::string path_csv_rows(const Path& p, std::vector<std::string>& rows) {
    std::ostringstream head;
    head << "t";
    for (int i = 0; i < p.states[0].size(); ++i) head << ",c" << i;
    for (size_t s = 0; s < p.states.size(); ++s) {
        std::ostringstream row;
        row << format_double(p.time(static_cast<int>(s)));
        for (int i = 0; i < p.states[s].size(); ++i)
            row << "," << format_double(p.states[s][i]);
        rows.push_back(row.str());
    }
    return head.str();
}

int run_simulate(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const Vec x0 = param_vec(cfg.params, "x0", cfg.model.state_size());
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    const Path p = simulate_path(cfg.model, x0, sim);
    std::vector<std::string> rows;
    const std::string head = path_csv_rows(p, rows);
    out.csv("paths/path.csv", head, rows);

    res["final_norm"] = p.states.back().norm();
    res["steps"] = p.intervals();
    if (sim.ensemble > 1) {
        const EnsembleResult ens = simulate_ensemble(
            cfg.model, x0, sim, [](const Path& q) { return q.states.back().norm(); });
        std::vector<std::string> erows;
        for (size_t i = 0; i < ens.samples.size(); ++i) {
            std::ostringstream row;
            row << i << "," << ens.seeds[i] << "," << format_double(ens.samples[i]);
            erows.push_back(row.str());
        }
        out.csv("tables/ensemble.csv", "member,stream_seed,final_norm", erows);
        res["aborted"] = ens.aborted.size();
    }
    res["pass"] = true;
    return 0;
}

int run_ldp_slope(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const int sz = cfg.model.state_size();
    const Vec x0 = param_vec(cfg.params, "x0", sz);
    const Vec x1 = param_vec(cfg.params, "x1", sz);
    const double delta = cfg.params.value("delta", 0.2);
    const double T = cfg.params.value("T", 1.0);
    const int slices = cfg.params.value("slices", 64);
    std::vector<double> n_list = cfg.params.value("n_list", std::vector<double>{4, 16, 64});
    std::vector<int> ensembles;
    if (cfg.params.contains("ensemble") && cfg.params["ensemble"].is_array())
        ensembles = cfg.params["ensemble"].get<std::vector<int>>();
    else
        ensembles.push_back(cfg.params.value("ensemble", 100000));

    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    const LdpSlopeResult r =
        ldp_slope(cfg.model, x0, x1, delta, T, n_list, ensembles, sim, slices);

    std::vector<std::string> rows;
    for (size_t i = 0; i < r.n_values.size(); ++i) {
        const double freq = std::max(1, r.hits[i]) / static_cast<double>(r.trials[i]);
        std::ostringstream row;
        row << format_double(r.n_values[i]) << "," << r.trials[i] << "," << r.hits[i] << ","
            << (r.censored[i] ? 1 : 0) << "," << format_double(freq) << ","
            << format_double(-std::log(freq) / r.n_values[i]);
        rows.push_back(row.str());
    }
    out.csv("tables/ldp_slope.csv", "n,trials,hits,censored,freq,minus_log_freq_over_n", rows);

    res["slope"] = r.fit.slope;
    res["cost_estimate"] = -r.fit.slope;
    res["action_infimum"] = r.action_infimum;
    res["rel_error"] = r.rel_error;
    res["conclusive"] = r.conclusive;
    const double tol = cfg.params.value("rel_tol", 0.15);
    const bool pass = r.conclusive && r.rel_error <= tol;
    res["pass"] = pass;
    return pass ? 0 : 1;
}

int run_map(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const int sz = cfg.model.state_size();
    const Vec x0 = param_vec(cfg.params, "x0", sz);
    const Vec x1 = param_vec(cfg.params, "x1", sz);
    const double T = cfg.params.value("T", 1.0);
    const int slices = cfg.params.value("slices", 64);
    OptimOptions opts;
    opts.max_iters = cfg.params.value("max_iters", 5000);

    const MapResult mr = minimize_action(cfg.model, x0, x1, T, slices, opts);
    std::vector<std::string> rows;
    const std::string head = path_csv_rows(mr.path, rows);
    out.csv("paths/map.csv", head, rows);

    res["action"] = mr.report.total;
    res["converged"] = mr.converged;
    res["iterations"] = mr.iterations;
    res["grad_norm"] = mr.grad_norm;
    if (cfg.params.value("refine", true)) {
        const MapResult fine =
            minimize_action(cfg.model, x0, x1, T, 2 * slices, opts);
        res["action_refined"] = fine.report.total;
        res["refinement_decrease"] = mr.report.total - fine.report.total;
    }
    const double gc = gradient_check(cfg.model, mr.path.states, mr.path.dt, 8, cfg.seed + 1);
    res["gradient_check"] = gc;
    const bool pass = mr.converged && gc <= 1e-5;
    res["pass"] = pass;
    return pass ? 0 : 1;
}

int run_semigroup_compare(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const int sz = cfg.model.state_size();
    const Vec x0 = param_vec(cfg.params, "x0", sz);
    const double T = cfg.params.value("T", 1.0);
    const int slices = cfg.params.value("slices", 64);
    const double rel_tol = cfg.params.value("rel_tol", 0.10);
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;

    std::vector<std::string> rows;
    bool pass = true;
    double worst = 0.0;
    int idx = 0;
    for (const json& fj : cfg.params.value("functionals", json::array())) {
        const TestFunctional f = functional_from_json(fj, sz);
        const VnResult vn = vn_estimate(cfg.model, x0, T, f, sim);
        const VControlResult vc = v_control(cfg.model, x0, T, f, slices);
        const double ref = std::max(1e-8, std::abs(vc.value));
        const double rel = std::abs(vn.value - vc.value) / ref;
        worst = std::max(worst, rel);
        pass = pass && rel <= rel_tol;
        std::ostringstream row;
        row << idx++ << "," << fj.value("kind", "linear-clip") << ","
            << format_double(vn.value) << "," << format_double(vn.std_error) << ","
            << format_double(vc.value) << "," << format_double(rel);
        rows.push_back(row.str());
    }
    out.csv("tables/semigroup_compare.csv",
            "functional,kind,vn_estimate,vn_stderr,v_control,rel_gap", rows);
    res["max_rel_gap"] = worst;
    res["pass"] = pass;
    return pass ? 0 : 1;
}

int run_resolvent_iterate(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    Grid1D grid;
    grid.a = cfg.params.value("grid_a", -2.0);
    grid.b = cfg.params.value("grid_b", 2.0);
    grid.points = cfg.params.value("grid_points", 129);
    const double t = cfg.params.value("t", 1.0);
    std::vector<int> k_list = cfg.params.value("k_list", std::vector<int>{8, 16, 32, 64});

    const TestFunctional f = functional_from_json(
        cfg.params.value("h", json{{"kind", "linear-clip"}, {"p", {1.0}}, {"clip", 4.0}}), 1);
    Vec h(grid.points);
    Vec xv(1);
    for (int i = 0; i < grid.points; ++i) {
        xv[0] = grid.x(i);
        h[i] = f.eval(xv);
    }

    std::vector<std::string> rows;
    Vec prev;
    std::vector<double> gaps;
    bool converged = true;
    for (int k : k_list) {
        const IterateResult it = semigroup_iterate(h, t, k, cfg.model, grid);
        converged = converged && it.converged;
        double gap = std::numeric_limits<double>::quiet_NaN();
        if (prev.size()) gap = (it.values - prev).lpNorm<Eigen::Infinity>();
        if (prev.size()) gaps.push_back(gap);
        std::ostringstream row;
        row << k << "," << format_double(gap) << "," << (it.converged ? 1 : 0);
        rows.push_back(row.str());
        prev = it.values;
    }
    out.csv("tables/resolvent_iterate.csv", "k,sup_gap_to_previous,converged", rows);

    bool monotone = true;
    for (size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] <= gaps[i - 1];
    res["gaps"] = gaps;
    res["monotone"] = monotone;
    res["converged"] = converged;
    const bool pass = monotone && converged;
    res["pass"] = pass;
    return pass ? 0 : 1;
}

int run_containment(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const int sz = cfg.model.state_size();
    const Vec x0 = param_vec(cfg.params, "x0", sz);
    const double c1 = cfg.params.value("c1", 4.0);
    const double T = cfg.params.value("T", 0.5);
    const int ensemble = cfg.params.value("ensemble", 4000);
    std::vector<double> n_list = cfg.params.value("n_list", std::vector<double>{64, 128, 256});
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;

    const ContainmentResult r =
        containment_experiment(cfg.model, x0, c1, T, n_list, ensemble, sim);
    std::vector<std::string> rows;
    for (const auto& c : r.cells) {
        std::ostringstream row;
        row << format_double(c.n) << "," << c.trials << "," << c.exceed << "," << c.aborted
            << "," << (c.censored ? 1 : 0) << "," << format_double(c.freq);
        rows.push_back(row.str());
    }
    out.csv("tables/containment.csv", "n,trials,exceed,aborted,censored,freq", rows);
    res = json::parse(r.to_json());
    const bool pass = r.monotone && (r.fitted_cells < 2 || r.slope < 0.0);
    res["pass"] = pass;
    return pass ? 0 : 1;
}

int run_tataru_experiment(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const int samples = cfg.params.value("samples", 500);
    const int dim = cfg.params.value("dim", 1);
    const int m = cfg.params.value("m", 4);

    bool pass = true;
    double worst = -std::numeric_limits<double>::infinity();
    json suites = json::object();
    const std::vector<std::pair<std::string, SemigroupHandle>> semis = {
        {"scalar-decay", SemigroupHandle::scalar_decay(1.0)},
        {"spectral-heat", SemigroupHandle::spectral_heat(dim, m)},
    };
    std::vector<std::string> rows;
    for (const auto& [name, S] : semis) {
        const int sz = S.rates.size() ? static_cast<int>(S.rates.size()) : 1;
        const auto reports = ::sndiff::run_tataru_suite(S, sz, samples, cfg.seed);
        suites[name] = json::parse(suite_reports_to_json(reports));
        for (const auto& r : reports) {
            pass = pass && r.pass;
            worst = std::max(worst, r.max_violation);
            std::ostringstream row;
            row << name << "," << r.suite << "," << r.samples << ","
                << format_double(r.max_violation) << "," << (r.pass ? 1 : 0);
            rows.push_back(row.str());
        }
    }
    out.csv("tables/tataru_suite.csv", "semigroup,suite,samples,max_violation,pass", rows);
    res["suites"] = suites;
    res["max_violation"] = worst;
    res["pass"] = pass;
    return pass ? 0 : 1;
}

int run_dissipativity_suite(const ExperimentConfig& cfg, const OutputWriter& out, json& res) {
    const int trials = cfg.params.value("trials", 500);
    const DissipativityReport rep = dissipativity_check(cfg.model, trials, cfg.seed);
    const ScalingReport sc = scaling_check(cfg.model);

    std::vector<std::string> rows;
    {
        std::ostringstream row;
        row << family_name(cfg.model.family) << "," << rep.trials << ","
            << format_double(rep.max_inner) << "," << (rep.pass ? 1 : 0);
        rows.push_back(row.str());
    }
    out.csv("tables/dissipativity.csv", "family,trials,max_inner,pass", rows);

    res["max_inner"] = rep.max_inner;
    res["dissipative"] = rep.pass;
    res["scaling_ratio"] = sc.ratio;
    res["scaling_ok"] = sc.pass;
    const bool pass = rep.pass;
    res["pass"] = pass;
    return pass ? 0 : 1;
}

} // namespace

LdpSlopeResult ldp_slope(const ModelSpec& model, const Vec& x0, const Vec& x1, double delta,
                         double T, const std::vector<double>& n_list,
                         const std::vector<int>& ensembles, const SimConfig& sim_template,
                         int slices) {
    if (ensembles.empty() || (ensembles.size() != 1 && ensembles.size() != n_list.size()))
        throw std::invalid_argument("ldp_slope: need one ensemble size, or one per noise level");
    LdpSlopeResult res;

    for (size_t ni = 0; ni < n_list.size(); ++ni) {
        ModelSpec spec = model;
        spec.n = n_list[ni];
        SimConfig cfg = sim_template;
        cfg.T = T;
        cfg.ensemble = ensembles.size() == 1 ? ensembles[0] : ensembles[ni];
        const EnsembleResult ens = simulate_ensemble(
            spec, x0, cfg,
            [&](const Path& p) { return (p.states.back() - x1).norm() <= delta ? 1.0 : 0.0; });
        int hits = 0;
        for (double v : ens.completed()) hits += v > 0.5 ? 1 : 0;
        res.n_values.push_back(n_list[ni]);
        res.trials.push_back(cfg.ensemble);
        res.hits.push_back(hits);
        res.censored.push_back(hits < 5);
    }

    // segment net of the ball along the approach direction (upper bound on inf)
    Vec dir = x1 - x0;
    if (dir.norm() < 1e-14) dir = Vec::Unit(x0.size(), 0);
    dir /= dir.norm();
    res.action_infimum = std::numeric_limits<double>::infinity();
    OptimOptions opts;
    for (int i = 0; i < 9; ++i) {
        const Vec target = x1 + dir * (delta * (-1.0 + 0.25 * i));
        const MapResult mr = minimize_action(model, x0, target, T, slices, opts);
        res.action_infimum = std::min(res.action_infimum, mr.report.total);
    }

    std::vector<double> xs, ys;
    for (size_t i = 0; i < res.n_values.size(); ++i)
        if (!res.censored[i]) {
            xs.push_back(res.n_values[i]);
            ys.push_back(std::log(static_cast<double>(res.hits[i]) / res.trials[i]));
        }
    res.fit = fit_line(xs, ys);
    res.conclusive = res.fit.points >= 2;
    if (res.conclusive && res.action_infimum > 0)
        res.rel_error = std::abs(-res.fit.slope - res.action_infimum) / res.action_infimum;
    return res;
}

int run_experiment(const ExperimentConfig& cfg, std::string* summary_out) {
    const std::string diag = validate_model(cfg.model);
    if (!diag.empty()) throw std::invalid_argument("invalid model: " + diag);

    OutputWriter out(cfg);
    json res;
    int status = 0;
    if (cfg.experiment == "simulate")
        status = run_simulate(cfg, out, res);
    else if (cfg.experiment == "ldp-slope")
        status = run_ldp_slope(cfg, out, res);
    else if (cfg.experiment == "map")
        status = run_map(cfg, out, res);
    else if (cfg.experiment == "semigroup-compare")
        status = run_semigroup_compare(cfg, out, res);
    else if (cfg.experiment == "resolvent-iterate")
        status = run_resolvent_iterate(cfg, out, res);
    else if (cfg.experiment == "containment")
        status = run_containment(cfg, out, res);
    else if (cfg.experiment == "tataru-suite")
        status = run_tataru_experiment(cfg, out, res);
    else if (cfg.experiment == "dissipativity-suite")
        status = run_dissipativity_suite(cfg, out, res);
    else
        throw std::invalid_argument("unknown experiment: " + cfg.experiment);

    out.summary(cfg, res);
    if (summary_out) {
        std::ifstream f(fs::path(cfg.out_dir) / "summary.json");
        std::stringstream ss;
        ss << f.rdbuf();
        *summary_out = ss.str();
    }
    return status;
}

} // namespace sndiff
