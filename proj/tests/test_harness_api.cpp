#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "harness.hpp"
#include "sndiff.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

using namespace sndiff;
namespace fs = std::filesystem;

namespace {
std::string ac_config(const std::string& experiment, const std::string& out_dir,
                      const std::string& extra_params = "{}") {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["experiment"] = experiment;
    j["model"] = nlohmann::json::parse(model_to_json([] {
        ModelSpec spec;
        spec.family = Family::AllenCahn;
        spec.dim = 1;
        spec.m = 4;
        spec.n = 64.0;
        spec.potential = make_potential("double-well");
        spec.noise = make_noise("additive-identity", 1, 4);
        return spec;
    }()));
    j["sim"] = nlohmann::json::parse(SimConfig{}.to_json());
    j["sim"]["dt"] = 1e-3;
    j["sim"]["T"] = 0.05;
    j["params"] = nlohmann::json::parse(extra_params);
    j["seed"] = 42;
    j["out"] = out_dir;
    return j.dump();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
} // namespace

TEST_CASE("config round trip and hash stability") {
    const std::string text = ac_config("simulate", "out_cfg");
    const ExperimentConfig cfg = config_from_json(text);
    CHECK(cfg.experiment == "simulate");
    CHECK(cfg.model.m == 4);
    CHECK(cfg.seed == 42);

    const ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));

    // any parameter change moves the hash
    ExperimentConfig other = cfg;
    other.seed = 43;
    CHECK(config_hash(other) != config_hash(cfg));

    CHECK_THROWS(config_from_json("{\"experiment\":\"nonsense\"}"));
}

TEST_CASE("line fit on exact data") {
    const SlopeFit f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.stderr_slope <= 1e-12);
    CHECK(f.points == 4);
}

TEST_CASE("experiment outputs are reproducible byte for byte") {
    const fs::path dir1 = fs::temp_directory_path() / "sndiff_rep1";
    const fs::path dir2 = fs::temp_directory_path() / "sndiff_rep2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    std::string s1, s2;
    CHECK(run_experiment(config_from_json(ac_config("simulate", dir1.string())), &s1) == 0);
    CHECK(run_experiment(config_from_json(ac_config("simulate", dir2.string())), &s2) == 0);

    REQUIRE(fs::exists(dir1 / "summary.json"));
    REQUIRE(fs::exists(dir2 / "summary.json"));
    for (const auto& entry : fs::recursive_directory_iterator(dir1)) {
        if (!entry.is_regular_file()) continue;
        const fs::path other = dir2 / fs::relative(entry.path(), dir1);
        REQUIRE(fs::exists(other));
        CHECK(slurp(entry.path()) == slurp(other));
    }

    // header carries schema, config hash, and generator id
    bool found_csv = false;
    for (const auto& entry : fs::recursive_directory_iterator(dir1)) {
        if (entry.path().extension() != ".csv") continue;
        found_csv = true;
        const std::string body = slurp(entry.path());
        CHECK(body.find(kSchemaVersion) != std::string::npos);
        CHECK(body.find("config_hash") != std::string::npos);
        CHECK(body.find(kRngId) != std::string::npos);
    }
    CHECK(found_csv);

    const nlohmann::json sum = nlohmann::json::parse(s1);
    CHECK(sum["schema"] == kSchemaVersion);
    CHECK(sum["rng"] == kRngId);
    CHECK(sum.contains("config_hash"));

    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("dissipativity experiment reports pass") {
    const fs::path dir = fs::temp_directory_path() / "sndiff_diss";
    fs::remove_all(dir);
    std::string summary;
    const int status = run_experiment(
        config_from_json(ac_config("dissipativity-suite", dir.string(),
                                   "{\"trials\":200}")),
        &summary);
    CHECK(status == 0);
    const nlohmann::json sum = nlohmann::json::parse(summary);
    CHECK(sum["result"]["pass"].get<bool>());
    fs::remove_all(dir);
}

// ------------------------------------------------------------------ C API

TEST_CASE("C API: version strings") {
    CHECK(sn_version() != nullptr);
    CHECK(std::strcmp(sn_rng_id(), "splitmix64-boxmuller-v1") == 0);
}

namespace {
const char* kOuJson =
    "{\"family\":\"finite-dim-fw\",\"dim\":1,\"n\":1.0,"
    "\"drift\":{\"name\":\"ou\",\"rate\":1.0},\"sigma\":{\"name\":\"identity\"}}";
}

TEST_CASE("C API: simulate, action, minimize") {
    sn_model* model = nullptr;
    REQUIRE(sn_model_create(kOuJson, &model) == SN_OK);
    REQUIRE(model != nullptr);
    CHECK(sn_model_state_size(model) == 1);

    const double x0 = 1.0;
    sn_path* path = nullptr;
    REQUIRE(sn_simulate(model, &x0, 1,
                        "{\"dt\":1e-3,\"T\":1.0,\"seed\":7,\"noise_off\":true}",
                        &path) == SN_OK);
    REQUIRE(path != nullptr);
    CHECK(sn_path_nodes(path) == 1001);
    CHECK(sn_path_state_size(path) == 1);
    CHECK(sn_path_dt(path) == doctest::Approx(1e-3));
    double tail = 0.0;
    REQUIRE(sn_path_state(path, 1000, &tail, 1) == SN_OK);
    CHECK(tail == doctest::Approx(std::exp(-1.0)).epsilon(1e-2));

    double act = -1.0;
    REQUIRE(sn_action(model, path, &act) == SN_OK);
    CHECK(act <= 1e-6);   // the deterministic flow costs nothing

    const double target = 1.0, origin = 0.0;
    sn_path* inst = nullptr;
    double cost = 0.0;
    REQUIRE(sn_minimize_action(model, &origin, &target, 1, 1.0, 64, &inst, &cost) == SN_OK);
    const double exact = (std::exp(2.0) - 1.0) / (4.0 * std::sinh(1.0) * std::sinh(1.0));
    CHECK(cost == doctest::Approx(exact).epsilon(5e-3));
    double end = 0.0;
    REQUIRE(sn_path_state(inst, 64, &end, 1) == SN_OK);
    CHECK(end == doctest::Approx(1.0).epsilon(1e-12));

    sn_path_free(inst);
    sn_path_free(path);
    sn_model_free(model);
}

TEST_CASE("C API: error paths set sn_last_error") {
    sn_model* model = nullptr;
    CHECK(sn_model_create("not json", &model) != SN_OK);
    CHECK(model == nullptr);
    CHECK(std::strlen(sn_last_error()) > 0);

    CHECK(sn_model_create(nullptr, &model) == SN_ERR_INVALID_ARGUMENT);

    REQUIRE(sn_model_create(kOuJson, &model) == SN_OK);
    sn_path* path = nullptr;
    const double x0[2] = {1.0, 2.0};
    // wrong state size
    CHECK(sn_simulate(model, x0, 2, "{\"dt\":1e-3,\"T\":0.1}", &path) ==
          SN_ERR_INVALID_ARGUMENT);
    CHECK(path == nullptr);
    // invalid sim config
    CHECK(sn_simulate(model, x0, 1, "{\"dt\":-1.0}", &path) != SN_OK);
    sn_model_free(model);
}

TEST_CASE("C API: experiment runner") {
    const fs::path dir = fs::temp_directory_path() / "sndiff_capi_exp";
    fs::remove_all(dir);
    int status = -1;
    char* summary = nullptr;
    REQUIRE(sn_run_experiment(ac_config("simulate", dir.string()).c_str(), &status,
                              &summary) == SN_OK);
    CHECK(status == 0);
    REQUIRE(summary != nullptr);
    CHECK(nlohmann::json::parse(summary)["config"]["experiment"] == "simulate");
    sn_string_free(summary);
    fs::remove_all(dir);

    CHECK(sn_run_experiment("still not json", &status, nullptr) != SN_OK);
}
