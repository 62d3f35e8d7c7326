#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "ncstar/errors.hpp"
#include "ncstar/grid.hpp"

using namespace ncstar;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream o, e;
    Run r;
    r.code = cli::run_cli(args, o, e);
    r.out = o.str();
    r.err = e.str();
    return r;
}

std::filesystem::path scratch() {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() / ("ncstar_cli_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

std::string config_file(const std::string& name, const std::string& text) {
    auto p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

// value printed after "key: " on the summary stream
double reported(const std::string& err, const std::string& key) {
    auto at = err.find(key + ": ");
    REQUIRE(at != std::string::npos);
    return std::stod(err.substr(at + key.size() + 2));
}

GridSymbol csv(const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
}

cli::Exit config_kind(const std::string& text) {
    try {
        cli::parse_config(text);
    } catch (const Error& e) {
        return e.kind() == ErrorKind::Guard ? cli::kGuard : cli::kConfig;
    }
    return cli::kOk;
}

} // namespace

TEST_CASE("config grammar") {
    cli::RunConfig d = cli::default_config();
    CHECK(d.n() == 2);
    CHECK(d.params.hbar == 1.0);
    CHECK(d.params.theta(0, 1) == 0.1);
    CHECK(d.params.eta(1, 0) == -0.05);
    REQUIRE(d.params.exact);
    CHECK(d.params.exact->theta[1] == mpq_class(1, 10));

    cli::RunConfig c = cli::parse_config("# comment\nn = 3   # trailing\nhbar = 1/2\n"
                                         "theta = 0 1/8 0, -1/8 0 0, 0 0 0\n"
                                         "[basis]\nK = 6\nMx = 64\n[tol]\nspectral = 1e-3\n");
    CHECK(c.n() == 3);
    CHECK(c.params.hbar == 0.5);
    CHECK(c.params.theta(0, 1) == 0.125);
    CHECK(c.params.eta.isZero());
    CHECK(c.tolerance("spectral", 1) == 1e-3);
    CHECK(c.tolerance("grid", 7) == 7);
    CHECK(c.entries.size() == 6);
    CHECK(c.basis->K == 6);
    CHECK(!c.grid);
    cli::RunConfig g = cli::parse_config("n = 1\n[grid]\nL = 4\nM = 8\n");
    CHECK(g.grid == PhaseGrid{1, 4.0, 8, 1.0});
    cli::RunConfig t = cli::parse_config("theta12 = 0.2\n");
    CHECK(t.params.theta(0, 1) == 0.2);
    CHECK(t.params.eta.isZero());

    CHECK(config_kind("n = 1\n") == cli::kOk);
    CHECK(config_kind("foo = 1\n") == cli::kConfig);
    CHECK(config_kind("[grid]\nK = 4\n") == cli::kConfig);
    CHECK(config_kind("[extra]\n") == cli::kConfig);
    CHECK(config_kind("n = 2\nn = 2\n") == cli::kConfig);
    CHECK(config_kind("n = 3\ntheta12 = 0.1\n") == cli::kConfig);
    CHECK(config_kind("theta12 = 0.1\ntheta = 0 1, -1 0\n") == cli::kConfig);
    CHECK(config_kind("theta = 0 1, 1 0\n") == cli::kConfig);
    CHECK(config_kind("hbar = 0\n") == cli::kConfig);
    CHECK(config_kind("hbar = x\n") == cli::kConfig);
    CHECK(config_kind("theta12 = 1\neta12 = 1\n") == cli::kConfig);
    CHECK(config_kind("[grid]\nM = 6\n") == cli::kConfig);
    CHECK(config_kind("[grid]\nM = 9\n") == cli::kConfig);
    CHECK(config_kind("[grid]\nM = 64\n") == cli::kConfig);
    CHECK(config_kind("n = 1\n[grid]\nM = 1024\n") == cli::kOk);
    CHECK(config_kind("[basis]\nK = 40\n") == cli::kConfig);
    CHECK(config_kind("[schedule]\nalpha_theta = 2\n") == cli::kConfig);
    CHECK(config_kind("n = 3\n[grid]\nM = 8\n") == cli::kConfig);
    CHECK(config_kind("key without equals\n") == cli::kConfig);
}

TEST_CASE("verify") {
    SUBCASE("poly suite on the default config") {
        Run r = run({"verify", "--suite", "poly"});
        CHECK(r.code == 0);
        CHECK(r.err.find("ccr_table: pass") != std::string::npos);
        json j = json::parse(r.out);
        CHECK(j["pass"] == true);
        CHECK(j["config"]["n"] == 2);
        bool found = false;
        for (const auto& s : j["summary"]) found = found || s == "ccr_table: pass";
        CHECK(found);
        for (const auto& k : j["checks"]) {
            CHECK(k.contains("name"));
            CHECK(k["value"].is_number());
            CHECK(k["tol"].is_number());
            CHECK(k["pass"].is_boolean());
        }
    }
    SUBCASE("reports are byte-identical across runs") {
        Run a = run({"verify", "--suite", "poly", "--seed", "17"});
        Run b = run({"verify", "--suite", "poly", "--seed", "17"});
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(json::parse(a.out)["config"]["seed"] == 17);
    }
    SUBCASE("boundary parameters") {
        Run r = run({"verify", "--suite", "poly", "--config", config_file("b.ini", "theta12 = 1\neta12 = 1\n")});
        CHECK(r.code == 2);
        CHECK(r.err.find("inadmissible") != std::string::npos);
        CHECK(r.out.empty());
    }
    SUBCASE("coarse grid") {
        Run r = run({"verify", "--suite", "grid", "--config", config_file("m6.ini", "[grid]\nM = 6\n")});
        CHECK(r.code == 2);
    }
    SUBCASE("grid suites need n <= 2") {
        CHECK(run({"verify", "--suite", "all", "--config", config_file("n3.ini", "n = 3\n")}).code == 2);
        CHECK(run({"verify", "--suite", "poly", "--config", config_file("n3.ini", "n = 3\n")}).code == 0);
    }
    SUBCASE("a failing tolerance gives exit 1") {
        Run r = run({"verify", "--suite", "grid", "--tol", "1e-30", "--config",
                     config_file("g1.ini", "n = 1\n[grid]\nM = 32\n")});
        CHECK(r.code == 1);
        CHECK(r.err.find("FAIL") != std::string::npos);
        CHECK(json::parse(r.out)["pass"] == false);
    }
    SUBCASE("grid suite, n = 1") {
        Run r = run({"verify", "--suite", "grid", "--config", config_file("g1.ini", "n = 1\n")});
        CHECK(r.code == 0);
        CHECK(r.err.find("moyal_reduction: pass") != std::string::npos);
    }
    SUBCASE("spectral suite, n = 1") {
        Run r = run({"verify", "--suite", "spectral", "--config", config_file("s1.ini", "n = 1\n")});
        CHECK(r.code == 0);
    }
}

TEST_CASE("star") {
    SUBCASE("Bopp expansion of x1 * x2") {
        Run r = run({"star", "--a", "x1", "--b", "x2", "--method", "bopp", "--config",
                     config_file("t.ini", "theta12 = 0.5\neta12 = 0\n")});
        REQUIRE(r.code == 0);
        json j = json::parse(r.out);
        CHECK(j["exact"] == true);
        REQUIRE(j["terms"].size() == 2);
        std::map<std::string, std::string> terms;
        for (const auto& t : j["terms"]) terms[t["monomial"]] = t["coef"];
        CHECK(terms["x1*x2"] == "1");
        CHECK(terms["const"] == "1/4i");
        CHECK(r.err.find("no truncation") != std::string::npos);
    }
    SUBCASE("unit left factor") {
        Run r = run({"star", "--a", "1", "--b", "x1*p2 - 3/2"});
        Run b = run({"star", "--a", "x1*p2 - 3/2", "--b", "1"});
        REQUIRE(r.code == 0);
        CHECK(json::parse(r.out)["terms"] == json::parse(b.out)["terms"]);
        json t = json::parse(r.out)["terms"];
        CHECK(t.size() == 2);

        auto g = config_file("u.ini", "n = 1\n[grid]\nM = 16\n");
        const std::string e = "(1 + p1)*exp(-(x1^2 + p1^2))";
        Run f = run({"star", "--a", "1", "--b", e, "--method", "fft", "--config", g});
        REQUIRE(f.code == 0);
        GridSymbol want = sample(parse(e, 1), PhaseGrid{1, 6.0, 16, 1.0});
        CHECK(csv(f.out).samples == want.samples);
    }
    SUBCASE("fft against bopp on a damped fixture") {
        auto g = config_file("c.ini", "n = 1\n[grid]\nM = 32\n");
        Run r = run({"star", "--a", "x1", "--b", "(1 + p1)*exp(-(x1^2 + p1^2))", "--method", "fft", "--compare",
                     "bopp", "--tol", "1e-6", "--config", g});
        CHECK(r.code == 0);
        CHECK(reported(r.err, "sup_difference_vs_bopp") <= 1e-6);
        CHECK(csv(r.out).grid == PhaseGrid{1, 6.0, 32, 1.0});

        Run rb = run({"star", "--a", "x1^2 - p1", "--b", "(1 + p1)*exp(-(x1^2 + p1^2))", "--method", "fft",
                      "--compare", "bopp", "--tol", "1e-6", "--config", g});
        CHECK(rb.code == 0);
        Run rr = run({"star", "--a", "(1 + p1)*exp(-(x1^2 + p1^2))", "--b", "x1^2 - p1", "--method", "fft",
                      "--compare", "bopp", "--tol", "1e-6", "--config", g});
        CHECK(rr.code == 0);
        CHECK(reported(rr.err, "sup_difference_vs_bopp") <= 1e-6);
    }
    SUBCASE("dense on a coarse NC grid against fft") {
        auto g = config_file("d.ini", "theta12 = 0.1\neta12 = 0.1\n[grid]\nM = 8\n");
        Run r = run({"star", "--a", "x1*exp(-(x1^2+x2^2+p1^2+p2^2))", "--b", "(1 + p2)*exp(-(x1^2+x2^2+p1^2+p2^2)/0.8)",
                     "--method", "dense", "--compare", "fft", "--config", g});
        CHECK(r.code == 0);
        CHECK(reported(r.err, "sup_difference_vs_fft") <= 1e-6);
    }
    SUBCASE("errors") {
        CHECK(run({"star", "--a", "x1 +", "--b", "x2"}).code == 2);
        CHECK(run({"star", "--a", "exp(-x1^2)", "--b", "exp(-p1^2)", "--method", "bopp"}).code == 2);
        CHECK(run({"star", "--a", "x1", "--b", "x2", "--method", "dense"}).code == 2);
        CHECK(run({"star", "--a", "x1", "--b", "x2", "--method", "magic"}).code == 2);
        CHECK(run({"star", "--a", "x1"}).code == 2);
        // neither operand decays: the twisted product refuses
        auto g = config_file("n1.ini", "n = 1\n");
        CHECK(run({"star", "--a", "exp(-x1^2)", "--b", "exp(-p1^2)", "--method", "fft", "--config", g}).code == 3);
    }
}

TEST_CASE("spectrum") {
    SUBCASE("commutative oscillator") {
        auto out = (scratch() / "sp.json").string();
        Run r = run({"spectrum", "--symbol", "(x1^2+x2^2+p1^2+p2^2)/2", "--count", "6", "--out", out, "--config",
                     config_file("z.ini", "theta12 = 0\neta12 = 0\n")});
        REQUIRE(r.code == 0);
        CHECK(r.out.empty());
        json j = json::parse(std::ifstream(out));
        const double want[] = {1, 2, 2, 3, 3, 3};
        REQUIRE(j["eigenvalues"].size() == 6);
        for (int i = 0; i < 6; ++i) CHECK(std::abs(j["eigenvalues"][i].get<double>() - want[i]) <= 1e-6);
        CHECK(j["converged"].size() == 6);
        CHECK(j["command"] == "spectrum");
    }
    SUBCASE("NC oscillator residuals") {
        Run r = run({"spectrum", "--symbol", "(x1^2+x2^2+p1^2+p2^2)/2", "--count", "6"});
        REQUIRE(r.code == 0);
        json j = json::parse(r.out);
        for (const auto& v : j["residuals"]) CHECK(v.get<double>() <= 1e-4);
        for (const auto& v : j["converged"]) CHECK(v == true);
    }
    SUBCASE("unconverged spectra still exit 0") {
        Run r = run({"spectrum", "--symbol", "(x1^2+p1^2)/2 + x1^4", "--count", "6", "--config",
                     config_file("k4.ini", "n = 1\n[basis]\nK = 8\n")});
        CHECK(r.code == 0);
        json j = json::parse(r.out);
        bool any_false = false;
        for (const auto& v : j["converged"]) any_false = any_false || v == false;
        CHECK(any_false);
    }
    SUBCASE("errors") {
        CHECK(run({"spectrum", "--symbol", "exp(x1)"}).code == 2);
        CHECK(run({"spectrum", "--symbol", "x1^2", "--count", "0"}).code == 2);
        CHECK(run({"spectrum", "--symbol", "x1^2 +"}).code == 2);
        CHECK(run({"spectrum", "--symbol", "x1^2", "--phi", "hermite:99"}).code == 2);
    }
}

TEST_CASE("swmap") {
    Run z = run({"swmap", "--config", config_file("z.ini", "theta12 = 0\neta12 = 0\n")});
    REQUIRE(z.code == 0);
    json jz = json::parse(z.out);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) CHECK(jz["s"][i][k].get<double>() == (i == k ? 1.0 : 0.0));

    Run a = run({"swmap"});
    REQUIRE(a.code == 0);
    json ja = json::parse(a.out);
    CHECK(ja["residuals"]["max"].get<double>() <= 1e-12);
    CHECK(ja["blocks"]["A"].size() == 2);

    Run b = run({"swmap", "--variant", "3", "--compare", "0"});
    REQUIRE(b.code == 0);
    json jb = json::parse(b.out);
    CHECK(jb["residuals"]["max"].get<double>() <= 1e-12);
    CHECK(jb["companion"]["symplectic_defect"].get<double>() <= 1e-10);
    CHECK(jb["s"] != ja["s"]);
    CHECK(jb["companion"]["s"] == ja["s"]);

    CHECK(run({"swmap", "--config", config_file("x.ini", "theta12 = 2\neta12 = 1\n")}).code == 2);
    CHECK(run({"swmap"}).out == a.out);
}

TEST_CASE("wigner") {
    auto n1 = config_file("n1.ini", "n = 1\n");
    SUBCASE("ground state") {
        Run r = run({"wigner", "--psi", "hermite:0", "--phi", "hermite:0", "--config", n1});
        REQUIRE(r.code == 0);
        GridSymbol w = csv(r.out);
        double err = 0;
        for (std::size_t k = 0; k < w.grid.size(); ++k) {
            auto i = w.grid.index(k);
            const double x = w.grid.coord(i[0]), p = w.grid.coord(i[1]);
            err = std::max(err, std::abs(w.samples[k] - std::exp(-(x * x + p * p)) / kPi));
        }
        CHECK(err <= 1e-8);
    }
    SUBCASE("scaled norm of W(h0, h1)") {
        Run r = run({"wigner", "--psi", "hermite:0", "--phi", "hermite:1", "--config", n1});
        REQUIRE(r.code == 0);
        CHECK(std::abs(reported(r.err, "norm_scaled") - 1) <= 1e-8);
        Run r2 = run({"wigner", "--psi", "hermite:0", "--phi", "hermite:1"});
        REQUIRE(r2.code == 0);
        CHECK(std::abs(reported(r2.err, "norm_scaled") - 1) <= 1e-8);
    }
    SUBCASE("--ws with s = I is the scaled cross-Wigner transform") {
        auto z = config_file("z1.ini", "n = 1\n");
        Run w = run({"wigner", "--psi", "hermite:2", "--phi", "hermite:1", "--config", z});
        Run s = run({"wigner", "--psi", "hermite:2", "--phi", "hermite:1", "--ws", "--config", z});
        REQUIRE(w.code == 0);
        REQUIRE(s.code == 0);
        GridSymbol a = csv(w.out), b = csv(s.out);
        CHECK(sup_diff(std::sqrt(2 * kPi) * a, b) <= 1e-10);
        CHECK(std::abs(reported(s.err, "norm_scaled") - 1) <= 1e-8);
    }
    SUBCASE("invalid specs") {
        CHECK(run({"wigner", "--psi", "hermite:-1", "--phi", "hermite:0"}).code == 2);
        CHECK(run({"wigner", "--psi", "gauss:0", "--phi", "hermite:0"}).code == 2);
        CHECK(run({"wigner", "--psi", "hermite:1,2,3", "--phi", "hermite:0"}).code == 2);
        CHECK(run({"wigner", "--psi", "hermite:", "--phi", "hermite:0"}).code == 2);
        CHECK(run({"wigner", "--psi", "hermite:1x", "--phi", "hermite:0"}).code == 2);
    }
}

TEST_CASE("exit code contract") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"verify", "--suite", "everything"}).code == 2);
    CHECK(run({"verify", "--config", (scratch() / "missing.ini").string()}).code == 2);
    CHECK(run({"--help"}).code == 0);
    setenv("NCSTAR_THREADS", "zero", 1);
    CHECK(run({"swmap"}).code == 2);
    setenv("NCSTAR_THREADS", "2", 1);
    CHECK(run({"swmap"}).code == 0);
    unsetenv("NCSTAR_THREADS");
}
