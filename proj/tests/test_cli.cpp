#include <finsler/cli.hpp>
#include <finsler/mesh.hpp>

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using finsler::cli::run;

namespace
{
	nlohmann::json read_json(const fs::path &p)
	{
		std::ifstream is(p);
		return nlohmann::json::parse(is);
	}

	fs::path fresh(const std::string &name)
	{
		fs::path d = fs::path("cli_out") / name;
		fs::remove_all(d);
		return d;
	}
} // namespace

TEST_CASE("solve writes its outputs")
{
	const auto d = fresh("solve");
	REQUIRE(run({"solve", "--shape", "disk:1", "--model", "euclidean", "--p", "2", "--h", "0.1", "--out-dir", d.string()}) == 0);
	const auto j = read_json(d / "result.json");
	CHECK(j["lambda"].get<double>() == doctest::Approx(5.783).epsilon(0.01));
	CHECK(j["subcommand"] == "solve");
	const auto mesh = finsler::read_fmesh((d / "mesh.fmesh").string());
	CHECK(mesh.n_vertices() == j["n_vertices"].get<int>());
	std::ifstream u(d / "u.csv");
	std::string header;
	std::getline(u, header);
	CHECK(header == "x,y,u");
	std::ifstream h(d / "history.csv");
	std::getline(h, header);
	CHECK(header == "iter,lambda");
	CHECK(fs::exists(d / "config.toml"));
}

TEST_CASE("resolved config reproduces the run")
{
	const auto a = fresh("cfg_a"), b = fresh("cfg_b");
	REQUIRE(run({"solve", "--shape", "square:1", "--model", "lq:4", "--p", "3", "--h", "0.1", "--out-dir", a.string()}) == 0);
	REQUIRE(run({"solve", "--config", (a / "config.toml").string(), "--out-dir", b.string()}) == 0);
	CHECK(read_json(a / "result.json") == read_json(b / "result.json"));
}

TEST_CASE("derivative")
{
	const auto d = fresh("deriv");
	REQUIRE(run({"derivative", "--shape", "disk:1", "--h", "0.1", "--field", "identity", "--forms", "volume", "--out-dir", d.string()}) == 0);
	const auto j = read_json(d / "result.json");
	CHECK(j["d_volume_form"].get<double>() == doctest::Approx(-2.0 * j["lambda"].get<double>()).epsilon(1e-12));
	CHECK(!j.contains("d_fd"));
	CHECK(run({"derivative", "--field", "swirl", "--out-dir", d.string()}) == 2);
}

TEST_CASE("verify")
{
	const auto d = fresh("verify");
	CHECK(run({"verify", "--suite", "scaling", "--model", "lq:4", "--p", "3", "--h", "0.2", "--levels", "2", "--out-dir", d.string()}) == 0);
	const auto j = read_json(d / "result.json");
	CHECK(j["pass"] == true);
	CHECK(j["checks"].size() == 2);
	CHECK(run({"verify", "--suite", "everything"}) == 2);
}

TEST_CASE("optimize")
{
	const auto d = fresh("optimize");
	REQUIRE(run({"optimize", "--shape", "square:1", "--h", "0.1", "--max-iter", "3", "--snapshot-every", "2", "--out-dir", d.string()}) == 0);
	const auto j = read_json(d / "result.json");
	CHECK(j["lambda"].get<double>() < j["lambda_initial"].get<double>());
	std::ifstream h(d / "history.csv");
	std::string header;
	std::getline(h, header);
	CHECK(header == "iter,lambda,volume,deficit,step");
	CHECK(fs::exists(d / "snapshot_0000.fmesh"));
	CHECK(fs::exists(d / "snapshot_0002.csv"));
}

TEST_CASE("wulff")
{
	const auto d = fresh("wulff");
	REQUIRE(run({"wulff", "--model", "ellipse:4,0,1", "--n", "64", "--out", (d / "w.fmesh").string()}) == 0);
	const auto mesh = finsler::read_fmesh((d / "w.fmesh").string());
	CHECK(mesh.area() == doctest::Approx(2.0 * 3.14159265358979).epsilon(0.02));
}

TEST_CASE("usage and solver errors")
{
	CHECK(run({}) == 2);
	CHECK(run({"solve", "--p", "1"}) == 2);
	CHECK(run({"solve", "--model", "lq:1"}) == 2);
	CHECK(run({"solve", "--shape", "blob:1"}) == 2);
	CHECK(run({"solve", "--h", "-1"}) == 2);
	CHECK(run({"solve", "--unknown-flag"}) == 2);
	CHECK(run({"solve", "--h", "0.2", "--p", "3", "--max-iter", "1", "--tol", "1e-15", "--out-dir", fresh("err").string()}) == 3);
	CHECK(run({"--help"}) == 0);
}
