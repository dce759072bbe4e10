#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "roughmor/config.hpp"
#include "roughmor/csv_io.hpp"
#include "roughmor/errors.hpp"

using namespace roughmor;
using namespace testing;

TEST_CASE("driver csv round trip is bit exact") {
  const auto p = sample_fbm_path(0.4, 2, 0.5, 64, 11);
  const std::string text = driver_csv(p);
  CHECK(text.rfind("t,W1,W2\n", 0) == 0);
  const auto q = parse_driver_csv(text, DriverKind::fbm, 0.4);
  CHECK(q.values == p.values);
  CHECK(q.T == p.T);
  CHECK(q.hurst == 0.4);
  CHECK(driver_csv(q) == text);
}

TEST_CASE("driver csv rejects malformed input") {
  CHECK_THROWS_AS(parse_driver_csv(""), InvalidArgument);
  CHECK_THROWS_AS(parse_driver_csv("x,W1\n0,0\n1,1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_driver_csv("t,W1\n0,0\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_driver_csv("t,W1\n0,0\n1,1,2\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_driver_csv("t,W1\n0,0\n0.1,1\n1,2\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_driver_csv("t,W1\n0,0\n1,abc\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_driver_csv("t,W1\n0,1\n1,1\n"), InvalidArgument);
  CHECK_NOTHROW(parse_driver_csv("t,W1\r\n0,0\r\n0.5,1\r\n1,2\r\n"));
}

TEST_CASE("small serializers") {
  CHECK(spectrum_csv((VectorXd(2) << 2.0, 0.5).finished()) == "index,eigenvalue\n1,2\n2,0.5\n");
  CHECK(stages_csv({{"full", 3, std::nan("")}, {"P", 2, 1e-12}}) ==
        "stage,order,tolerance\nfull,3,nan\nP,2,9.9999999999999998e-13\n");
  PointwiseError e{{0.25, 0.0}, {false, true}};
  CHECK(pointwise_error_csv({0.0, 1.0}, e) == "t,rel_err\n0,0.25\n1,nan\n");
  CHECK(sweep_csv({{3, 0.5}}) == "r,rel_L2_error\n3,0.5\n");
  CHECK_THROWS_AS(series_csv({0.0}, MatrixXd::Zero(2, 1), "y"), InvalidArgument);
}

TEST_CASE("system file round trip") {
  std::mt19937_64 rng(8);
  const auto sys = random_system(3, 2, rng);
  const auto back = parse_system_file("# generated\n" + system_file(sys));
  CHECK(back.A() == sys.A());
  CHECK(back.N(1) == sys.N(1));
  CHECK(back.K() == sys.K());
  CHECK(back.C() == sys.C());
  CHECK(back.x0() == sys.x0());
  CHECK_THROWS_AS(parse_system_file("2 1 1\n1 2 3\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_system_file("0 1 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_system_file("1 1 1\n-1 q 1 1 1\n"), InvalidArgument);
}

TEST_CASE("atomic writes") {
  const auto dir = std::filesystem::temp_directory_path() / "roughmor_io_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "a.txt", "one");
  write_file_atomic(dir / "a.txt", "two");
  CHECK(read_file(dir / "a.txt") == "two");
  CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  CHECK_THROWS(read_file(dir / "missing.txt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing and echo") {
  RunConfig cfg;
  apply_config_text(cfg, "# comment\nn = 40\nhurst=0.3\n\ntarget_ranks=2,4,8\nlossy=p_only\n");
  CHECK(cfg.n == 40);
  CHECK(cfg.hurst == 0.3);
  CHECK(cfg.target_ranks == std::vector<std::size_t>{2, 4, 8});
  CHECK(cfg.lossy == LossyStrategy::p_only);
  const std::string echo = config_echo(cfg);
  CHECK(echo.find("n=40\n") != std::string::npos);
  CHECK(echo.find("target_ranks=2,4,8\n") != std::string::npos);
  RunConfig again;
  apply_config_text(again, echo);
  CHECK(config_echo(again) == echo);

  CHECK_THROWS_AS(set_config_value(cfg, "colour", "red"), InvalidArgument);
  CHECK_THROWS_AS(set_config_value(cfg, "n", "-3"), InvalidArgument);
  CHECK_THROWS_AS(set_config_value(cfg, "hurst", "x"), InvalidArgument);
  CHECK_THROWS_AS(apply_config_text(cfg, "novalue\n"), InvalidArgument);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  CHECK(driver_steps(cfg) == 512);
  cfg.horizon = 0.3;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = RunConfig{};
  cfg.hurst = 1.5;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = RunConfig{};
  cfg.tol_p = 0.0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = RunConfig{};
  cfg.model = "file";
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
}

TEST_CASE("heat model from config") {
  RunConfig cfg;
  cfg.n = 10;
  const auto sys = build_model(cfg);
  CHECK(sys.order() == 10);
  CHECK(sys.noise_dim() == 2);
  CHECK(parse_coefficient_list("constant:1;sin-scaled:2").size() == 2);
  CHECK_THROWS_AS(parse_coefficient_list("constant"), InvalidArgument);
  CHECK_THROWS_AS(parse_coefficient_list("constant:a"), InvalidArgument);
}
