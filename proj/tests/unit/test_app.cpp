#include <doctest.h>

#include <filesystem>
#include <random>
#include <unordered_set>

#include "spinflow/config.hpp"
#include "spinflow/io.hpp"
#include "spinflow/runner.hpp"
#include "spinflow/seed.hpp"

using namespace spinflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("spinflow-unit-" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_clean() {
  auto cfg = scenario_defaults(Scenario::clean_diffusion);
  cfg.rungs = 3;
  cfg.haar_seeds = 3;
  cfg.t_max_ns = 40.0;
  cfg.fit_window_ns = {8.0, 40.0};
  cfg.root_seed = 77;
  return cfg;
}

} // namespace

TEST_SUITE("app") {

TEST_CASE("derive_seed") {
  CHECK(derive_seed(5, {1, 2}) == derive_seed(5, {1, 2}));
  CHECK(derive_seed(5, {1, 2}) != derive_seed(5, {2, 1}));
  CHECK(derive_seed(5, {}) != derive_seed(5, {0}));
  for (std::uint64_t c = 0; c < 100; ++c) CHECK(derive_seed(5, {c}) != derive_seed(6, {c}));

  std::mt19937_64 rng(123);
  std::unordered_set<std::uint64_t> seen;
  std::size_t collisions = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const std::uint64_t a = rng() % 1000, b = rng() % 1000, c = rng();
    if (!seen.insert(derive_seed(42, {a, b, c})).second) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("config map parsing") {
  const auto m = ConfigMap::parse("# comment\nkey = 1.5  # trailing\nlist = 1, 2 ,3\n\nname=abc\n");
  CHECK(m.get_double("key") == 1.5);
  CHECK(m.get_ints("list") == std::vector<std::int64_t>{1, 2, 3});
  CHECK(m.unused_keys() == std::vector<std::string>{"name"});
  CHECK(m.get_string("name") == "abc");
  CHECK(m.unused_keys().empty());
  CHECK_THROWS_AS(ConfigMap::parse("a = 1\na = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse("no equals sign\n"), std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse("x = 1.5e\n").get_double("x"), std::invalid_argument);
  CHECK_THROWS_AS(m.get_double("missing"), std::invalid_argument);
}

TEST_CASE("ladder, field and drive serialisation round trip") {
  const auto spec = with_qutrits(device_ladder(4, 3, true), 222.0, true, 4);
  ConfigMap m;
  write_ladder(spec, m);
  const auto field = sample_disorder(30.0, 2, spec.n_sites());
  write_field(field, m);
  DrivePlan plan{{10.1, 9.7}, {0.1, -0.2}, 200.0};
  write_drive(plan, m);
  const auto back = ConfigMap::parse(m.to_text());
  const auto spec2 = read_ladder(back);
  CHECK(spec2.parallel_up == spec.parallel_up);
  CHECK(spec2.diag_up == spec.diag_up);
  CHECK(spec2.nnn_down == spec.nnn_down);
  CHECK(spec2.anharmonicity == spec.anharmonicity);
  CHECK(spec2.local_dim == 3);
  CHECK(read_field(back).w_mhz == field.w_mhz);
  const auto plan2 = read_drive(back);
  CHECK(plan2.omega_mhz == plan.omega_mhz);
  CHECK(plan2.phi == plan.phi);
  CHECK(plan2.duration_ns == plan.duration_ns);
}

TEST_CASE("experiment config") {
  SUBCASE("minimal file uses scenario defaults") {
    const auto cfg = parse_experiment(ConfigMap::parse("schema_version = 1\nscenario = disorder-sweep\n"));
    CHECK(cfg.scenario == Scenario::disorder_sweep);
    CHECK(cfg.rungs == 6);
    CHECK(cfg.realizations == 10);
    CHECK(cfg.sweep_mhz == std::vector<double>{35.0, 50.0, 70.0});
  }
  SUBCASE("normalised text round trips") {
    auto cfg = small_clean();
    cfg.krylov.tol = 1e-11;
    cfg.wide_phase = true;
    const auto text = to_config(cfg).to_text();
    const auto again = parse_experiment(ConfigMap::parse(text));
    CHECK(to_config(again).to_text() == text);
    CHECK(again.krylov.tol == 1e-11);
    CHECK(again.wide_phase);
  }
  SUBCASE("inline ladder") {
    ConfigMap m = ConfigMap::parse("schema_version = 1\nscenario = clean-diffusion\npreset = inline\n");
    write_ladder(uniform_ladder(3, 7.0, 6.0), m);
    const auto cfg = parse_experiment(m);
    CHECK(cfg.ladder_spec().rung == std::vector<double>{6.0, 6.0, 6.0});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_experiment(ConfigMap::parse("scenario = clean-diffusion\n")), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment(ConfigMap::parse("schema_version = 2\nscenario = clean-diffusion\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment(ConfigMap::parse("schema_version = 1\nscenario = clean-diffusion\nbogus = 1\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment(ConfigMap::parse("schema_version = 1\nscenario = nope\n")), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment(ConfigMap::parse("schema_version = 1\nscenario = stark-sweep\nsweep_mhz =\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment(ConfigMap::parse("schema_version = 1\nscenario = clean-diffusion\nrungs = 30\n")),
                    std::exception);
  }
  SUBCASE("time grid") {
    auto cfg = small_clean();
    const auto t = cfg.time_grid();
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 40.0);
    CHECK(t.size() == 11);
  }
}

TEST_CASE("io helpers") {
  CHECK(io::format_number(0.0) == "0");
  CHECK(io::format_number(0.1) == "0.1");
  CHECK(std::stod(io::format_number(1.0 / 3.0)) == 1.0 / 3.0);
  io::CsvTable t;
  t.header = {"a", "b"};
  t.add_row({"1", "x,y"});
  t.add_row({"2", "say \"hi\""});
  CHECK(t.to_string() == "a,b\r\n1,\"x,y\"\r\n2,\"say \"\"hi\"\"\"\r\n");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  const auto dir = scratch("io");
  fs::create_directories(dir);
  io::write_file_atomic(dir / "x.csv", "time_ns,v\r\n0,1.5\r\n2,-3\r\n");
  CHECK_FALSE(fs::exists(dir / "x.csv.tmp"));
  const auto csv = io::read_numeric_csv(dir / "x.csv");
  CHECK(csv.column("v") == std::vector<double>{1.5, -3.0});
  CHECK_THROWS_AS(csv.column("w"), std::out_of_range);
  CHECK(io::sha256_file(dir / "x.csv") == io::sha256_hex(io::read_file(dir / "x.csv")));
  fs::remove_all(dir);
}

TEST_CASE("series CSV round trip") {
  CorrelationSeries s;
  s.times_ns = {0.0, 4.0};
  s.c = {std::vector<double>{1.0, 0.9}, {0.0, 0.01}, {0.0, -0.02}, {1.0, 0.8}};
  s.c11 = {0.5, 0.4225};
  s.stderr_c11 = {0.0, 0.003};
  const auto text = series_csv(s);
  CHECK(text.rfind("time_ns,c_uu,c_ud,c_du,c_dd,c11,c11_stderr\r\n", 0) == 0);
  const auto dir = scratch("series");
  fs::create_directories(dir);
  io::write_file_atomic(dir / "s.csv", text);
  const auto back = read_series_csv(dir / "s.csv");
  CHECK(back.c11 == s.c11);
  CHECK(back.c[2] == s.c[2]);
  CHECK(back.stderr_c11 == s.stderr_c11);
  fs::remove_all(dir);
}

TEST_CASE("runner: outputs, manifest and verification") {
  const auto dir = scratch("run");
  const auto cfg = small_clean();
  const auto manifest = run_experiment(cfg, {dir, 1});
  CHECK(manifest.complete);
  CHECK(manifest.scenario == "clean-diffusion");
  CHECK(manifest.root_seed == 77);
  CHECK(fs::exists(dir / "c11_clean.csv"));
  CHECK(fs::exists(dir / "fit_clean.json"));
  CHECK(fs::exists(dir / "manifest.json"));
  for (const auto& o : manifest.outputs) CHECK(io::sha256_file(dir / o.file) == o.sha256);
  REQUIRE(manifest.tasks.size() == 1);
  CHECK(manifest.tasks[0].seeds.size() == 3);

  const auto parsed = RunManifest::from_json(io::read_file(dir / "manifest.json"));
  CHECK(parsed.config_text == manifest.config_text);
  CHECK(parsed.outputs.size() == manifest.outputs.size());

  const auto ok = verify_manifest(dir / "manifest.json", scratch("verify"), 1);
  CHECK(ok.ok);

  io::write_file_atomic(dir / "c11_clean.csv", "tampered\r\n");
  CHECK_FALSE(verify_manifest(dir / "manifest.json", scratch("verify"), 1).ok);
  fs::remove_all(dir);
  fs::remove_all(scratch("verify"));
}

TEST_CASE("runner: byte-identical outputs at 1 and 3 threads") {
  for (auto scenario : {Scenario::clean_diffusion, Scenario::calib_demo}) {
    auto cfg = scenario == Scenario::clean_diffusion ? small_clean() : scenario_defaults(scenario);
    const auto a = run_experiment(cfg, {scratch("t1"), 1});
    const auto b = run_experiment(cfg, {scratch("t3"), 3});
    REQUIRE(a.outputs.size() == b.outputs.size());
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
      CHECK(a.outputs[i].file == b.outputs[i].file);
      CHECK(a.outputs[i].sha256 == b.outputs[i].sha256);
    }
  }
  fs::remove_all(scratch("t1"));
  fs::remove_all(scratch("t3"));
}

TEST_CASE("memory guard") {
  const auto saved = memory_budget();
  set_memory_budget(1 << 10);
  CHECK_THROWS_AS(check_dimension(1 << 12, "test"), DimensionError);
  auto cfg = small_clean();
  cfg.rungs = 6;
  CHECK_THROWS_AS(run_experiment(cfg, {scratch("guard"), 1}), DimensionError);
  set_memory_budget(saved);
  fs::remove_all(scratch("guard"));
}

TEST_CASE("shipped configs parse") {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(SPINFLOW_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_experiment(entry.path()));
    ++n;
  }
  CHECK(n == 8);
}

} // TEST_SUITE
