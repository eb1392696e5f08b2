#include "doctest.h"
#include "fixtures.hpp"
#include "spectreg/cli.hpp"
#include "spectreg/io.hpp"
#include "spectreg/deform.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>
#include <sstream>

using namespace spectreg;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "spectreg");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path &p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("cli: usage errors exit 2") {
    CHECK(run({}).code == cli::exit_usage);
    CHECK(run({"bogus"}).code == cli::exit_usage);
    CHECK(run({"register", "--moving", "a.nii"}).code == cli::exit_usage);
    CHECK(run({"--help"}).code == cli::exit_ok);
    CHECK(cli::parse_extents("16,24") == Extents{16, 24});
    CHECK_THROWS_AS(cli::parse_extents("16,x"), std::invalid_argument);
}

TEST_CASE("cli: divisibility error on a 160x192 image") {
    const auto dir = fixture::temp_dir("cli_div");
    write_nifti(ScalarImage(make_grid({160, 192}), std::vector<double>(160 * 192, 0.5)), VolumeMeta{}, dir / "m.nii");
    const auto r = run({"register", "--moving", (dir / "m.nii").string(), "--fixed", (dir / "m.nii").string(), "--band",
                        "30,48", "--out", (dir / "o").string()});
    CHECK(r.code == cli::exit_usage);
    CHECK(r.err.find("does not divide") != std::string::npos);
}

TEST_CASE("cli: missing input exits 3") {
    const auto dir = fixture::temp_dir("cli_io");
    const auto r = run({"register", "--moving", (dir / "none.nii").string(), "--fixed", (dir / "none.nii").string(),
                        "--band", "4,4", "--out", (dir / "o").string()});
    CHECK(r.code == cli::exit_io);
}

TEST_CASE("cli: synth, register, warp and metrics") {
    const auto dir = fixture::temp_dir("cli_flow");
    const auto s = dir / "synth";
    REQUIRE(run({"synth", "--dims", "64,96", "--band", "16,24", "--amplitude", "3", "--seed", "0", "--out", s.string()}).code == 0);
    REQUIRE(run({"synth", "--dims", "64,96", "--band", "16,24", "--amplitude", "3", "--seed", "0", "--out", (dir / "synth2").string()}).code == 0);
    for (const char *f : {"moving.nii", "fixed.nii", "labels_moving.nii", "labels_fixed.nii", "phi_gt.raw", "s_gt.raw"}) {
        CHECK(slurp(s / f) == slurp(dir / "synth2" / f));
    }
    const auto gt = read_dense_field(s / "phi_gt.json");
    CHECK(out_of_band_peak_ratio(gt, make_window(gt.grid(), {16, 24})) < 1e-9);

    const auto out = dir / "reg";
    const auto r = run({"register", "--moving", (s / "moving.nii").string(), "--fixed", (s / "fixed.nii").string(),
                        "--band", "16,24", "--out", out.string(), "--moving-labels", (s / "labels_moving.nii").string(),
                        "--fixed-labels", (s / "labels_fixed.nii").string()});
    REQUIRE(r.code == 0);
    const auto report = read_json(out / "report.json");
    CHECK(report["registration"]["mse_reduction_percent"].get<double>() >= 90.0);
    CHECK(report["metrics"]["dice_mean"].get<double>() > 0.9);
    for (const char *f : {"phi.json", "phi.raw", "s_star.json", "phi_0.nii", "phi_1.nii", "warped.nii", "config.ini",
                          "warped.pgm", "grid.ppm", "spectrum_0.pgm", "spectrum_1.pgm"}) {
        CHECK(fs::exists(out / f));
    }
    const auto cfg = cli::load_config(out / "config.ini");
    CHECK(cfg.band_dims == Extents{16, 24});
    CHECK(cfg.loss.lambda == 0.01);

    // Warping through files matches the in-memory warp.
    REQUIRE(run({"warp", "--image", (s / "moving.nii").string(), "--field", out.string(), "--out", (dir / "w.nii").string()}).code == 0);
    const auto phi = read_dense_field(out);
    const auto mem = warp(read_nifti(s / "moving.nii").image(), phi);
    const auto file = read_nifti(dir / "w.nii");
    for (std::size_t i = 0; i < file.values.size(); ++i) CHECK(file.values[i] == static_cast<double>(static_cast<float>(mem.values()[i])));

    REQUIRE(run({"warp", "--image", (s / "labels_moving.nii").string(), "--field", out.string(), "--labels", "--out", (dir / "wl.nii").string()}).code == 0);
    const auto m = run({"metrics", "--a", (dir / "wl.nii").string(), "--b", (s / "labels_fixed.nii").string(), "--field", out.string()});
    REQUIRE(m.code == 0);
    const auto mj = nlohmann::json::parse(m.out);
    CHECK(mj["dice_mean"].get<double>() == doctest::Approx(report["metrics"]["dice_mean"].get<double>()));
    CHECK(mj["folding_percent"].get<double>() == 0.0);

    const auto same = run({"metrics", "--a", (s / "labels_fixed.nii").string(), "--b", (s / "labels_fixed.nii").string(), "--labels", "1,2"});
    const auto sj = nlohmann::json::parse(same.out);
    CHECK(sj["dice_mean"].get<double>() == 1.0);
    CHECK(sj["hd95_mean"].get<double>() == 0.0);
}

TEST_CASE("cli: identical inputs give a near-zero field") {
    const auto dir = fixture::temp_dir("cli_same");
    oracle::Gen gen(1);
    write_nifti(fixture::smooth_image(make_grid({32, 48}), gen), VolumeMeta{}, dir / "a.nii");
    const auto r = run({"register", "--moving", (dir / "a.nii").string(), "--fixed", (dir / "a.nii").string(), "--band",
                        "8,12", "--iters", "40", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(read_dense_field(dir / "o").max_abs() < 0.05);
}

TEST_CASE("cli: config file and flags compose") {
    const auto dir = fixture::temp_dir("cli_cfg");
    std::ofstream(dir / "c.ini") << "[model]\nband = 8,12\n[loss]\nsimilarity = ncc\n[optim]\niterations = 5\nlearning_rate = 0.02\n";
    const auto loaded = cli::load_config(dir / "c.ini");
    CHECK(loaded.loss.similarity == Similarity::ncc);
    CHECK(loaded.loss.lambda == 5.0);
    CHECK(loaded.iterations == 5);
    oracle::Gen gen(2);
    write_nifti(fixture::smooth_image(make_grid({32, 48}), gen), VolumeMeta{}, dir / "a.nii");
    write_nifti(fixture::smooth_image(make_grid({32, 48}), gen), VolumeMeta{}, dir / "b.nii");
    const auto r = run({"register", "--moving", (dir / "a.nii").string(), "--fixed", (dir / "b.nii").string(), "--config",
                        (dir / "c.ini").string(), "--iters", "3", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto eff = cli::load_config(dir / "o" / "config.ini");
    CHECK(eff.iterations == 3);
    CHECK(eff.adam.learning_rate == 0.02);
    CHECK(eff.loss.similarity == Similarity::ncc);
    CHECK(eff.band_dims == Extents{8, 12});
    // Switching similarity by flag picks that similarity's default weight.
    const auto r2 = run({"register", "--moving", (dir / "a.nii").string(), "--fixed", (dir / "b.nii").string(), "--config",
                         (dir / "c.ini").string(), "--sim", "mse", "--iters", "2", "--out", (dir / "o2").string()});
    REQUIRE(r2.code == 0);
    CHECK(cli::load_config(dir / "o2" / "config.ini").loss.lambda == 0.01);
    std::ofstream(dir / "bad.ini") << "[optim]\niterations = many\n";
    CHECK(run({"register", "--moving", (dir / "a.nii").string(), "--fixed", (dir / "b.nii").string(), "--config",
               (dir / "bad.ini").string(), "--out", (dir / "o3").string()}).code == cli::exit_usage);
}

TEST_CASE("cli: divergence exits 4") {
    const auto dir = fixture::temp_dir("cli_div4");
    REQUIRE(run({"synth", "--dims", "32,48", "--band", "8,12", "--amplitude", "2", "--out", dir.string()}).code == 0);
    const auto r = run({"register", "--moving", (dir / "moving.nii").string(), "--fixed", (dir / "fixed.nii").string(),
                        "--band", "8,12", "--lr", "1e300", "--iters", "10", "--out", (dir / "o").string()});
    CHECK(r.code == cli::exit_divergence);
    CHECK(r.err.find("iteration") != std::string::npos);
}

TEST_CASE("cli: decode, encode and exp through files") {
    const auto dir = fixture::temp_dir("cli_spec");
    oracle::Gen gen(3);
    const auto w = make_window(make_grid({16, 24}), {4, 6});
    write_field(fixture::random_lowres(w, gen), dir / "s.json", FieldDtype::float64);
    REQUIRE(run({"decode", "--in", (dir / "s.json").string(), "--out", (dir / "d.json").string()}).code == 0);
    const auto e = run({"encode", "--in", (dir / "d.json").string(), "--band", "4,6", "--out", (dir / "e.json").string()});
    REQUIRE(e.code == 0);
    CHECK(nlohmann::json::parse(e.out)["discarded_energy_fraction"].get<double>() < 1e-12);
    REQUIRE(run({"decode", "--in", (dir / "e.json").string(), "--out", (dir / "d2.json").string()}).code == 0);
    const auto d1 = read_dense_field(dir / "d.json"), d2 = read_dense_field(dir / "d2.json");
    for (std::size_t i = 0; i < d1.data().size(); ++i) CHECK(d2.data()[i] == doctest::Approx(d1.data()[i]).epsilon(1e-5));
    CHECK(run({"decode", "--in", (dir / "s.json").string(), "--band", "8,6", "--out", (dir / "x.json").string()}).code == cli::exit_usage);

    write_field(LowResField(w, std::vector<double>(48, 0.75)), dir / "c.json");
    REQUIRE(run({"decode", "--in", (dir / "c.json").string(), "--out", (dir / "cd.json").string()}).code == 0);
    for (const auto r = read_dense_field(dir / "cd.json"); double v : r.data()) CHECK(v == doctest::Approx(0.75).epsilon(1e-6));

    write_field(DenseField(make_grid({16, 24}), gen.normals(768)), dir / "noise.json", FieldDtype::float64);
    const auto en = run({"encode", "--in", (dir / "noise.json").string(), "--band", "4,6", "--out", (dir / "ne.json").string()});
    CHECK(nlohmann::json::parse(en.out)["discarded_energy_fraction"].get<double>() > 0.5);

    write_field(DenseField::zeros(make_grid({16, 24})), dir / "z.json");
    REQUIRE(run({"exp", "--field", (dir / "z.json").string(), "--out", (dir / "ez.json").string()}).code == 0);
    for (const auto r = read_dense_field(dir / "ez.json"); double v : r.data()) CHECK(v == 0.0);
    REQUIRE(run({"exp", "--field", (dir / "d.json").string(), "--steps", "0", "--out", (dir / "e0.json").string()}).code == 0);
    CHECK(slurp(dir / "d.raw") == slurp(dir / "e0.raw"));
    CHECK(run({"exp", "--field", (dir / "missing.json").string(), "--out", (dir / "m.json").string()}).code == cli::exit_io);
}

TEST_CASE("cli: synth folding amplitude exits 2") {
    const auto dir = fixture::temp_dir("cli_fold");
    CHECK(run({"synth", "--dims", "64,96", "--band", "16,24", "--amplitude", "60", "--out", dir.string()}).code == cli::exit_usage);
}
