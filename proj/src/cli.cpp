#include "spectreg/cli.hpp"

#include "spectreg/deform.hpp"
#include "spectreg/io.hpp"
#include "spectreg/metrics.hpp"
#include "spectreg/spectral.hpp"
#include "spectreg/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace spectreg::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using json = nlohmann::ordered_json;

Extents parse_extents(const std::string &text) {
    Extents out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception &) {
            throw std::invalid_argument("cannot parse extent list '" + text + "'");
        }
        if (used != item.size()) throw std::invalid_argument("cannot parse extent list '" + text + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty extent list");
    return out;
}

namespace {

std::string join_extents(const Extents &e) {
    std::string s;
    for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
    return s;
}

template <class T>
std::optional<T> ini_get(const pt::ptree &tree, const std::string &key) {
    auto v = tree.get_optional<T>(key);
    if (v) return *v;
    return std::nullopt;
}

struct LoadedConfig {
    OptimConfig config;
    bool lambda_set = false;
};

LoadedConfig load_config_impl(const fs::path &path) {
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error &e) {
        throw io_error("cannot read config " + path.string() + ": " + e.message());
    }
    LoadedConfig loaded;
    auto &c = loaded.config;
    try {
        if (auto v = ini_get<std::string>(tree, "model.band")) c.band_dims = parse_extents(*v);
        if (auto v = ini_get<bool>(tree, "model.diffeo")) c.diffeo = *v;
        if (auto v = ini_get<int>(tree, "model.steps")) c.squaring_steps = *v;
        if (auto v = ini_get<std::string>(tree, "loss.similarity")) c.loss = LossConfig::defaults_for(parse_similarity(*v));
        if (auto v = ini_get<double>(tree, "loss.lambda")) {
            c.loss.lambda = *v;
            loaded.lambda_set = true;
        }
        if (auto v = ini_get<int>(tree, "loss.ncc_window")) c.loss.ncc_window = *v;
        if (auto v = ini_get<double>(tree, "loss.epsilon")) c.loss.epsilon = *v;
        if (auto v = ini_get<int>(tree, "optim.iterations")) c.iterations = *v;
        if (auto v = ini_get<double>(tree, "optim.learning_rate")) c.adam.learning_rate = *v;
        if (auto v = ini_get<double>(tree, "optim.beta1")) c.adam.beta1 = *v;
        if (auto v = ini_get<double>(tree, "optim.beta2")) c.adam.beta2 = *v;
        if (auto v = ini_get<double>(tree, "optim.eps")) c.adam.eps = *v;
        if (auto v = ini_get<double>(tree, "optim.convergence_tol")) c.convergence_tol = *v;
        if (auto v = ini_get<std::uint64_t>(tree, "optim.seed")) c.seed = *v;
        if (auto v = ini_get<int>(tree, "optim.log_every")) c.log_every = *v;
    } catch (const pt::ptree_bad_data &e) {
        throw std::invalid_argument(std::string("bad value in config ") + path.string() + ": " + e.what());
    }
    return loaded;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

json field_stats(const DenseField &phi) {
    double sum = 0.0;
    for (double v : phi.data()) sum += std::abs(v);
    return json{{"max_abs", phi.max_abs()}, {"mean_abs", sum / static_cast<double>(phi.data().size())}};
}

json metric_json(const MetricReport &m) {
    json j;
    json dice = json::object(), hd = json::object();
    for (const auto &[label, v] : m.dice_per_label) dice[std::to_string(label)] = v;
    for (const auto &[label, v] : m.hd95_per_label) hd[std::to_string(label)] = v;
    j["dice_per_label"] = dice;
    j["dice_mean"] = m.dice_mean;
    j["hd95_per_label"] = hd;
    j["hd95_mean"] = m.hd95_mean;
    if (m.folding_percent) j["folding_percent"] = *m.folding_percent;
    return j;
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write " + path.string());
    out << text;
    if (!out) throw io_error("write error in " + path.string());
}

void ensure_dir(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir.string() + ": " + ec.message());
}

// Middle slice along axis 0 for 3D grids; ignored for 2D.
std::int64_t middle(const GridSpec &grid) { return grid.ndim() == 3 ? grid.extent(0) / 2 : 0; }

DenseField load_dense_or_decode(const fs::path &path) {
    auto f = read_field(path);
    if (auto *d = std::get_if<DenseField>(&f)) return std::move(*d);
    return decode(std::get<LowResField>(f));
}

} // namespace

OptimConfig load_config(const fs::path &path) { return load_config_impl(path).config; }

void save_config(const OptimConfig &c, const fs::path &path) {
    pt::ptree tree;
    tree.put("model.band", join_extents(c.band_dims));
    tree.put("model.diffeo", c.diffeo ? "true" : "false");
    tree.put("model.steps", c.squaring_steps);
    tree.put("loss.similarity", to_string(c.loss.similarity));
    tree.put("loss.lambda", format_double(c.loss.lambda));
    tree.put("loss.ncc_window", c.loss.ncc_window);
    tree.put("loss.epsilon", format_double(c.loss.epsilon));
    tree.put("optim.iterations", c.iterations);
    tree.put("optim.learning_rate", format_double(c.adam.learning_rate));
    tree.put("optim.beta1", format_double(c.adam.beta1));
    tree.put("optim.beta2", format_double(c.adam.beta2));
    tree.put("optim.eps", format_double(c.adam.eps));
    tree.put("optim.convergence_tol", format_double(c.convergence_tol));
    tree.put("optim.seed", c.seed);
    tree.put("optim.log_every", c.log_every);
    try {
        pt::write_ini(path.string(), tree);
    } catch (const pt::ini_parser_error &e) {
        throw io_error("cannot write config " + path.string() + ": " + e.message());
    }
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Band-limited spectral deformable registration toolkit"};
    app.require_subcommand(1);

    // register
    auto *reg = app.add_subcommand("register", "Register a moving image to a fixed image");
    std::string moving_path, fixed_path, band_text, sim_text, config_path, out_dir = "out";
    std::string moving_labels_path, fixed_labels_path;
    double lambda = 0.0, lr = 0.0;
    int iters = 0, steps = default_squaring_steps, log_every = 0;
    std::uint64_t seed = 0;
    bool diffeo = false;
    reg->add_option("--moving", moving_path, "Moving image (NIfTI)")->required();
    reg->add_option("--fixed", fixed_path, "Fixed image (NIfTI)")->required();
    auto *band_opt = reg->add_option("--band", band_text, "Band extents, e.g. 16,24");
    auto *diffeo_opt = reg->add_flag("--diffeo", diffeo, "Treat the decoded field as a stationary velocity");
    auto *sim_opt = reg->add_option("--sim", sim_text, "Similarity: mse or ncc");
    auto *lambda_opt = reg->add_option("--lambda", lambda, "Smoothness weight");
    auto *iters_opt = reg->add_option("--iters", iters, "Iteration budget");
    auto *lr_opt = reg->add_option("--lr", lr, "Adam learning rate");
    auto *seed_opt = reg->add_option("--seed", seed, "Seed recorded with the run");
    auto *steps_opt = reg->add_option("--steps", steps, "Scaling-and-squaring steps");
    auto *log_opt = reg->add_option("--log-every", log_every, "Print the loss every N iterations");
    reg->add_option("--out", out_dir, "Output directory");
    reg->add_option("--config", config_path, "Configuration file (INI)");
    reg->add_option("--moving-labels", moving_labels_path, "Label map of the moving image");
    reg->add_option("--fixed-labels", fixed_labels_path, "Label map of the fixed image");

    // warp
    auto *warp_cmd = app.add_subcommand("warp", "Warp an image or label map with a displacement field");
    std::string warp_image, warp_field_path, warp_out;
    bool warp_is_labels = false;
    warp_cmd->add_option("--image", warp_image, "Image to warp (NIfTI)")->required();
    warp_cmd->add_option("--field", warp_field_path, "Field manifest or register output directory")->required();
    warp_cmd->add_flag("--labels", warp_is_labels, "Nearest-neighbor label warping");
    warp_cmd->add_option("--out", warp_out, "Output NIfTI")->required();

    // exp
    auto *exp_cmd = app.add_subcommand("exp", "Exponentiate a stationary velocity field");
    std::string exp_in, exp_out;
    int exp_steps = default_squaring_steps;
    exp_cmd->add_option("--field", exp_in, "Velocity field manifest")->required();
    exp_cmd->add_option("--steps", exp_steps, "Scaling-and-squaring steps")->check(CLI::NonNegativeNumber);
    exp_cmd->add_option("--out", exp_out, "Output field manifest")->required();

    // decode / encode
    auto *dec_cmd = app.add_subcommand("decode", "Decode a low-resolution field to full resolution");
    std::string dec_in, dec_out, dec_dims, dec_band;
    dec_cmd->add_option("--in", dec_in, "Low-resolution field manifest")->required();
    dec_cmd->add_option("--dims", dec_dims, "Full-resolution extents (must match the manifest)");
    dec_cmd->add_option("--band", dec_band, "Band extents (must match the manifest)");
    dec_cmd->add_option("--out", dec_out, "Output field manifest")->required();

    auto *enc_cmd = app.add_subcommand("encode", "Band-limit a dense field to its low-resolution representation");
    std::string enc_in, enc_out, enc_band;
    enc_cmd->add_option("--in", enc_in, "Dense field manifest")->required();
    enc_cmd->add_option("--band", enc_band, "Band extents")->required();
    enc_cmd->add_option("--out", enc_out, "Output low-resolution manifest")->required();

    // metrics
    auto *met_cmd = app.add_subcommand("metrics", "Dice, HD95 and folding");
    std::string met_a, met_b, met_field, met_labels, met_out;
    met_cmd->add_option("--a", met_a, "First label map (NIfTI)")->required();
    met_cmd->add_option("--b", met_b, "Second label map (NIfTI)")->required();
    met_cmd->add_option("--field", met_field, "Displacement field manifest for folding");
    met_cmd->add_option("--labels", met_labels, "Comma-separated labels to evaluate");
    met_cmd->add_option("--out", met_out, "Also write the report to this file");

    // synth
    auto *syn_cmd = app.add_subcommand("synth", "Generate a synthetic pair with known deformation");
    std::string syn_dims, syn_band, syn_out;
    SynthConfig syn;
    syn_cmd->add_option("--dims", syn_dims, "Grid extents")->required();
    syn_cmd->add_option("--band", syn_band, "Band extents")->required();
    syn_cmd->add_option("--amplitude", syn.amplitude, "Maximum ground-truth displacement, voxels");
    syn_cmd->add_option("--seed", syn.seed, "Random seed");
    syn_cmd->add_option("--blobs", syn.blob_count, "Number of blobs");
    syn_cmd->add_option("--spectral-sigma", syn.spectral_sigma, "Envelope width of the ground truth, cycles");
    syn_cmd->add_flag("--contaminate", syn.contaminate, "Add out-of-band ground-truth content");
    syn_cmd->add_option("--out", syn_out, "Output directory")->required();

    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        if (*reg) {
            OptimConfig config;
            bool lambda_set = false;
            if (!config_path.empty()) {
                auto loaded = load_config_impl(config_path);
                config = loaded.config;
                lambda_set = loaded.lambda_set;
            }
            if (band_opt->count()) config.band_dims = parse_extents(band_text);
            if (diffeo_opt->count()) config.diffeo = diffeo;
            if (sim_opt->count()) {
                const auto sim = parse_similarity(sim_text);
                if (sim != config.loss.similarity && !lambda_set) {
                    config.loss = LossConfig::defaults_for(sim);
                } else {
                    config.loss.similarity = sim;
                }
            }
            if (lambda_opt->count()) config.loss.lambda = lambda;
            if (iters_opt->count()) config.iterations = iters;
            if (lr_opt->count()) config.adam.learning_rate = lr;
            if (seed_opt->count()) config.seed = seed;
            if (steps_opt->count()) config.squaring_steps = steps;
            if (log_opt->count()) config.log_every = log_every;
            if (config.band_dims.empty()) throw std::invalid_argument("--band is required (flag or [model] band)");

            const auto moving_vol = read_nifti(moving_path);
            const auto fixed_vol = read_nifti(fixed_path);
            const auto moving = moving_vol.image();
            const auto fixed = fixed_vol.image();
            if (!(moving.grid() == fixed.grid())) {
                throw std::invalid_argument("moving grid " + format_extents(moving.grid().dims()) +
                                            " differs from fixed grid " + format_extents(fixed.grid().dims()));
            }
            make_window(moving.grid(), config.band_dims);
            config.validate();

            const fs::path dir(out_dir);
            ensure_dir(dir);
            save_config(config, dir / "config.ini");

            auto result = register_pair(moving, fixed, config, [&](int it, double loss) {
                out << "iteration " << it << " loss " << format_double(loss) << "\n";
            });
            const auto &phi = result.phi;
            const auto warped = warp(moving, phi);

            write_field(phi, dir / "phi.json");
            write_field(result.s_star, dir / "s_star.json");
            for (int c = 0; c < phi.channels(); ++c) {
                write_nifti(phi.grid(), phi.channel(c), fixed_vol.meta, dir / ("phi_" + std::to_string(c) + ".nii"));
            }
            write_nifti(warped, fixed_vol.meta, dir / "warped.nii");
            render_slice(warped, 0, middle(phi.grid()), dir / "warped.pgm");
            render_grid(phi, 4, 0, middle(phi.grid()), dir / "grid.ppm");
            for (int c = 0; c < phi.channels(); ++c) {
                render_spectrum(phi, c, 0, middle(phi.grid()), dir / ("spectrum_" + std::to_string(c) + ".pgm"));
            }

            const double initial_mse = mse(moving, fixed).value;
            const double final_mse = mse(warped, fixed).value;
            const auto &r = result.report;
            json report;
            report["registration"] = {
                {"iterations_run", r.iterations_run},
                {"converged", r.converged},
                {"final_loss", r.final_loss},
                {"final_similarity", r.final_similarity},
                {"final_smoothness", r.final_smoothness},
                {"initial_mse", initial_mse},
                {"final_mse", final_mse},
                {"mse_reduction_percent", initial_mse > 0.0 ? 100.0 * (1.0 - final_mse / initial_mse) : 0.0},
                {"folding_percent", r.folding_percent},
                {"out_of_band_energy", r.out_of_band_energy},
                {"phi", field_stats(phi)},
                {"loss_trace", r.loss_trace},
                {"wall_time", r.wall_time},
            };
            MetricReport metrics;
            metrics.folding_percent = r.folding_percent;
            if (!moving_labels_path.empty() && !fixed_labels_path.empty()) {
                const auto lm = read_nifti(moving_labels_path).labels();
                const auto lf = read_nifti(fixed_labels_path).labels();
                metrics = evaluate(warp_labels(lm, phi), lf, {}, &phi);
            }
            report["metrics"] = metric_json(metrics);
            write_text(dir / "report.json", report.dump(2) + "\n");
            out << "registered " << format_extents(moving.grid().dims()) << " in " << r.iterations_run
                << " iterations: mse " << format_double(initial_mse) << " -> " << format_double(final_mse)
                << ", folding " << r.folding_percent << "%\n";
            return exit_ok;
        }

        if (*warp_cmd) {
            const auto vol = read_nifti(warp_image);
            const auto phi = load_dense_or_decode(warp_field_path);
            if (warp_is_labels) {
                write_nifti(warp_labels(vol.labels(), phi), vol.meta, warp_out);
            } else {
                write_nifti(warp(vol.image(), phi), vol.meta, warp_out);
            }
            return exit_ok;
        }

        if (*exp_cmd) {
            write_field(exp_velocity(read_dense_field(exp_in), exp_steps), exp_out);
            return exit_ok;
        }

        if (*dec_cmd) {
            auto s = read_lowres_field(dec_in);
            if (!dec_dims.empty() && parse_extents(dec_dims) != s.window().parent().dims()) {
                throw std::invalid_argument("--dims " + dec_dims + " does not match the manifest grid " +
                                            format_extents(s.window().parent().dims()));
            }
            if (!dec_band.empty() && parse_extents(dec_band) != s.window().band_dims()) {
                throw std::invalid_argument("--band " + dec_band + " does not match the manifest band " +
                                            format_extents(s.window().band_dims()));
            }
            write_field(decode(s), dec_out);
            return exit_ok;
        }

        if (*enc_cmd) {
            const auto phi = read_dense_field(enc_in);
            const auto window = make_window(phi.grid(), parse_extents(enc_band));
            const auto enc = encode(phi, window);
            write_field(enc.params, enc_out);
            json j{{"band_dims", window.band_dims()},
                   {"discarded_energy_fraction", enc.discarded_energy_fraction},
                   {"imag_residual", enc.imag_residual}};
            out << j.dump(2) << "\n";
            return exit_ok;
        }

        if (*met_cmd) {
            const auto a = read_nifti(met_a).labels();
            const auto b = read_nifti(met_b).labels();
            std::set<std::int32_t> labels;
            if (!met_labels.empty()) {
                for (auto v : parse_extents(met_labels)) labels.insert(static_cast<std::int32_t>(v));
            }
            std::optional<DenseField> phi;
            if (!met_field.empty()) phi = load_dense_or_decode(met_field);
            const auto report = evaluate(a, b, labels, phi ? &*phi : nullptr);
            const auto text = metric_json(report).dump(2) + "\n";
            out << text;
            if (!met_out.empty()) write_text(met_out, text);
            return exit_ok;
        }

        if (*syn_cmd) {
            syn.dims = parse_extents(syn_dims);
            syn.band_dims = parse_extents(syn_band);
            const auto pair = make_pair(syn);
            const fs::path dir(syn_out);
            ensure_dir(dir);
            const VolumeMeta meta;
            write_nifti(pair.moving, meta, dir / "moving.nii");
            write_nifti(pair.fixed, meta, dir / "fixed.nii");
            write_nifti(pair.labels_moving, meta, dir / "labels_moving.nii");
            write_nifti(pair.labels_fixed, meta, dir / "labels_fixed.nii");
            write_field(pair.phi_gt, dir / "phi_gt.json", FieldDtype::float64);
            write_field(pair.s_gt, dir / "s_gt.json", FieldDtype::float64);
            pt::ptree tree;
            tree.put("synth.dims", join_extents(syn.dims));
            tree.put("synth.band", join_extents(syn.band_dims));
            tree.put("synth.amplitude", format_double(syn.amplitude));
            tree.put("synth.blobs", syn.blob_count);
            tree.put("synth.seed", syn.seed);
            tree.put("synth.spectral_sigma", format_double(syn.spectral_sigma));
            tree.put("synth.contaminate", syn.contaminate ? "true" : "false");
            pt::write_ini((dir / "synth.ini").string(), tree);
            return exit_ok;
        }
    } catch (const divergence_error &e) {
        err << "error: " << e.what() << "\n";
        return exit_divergence;
    } catch (const io_error &e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const pt::ini_parser_error &e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const numerical_error &e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}

} // namespace spectreg::cli
