#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "yatnn/axioms.hpp"
#include "yatnn/bench.hpp"
#include "yatnn/checkpoint.hpp"
#include "yatnn/dataset.hpp"
#include "yatnn/errors.hpp"
#include "yatnn/gradcheck.hpp"
#include "yatnn/nms.hpp"
#include "yatnn/train.hpp"

namespace fs = std::filesystem;
using namespace yatnn;

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& contents) {
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << contents;
    if (!out) throw IoError("failed writing " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// NMK_SEED in the environment overrides any --seed flag.
std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("NMK_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return flag_seed;
}

std::string grid_csv(const Matrix& grid) {
    std::string out;
    out.reserve(grid.size() * 8);
    for (std::size_t i = 0; i < grid.rows; ++i) {
        for (std::size_t j = 0; j < grid.cols; ++j) {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "%.8g", grid(i, j));
            out += buf;
            out += (j + 1 == grid.cols) ? '\n' : ',';
        }
    }
    return out;
}

int run_xor(int restarts, std::uint64_t seed, const std::string& out_dir) {
    RngState rng{seed, 0};
    XorSolution sol = solve_xor(restarts, rng);
    std::printf("xor: accuracy %d/4 (mse %.6g) with w = (%.6g, %.6g), b = %.6g\n",
                static_cast<int>(sol.accuracy * 4.0 + 0.5), sol.mse, sol.weights[0],
                sol.weights[1], sol.bias);
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "decision_grid.csv").string(),
               grid_csv(sol.decision_grid));
    std::string witness = "{\n  \"weights\": [" + fmt17(sol.weights[0]) + ", " +
                          fmt17(sol.weights[1]) + "],\n  \"bias\": " + fmt17(sol.bias) +
                          ",\n  \"mse\": " + fmt17(sol.mse) +
                          ",\n  \"accuracy\": " + fmt17(sol.accuracy) +
                          ",\n  \"outputs\": [" + fmt17(sol.outputs[0]) + ", " +
                          fmt17(sol.outputs[1]) + ", " + fmt17(sol.outputs[2]) + ", " +
                          fmt17(sol.outputs[3]) + "]\n}\n";
    write_file((fs::path(out_dir) / "xor.json").string(), witness);
    std::printf("xor: wrote %s and xor.json\n",
                (fs::path(out_dir) / "decision_grid.csv").string().c_str());
    return sol.accuracy == 1.0 ? 0 : 1;
}

ModelConfig model_config_for(Arch arch, const Dataset& train,
                             const std::vector<std::size_t>& hidden, std::size_t patch,
                             std::size_t width, std::size_t heads,
                             std::size_t mlp_width, std::size_t blocks,
                             double mask_ratio, std::size_t image_h,
                             std::size_t image_w) {
    ModelConfig mc;
    mc.arch = arch;
    mc.classes = static_cast<std::size_t>(train.num_classes);
    if (arch == Arch::EVit) {
        if (image_h == 0 || image_w == 0) {
            const auto side =
                static_cast<std::size_t>(std::llround(std::sqrt(double(train.features.cols))));
            if (side * side != train.features.cols) {
                throw ConfigError(
                    "e-vit needs square images; pass --image-h/--image-w for "
                    "non-square data");
            }
            image_h = image_w = side;
        }
        mc.image_h = image_h;
        mc.image_w = image_w;
        mc.patch = patch;
        mc.width = width;
        mc.heads = heads;
        mc.mlp_width = mlp_width;
        mc.blocks = blocks;
        mc.mask_ratio = mask_ratio;
    } else {
        mc.input_dim = train.features.cols;
        mc.hidden = hidden;
    }
    return mc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"activation-free E-neuron network toolkit"};
    app.require_subcommand(0, 1);

    // ---- xor ----
    auto* xor_cmd = app.add_subcommand("xor", "fit one E-neuron to XOR");
    int xor_restarts = 10;
    std::uint64_t xor_seed = 0;
    std::string xor_out = "out";
    xor_cmd->add_option("--restarts", xor_restarts, "random restarts");
    xor_cmd->add_option("--seed", xor_seed, "rng seed");
    xor_cmd->add_option("--out", xor_out, "output directory");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a model on IDX data");
    std::string arch_name_flag = "e-mlp";
    std::string images, labels, test_images, test_labels, config_path;
    std::string train_out = "out";
    std::vector<std::size_t> hidden = {128, 64};
    std::uint64_t train_seed = 0;
    std::size_t limit = 0, test_limit = 0;
    std::size_t patch = 4, width = 128, heads = 2, mlp_width = 512, blocks = 1;
    std::size_t image_h = 0, image_w = 0;
    double mask_ratio = 0.1;
    train_cmd->add_option("--arch", arch_name_flag, "e-mlp | mlp | linear | e-vit");
    train_cmd->add_option("--images", images, "training images (IDX)")->required();
    train_cmd->add_option("--labels", labels, "training labels (IDX)")->required();
    train_cmd->add_option("--test-images", test_images, "test images (IDX)");
    train_cmd->add_option("--test-labels", test_labels, "test labels (IDX)");
    train_cmd->add_option("--config", config_path, "JSON training config");
    train_cmd->add_option("--hidden", hidden, "hidden layer widths (mlp family)");
    train_cmd->add_option("--seed", train_seed, "rng seed (overrides config)");
    train_cmd->add_option("--limit", limit, "cap the training set size");
    train_cmd->add_option("--test-limit", test_limit, "cap the test set size");
    train_cmd->add_option("--patch", patch, "e-vit patch size");
    train_cmd->add_option("--width", width, "e-vit model width");
    train_cmd->add_option("--heads", heads, "e-vit attention heads");
    train_cmd->add_option("--mlp-width", mlp_width, "e-vit feed-forward width");
    train_cmd->add_option("--blocks", blocks, "e-vit encoder blocks");
    train_cmd->add_option("--mask-ratio", mask_ratio, "e-vit token masking ratio");
    train_cmd->add_option("--image-h", image_h, "image height (e-vit)");
    train_cmd->add_option("--image-w", image_w, "image width (e-vit)");
    train_cmd->add_option("--out", train_out, "output directory");

    // ---- nms ----
    auto* nms_cmd = app.add_subcommand("nms", "weight-space report for one layer");
    std::string ckpt_path, layer_name = "layer0", nms_out = "out";
    double nms_kappa = 10.0;
    std::size_t nms_grid = 64;
    std::vector<std::string> nms_formats = {"csv", "json", "svg"};
    nms_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    nms_cmd->add_option("--layer", layer_name, "layer name (e.g. layer0)");
    nms_cmd->add_option("--out", nms_out, "output directory");
    nms_cmd->add_option("--kappa", nms_kappa, "collapse threshold multiplier");
    nms_cmd->add_option("--grid", nms_grid, "density grid resolution");
    nms_cmd->add_option("--formats", nms_formats, "subset of csv json svg");

    // ---- axioms ----
    auto* ax_cmd = app.add_subcommand("axioms", "empirical metric-axiom check");
    std::string measure_flag = "e";
    std::uint64_t ax_samples = 100000;
    std::size_t ax_dim = 3;
    std::uint64_t ax_seed = 0;
    std::string ax_out = "out";
    double ax_eps = kDefaultEpsilon;
    ax_cmd->add_option("--measure", measure_flag, "e | ebar");
    ax_cmd->add_option("--samples", ax_samples, "random triples to draw");
    ax_cmd->add_option("--dim", ax_dim, "vector dimension");
    ax_cmd->add_option("--seed", ax_seed, "rng seed");
    ax_cmd->add_option("--epsilon", ax_eps, "stabilizer epsilon");
    ax_cmd->add_option("--out", ax_out, "output directory");

    // ---- gradcheck ----
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    int gc_trials = 15;
    std::uint64_t gc_seed = 0;
    gc_cmd->add_option("--trials", gc_trials, "random configs per family");
    gc_cmd->add_option("--seed", gc_seed, "rng seed");

    // ---- bench ----
    auto* bench_cmd = app.add_subcommand("bench", "FLOP counts and throughput");
    std::vector<std::size_t> bench_dims = {16, 64, 256, 1024};
    int bench_reps = 5;
    std::string bench_out = "out";
    bench_cmd->add_option("--dims", bench_dims, "input dimensions");
    bench_cmd->add_option("--reps", bench_reps, "timing repetitions");
    bench_cmd->add_option("--out", bench_out, "output directory");

    // ---- fig6 ----
    auto* fig6_cmd = app.add_subcommand("fig6", "dot vs yat ranking comparison");
    std::string fig6_out;
    fig6_cmd->add_option("--out", fig6_out, "optional output directory for CSV");

    if (argc <= 1) {
        std::cout << app.help() << std::endl;
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*xor_cmd) {
            return run_xor(xor_restarts, effective_seed(xor_seed), xor_out);
        }
        if (*train_cmd) {
            TrainConfig tc;
            if (!config_path.empty()) tc = train_config_from_json(read_file(config_path));
            if (train_cmd->count("--seed")) tc.seed = train_seed;
            tc.seed = effective_seed(tc.seed);
            const Arch arch = arch_from_name(arch_name_flag);
            if (arch == Arch::Mlp || arch == Arch::Linear) {
                // Dense stacks have signed logits; pair them with softmax.
                if (!config_path.empty() && tc.head == HeadKind::Softermax) {
                    throw ConfigError("softermax head requires a yat architecture");
                }
                tc.head = HeadKind::Softmax;
                tc.bias_in_head = true;
            }
            Dataset train_set = load_idx(images, labels);
            Dataset test_set = (test_images.empty() || test_labels.empty())
                                   ? Dataset{Matrix(0, train_set.features.cols), {}, train_set.num_classes}
                                   : load_idx(test_images, test_labels);
            if (limit > 0) train_set = take_prefix(train_set, limit);
            if (test_limit > 0) test_set = take_prefix(test_set, test_limit);

            ModelConfig mc = model_config_for(arch, train_set, hidden, patch, width,
                                              heads, mlp_width, blocks, mask_ratio,
                                              image_h, image_w);
            TrainOutput out = train_model(mc, train_set, test_set, tc);
            fs::create_directories(train_out);
            write_file((fs::path(train_out) / "report.json").string(),
                       train_report_to_json(out.report));
            write_file((fs::path(train_out) / "metrics.csv").string(),
                       train_report_to_csv(out.report));
            save_checkpoint(*out.model, (fs::path(train_out) / "model.ckpt").string());
            std::printf("train: %s final train acc %.4f, test acc %.4f (%.1fs)\n",
                        arch_name(arch), out.report.final_train_accuracy,
                        out.report.final_test_accuracy, out.report.wall_clock_seconds);
            return 0;
        }
        if (*nms_cmd) {
            Matrix kernel = checkpoint_layer_kernel(ckpt_path, layer_name);
            NMSReport report = build_nms(kernel, kDefaultEpsilon, nms_kappa, nms_grid,
                                         layer_name);
            std::set<NmsFormat> formats;
            for (const auto& f : nms_formats) {
                if (f == "csv") {
                    formats.insert(NmsFormat::Csv);
                } else if (f == "json") {
                    formats.insert(NmsFormat::Json);
                } else if (f == "svg") {
                    formats.insert(NmsFormat::Svg);
                } else {
                    throw ConfigError("unknown nms format '" + f + "'");
                }
            }
            auto written = export_nms(report, nms_out, formats);
            std::printf("nms: layer %s, %zu neurons, %zu collapse pair(s)\n",
                        layer_name.c_str(), kernel.rows, report.collapse_pairs.size());
            for (const auto& p : written) std::printf("nms: wrote %s\n", p.c_str());
            return 0;
        }
        if (*ax_cmd) {
            Measure measure;
            if (measure_flag == "e" || measure_flag == "E") {
                measure = Measure::E;
            } else if (measure_flag == "ebar" || measure_flag == "Ebar") {
                measure = Measure::Ebar;
            } else {
                throw ConfigError("unknown measure '" + measure_flag + "'");
            }
            RngState rng{effective_seed(ax_seed), 0};
            std::vector<VectorTriple> seeded = {canonical_triangle_triple(ax_dim)};
            AxiomReport report =
                axiom_check(measure, ax_samples, ax_dim, rng, seeded, ax_eps);
            fs::create_directories(ax_out);
            const std::string path = (fs::path(ax_out) / "axioms.json").string();
            write_file(path, axiom_report_to_json(report));
            std::printf(
                "axioms: %s over %llu samples, dim %zu -> non_negativity %llu, "
                "symmetry %llu, identity_forward %llu, identity_reverse %llu, "
                "triangle %llu\n",
                measure_name(measure),
                static_cast<unsigned long long>(report.samples), report.dim,
                static_cast<unsigned long long>(report.violations.non_negativity),
                static_cast<unsigned long long>(report.violations.symmetry),
                static_cast<unsigned long long>(report.violations.identity_forward),
                static_cast<unsigned long long>(report.violations.identity_reverse),
                static_cast<unsigned long long>(report.violations.triangle));
            std::printf("axioms: wrote %s\n", path.c_str());
            return 0;
        }
        if (*gc_cmd) {
            RngState rng{effective_seed(gc_seed), 0};
            GradSuiteReport suite = run_grad_suite(gc_trials, rng);
            for (const auto& [name, r] : suite.families) {
                std::printf("gradcheck: %-16s configs %3zu coords %6zu max rel err %.3e%s\n",
                            name.c_str(), r.configs, r.coords_checked, r.max_rel_err,
                            r.failures ? "  FAIL" : "");
            }
            std::printf("gradcheck: overall max rel err %.3e over %zu configs (%zu failures)\n",
                        suite.max_rel_err, suite.configs, suite.failures);
            return suite.failures == 0 ? 0 : 1;
        }
        if (*bench_cmd) {
            BenchReport report = bench_kernels(bench_dims, bench_reps);
            std::fputs(bench_report_to_text(report).c_str(), stdout);
            bool counts_match = true;
            for (const auto& r : report.rows) {
                counts_match = counts_match && r.counted_dot == r.model_dot &&
                               r.counted_yat == r.model_yat;
            }
            std::printf("bench: counted FLOPs %s the model\n",
                        counts_match ? "match" : "DO NOT match");
            fs::create_directories(bench_out);
            write_file((fs::path(bench_out) / "bench.json").string(),
                       bench_report_to_json(report));
            write_file((fs::path(bench_out) / "per_product_flops.csv").string(),
                       per_product_flop_table(report.rows.front().d));
            return counts_match ? 0 : 1;
        }
        if (*fig6_cmd) {
            Fig6Table table = fig6_table();
            std::fputs(fig6_to_text(table).c_str(), stdout);
            if (!fig6_out.empty()) {
                fs::create_directories(fig6_out);
                write_file((fs::path(fig6_out) / "fig6.csv").string(),
                           fig6_to_csv(table));
            }
            return 0;
        }
        std::cout << app.help() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
