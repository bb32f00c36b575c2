#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfit/embedding.hpp"
#include "dfit/error.hpp"
#include "dfit/field.hpp"
#include "dfit/fit.hpp"
#include "dfit/glyph_template.hpp"
#include "dfit/io.hpp"
#include "dfit/loss.hpp"
#include "dfit/parallel.hpp"
#include "dfit/service.hpp"

namespace fs = std::filesystem;
using namespace dfit;

namespace {

// Exit status for a fit that stopped on a non-finite loss.
constexpr int kNonFinite = 2;

struct FitFlags {
    FitConfig cfg;
    std::string lr_schedule = "cosine";
    std::string gradient_mode = "analytic";
    bool verbose = false;

    void add(CLI::App* app, bool two_d) {
        app->add_option("--max-iters", cfg.max_iters, "Optimizer iterations")->check(CLI::PositiveNumber);
        app->add_option("--lr", cfg.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
        app->add_option("--beta1", cfg.beta1, "Adam first-moment decay")->check(CLI::Range(0.0, 1.0));
        app->add_option("--beta2", cfg.beta2, "Adam second-moment decay")->check(CLI::Range(0.0, 1.0));
        app->add_option("--adam-eps", cfg.adam_epsilon, "Adam epsilon")->check(CLI::PositiveNumber);
        app->add_option("--lr-schedule", lr_schedule, "Learning-rate schedule")
            ->check(CLI::IsMember({"constant", "cosine"}));
        app->add_option("--lr-final-fraction", cfg.lr_final_fraction, "Cosine floor as a fraction of --lr")
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--patience", cfg.patience, "Stop after this many iterations without improvement (0: off)")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--alpha-align", cfg.loss.alpha_align, "Weight of the normal-alignment loss")
            ->check(CLI::NonNegativeNumber);
        if (two_d) {
            app->add_option("--alpha-template", cfg.loss.alpha_template, "Initial weight of the template loss")
                ->check(CLI::NonNegativeNumber);
            app->add_option("--template-decay", cfg.loss.template_decay_s, "Template loss decay constant (iterations)")
                ->check(CLI::PositiveNumber);
            app->add_flag("--thickness", cfg.thickness_enabled, "Fit a stroke thickness per curve");
            app->add_option("--align-iters", cfg.align_iters, "Iterations of global template alignment first")
                ->check(CLI::NonNegativeNumber);
            app->add_option("--grid", cfg.grid_2d, "Cells per axis of the fitting grid")->check(CLI::Range(8, 2048));
        } else {
            app->add_option("--prune-threshold", cfg.prune_overlap_threshold,
                            "Drop primitives covered by others above this fraction")
                ->check(CLI::Range(0.0, 1.0));
            app->add_option("--grid", cfg.grid_3d, "Cells per axis of the fitting grid")->check(CLI::Range(8, 512));
        }
        app->add_option("--gamma-smooth", cfg.loss.gamma_smooth, "Mask width override (0: twice the cell diagonal)")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--seed", cfg.seed, "Random seed");
        app->add_option("--gradient", gradient_mode, "Gradient evaluation")
            ->check(CLI::IsMember({"analytic", "fd"}));
        app->add_option("--fd-step", cfg.fd_step, "Forward-difference step")->check(CLI::PositiveNumber);
        app->add_flag("--verbose", verbose, "Print the loss every 100 iterations to stderr");
    }

    FitConfig resolve() const {
        FitConfig c = cfg;
        c.lr_schedule = parse_lr_schedule(lr_schedule);
        c.gradient_mode = parse_gradient_mode(gradient_mode);
        c.validate();
        return c;
    }

    ProgressCallback progress() const {
        if (!verbose) return {};
        return [](int it, const LossBreakdown& b) {
            if (it % 100 == 0) {
                std::fprintf(stderr, "iter %5d  total %.6g  surface %.6g  align %.6g  template %.6g\n", it, b.total,
                             b.surface, b.align, b.template_term);
            }
        };
    }
};

std::string extension(const std::string& path) {
    std::string e = fs::path(path).extension().string();
    for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

std::string read_input(const std::string& path) {
    if (!fs::exists(path)) throw Error("input '" + path + "' does not exist");
    return read_file(path);
}

TemplateLibrary load_templates(const std::string& path) {
    if (path.empty()) return TemplateLibrary::bundled();
    return TemplateLibrary::parse(read_input(path));
}

// Unsigned 2D distance field from a PGM raster, an outline or a field file.
ScalarField load_target_2d(const std::string& path, std::size_t grid) {
    const std::string ext = extension(path);
    const std::string bytes = read_input(path);
    if (ext == ".pgm") {
        const auto segs = contour_segments(read_pgm(bytes));
        if (segs.empty()) throw Error("raster '" + path + "' has no ink");
        return rasterize_distance_2d(segs, glyph_grid(grid));
    }
    if (ext == ".json") return rasterize_distance_2d(read_outline(bytes), glyph_grid(grid));
    ScalarField f = read_field(bytes);
    if (f.grid().rank != 2) throw Error("field '" + path + "' is not 2D");
    return f;
}

ScalarField load_target_3d(const std::string& path, std::size_t grid) {
    const std::string bytes = read_input(path);
    if (extension(path) == ".obj") return mesh_signed_distance(read_obj(bytes), volume_grid(grid));
    ScalarField f = read_field(bytes);
    if (f.grid().rank != 3) throw Error("field '" + path + "' is not 3D");
    return f;
}

// Splits a params file into a curve set using the class template.
CurveSet load_shape(const std::string& path, const TemplateLibrary& lib) {
    const CurveParams p = read_curve_params(read_input(path));
    return unpack(resolve_template(p.class_label, lib), p.params);
}

std::vector<double> shape_params(const CurveParams& p, const TemplateLibrary& lib) {
    const auto templ = resolve_template(p.class_label, lib);
    const std::size_t n = templ.parameter_count(false);
    if (p.params.size() != n && p.params.size() != templ.parameter_count(true)) {
        throw Error("params of class '" + p.class_label + "' must have " + std::to_string(n) + " values");
    }
    return {p.params.begin(), p.params.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<Segment> curve_segments(const CurveSet& shape, std::size_t per_curve) {
    std::vector<Segment> out;
    for (const auto& loop : shape.loops()) {
        for (const auto& c : loop.curves()) {
            Vec2 prev = c.a;
            for (std::size_t j = 1; j <= per_curve; ++j) {
                const Vec2 cur = c.eval(static_cast<double>(j) / static_cast<double>(per_curve));
                out.push_back({prev, cur});
                prev = cur;
            }
        }
    }
    return out;
}

// Ground truth as segments: outline JSON, PGM raster or another params file.
std::vector<Segment> load_truth(const std::string& path, const TemplateLibrary& lib) {
    const std::string ext = extension(path);
    const std::string bytes = read_input(path);
    if (ext == ".pgm") return contour_segments(read_pgm(bytes));
    if (bytes.find("\"dfit-outline\"") != std::string::npos) return outline_segments(read_outline(bytes));
    return curve_segments(load_shape(path, lib), 256);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

int finish_fit(const FitReport& report) {
    std::cout << report_text(report);
    return report.termination == Termination::non_finite ? kNonFinite : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fits sparse parametric shapes to distance fields.", "dfit"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", "dfit 1.0");
    unsigned jobs = 0;
    app.add_option("--jobs", jobs, "Worker threads for grid loops (0: all cores)");

    std::string templates_path;
    const auto add_templates = [&](CLI::App* cmd) {
        cmd->add_option("--templates", templates_path, "Template file (empty: bundled letter set)")
            ->envname("DFIT_TEMPLATES");
    };

    // fit2d
    auto* fit2d_cmd = app.add_subcommand("fit2d", "Fit a curve template to a 2D raster, outline or field");
    std::string in2d, cls2d, svg_out, params_out, report_out;
    FitFlags flags2d;
    fit2d_cmd->add_option("--input", in2d, "Target: .pgm raster, .json outline or field file")->required();
    fit2d_cmd->add_option("--class", cls2d, "Template class (simple1..simple3 or a letter)")->required();
    add_templates(fit2d_cmd);
    fit2d_cmd->add_option("--svg", svg_out, "Write the fitted curves as SVG");
    fit2d_cmd->add_option("--params", params_out, "Write the fitted parameters");
    fit2d_cmd->add_option("--report", report_out, "Write the machine-readable fit report");
    flags2d.add(fit2d_cmd, true);

    // fit3d
    auto* fit3d_cmd = app.add_subcommand("fit3d", "Fit cuboid primitives to a 3D field or mesh");
    std::string in3d, obj_out, prims_out, report3d_out, mode3d = "cuboid";
    std::size_t n_prims = 16;
    FitFlags flags3d;
    fit3d_cmd->add_option("--input", in3d, "Target: .obj mesh or field file")->required();
    fit3d_cmd->add_option("--primitives", n_prims, "Number of primitives")->check(CLI::Range(1, 256));
    fit3d_cmd->add_option("--mode", mode3d, "Primitive type")->check(CLI::IsMember({"cuboid", "rounded", "csg"}));
    fit3d_cmd->add_option("--obj", obj_out, "Write the fitted primitives as OBJ");
    fit3d_cmd->add_option("--params", prims_out, "Write the fitted primitives");
    fit3d_cmd->add_option("--report", report3d_out, "Write the machine-readable fit report");
    flags3d.add(fit3d_cmd, false);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Compare a fitted shape with ground truth");
    std::string eval_shape, eval_truth, eval_sampling = "arc";
    std::size_t eval_samples = 5000, eval_frame = 128, eval_grid = 128;
    double eval_gamma = 0.0;
    eval_cmd->add_option("--shape", eval_shape, "Fitted parameters")->required();
    eval_cmd->add_option("--truth", eval_truth, "Ground truth: .json outline, .pgm raster or parameters")->required();
    add_templates(eval_cmd);
    eval_cmd->add_option("--samples", eval_samples, "Points sampled on each side")->check(CLI::Range(1, 1000000));
    eval_cmd->add_option("--sampling", eval_sampling, "Sampling of the fitted curves")
        ->check(CLI::IsMember({"arc", "parameter"}));
    eval_cmd->add_option("--frame", eval_frame, "Pixels per em for the Chamfer distance")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--grid", eval_grid, "Cells per axis for the surface and align losses")
        ->check(CLI::Range(8, 2048));
    eval_cmd->add_option("--gamma-smooth", eval_gamma, "Mask width override (0: twice the cell diagonal)")
        ->check(CLI::NonNegativeNumber);

    // catalog-build
    auto* cat_cmd = app.add_subcommand("catalog-build", "Collect fitted parameter files into a catalog");
    std::vector<std::string> cat_inputs;
    std::string cat_out, cat_font;
    cat_cmd->add_option("inputs", cat_inputs, "Parameter files; each file's stem becomes the record id")->required();
    cat_cmd->add_option("--out", cat_out, "Catalog file to write")->required();
    cat_cmd->add_option("--font", cat_font, "Font name stored with every record");
    add_templates(cat_cmd);

    // nn
    auto* nn_cmd = app.add_subcommand("nn", "Nearest catalog records to a parameter vector");
    std::string nn_catalog, nn_query, nn_class;
    std::size_t nn_k = 5;
    nn_cmd->add_option("--catalog", nn_catalog, "Catalog file")->required();
    nn_cmd->add_option("--query", nn_query, "Query parameters")->required();
    nn_cmd->add_option("--k", nn_k, "Number of matches")->check(CLI::PositiveNumber);
    nn_cmd->add_option("--class", nn_class, "Restrict to one class (empty: the query's class)");
    add_templates(nn_cmd);

    // interp
    auto* interp_cmd = app.add_subcommand("interp", "Nearest records along a straight path in curve space");
    std::string ip_catalog, ip_from, ip_to, ip_class;
    std::size_t ip_steps = 8;
    interp_cmd->add_option("--catalog", ip_catalog, "Catalog file")->required();
    interp_cmd->add_option("--from", ip_from, "Start parameters")->required();
    interp_cmd->add_option("--to", ip_to, "End parameters")->required();
    interp_cmd->add_option("--steps", ip_steps, "Interpolants including both ends")->check(CLI::Range(2, 100000));
    interp_cmd->add_option("--class", ip_class, "Restrict to one class (empty: the start's class)");
    add_templates(interp_cmd);

    // warp
    auto* warp_cmd = app.add_subcommand("warp", "Move an outline by the control-point displacement of two shapes");
    std::string wp_outline, wp_source, wp_target, wp_out;
    double wp_bandwidth = 0.15;
    warp_cmd->add_option("--outline", wp_outline, "Outline to warp")->required();
    warp_cmd->add_option("--source", wp_source, "Parameters matching the outline")->required();
    warp_cmd->add_option("--target", wp_target, "Parameters to warp toward")->required();
    warp_cmd->add_option("--bandwidth", wp_bandwidth, "Gaussian weight width in em")->check(CLI::PositiveNumber);
    warp_cmd->add_option("--out", wp_out, "Warped outline file")->required();
    add_templates(warp_cmd);

    // make-field
    auto* mf_cmd = app.add_subcommand("make-field", "Rasterize geometry into a distance field file");
    std::string mf_in, mf_out;
    std::size_t mf_grid = 128;
    mf_cmd->add_option("--input", mf_in, "Geometry: .json outline, .pgm raster, parameters or .obj mesh")->required();
    mf_cmd->add_option("--out", mf_out, "Field file to write")->required();
    mf_cmd->add_option("--grid", mf_grid, "Cells per axis")->check(CLI::Range(2, 2048));
    add_templates(mf_cmd);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve catalog queries and fitting over HTTP");
    std::string sv_catalog, sv_host = "127.0.0.1";
    int sv_port = 8080;
    unsigned sv_fits = 2;
    serve_cmd->add_option("--catalog", sv_catalog, "Catalog file")->required();
    serve_cmd->add_option("--host", sv_host, "Listen address");
    serve_cmd->add_option("--port", sv_port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--max-fits", sv_fits, "Simultaneous /fit2d requests")->check(CLI::Range(1, 64));
    add_templates(serve_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    set_worker_count(jobs);

    try {
        if (*fit2d_cmd) {
            const FitConfig cfg = flags2d.resolve();
            const TemplateLibrary lib = load_templates(templates_path);
            const GlyphTemplate templ = resolve_template(cls2d, lib);
            const ScalarField target = load_target_2d(in2d, cfg.grid_2d);
            FitConfig run = cfg;
            if (fit2d_cmd->get_option("--grid")->count() == 0) run.grid_2d = target.grid().dims[0];
            const Fit2DResult r = fit2d(target, templ, run, flags2d.progress());
            if (!svg_out.empty()) {
                SvgFrame frame;
                frame.width = frame.height = frame.scale = 128.0;
                frame.flip_y = true;
                frame.stroke_from_thickness = cfg.thickness_enabled;
                write_file(svg_out, write_svg(r.shape, frame));
            }
            if (!params_out.empty()) write_file(params_out, write_curve_params({templ.class_label, r.report.final_params}));
            if (!report_out.empty()) write_file(report_out, report_json(r.report, run));
            return finish_fit(r.report);
        }
        if (*fit3d_cmd) {
            const FitConfig cfg = flags3d.resolve();
            const ScalarField target = load_target_3d(in3d, cfg.grid_3d);
            FitConfig run = cfg;
            if (fit3d_cmd->get_option("--grid")->count() == 0) run.grid_3d = target.grid().dims[0];
            const Fit3DResult r = fit3d(target, n_prims, parse_primitive_mode(mode3d), run, flags3d.progress());
            if (!obj_out.empty()) write_file(obj_out, write_obj(r.shape));
            if (!prims_out.empty()) write_file(prims_out, write_primitives(r.shape));
            if (!report3d_out.empty()) write_file(report3d_out, report_json(r.report, run));
            std::cout << "primitives:     " << r.shape.positive.size() + r.shape.negative.size() << " of " << n_prims
                      << " kept\n";
            return finish_fit(r.report);
        }
        if (*eval_cmd) {
            const TemplateLibrary lib = load_templates(templates_path);
            const CurveSet shape = load_shape(eval_shape, lib);
            const auto truth = load_truth(eval_truth, lib);
            if (truth.empty()) throw Error("ground truth '" + eval_truth + "' has no geometry");
            const auto mode = eval_sampling == "arc" ? SamplingMode::arc_length : SamplingMode::parameter;
            auto a = sample_curves_uniform(shape, eval_samples, mode);
            auto b = sample_segments_uniform(truth, eval_samples);
            const double px = static_cast<double>(eval_frame);
            for (auto& p : a) p = p * px;
            for (auto& p : b) p = p * px;
            const GridSpec grid = glyph_grid(eval_grid);
            const ScalarField pred = rasterize_distance_2d(shape, grid);
            const ScalarField gt = rasterize_distance_2d(truth, grid);
            const double gamma = eval_gamma > 0.0 ? eval_gamma : default_gamma(grid);
            std::cout << "chamfer_px2     " << fmt(chamfer_sampled(a, b)) << "\n";
            std::cout << "surface_loss    " << fmt(surface_loss(pred, gt, gamma)) << "\n";
            std::cout << "align_loss      " << fmt(align_loss(pred, gt)) << "\n";
            return 0;
        }
        if (*cat_cmd) {
            const TemplateLibrary lib = load_templates(templates_path);
            std::vector<GlyphRecord> records;
            for (const auto& path : cat_inputs) {
                const CurveParams p = read_curve_params(read_input(path));
                const auto templ = resolve_template(p.class_label, lib);
                GlyphRecord r;
                r.id = fs::path(path).stem().string();
                r.class_label = p.class_label;
                r.params = shape_params(p, lib);
                r.thickness.assign(p.params.begin() + static_cast<std::ptrdiff_t>(r.params.size()), p.params.end());
                r.font = cat_font;
                r.source = path;
                records.push_back(std::move(r));
            }
            const Catalog catalog(std::move(records), templates_path.empty() ? "bundled" : templates_path);
            write_file(cat_out, write_catalog(catalog));
            std::cout << catalog.size() << " records written to " << cat_out << "\n";
            return 0;
        }
        if (*nn_cmd) {
            const TemplateLibrary lib = load_templates(templates_path);
            const Catalog catalog = read_catalog(read_input(nn_catalog));
            const CurveParams q = read_curve_params(read_input(nn_query));
            const auto label = nn_class.empty() ? q.class_label : nn_class;
            std::cout << "rank\tid\tclass\tdistance\n";
            const auto matches = nearest(catalog, shape_params(q, lib), nn_k, label);
            for (std::size_t i = 0; i < matches.size(); ++i) {
                std::cout << i + 1 << "\t" << matches[i].record->id << "\t" << matches[i].record->class_label << "\t"
                          << format_double(matches[i].distance) << "\n";
            }
            return 0;
        }
        if (*interp_cmd) {
            const TemplateLibrary lib = load_templates(templates_path);
            const Catalog catalog = read_catalog(read_input(ip_catalog));
            const CurveParams a = read_curve_params(read_input(ip_from));
            const CurveParams b = read_curve_params(read_input(ip_to));
            const auto label = ip_class.empty() ? a.class_label : ip_class;
            const auto path = interpolate_path(catalog, shape_params(a, lib), shape_params(b, lib), ip_steps, label);
            std::cout << "t\trepeats\tid\tdistance\n";
            for (const auto& s : path) {
                std::cout << format_double(s.t_first) << "\t" << s.repeats << "\t" << s.record->id << "\t"
                          << format_double(s.distance) << "\n";
            }
            return 0;
        }
        if (*warp_cmd) {
            const TemplateLibrary lib = load_templates(templates_path);
            const Outline outline = read_outline(read_input(wp_outline));
            const CurveParams s = read_curve_params(read_input(wp_source));
            const CurveParams t = read_curve_params(read_input(wp_target));
            const Outline out = warp_style(outline, shape_params(s, lib), shape_params(t, lib), wp_bandwidth);
            write_file(wp_out, write_outline(out));
            return 0;
        }
        if (*mf_cmd) {
            const std::string ext = extension(mf_in);
            ScalarField f = [&] {
                if (ext == ".obj") return mesh_signed_distance(read_obj(read_input(mf_in)), volume_grid(mf_grid));
                if (ext == ".pgm" || read_input(mf_in).find("\"dfit-outline\"") != std::string::npos) {
                    return load_target_2d(mf_in, mf_grid);
                }
                return rasterize_distance_2d(load_shape(mf_in, load_templates(templates_path)), glyph_grid(mf_grid));
            }();
            write_file(mf_out, write_field(f));
            return 0;
        }
        if (*serve_cmd) {
            ServiceConfig scfg;
            scfg.max_concurrent_fits = sv_fits;
            Service service(read_catalog(read_input(sv_catalog)), load_templates(templates_path), scfg);
            const int port = service.bind(sv_host, sv_port);
            if (port < 0) throw Error("cannot listen on " + sv_host + ":" + std::to_string(sv_port));
            std::cerr << "listening on http://" << sv_host << ":" << port << std::endl;
            if (!service.serve()) throw Error("server stopped unexpectedly");
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
